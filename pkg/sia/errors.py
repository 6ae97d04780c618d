"""Exception hierarchy for sia."""

from __future__ import annotations

from pathlib import Path
from typing import Optional


class SiaError(Exception):
    """Base class for all errors raised by sia."""


class ParseError(SiaError, ValueError):
    """Malformed input document or row."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DataValidationError(SiaError, ValueError):
    """Input parsed but violates a domain invariant."""


class UnknownClassError(SiaError, KeyError):
    """An action identifier does not resolve in the active vocabulary."""

    def __str__(self) -> str:
        return str(self.args[0]) if self.args else "unknown class"


class ConfigurationError(SiaError, ValueError):
    """Model or run configuration is inconsistent with its inputs."""


class CheckpointMismatchError(SiaError):
    """Checkpoint was produced for a different model configuration."""


class ContractViolationError(SiaError):
    """A caller broke an operation's precondition."""


class BenchmarkError(SiaError):
    """A benchmark suite entry cannot be evaluated."""


class TrainingDivergedError(SiaError):
    """Training produced a non-finite loss."""

    def __init__(self, message: str, dump_path: Optional[Path] = None):
        self.dump_path = dump_path
        if dump_path is not None:
            message = f"{message} (batch dumped to {dump_path})"
        super().__init__(message)
