from __future__ import annotations

from pathlib import Path
from typing import Optional


class RobustLensError(Exception):
    """Base class for every error raised by robustlens."""


class ParameterError(RobustLensError, ValueError):
    pass


class ConfigError(RobustLensError, ValueError):
    pass


class FormatError(RobustLensError, ValueError):
    def __init__(self, message: str, *, path: Optional[Path] = None, line: Optional[int] = None) -> None:
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)


class UnsupportedError(RobustLensError, RuntimeError):
    pass


class PreconditionError(RobustLensError, ValueError):
    pass


class EmptyCandidateError(RobustLensError, ValueError):
    pass


class PlanConflictError(RobustLensError, ValueError):
    pass


class RewireConflictError(PlanConflictError):
    pass


class EmptySampleError(RobustLensError, ValueError):
    pass


class SizeError(RobustLensError, ValueError):
    pass


class NumericError(RobustLensError, ArithmeticError):
    pass
