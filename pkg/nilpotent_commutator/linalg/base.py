"""Shared error types, the matrix alias and numerical budgets."""

import os
from dataclasses import dataclass, fields, replace
from typing import ClassVar

import numpy as np
import numpy.typing as npt

Matrix = npt.NDArray[np.complex128]

EPS: float = float(np.finfo(np.float64).eps)


class CommutatorError(Exception):
    """Raised when a toolkit operation cannot complete."""

    exit_code: ClassVar[int] = 1

    def __init__(self, message):
        super().__init__(message)
        self.message = message


class MatrixFormatError(CommutatorError):
    """A matrix could not be read, parsed or has non-finite entries."""


class ShapeMismatch(CommutatorError):
    """Operand shapes are incompatible with the requested operation."""


class PartitionMismatch(CommutatorError):
    """A block partition does not cover the matrix it partitions."""


class NotHermitian(CommutatorError):
    """Symmetry residual above tolerance."""


class NotPSD(CommutatorError):
    """An eigenvalue lies below the negative tolerance."""


class InvalidSpec(CommutatorError):
    """A generation or scan specification is malformed."""


class InsufficientData(CommutatorError):
    """Too few values above the cutoff to fit a decay model."""


class NotNilpotent(CommutatorError):
    exit_code: ClassVar[int] = 2


class MajorizationViolated(CommutatorError):
    """The hypothesis t·x*x ⪰ y*y (or its right-handed twin) fails."""

    exit_code: ClassVar[int] = 3

    def __init__(self, message, eigenvalue: float):
        super().__init__(message)
        self.eigenvalue = eigenvalue


class ResidualTooLarge(CommutatorError):
    exit_code: ClassVar[int] = 3

    def __init__(self, message, residual: float, step: str | None = None):
        super().__init__(message)
        self.residual = residual
        self.step = step


class DimensionMismatch(CommutatorError):
    exit_code: ClassVar[int] = 4


@dataclass(kw_only=True, frozen=True)
class Tolerances:
    """Relative numerical budgets shared by every operation."""

    herm: float = 1e-10
    psd: float = 1e-10
    root: float = 1e-9
    major: float = 1e-8
    norm: float = 1e-8
    resid: float = 1e-8
    comm: float = 1e-8
    rank: float = 1e-10
    unit: float = 1e-10
    decay_cutoff: float = 1e-14

    @classmethod
    def from_env(cls) -> "Tolerances":
        """Defaults overridden by any NILCOMM_TOL_<NAME> environment variable."""
        overrides = {}
        for field in fields(cls):
            value = os.getenv(f"NILCOMM_TOL_{field.name.upper()}")
            if value:
                overrides[field.name] = float(value)
        return cls(**overrides)

    def replace(self, **kwargs) -> "Tolerances":
        return replace(self, **kwargs)


DEFAULT_TOLERANCES = Tolerances()
