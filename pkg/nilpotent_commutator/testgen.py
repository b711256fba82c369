"""Seeded nilpotent test matrices with prescribed Jordan structure and decay.

Decay is imposed on the superdiagonal weights of the Jordan blocks. The
singular values of a direct sum of weighted shifts are exactly its weights,
so the generated spectra are known without an SVD.
"""

import json
from dataclasses import asdict, dataclass, replace
try:
    from enum import StrEnum
except ImportError:  # Python < 3.11
    from enum import Enum

    class StrEnum(str, Enum):
        def __str__(self):
            return str.__str__(self)

        __format__ = str.__format__

        @staticmethod
        def _generate_next_value_(name, start, count, last_values):
            return name.lower()
from typing import Any

import jsonschema
import numpy as np

from .linalg import InvalidSpec, Matrix, adjoint, haar_unitary

MAX_SEED = 2**64 - 1


class DecayKind(StrEnum):
    NONE = "none"
    GEOMETRIC = "geometric"
    POLYNOMIAL = "polynomial"


GENSPEC_SCHEMA: dict[str, Any] = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "properties": {
        "jordan_sizes": {
            "type": "array",
            "items": {"type": "integer", "minimum": 1},
            "minItems": 1,
        },
        "decay": {
            "oneOf": [
                {"const": "none"},
                {
                    "type": "object",
                    "properties": {"kind": {"const": "none"}},
                    "required": ["kind"],
                    "additionalProperties": False,
                },
                {
                    "type": "object",
                    "properties": {
                        "kind": {"const": "geometric"},
                        "rho": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                    },
                    "required": ["kind", "rho"],
                    "additionalProperties": False,
                },
                {
                    "type": "object",
                    "properties": {
                        "kind": {"const": "polynomial"},
                        "alpha": {"type": "number", "exclusiveMinimum": 0},
                    },
                    "required": ["kind", "alpha"],
                    "additionalProperties": False,
                },
            ]
        },
        "conjugate": {"type": "boolean"},
        "seed": {"type": "integer", "minimum": 0, "maximum": MAX_SEED},
    },
    "required": ["jordan_sizes"],
    "additionalProperties": False,
}


@dataclass(kw_only=True, frozen=True)
class GenSpec:
    jordan_sizes: tuple[int, ...]
    decay: DecayKind = DecayKind.NONE
    rho: float | None = None
    alpha: float | None = None
    conjugate: bool = False
    seed: int = 0

    def __post_init__(self):
        sizes = tuple(self.jordan_sizes)
        if not sizes or any(int(d) != d or d < 1 for d in sizes):
            raise InvalidSpec(f"jordan_sizes must be a non-empty list of positive counts, got {sizes}")
        object.__setattr__(self, "jordan_sizes", tuple(int(d) for d in sizes))
        try:
            object.__setattr__(self, "decay", DecayKind(self.decay))
        except ValueError:
            raise InvalidSpec(f"Unknown decay kind {self.decay!r}") from None
        if self.decay == DecayKind.GEOMETRIC and not (
            self.rho is not None and 0 < self.rho < 1
        ):
            raise InvalidSpec(f"Geometric decay needs 0 < rho < 1, got {self.rho}")
        if self.decay == DecayKind.POLYNOMIAL and not (
            self.alpha is not None and self.alpha > 0
        ):
            raise InvalidSpec(f"Polynomial decay needs alpha > 0, got {self.alpha}")
        if not 0 <= self.seed <= MAX_SEED:
            raise InvalidSpec(f"Seed must be a 64-bit unsigned integer, got {self.seed}")

    @property
    def dim(self) -> int:
        return sum(self.jordan_sizes)

    @property
    def index(self) -> int:
        """Nilpotency index of the generated matrix."""
        return max(self.jordan_sizes)

    def weights(self) -> np.ndarray:
        """Superdiagonal weights in global order, the k-th being `ρ^k` or `k^{−α}`."""
        k = np.arange(1, sum(d - 1 for d in self.jordan_sizes) + 1, dtype=float)
        if self.decay == DecayKind.GEOMETRIC:
            return self.rho**k
        if self.decay == DecayKind.POLYNOMIAL:
            return k ** (-self.alpha)
        return np.ones_like(k)

    def to_dict(self) -> dict[str, Any]:
        data = asdict(self)
        data["jordan_sizes"] = list(self.jordan_sizes)
        match self.decay:
            case DecayKind.GEOMETRIC:
                data["decay"] = {"kind": "geometric", "rho": self.rho}
            case DecayKind.POLYNOMIAL:
                data["decay"] = {"kind": "polynomial", "alpha": self.alpha}
            case _:
                data["decay"] = "none"
        del data["rho"], data["alpha"]
        return data

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: Any) -> "GenSpec":
        try:
            jsonschema.validate(data, GENSPEC_SCHEMA)
        except jsonschema.ValidationError as e:
            raise InvalidSpec(f"Invalid generation spec: {e.message}") from None
        decay = data.get("decay", "none")
        if isinstance(decay, str):
            decay = {"kind": decay}
        return cls(
            jordan_sizes=tuple(data["jordan_sizes"]),
            decay=DecayKind(decay["kind"]),
            rho=decay.get("rho"),
            alpha=decay.get("alpha"),
            conjugate=data.get("conjugate", False),
            seed=data.get("seed", 0),
        )

    @classmethod
    def from_json(cls, text: str) -> "GenSpec":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise InvalidSpec(f"Malformed spec JSON: {e}") from None
        return cls.from_dict(data)

    def replace(self, **kwargs):
        """Returns a new GenSpec with the given fields replaced."""
        return replace(self, **kwargs)


def parse_decay(text: str) -> dict[str, Any]:
    """`none`, `geometric:RHO` or `polynomial:ALPHA` as GenSpec keyword arguments."""
    kind, _, value = text.partition(":")
    try:
        decay = DecayKind(kind.strip())
    except ValueError:
        raise InvalidSpec(f"Unknown decay family {text!r}") from None
    if decay == DecayKind.NONE:
        if value:
            raise InvalidSpec(f"Decay family 'none' takes no parameter, got {text!r}")
        return {"decay": decay}
    try:
        param = float(value)
    except ValueError:
        raise InvalidSpec(f"Decay family {text!r} needs a numeric parameter") from None
    key = "rho" if decay == DecayKind.GEOMETRIC else "alpha"
    return {"decay": decay, key: param}


def gen_nilpotent(spec: GenSpec) -> Matrix:
    """Direct sum of weighted Jordan blocks, optionally unitarily conjugated."""
    a = np.zeros((spec.dim, spec.dim), dtype=np.complex128)
    weights = iter(spec.weights())
    offset = 0
    for size in spec.jordan_sizes:
        for p in range(size - 1):
            a[offset + p, offset + p + 1] = next(weights)
        offset += size
    if spec.conjugate:
        u = haar_unitary(spec.dim, np.random.default_rng(spec.seed))
        a = u @ a @ adjoint(u)
    return a
