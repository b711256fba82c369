"""Contraction factors from a majorization hypothesis.

Given `t·x*x ⪰ y*y` there is an `r` with `‖r‖ ≤ √t` and `y = r·x`; given
`t·xx* ⪰ yy*` there is one with `y = x·r`. Both are realized by the
minimal-norm pseudoinverse solution, which vanishes off the range of `x`.
"""

import logging
from dataclasses import dataclass, replace
from typing import Literal

import numpy as np
from scipy import linalg

from .linalg import (
    DEFAULT_TOLERANCES,
    MajorizationViolated,
    Matrix,
    ResidualTooLarge,
    ShapeMismatch,
    Tolerances,
    adjoint,
    as_matrix,
    op_norm,
    pinv,
)

logger = logging.getLogger(__name__)

Orientation = Literal["left", "right"]


@dataclass(kw_only=True, frozen=True)
class FactorResult:
    """A contraction-scaled factor and how well it reproduces `y`."""

    r: Matrix
    orientation: Orientation
    bound: float
    achieved_norm: float
    residual: float
    repaired: bool = False

    def replace(self, **kwargs):
        """Returns a new FactorResult with the given fields replaced."""
        return replace(self, **kwargs)


def majorization_gap(x, y, t: float, orientation: Orientation) -> float:
    """Smallest eigenvalue of `t·x*x − y*y` (left) or `t·xx* − yy*` (right)."""
    x, y = as_matrix(x), as_matrix(y)
    if orientation == "left":
        diff = t * (adjoint(x) @ x) - adjoint(y) @ y
    else:
        diff = t * (x @ adjoint(x)) - y @ adjoint(y)
    if diff.size == 0:
        return 0.0
    return float(linalg.eigvalsh((diff + adjoint(diff)) / 2)[0])


def _contract(r: Matrix, bound: float, tol: Tolerances) -> tuple[Matrix, bool]:
    """Clip the singular values of r to `bound` when roundoff pushed them over."""
    if r.size == 0:
        return r, False
    u, s, vh = linalg.svd(r, full_matrices=False)
    if s[0] <= bound:
        return r, False
    excess = s[0] - bound
    if excess > tol.norm * max(bound, 1.0):
        logger.warning("Contraction repair: ‖r‖ = %.6e exceeds √t = %.6e", s[0], bound)
    else:
        logger.debug("Contraction repair within tolerance: excess %.3e", excess)
    return (u * np.minimum(s, bound)) @ vh, True


def _factor(
    x, y, t: float, orientation: Orientation, tol: Tolerances
) -> FactorResult:
    if t <= 0:
        raise ValueError(f"Majorization constant must be positive, got {t}")
    x, y = as_matrix(x), as_matrix(y)
    axis = 1 if orientation == "left" else 0
    if x.shape[axis] != y.shape[axis]:
        side = "column" if orientation == "left" else "row"
        raise ShapeMismatch(f"x {x.shape} and y {y.shape} need equal {side} counts")

    gap = majorization_gap(x, y, t, orientation)
    scale = t * op_norm(x) ** 2
    if gap < -tol.major * scale:
        raise MajorizationViolated(
            f"Majorization fails: smallest eigenvalue {gap:.3e} below "
            f"-{tol.major:.1e} * {scale:.3e}",
            eigenvalue=gap,
        )

    bound = float(np.sqrt(t))
    r = y @ pinv(x) if orientation == "left" else pinv(x) @ y
    r, repaired = _contract(r, bound, tol)
    approx = r @ x if orientation == "left" else x @ r
    residual = op_norm(y - approx) / max(op_norm(y), 1.0)
    if residual > tol.resid:
        raise ResidualTooLarge(
            f"Factor residual {residual:.3e} exceeds {tol.resid:.1e}", residual=residual
        )
    return FactorResult(
        r=r,
        orientation=orientation,
        bound=bound,
        achieved_norm=op_norm(r),
        residual=residual,
        repaired=repaired,
    )


def factor_left(x, y, t: float, tol: Tolerances = DEFAULT_TOLERANCES) -> FactorResult:
    """Solve `y = r·x` with `‖r‖ ≤ √t`, assuming `t·x*x ⪰ y*y`."""
    return _factor(x, y, t, "left", tol)


def factor_right(x, y, t: float, tol: Tolerances = DEFAULT_TOLERANCES) -> FactorResult:
    """Solve `y = x·r` with `‖r‖ ≤ √t`, assuming `t·xx* ⪰ yy*`."""
    return _factor(x, y, t, "right", tol)
