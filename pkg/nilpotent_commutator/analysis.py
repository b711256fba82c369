"""Singular-value decay of A, B and C, and the exponents they achieve."""

import logging
import math
from dataclasses import dataclass, replace
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

import numpy as np

from .construct import CommutatorPair
from .linalg import (
    DEFAULT_TOLERANCES,
    InsufficientData,
    Tolerances,
    singular_values,
)

logger = logging.getLogger(__name__)

# Rates below this count as flat and yield no slope ratio.
FLAT_RATE = 1e-12


class DecayModel(StrEnum):
    GEOMETRIC = "geometric"
    POLYNOMIAL = "polynomial"


@dataclass(kw_only=True, frozen=True)
class DecayProfile:
    """A descending sequence and its log-space least-squares fit.

    `fitted_param` is `ρ` for `s_k ≈ c·ρ^k` and `α` for `s_k ≈ c·k^{−α}`.
    Only the first `cutoff_index` values enter the fit.
    """

    values: np.ndarray
    model: DecayModel
    fitted_param: float
    fit_quality: float
    cutoff_index: int
    slope: float

    @property
    def rate(self) -> float:
        """Decay rate on the log scale: `−log ρ` or `α`."""
        return -self.slope


@dataclass(kw_only=True, frozen=True)
class ExponentReport:
    guaranteed_t: float
    achieved_B: float
    achieved_C: float
    domination_constant: float
    domination_C: float
    profile_A: DecayProfile
    profile_B: DecayProfile
    profile_C: DecayProfile

    def replace(self, **kwargs):
        """Returns a new ExponentReport with the given fields replaced."""
        return replace(self, **kwargs)


def cutoff_index(values: np.ndarray, cutoff: float) -> int:
    """First index with `values[k] < cutoff·values[0]`."""
    if values.size == 0 or values[0] <= 0:
        return 0
    below = np.flatnonzero(values < cutoff * values[0])
    return int(below[0]) if below.size else int(values.size)


def decay_fit(
    values,
    model: DecayModel,
    cutoff: float = DEFAULT_TOLERANCES.decay_cutoff,
) -> DecayProfile:
    """Fit `log s_k` against `k` (geometric) or `log k` (polynomial), k from 1."""
    model = DecayModel(model)
    values = np.asarray(values, dtype=float)
    if np.any(values < 0) or np.any(np.diff(values) > 0):
        raise ValueError("Decay fits need a descending non-negative sequence")
    index = cutoff_index(values, cutoff)
    if index < 3:
        raise InsufficientData(f"Only {index} values above {cutoff:.0e}·s_1, need 3")

    logs = np.log(values[:index])
    k = np.arange(1, index + 1, dtype=float)
    xs = k if model == DecayModel.GEOMETRIC else np.log(k)
    slope, intercept = np.polyfit(xs, logs, 1)
    if np.ptp(logs) <= 1e-12 * max(1.0, float(np.max(np.abs(logs)))):
        r_squared = 1.0
    else:
        residuals = logs - (slope * xs + intercept)
        r_squared = 1.0 - float(np.sum(residuals**2) / np.sum((logs - logs.mean()) ** 2))

    fitted = math.exp(slope) if model == DecayModel.GEOMETRIC else -slope
    return DecayProfile(
        values=values,
        model=model,
        fitted_param=float(fitted),
        fit_quality=r_squared,
        cutoff_index=index,
        slope=float(slope),
    )


def domination_constant(
    s_x: np.ndarray, s_a: np.ndarray, n: int, t: float, cutoff: float
) -> float:
    """`max_k s_k(X) / s_{⌈k/n⌉}(A)^t` over indices above both cutoffs."""
    top_x, top_a = cutoff_index(s_x, cutoff), cutoff_index(s_a, cutoff)
    ratios = [
        s_x[k - 1] / s_a[math.ceil(k / n) - 1] ** t
        for k in range(1, top_x + 1)
        if math.ceil(k / n) <= top_a
    ]
    return float(max(ratios)) if ratios else 0.0


def _ratio(rate_x: float, rate_a: float) -> float:
    return rate_x / rate_a if abs(rate_a) > FLAT_RATE else 0.0


def exponent_report(
    a,
    pair: CommutatorPair,
    model: DecayModel = DecayModel.GEOMETRIC,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> ExponentReport:
    """Fitted decay of B and C relative to A, against the guaranteed exponent."""
    s_a = singular_values(a)
    if s_a.size == 0 or s_a[0] == 0:
        raise InsufficientData("Exponent reports need A ≠ 0")
    s_b, s_c = singular_values(pair.B), singular_values(pair.C)
    cutoff = tol.decay_cutoff
    fit_a = decay_fit(s_a, model, cutoff)
    fit_b = decay_fit(s_b, model, cutoff)
    fit_c = decay_fit(s_c, model, cutoff)
    if abs(fit_a.rate) <= FLAT_RATE:
        logger.info("A has flat singular values; slope ratios reported as 0")

    t = pair.exponent
    report = ExponentReport(
        guaranteed_t=t,
        achieved_B=_ratio(fit_b.rate, fit_a.rate),
        achieved_C=_ratio(fit_c.rate, fit_a.rate),
        domination_constant=domination_constant(s_b, s_a, pair.n, t, cutoff),
        domination_C=domination_constant(s_c, s_a, pair.n, t, cutoff),
        profile_A=fit_a,
        profile_B=fit_b,
        profile_C=fit_c,
    )
    logger.debug(
        "Exponents: guaranteed %.4f, B %.4f, C %.4f, δ %.4g",
        t,
        report.achieved_B,
        report.achieved_C,
        report.domination_constant,
    )
    return report
