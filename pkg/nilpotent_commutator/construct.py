"""Single-commutator factorizations `A = BC − CB` of nilpotent matrices.

Both constructions work on the padded flag form: `B` lives on the block
superdiagonal (`b_i` at block `(i, i+1)`) and `C` on the upper triangle of
rows `2..n`. Writing out `[B, C]` block by block, `A = BC − CB` becomes

    b_1 c_{2,j} = a_{1,j}
    b_i c_{i+1,j} = a_{i,j} + c_{i,j−1} b_{j−1}        (2 ≤ i < j ≤ n)

The proposition construction takes every `b_i = 1` and solves the recursion
directly. The theorem construction chooses `b_i` as fourth roots of sums of
squares and divides through with contractions so that `B` and `C` inherit
the decay of `A` at the fractional exponent `1/2^{n−3}`.
"""

import logging
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field, replace
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
from types import MappingProxyType

import numpy as np
from scipy import linalg

from .canonicalize import TriangularForm
from .douglas import factor_right
from .linalg import (
    DEFAULT_TOLERANCES,
    EPS,
    BlockMatrix,
    DimensionMismatch,
    MajorizationViolated,
    Matrix,
    ResidualTooLarge,
    Tolerances,
    adjoint,
    as_matrix,
    assemble_blocks,
    commutator,
    embed_padded,
    fro_norm,
    gram_root,
    op_norm,
    psd_root,
)

logger = logging.getLogger(__name__)

BlockIndex = tuple[int, int]


class ConstructionMode(StrEnum):
    PROPOSITION = "proposition"
    THEOREM = "theorem"


class RootMethod(StrEnum):
    """How the fourth roots `b_i` are taken.

    `gram` works from the SVD of the stacked summands, `eigh` from an
    eigendecomposition of their summed Gram matrix. The contractions come
    from the stacked SVD either way.
    """

    GRAM = "gram"
    EIGH = "eigh"


def guaranteed_exponent(n: int, mode: ConstructionMode) -> float:
    """Ideal exponent carried by B and C: `1/2^{n−3}` (n lifted to 4) or 1."""
    if mode == ConstructionMode.PROPOSITION:
        return 1.0
    return 1.0 / 2 ** (max(n, 4) - 3)


def block_exponents(n: int) -> dict[int, float]:
    """Membership exponent of each `b_i` in the theorem construction.

    `b_i` sits in `I^{1/2^i}` for `i ≤ n−3`; the later blocks share the
    final exponent `1/2^{n−3}`.
    """
    n = max(n, 4)
    return {i: 1.0 / 2 ** min(i, n - 3) for i in range(1, n)}


@dataclass(kw_only=True, frozen=True)
class WitnessSet:
    """The contractions behind a theorem-mode pair.

    `b_i² r_{i,j} = a_{i,j}`, `b_i² x_i = b_{i−1}`, `b_{n−2} z = b_{n−3}`,
    `b_{n−1} s = c_{n−1,n−1}`; `y` holds the recursion carriers.
    """

    r: Mapping[BlockIndex, Matrix]
    x: Mapping[int, Matrix]
    z: Matrix
    s: Matrix
    y: Mapping[BlockIndex, Matrix]

    def contractions(self) -> dict[str, Matrix]:
        out = {f"r[{i},{j}]": m for (i, j), m in self.r.items()}
        out.update({f"x[{i}]": m for i, m in self.x.items()})
        out["z"] = self.z
        out["s"] = self.s
        return out

    @property
    def max_norm(self) -> float:
        return max(op_norm(m) for m in self.contractions().values())


@dataclass(kw_only=True, frozen=True)
class CommutatorPair:
    """`B`, `C` in original-then-padding coordinates, plus their blocks."""

    B: Matrix
    C: Matrix
    mode: ConstructionMode
    n: int
    exponent: float
    form: TriangularForm
    b: Mapping[int, Matrix] = field(default_factory=dict)
    c: Mapping[BlockIndex, Matrix] = field(default_factory=dict)

    @property
    def embed_dim(self) -> int:
        return self.B.shape[0]

    def block_B(self) -> Matrix:
        return self.form.frame() @ self.B @ adjoint(self.form.frame())

    def block_C(self) -> Matrix:
        return self.form.frame() @ self.C @ adjoint(self.form.frame())

    def replace(self, **kwargs):
        """Returns a new CommutatorPair with the given fields replaced."""
        return replace(self, **kwargs)


@dataclass(kw_only=True, frozen=True)
class VerifyReport:
    residual_rel: float
    per_block_residuals: Mapping[BlockIndex, float]
    norm_B: float
    norm_C: float
    max_witness_norm: float
    passed: bool


def _assemble(
    form: TriangularForm, b: Mapping[int, Matrix], c: Mapping[BlockIndex, Matrix]
) -> tuple[Matrix, Matrix]:
    """Build B, C on the padded flag space and rotate them into the output frame."""
    grid = form.blocks.rows
    blocks_b = BlockMatrix.square(grid, {(i, i + 1): m for i, m in b.items()})
    blocks_c = BlockMatrix.square(grid, c)
    frame = form.frame()
    return (
        adjoint(frame) @ assemble_blocks(blocks_b) @ frame,
        adjoint(frame) @ assemble_blocks(blocks_c) @ frame,
    )


def construct_proposition(form: TriangularForm) -> CommutatorPair:
    """Identity superdiagonal `B`; `C` from `c_{i+1,j} = a_{i,j} + c_{i,j−1}`."""
    n, pad = form.n, form.pad
    a = form.blocks
    b = {i: np.eye(pad, dtype=np.complex128) for i in range(1, n)}
    c: dict[BlockIndex, Matrix] = {}
    for j in range(2, n + 1):
        c[(2, j)] = a[1, j].copy()
    for i in range(2, n):
        for j in range(i + 1, n + 1):
            c[(i + 1, j)] = a[i, j] + c[(i, j - 1)]

    big_b, big_c = _assemble(form, b, c)
    logger.debug("Proposition pair on %d blocks of size %d", n, pad)
    return CommutatorPair(
        B=big_b,
        C=big_c,
        mode=ConstructionMode.PROPOSITION,
        n=n,
        exponent=guaranteed_exponent(n, ConstructionMode.PROPOSITION),
        form=form,
        b=MappingProxyType(b),
        c=MappingProxyType(c),
    )


def _solve(step: str, x: Matrix, y: Matrix, tol: Tolerances) -> Matrix:
    """Contraction r with `y = x·r`; failures name the construction step."""
    try:
        result = factor_right(x, y, 1.0, tol)
    except MajorizationViolated as e:
        raise MajorizationViolated(f"{step}: {e.message}", eigenvalue=e.eigenvalue) from None
    except ResidualTooLarge as e:
        raise ResidualTooLarge(f"{step}: {e.message}", residual=e.residual, step=step) from None
    logger.debug(
        "%s: ‖r‖ = %.6f, residual %.3e", step, result.achieved_norm, result.residual
    )
    return result.r


@dataclass(kw_only=True, frozen=True)
class _LevelRoot:
    """`b = (K K*)^{1/4}` for the stacked summands `K = [m_1, ..., m_k]`.

    With the thin SVD `K = U Σ Vᴴ` one has `b² = U Σ U*`, so each column
    slice of `U Vᴴ` is a contraction `w_j` with `b² w_j = m_j`. Singular
    values at most `max(shape)·ε·σ_1` are left out of `u`, `sigma`, `isometry`.
    """

    b: Matrix
    b_sq: Matrix
    u: Matrix
    sigma: np.ndarray
    isometry: Matrix
    widths: tuple[int, ...]

    def contraction(self, index: int) -> Matrix:
        start = sum(self.widths[:index])
        return self.isometry[:, start : start + self.widths[index]]

    def divide(self, step: str, y: Matrix, tol: Tolerances) -> Matrix:
        """Minimal-norm `w` with `b w = y`, through the same SVD as `b`."""
        w = self.u @ ((adjoint(self.u) @ y) / np.sqrt(self.sigma)[:, None])
        residual = op_norm(y - self.b @ w) / max(op_norm(y), 1.0)
        norm = op_norm(w)
        if residual > tol.resid:
            raise ResidualTooLarge(
                f"{step}: residual {residual:.3e} exceeds {tol.resid:.1e}",
                residual=residual,
                step=step,
            )
        if norm > 1.0 + tol.norm:
            logger.warning("%s: ‖w‖ = %.6f is not a contraction", step, norm)
        logger.debug("%s: ‖w‖ = %.6f, residual %.3e", step, norm, residual)
        return w


def _level_root(factors: Sequence[Matrix], method: RootMethod, tol: Tolerances) -> _LevelRoot:
    stacked = np.hstack(factors)
    if method == RootMethod.GRAM:
        b, b_sq = gram_root(stacked, 4), gram_root(stacked, 2)
    else:
        gram = stacked @ adjoint(stacked)
        b, b_sq = psd_root(gram, 4, tol), psd_root(gram, 2, tol)
    u, sigma, vh = linalg.svd(stacked, full_matrices=False)
    keep = sigma > max(stacked.shape) * EPS * sigma[0]
    return _LevelRoot(
        b=b,
        b_sq=b_sq,
        u=u[:, keep],
        sigma=sigma[keep],
        isometry=u[:, keep] @ vh[keep],
        widths=tuple(m.shape[1] for m in factors),
    )


def construct_theorem(
    form: TriangularForm,
    root_method: RootMethod = RootMethod.GRAM,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> tuple[CommutatorPair, WitnessSet]:
    """Fractional-exponent factorization; forms with fewer than 4 levels are lifted."""
    form = form.lifted(4)
    n = form.n
    a = form.blocks
    b: dict[int, Matrix] = {}
    b_sq: dict[int, Matrix] = {}
    r: dict[BlockIndex, Matrix] = {}
    x: dict[int, Matrix] = {}
    y: dict[BlockIndex, Matrix] = {}
    c: dict[BlockIndex, Matrix] = {}

    # Step 1: b_1, ..., b_{n−2} and the contractions they dominate
    root = _level_root([a[1, j] for j in range(2, n + 1)], root_method, tol)
    b[1], b_sq[1] = root.b, root.b_sq
    for j in range(2, n + 1):
        r[(1, j)] = root.contraction(j - 2)
    for i in range(2, n - 2):
        root = _level_root(
            [b[i - 1]] + [a[i, j] for j in range(i + 1, n + 1)], root_method, tol
        )
        b[i], b_sq[i] = root.b, root.b_sq
        x[i] = root.contraction(0)
        for j in range(i + 1, n + 1):
            r[(i, j)] = root.contraction(j - i)
    root = _level_root([b_sq[n - 3], a[n - 2, n - 1], a[n - 2, n]], root_method, tol)
    b[n - 2], b_sq[n - 2] = root.b, root.b_sq
    r[(n - 2, n - 1)] = root.contraction(1)
    r[(n - 2, n)] = root.contraction(2)
    z = _solve("step 1 z", b[n - 2], b[n - 3], tol)

    # Step 2
    for j in range(2, n + 1):
        y[(2, j)] = r[(1, j)]
        c[(2, j)] = b[1] @ y[(2, j)]

    # Step 3
    for p in range(3, n - 1):
        for j in range(p, n):
            y[(p, j)] = r[(p - 1, j)] + x[p - 1] @ y[(p - 1, j - 1)] @ b[j - 1]
            c[(p, j)] = b[p - 1] @ y[(p, j)]

    # Step 4
    c[(n - 1, n - 1)] = b[n - 2] @ r[(n - 2, n - 1)] + z @ y[(n - 2, n - 2)] @ b[n - 2]

    # Step 5: the last superdiagonal block dominates a_{n−1,n} and c_{n−1,n−1}
    corner = c[(n - 1, n - 1)]
    root = _level_root([a[n - 1, n], corner @ adjoint(corner)], root_method, tol)
    b[n - 1], b_sq[n - 1] = root.b, root.b_sq
    r[(n - 1, n)] = root.contraction(0)
    s = root.divide("step 5 s", corner, tol)

    # Step 6
    for p in range(3, n - 1):
        c[(p, n)] = (
            b[p - 1] @ r[(p - 1, n)] + b[p - 1] @ x[p - 1] @ y[(p - 1, n - 1)] @ b[n - 1]
        )

    # Step 7
    c[(n - 1, n)] = b[n - 2] @ r[(n - 2, n)] + z @ y[(n - 2, n - 1)] @ b[n - 1]

    # Step 8
    c[(n, n)] = b[n - 1] @ r[(n - 1, n)] + s @ b[n - 1]

    witnesses = WitnessSet(
        r=MappingProxyType(r),
        x=MappingProxyType(x),
        z=z,
        s=s,
        y=MappingProxyType(y),
    )
    big_b, big_c = _assemble(form, b, c)
    logger.debug(
        "Theorem pair: n = %d, pad = %d, max witness norm %.6f",
        n,
        form.pad,
        witnesses.max_norm,
    )
    pair = CommutatorPair(
        B=big_b,
        C=big_c,
        mode=ConstructionMode.THEOREM,
        n=n,
        exponent=guaranteed_exponent(n, ConstructionMode.THEOREM),
        form=form,
        b=MappingProxyType(b),
        c=MappingProxyType(c),
    )
    return pair, witnesses


def construct(
    form: TriangularForm,
    mode: ConstructionMode,
    root_method: RootMethod = RootMethod.GRAM,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> tuple[CommutatorPair, WitnessSet | None]:
    if mode == ConstructionMode.PROPOSITION:
        return construct_proposition(form), None
    return construct_theorem(form, root_method, tol)


def _scale(a: Matrix) -> float:
    norm = fro_norm(a)
    return norm if norm > 0 else 1.0


def commutator_residual(a, big_b, big_c) -> float:
    """`‖A ⊕ 0 − (BC − CB)‖_F / ‖A‖_F` (absolute when A = 0)."""
    a, big_b, big_c = as_matrix(a), as_matrix(big_b), as_matrix(big_c)
    if a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"A must be square, got {a.shape}")
    if big_b.shape != big_c.shape or big_b.shape[0] != big_b.shape[1]:
        raise DimensionMismatch(f"B {big_b.shape} and C {big_c.shape} must be equal squares")
    if a.shape[0] > big_b.shape[0]:
        raise DimensionMismatch(f"A {a.shape} does not fit into B, C of shape {big_b.shape}")
    target = embed_padded(a, big_b.shape[0])
    return fro_norm(target - commutator(big_b, big_c)) / _scale(a)


def block_residuals(pair: CommutatorPair, scale: float = 1.0) -> dict[BlockIndex, float]:
    """Residuals of `b_i c_{i+1,j} − a_{i,j} − c_{i,j−1} b_{j−1}` for `i < j`."""
    form = pair.form
    n, pad = form.n, form.pad
    zero = np.zeros((pad, pad), dtype=np.complex128)
    out = {}
    for i in range(1, n):
        for j in range(i + 1, n + 1):
            lhs = pair.b.get(i, zero) @ pair.c.get((i + 1, j), zero)
            carry = pair.c.get((i, j - 1), zero) @ pair.b.get(j - 1, zero)
            out[(i, j)] = fro_norm(lhs - form.blocks[i, j] - carry) / scale
    return out


def verify_commutator(
    a,
    pair: CommutatorPair,
    witnesses: WitnessSet | None = None,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> VerifyReport:
    """Check `A ⊕ 0 = BC − CB` globally and block by block."""
    a = as_matrix(a)
    residual = commutator_residual(a, pair.B, pair.C)
    report = VerifyReport(
        residual_rel=residual,
        per_block_residuals=MappingProxyType(block_residuals(pair, _scale(a))),
        norm_B=op_norm(pair.B),
        norm_C=op_norm(pair.C),
        max_witness_norm=witnesses.max_norm if witnesses is not None else 0.0,
        passed=residual <= tol.comm,
    )
    logger.debug("Commutator residual %.3e (budget %.1e)", residual, tol.comm)
    return report
