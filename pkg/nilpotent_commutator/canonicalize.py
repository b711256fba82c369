"""Kernel flags and strictly block upper triangular forms of nilpotents.

The flag `ker A ⊆ ker A² ⊆ ... ⊆ ker Aⁿ` splits the space into levels
`H_k = ker A^k ⊖ ker A^{k−1}` with `A(H_k) ⊆ H_1 ⊕ ... ⊕ H_{k−1}`. Stacking
orthonormal level bases gives a unitary `U` with `U A U*` strictly block
upper triangular. Every level is then zero-padded to the size of `H_1` so
the blocks compose as equal squares.

Numerically the flag is chosen among several candidates, see `_flag_levels`.
"""

import logging
from collections.abc import Iterator
from dataclasses import dataclass, replace

import numpy as np
from scipy import linalg

from .linalg import (
    DEFAULT_TOLERANCES,
    EPS,
    BlockMatrix,
    BlockPartition,
    Matrix,
    NotNilpotent,
    ShapeMismatch,
    Tolerances,
    adjoint,
    as_matrix,
    assemble_blocks,
    extract_blocks,
    fro_norm,
    op_norm,
)

logger = logging.getLogger(__name__)

# Truncation cutoffs for the partial-isometry flags run from `tol.rank·‖A‖`
# up this many decades, in this many log-spaced steps.
POLAR_CUTOFF_DECADES = 4
POLAR_CUTOFF_STEPS = 13


@dataclass(kw_only=True, frozen=True)
class TriangularForm:
    """A nilpotent conjugated onto its kernel flag, padded to square blocks.

    `U` maps original coordinates to flag coordinates, `blocks` holds the
    padded `a_{i,j}` (`i < j`) over `n` blocks of size `pad`.
    """

    U: Matrix
    partition: BlockPartition
    pad: int
    blocks: BlockMatrix
    embed_dim: int
    lower_residual: float = 0.0

    @property
    def n(self) -> int:
        return self.partition.n

    @property
    def dim(self) -> int:
        return self.partition.total

    def padded_matrix(self) -> Matrix:
        return assemble_blocks(self.blocks)

    def frame(self) -> Matrix:
        """Unitary `V` with `V (A ⊕ 0) V*` equal to the padded block matrix.

        The first `dim` columns carry `U` into padded slots level by level;
        the remaining columns pick up the padding slots in increasing order.
        """
        v = np.zeros((self.embed_dim, self.embed_dim), dtype=np.complex128)
        extra = self.dim
        for k in range(1, self.n + 1):
            rows = self.partition.span(k)
            d_k = self.partition.sizes[k - 1]
            start = (k - 1) * self.pad
            v[start : start + d_k, : self.dim] = self.U[rows, :]
            for slot in range(start + d_k, start + self.pad):
                v[slot, extra] = 1.0
                extra += 1
        return v

    def lifted(self, levels: int) -> "TriangularForm":
        """Append empty flag levels until there are at least `levels`."""
        if self.n >= levels:
            return self
        partition = BlockPartition(self.partition.sizes + (0,) * (levels - self.n))
        blocks = BlockMatrix.square(
            BlockPartition.uniform(levels, self.pad), dict(self.blocks.blocks)
        )
        return self.replace(
            partition=partition, blocks=blocks, embed_dim=levels * self.pad
        )

    def replace(self, **kwargs):
        """Returns a new TriangularForm with the given fields replaced."""
        return replace(self, **kwargs)


def _square(a) -> Matrix:
    a = as_matrix(a)
    if a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise ShapeMismatch(f"Expected a non-empty square matrix, got {a.shape}")
    return a


def nilpotency_index(a, tol: float = 1e-10) -> int:
    """Number of levels in the kernel flag of A; the zero matrix has index 1.

    `tol` is the relative rank tolerance the flag is computed with.
    """
    a = _square(a)
    return len(_flag_levels(a, DEFAULT_TOLERANCES.replace(rank=tol)))


def _normalize_phases(basis: Matrix) -> Matrix:
    """Rotate each column so its largest-magnitude entry is real positive."""
    if basis.size == 0:
        return basis
    idx = np.argmax(np.abs(basis), axis=0)
    pivots = basis[idx, np.arange(basis.shape[1])]
    mags = np.abs(pivots)
    phases = np.where(mags > 0, np.conj(pivots) / np.where(mags > 0, mags, 1.0), 1.0)
    return basis * phases


def _project_out(m: Matrix, flag: Matrix) -> Matrix:
    for _ in range(2):
        m = m - flag @ (adjoint(flag) @ m)
    return m


def _orthonormal(basis: Matrix, flag: Matrix) -> Matrix:
    """Orthonormal basis for the part of `basis` orthogonal to `flag`."""
    if basis.shape[1] == 0:
        return basis
    q, _ = linalg.qr(_project_out(basis, flag), mode="economic")
    return q


def _staircase(m: Matrix, floor: float, rel: float) -> list[Matrix]:
    """Orthonormal bases of `ker M^k ⊖ ker M^{k−1}` for k = 1, 2, ...

    A singular value of the projected image counts as zero when it is at
    most `max(floor, rel·s_1)`, with `s_1` the largest one of that image.
    """
    dim = m.shape[0]
    flag = np.zeros((dim, 0), dtype=np.complex128)
    rest = np.eye(dim, dtype=np.complex128)
    levels = []
    while rest.shape[1] > 0:
        # v ∈ ker M^k exactly when M v lies in ker M^{k−1}
        _, s, vh = linalg.svd(_project_out(m @ rest, flag))
        rank = int(np.sum(s > max(floor, rel * s[0])))
        if rank == rest.shape[1]:
            raise NotNilpotent(
                f"No kernel found after {len(levels)} flag levels, {rank} dimensions left"
            )
        level = _orthonormal(rest @ adjoint(vh[rank:]), flag)
        flag = np.hstack([flag, level])
        rest = _orthonormal(rest @ adjoint(vh[:rank]), flag)
        levels.append(level)
    return levels


def _in_flag_basis(a: Matrix, levels: list[Matrix]) -> tuple[BlockPartition, BlockMatrix]:
    partition = BlockPartition(tuple(level.shape[1] for level in levels))
    basis = np.hstack(levels)
    return partition, extract_blocks(adjoint(basis) @ a @ basis, partition)


def _lower_part(rotated: BlockMatrix, partition: BlockPartition) -> Matrix:
    """The blocks on and below the diagonal, upper blocks zeroed."""
    lower = np.zeros((partition.total, partition.total), dtype=np.complex128)
    for i in range(1, partition.n + 1):
        for j in range(1, i + 1):
            lower[partition.span(i), partition.span(j)] = rotated[i, j]
    return lower


@dataclass(kw_only=True, frozen=True)
class _FlagCandidate:
    source: str
    levels: list[Matrix]
    lower_residual: float


def _flag_candidates(a: Matrix, tol: Tolerances) -> Iterator[_FlagCandidate]:
    """Flags of A itself and of the partial isometries of its truncated SVDs.

    The partial isometry `P = U_r V_r*` keeps the kernel chains of A but
    flattens their weights, so graded spectra cannot push true kernel
    vectors over the rank threshold. Each truncation rank is tried once.
    """
    dim = a.shape[0]
    norm = op_norm(a)
    routes = [("direct", a, dim * EPS * norm, tol.rank)]
    u, s, vh = linalg.svd(a)
    start = np.log10(tol.rank)
    seen = set()
    for cutoff in norm * np.logspace(start, start + POLAR_CUTOFF_DECADES, POLAR_CUTOFF_STEPS):
        rank = int(np.sum(s > cutoff))
        if rank not in seen:
            seen.add(rank)
            polar = u[:, :rank] @ vh[:rank]
            routes.append((f"polar rank {rank}", polar, np.sqrt(tol.rank), 0.0))

    for source, m, floor, rel in routes:
        try:
            levels = _staircase(m, floor, rel)
        except NotNilpotent as e:
            logger.debug("Flag route %s failed: %s", source, e.message)
            continue
        partition, rotated = _in_flag_basis(a, levels)
        residual = fro_norm(_lower_part(rotated, partition))
        logger.debug(
            "Flag route %s: %d levels, %.3e below the diagonal", source, len(levels), residual
        )
        yield _FlagCandidate(source=source, levels=levels, lower_residual=residual)


def _flag_levels(a: Matrix, tol: Tolerances) -> list[Matrix]:
    """Orthonormal level bases of the shortest flag A is triangular on.

    A flag qualifies when the part of A it leaves on or below the block
    diagonal is within the commutator budget `tol.comm·‖A‖_F`; among the
    shortest qualifying flags the smallest such part wins.
    """
    budget = tol.comm * fro_norm(a)
    candidates = [c for c in _flag_candidates(a, tol) if c.lower_residual <= budget]
    if not candidates:
        raise NotNilpotent(
            f"No kernel flag leaves less than {budget:.1e} on or below the block diagonal"
        )
    best = min(candidates, key=lambda c: (len(c.levels), c.lower_residual))
    logger.debug("Kernel flag from route %s", best.source)
    return best.levels


def _align_chains(a: Matrix, levels: list[Matrix]) -> list[Matrix]:
    """Rotate level bases so every `a_{k−1,k}` is upper triangular, diagonal ≥ 0."""
    levels = list(levels)
    n = len(levels)
    if n == 1:
        return [_normalize_phases(levels[0])]

    top = adjoint(levels[n - 2]) @ a @ levels[n - 1]
    _, _, vh = linalg.svd(top)
    levels[n - 1] = _normalize_phases(levels[n - 1] @ adjoint(vh))

    for k in range(n, 1, -1):
        d_k = levels[k - 1].shape[1]
        m = adjoint(levels[k - 2]) @ a @ levels[k - 1]
        q, r = linalg.qr(m)
        diag = np.diag(r)[:d_k]
        mags = np.abs(diag)
        phases = np.where(mags > 0, diag / np.where(mags > 0, mags, 1.0), 1.0)
        q[:, :d_k] = q[:, :d_k] * phases
        rotated = levels[k - 2] @ q
        rotated[:, d_k:] = _normalize_phases(rotated[:, d_k:])
        levels[k - 2] = rotated
    return levels


def kernel_flag(a, tol: Tolerances = DEFAULT_TOLERANCES) -> BlockPartition:
    """Level sizes `d_k = dim ker A^k − dim ker A^{k−1}`."""
    a = _square(a)
    return BlockPartition(tuple(level.shape[1] for level in _flag_levels(a, tol)))


def triangularize(a, tol: Tolerances = DEFAULT_TOLERANCES) -> TriangularForm:
    a = _square(a)
    levels = _align_chains(a, _flag_levels(a, tol))
    partition, rotated = _in_flag_basis(a, levels)
    lower_residual = op_norm(_lower_part(rotated, partition))

    n = partition.n
    pad = partition.sizes[0]
    padded = {}
    for i in range(1, n + 1):
        for j in range(i + 1, n + 1):
            block = np.zeros((pad, pad), dtype=np.complex128)
            block[: partition.sizes[i - 1], : partition.sizes[j - 1]] = rotated[i, j]
            padded[(i, j)] = block
    logger.debug("Kernel flag %s, pad %d", partition.sizes, pad)
    return TriangularForm(
        U=adjoint(np.hstack(levels)),
        partition=partition,
        pad=pad,
        blocks=BlockMatrix.square(BlockPartition.uniform(n, pad), padded),
        embed_dim=n * pad,
        lower_residual=lower_residual,
    )
