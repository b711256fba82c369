"""Block partitions and block matrices over them.

Block indices are 1-based, so block `(i, j)` of a matrix partitioned by
`(d_1, ..., d_n)` spans rows `d_1 + ... + d_{i-1}` onward.
"""

from collections.abc import Mapping
from dataclasses import dataclass, field
from functools import cached_property
from types import MappingProxyType

import numpy as np

from .base import Matrix, PartitionMismatch, ShapeMismatch
from .core import as_matrix

BlockIndex = tuple[int, int]


@dataclass(frozen=True)
class BlockPartition:
    """Sizes `(d_1, ..., d_n)` of consecutive diagonal blocks."""

    sizes: tuple[int, ...]

    def __post_init__(self):
        sizes = tuple(int(d) for d in self.sizes)
        if any(d < 0 for d in sizes):
            raise PartitionMismatch(f"Block sizes must be non-negative, got {sizes}")
        object.__setattr__(self, "sizes", sizes)

    @classmethod
    def uniform(cls, n: int, size: int) -> "BlockPartition":
        return cls((size,) * n)

    @property
    def n(self) -> int:
        return len(self.sizes)

    @property
    def total(self) -> int:
        return sum(self.sizes)

    @cached_property
    def offsets(self) -> tuple[int, ...]:
        return tuple(int(o) for o in np.concatenate([[0], np.cumsum(self.sizes, dtype=int)]))

    def span(self, i: int) -> slice:
        """Index range of block `i` (1-based)."""
        if not 1 <= i <= self.n:
            raise IndexError(f"Block {i} outside partition of {self.n} blocks")
        return slice(self.offsets[i - 1], self.offsets[i])

    @property
    def is_non_increasing(self) -> bool:
        return all(a >= b for a, b in zip(self.sizes, self.sizes[1:], strict=False))


@dataclass(kw_only=True, frozen=True)
class BlockMatrix:
    """Sparse map of `(i, j)` blocks; absent blocks are zero."""

    rows: BlockPartition
    cols: BlockPartition
    blocks: Mapping[BlockIndex, Matrix] = field(default_factory=dict)

    def __post_init__(self):
        checked = {}
        for (i, j), block in self.blocks.items():
            if not (1 <= i <= self.rows.n and 1 <= j <= self.cols.n):
                raise ShapeMismatch(f"Block ({i}, {j}) outside a {self.rows.n}x{self.cols.n} grid")
            block = as_matrix(block)
            expected = (self.rows.sizes[i - 1], self.cols.sizes[j - 1])
            if block.shape != expected:
                raise ShapeMismatch(
                    f"Block ({i}, {j}) has shape {block.shape}, partition needs {expected}"
                )
            checked[(i, j)] = block
        object.__setattr__(self, "blocks", MappingProxyType(checked))

    @classmethod
    def square(cls, partition: BlockPartition, blocks: Mapping[BlockIndex, Matrix]):
        return cls(rows=partition, cols=partition, blocks=blocks)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows.total, self.cols.total)

    def __getitem__(self, index: BlockIndex) -> Matrix:
        i, j = index
        block = self.blocks.get((i, j))
        if block is not None:
            return block
        return np.zeros((self.rows.sizes[i - 1], self.cols.sizes[j - 1]), dtype=np.complex128)

    def __contains__(self, index: BlockIndex) -> bool:
        return index in self.blocks

    def toarray(self) -> Matrix:
        return assemble_blocks(self)


def assemble_blocks(bm: BlockMatrix) -> Matrix:
    """Place every stored block at its partition offsets in a dense matrix."""
    out = np.zeros(bm.shape, dtype=np.complex128)
    for (i, j), block in bm.blocks.items():
        out[bm.rows.span(i), bm.cols.span(j)] = block
    return out


def extract_blocks(m, partition: BlockPartition) -> BlockMatrix:
    """Split a square matrix into all `n * n` blocks of `partition`."""
    m = as_matrix(m)
    if m.shape != (partition.total, partition.total):
        raise PartitionMismatch(
            f"Partition of total {partition.total} does not cover a {m.shape} matrix"
        )
    blocks = {
        (i, j): m[partition.span(i), partition.span(j)].copy()
        for i in range(1, partition.n + 1)
        for j in range(1, partition.n + 1)
    }
    return BlockMatrix.square(partition, blocks)
