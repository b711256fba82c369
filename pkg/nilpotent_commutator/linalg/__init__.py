from .base import (
    DEFAULT_TOLERANCES,
    EPS,
    CommutatorError,
    DimensionMismatch,
    InsufficientData,
    InvalidSpec,
    MajorizationViolated,
    Matrix,
    MatrixFormatError,
    NotHermitian,
    NotNilpotent,
    NotPSD,
    PartitionMismatch,
    ResidualTooLarge,
    ShapeMismatch,
    Tolerances,
)
from .blocks import BlockMatrix, BlockPartition, assemble_blocks, extract_blocks
from .core import (
    adjoint,
    as_matrix,
    commutator,
    embed_padded,
    fro_norm,
    gram_root,
    haar_unitary,
    op_norm,
    pinv,
    psd_root,
    singular_values,
    unitarity_residual,
)
from .mmio import read_matrix, write_matrix

__ALL__ = [
    DEFAULT_TOLERANCES,
    EPS,
    BlockMatrix,
    BlockPartition,
    CommutatorError,
    DimensionMismatch,
    InsufficientData,
    InvalidSpec,
    MajorizationViolated,
    Matrix,
    MatrixFormatError,
    NotHermitian,
    NotNilpotent,
    NotPSD,
    PartitionMismatch,
    ResidualTooLarge,
    ShapeMismatch,
    Tolerances,
    adjoint,
    as_matrix,
    assemble_blocks,
    commutator,
    embed_padded,
    extract_blocks,
    fro_norm,
    gram_root,
    haar_unitary,
    op_norm,
    pinv,
    psd_root,
    read_matrix,
    singular_values,
    unitarity_residual,
    write_matrix,
]
