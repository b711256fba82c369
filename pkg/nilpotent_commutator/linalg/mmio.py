"""Matrix Market exchange: real or complex input, complex `array` output."""

from pathlib import Path

import numpy as np
from scipy import io, sparse

from .base import Matrix, MatrixFormatError
from .core import as_matrix


def read_matrix(path: Path | str) -> Matrix:
    """Read a Matrix Market file; raise a MatrixFormatError if an error occurs."""
    try:
        data = io.mmread(str(path))
    except Exception as e:
        raise MatrixFormatError(f"Ran into {e} while trying to read {path}") from None
    if sparse.issparse(data):
        data = data.toarray()
    return as_matrix(data)


def write_matrix(path: Path | str, m) -> None:
    """Write a dense complex general matrix; raise a MatrixFormatError if an error occurs."""
    m = as_matrix(m)
    try:
        io.mmwrite(
            str(path),
            np.ascontiguousarray(m),
            field="complex",
            precision=17,
            symmetry="general",
        )
    except Exception as e:
        raise MatrixFormatError(f"Ran into {e} while trying to write to {path}") from None
