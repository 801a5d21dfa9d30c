"""Dense linear algebra kernels used throughout the package.

Everything operates on plain float64 ``numpy.ndarray`` values.  Symmetric
positive definite (SPD) arguments are validated on entry: inputs are
symmetrized as ``(A + A.T) / 2`` and rejected if the asymmetry exceeds a
relative tolerance, which guards against drift accumulating over long
Monte Carlo loops.  Determinants of SPD matrices are only ever computed in
log space through a Cholesky factor so that large mixtures cannot overflow.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import cho_solve, solve_triangular

from .errors import InvalidParameter, NotPositiveDefinite, ShapeMismatch

# Relative pivot tolerance: a Cholesky pivot at or below
# PIVOT_RTOL * max(diag(A)) means "numerically not positive definite".
PIVOT_RTOL = 1e-12

# Maximum allowed relative asymmetry for SPD inputs.
SYMMETRY_RTOL = 1e-10


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Coerce to a 2-d float64 array with finite entries."""
    out = np.asarray(a, dtype=np.float64)
    if out.ndim == 1:
        out = out[:, None]
    if out.ndim != 2:
        raise ShapeMismatch(f"{name} must be 2-d, got ndim={out.ndim}")
    if out.size and not np.isfinite(out).all():
        raise InvalidParameter(f"{name} contains non-finite entries")
    return out


def symmetrize(a, rtol: float = SYMMETRY_RTOL, name: str = "matrix") -> np.ndarray:
    """Return ``(A + A.T) / 2`` after checking A is square and nearly symmetric.

    Raises
    ------
    ShapeMismatch
        If ``a`` is not square.
    InvalidParameter
        If the relative asymmetry ``max|A - A.T| / max|A|`` exceeds ``rtol``.
    """
    out = as_matrix(a, name)
    n, m = out.shape
    if n != m:
        raise ShapeMismatch(f"{name} must be square, got {n}x{m}")
    if n == 0:
        return out
    scale = np.abs(out).max()
    gap = np.abs(out - out.T).max()
    if gap > rtol * max(scale, 1e-300):
        raise InvalidParameter(
            f"{name} is not symmetric: asymmetry {gap:.3e} exceeds "
            f"{rtol:.1e} * {scale:.3e}"
        )
    return (out + out.T) / 2.0


def cholesky(a) -> np.ndarray:
    """Lower Cholesky factor L with L @ L.T == A.

    The input is symmetrized first.  Fails loudly instead of returning a
    garbage factor: any pivot at or below ``PIVOT_RTOL * max(diag(A))``
    raises :class:`NotPositiveDefinite`.
    """
    sym = symmetrize(a)
    n = sym.shape[0]
    if n == 0:
        return sym.copy()
    max_diag = float(np.max(np.diag(sym))) if n else 0.0
    if max_diag <= 0.0:
        raise NotPositiveDefinite("maximum diagonal entry is not positive")
    try:
        low = np.linalg.cholesky(sym)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from exc
    # LAPACK accepts any positive pivot; enforce the relative tolerance.
    pivots = np.diag(low) ** 2
    if np.min(pivots) <= PIVOT_RTOL * max_diag:
        raise NotPositiveDefinite(
            f"pivot {np.min(pivots):.3e} below tolerance "
            f"{PIVOT_RTOL:.1e} * {max_diag:.3e}"
        )
    return low


def kron(a, b) -> np.ndarray:
    """Kronecker product: block (i, j) of the result equals ``a[i, j] * b``."""
    return np.kron(as_matrix(a, "a"), as_matrix(b, "b"))


def pinv(a) -> np.ndarray:
    """Moore-Penrose pseudoinverse via SVD.

    Singular values below ``max(sigma) * max(rows, cols) * eps`` are treated
    as zero (standard rank-revealing cutoff).  A rank-0 input returns the
    zero matrix of the transposed shape.
    """
    mat = as_matrix(a, "a")
    if mat.size == 0:
        return mat.T.copy()
    rcond = max(mat.shape) * np.finfo(np.float64).eps
    return np.linalg.pinv(mat, rcond=rcond)


def logdet_spd(a) -> float:
    """log det A for SPD A, computed as ``2 * sum(log(diag(L)))``.

    Never forms the raw determinant, so it cannot overflow for large
    well-conditioned matrices.
    """
    low = cholesky(a)
    if low.shape[0] == 0:
        return 0.0
    return float(2.0 * np.sum(np.log(np.diag(low))))


def spd_solve(a, b) -> np.ndarray:
    """Solve ``A @ X = B`` for SPD A without forming the inverse."""
    low = cholesky(a)
    rhs = np.asarray(b, dtype=np.float64)
    vector_rhs = rhs.ndim == 1
    if vector_rhs:
        rhs = rhs[:, None]
    rhs = as_matrix(rhs, "b")
    if rhs.shape[0] != low.shape[0]:
        raise ShapeMismatch(
            f"b has {rhs.shape[0]} rows, expected {low.shape[0]}"
        )
    out = cho_solve((low, True), rhs, check_finite=False)
    return out[:, 0] if vector_rhs else out


def solve_lower_triangular(low, b) -> np.ndarray:
    """Solve ``L @ X = B`` for lower-triangular L."""
    return solve_triangular(low, b, lower=True, check_finite=False)


def vec(a) -> np.ndarray:
    """Stack the columns of ``a`` into a 1-d vector (column-major order)."""
    return as_matrix(a, "a").reshape(-1, order="F").copy()
