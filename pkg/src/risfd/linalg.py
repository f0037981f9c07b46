"""Small complex linear-algebra helpers shared across the package."""

import numpy as np
import scipy.linalg

__all__ = [
    "vec",
    "unvec",
    "kron",
    "khatri_rao",
    "dft_matrix",
    "hermitian_solve",
    "hermitian_solve_count",
    "SolveError",
]

# number of dense Hermitian factorizations performed so far (test hook)
_SOLVE_CALLS = 0


class SolveError(np.linalg.LinAlgError):
    """Raised when a Hermitian solve cannot be performed as requested."""


def vec(a):
    """Stack the columns of a matrix into a vector."""
    return np.asarray(a).reshape(-1, order="F")


def unvec(v, rows):
    """Inverse of :func:`vec`; reshapes ``v`` into ``rows`` rows column-wise."""
    v = np.asarray(v)
    if v.size % rows:
        raise ValueError(f"cannot unvec length {v.size} into {rows} rows")
    return v.reshape(rows, -1, order="F")


def kron(a, b):
    return np.kron(a, b)


def khatri_rao(a, b):
    """Column-wise Kronecker product of two matrices with equal column counts."""
    a = np.atleast_2d(a)
    b = np.atleast_2d(b)
    if a.shape[1] != b.shape[1]:
        raise ValueError(
            f"column-wise product needs equal column counts, got {a.shape} and {b.shape}"
        )
    return scipy.linalg.khatri_rao(a, b)


def dft_matrix(n, normalized=False):
    """n x n DFT matrix W[m, l] = exp(-2j*pi*m*l/n), optionally scaled by 1/sqrt(n).

    The first row and first column are exactly ones; with ``normalized`` the
    matrix is unitary.
    """
    if n < 1:
        raise ValueError("dft_matrix needs n >= 1")
    w = scipy.linalg.dft(n)
    if normalized:
        w = w / np.sqrt(n)
    return w


def hermitian_solve(a, b, *, rtol=1e-10):
    """Solve ``a @ x = b`` for Hermitian positive-definite ``a`` via Cholesky.

    No regularization is ever applied: a matrix that is not Hermitian (to
    ``rtol`` relative) or not positive definite raises :class:`SolveError`
    with a condition diagnostic instead of returning a doctored answer.
    """
    global _SOLVE_CALLS
    a = np.asarray(a)
    b = np.asarray(b)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise SolveError(f"expected a square matrix, got shape {a.shape}")
    scale = np.abs(a).max()
    if scale == 0:
        raise SolveError("matrix is identically zero")
    herm_defect = np.abs(a - a.conj().T).max() / scale
    if herm_defect > rtol:
        raise SolveError(f"matrix is not Hermitian (relative defect {herm_defect:.3e})")
    _SOLVE_CALLS += 1
    try:
        c, low = scipy.linalg.cho_factor(a, check_finite=False)
    except np.linalg.LinAlgError as exc:
        eig = np.linalg.eigvalsh(a)
        raise SolveError(
            "Cholesky factorization failed (matrix not positive definite); "
            f"eigenvalue range [{eig.min():.3e}, {eig.max():.3e}]"
        ) from exc
    return scipy.linalg.cho_solve((c, low), b, check_finite=False)


def hermitian_solve_count():
    """Total dense factorizations performed (instrumentation for tests)."""
    return _SOLVE_CALLS
