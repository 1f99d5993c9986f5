"""
Dense complex linear-algebra kernels.

Every kernel accepts optional leading batch axes (shape ``(..., M)`` for
vectors, ``(..., M, M)`` for matrices) so the same code drives a single
adaptive chain or a stack of Monte Carlo trials.
"""
import numpy as np
import scipy.linalg as la

# module-level tolerances
HERMITIAN_TOL = 1e-9
SOLVE_RESIDUAL_TOL = 1e-8
SINGULAR_COND = 1e13


class SingularMatrixError(np.linalg.LinAlgError):
    """Raised when a matrix is singular to working precision."""

    def __init__(self, message, cond=np.inf):
        super().__init__(message)
        self.cond = cond


class NonFiniteError(FloatingPointError):
    """Raised when a recursion produces NaN or Inf."""


def hermitian(x):
    """Conjugate transpose over the last two axes."""
    return np.conj(np.swapaxes(x, -1, -2))


def symmetrize(P):
    """Project onto the Hermitian matrices, ``(P + P^H) / 2``."""
    return 0.5 * (P + hermitian(P))


def is_hermitian(R, tol=HERMITIAN_TOL):
    scale = max(np.max(np.abs(R)), 1.0)
    return bool(np.max(np.abs(R - hermitian(R))) <= tol * scale)


def _check_square(R):
    if R.ndim < 2 or R.shape[-1] != R.shape[-2]:
        raise ValueError(f"expected square matrix, got shape {R.shape}")


def hermitian_quadratic_form(w, R, tol=HERMITIAN_TOL):
    """
    Real value of ``w^H R w``.

    Arguments:
        w: shape as (..., M)
        R: shape as (..., M, M), Hermitian
    Return:
        real array of shape (...)
    """
    w = np.asarray(w)
    R = np.asarray(R)
    _check_square(R)
    if R.shape[-1] != w.shape[-1]:
        raise ValueError(f"dimension mismatch: len(w)={w.shape[-1]}, dim(R)={R.shape[-1]}")
    if not is_hermitian(R, tol):
        raise ValueError("R is not Hermitian within tolerance")
    q = np.einsum("...m,...mn,...n->...", np.conj(w), R, w)
    scale = np.maximum(np.abs(q), np.finfo(float).tiny)
    # imaginary residue of a Hermitian form is pure round-off
    norm_scale = np.einsum("...m,...mn,...n->...", np.abs(w), np.abs(R), np.abs(w))
    if np.any(np.abs(q.imag) > tol * np.maximum(scale, norm_scale)):
        raise ValueError("quadratic form has non-negligible imaginary part")
    return q.real


def solve_hermitian(R, b, tol=SOLVE_RESIDUAL_TOL):
    """
    Solve ``R x = b`` for a single Hermitian, nonsingular ``R``.

    ``b`` may be a vector or a matrix of right-hand sides. Raises
    SingularMatrixError (carrying a condition estimate) when ``R`` is singular
    to working precision or the residual misses ``tol * ||b||``.
    """
    R = np.asarray(R, dtype=complex)
    b = np.asarray(b, dtype=complex)
    _check_square(R)
    if R.ndim != 2:
        raise ValueError("solve_hermitian takes a single matrix")
    if b.shape[0] != R.shape[0]:
        raise ValueError(f"dimension mismatch: len(b)={b.shape[0]}, dim(R)={R.shape[0]}")
    if not is_hermitian(R):
        raise ValueError("R is not Hermitian within tolerance")
    cond = np.linalg.cond(R)
    if not np.isfinite(cond) or cond > SINGULAR_COND:
        raise SingularMatrixError(f"matrix is singular to tolerance (cond ~ {cond:.3e})", cond)
    x = la.solve(R, b, assume_a="her")
    res = np.linalg.norm(R @ x - b)
    if res > tol * max(np.linalg.norm(b), np.finfo(float).tiny):
        raise SingularMatrixError(
            f"residual {res:.3e} exceeds tolerance (cond ~ {cond:.3e})", cond)
    return x


def inverse_hermitian(R):
    """Explicit inverse of a small Hermitian nonsingular matrix."""
    R = np.asarray(R, dtype=complex)
    return symmetrize(solve_hermitian(R, np.eye(R.shape[0], dtype=complex)))


def rank_one_inverse_update(P_prev, r, alpha, loading=0.0, check=True):
    """
    Exponentially weighted inverse-covariance update by the matrix inversion lemma.

        k = a^-1 P r / (1 + a^-1 r^H P r)
        P = a^-1 P - a^-1 k r^H P + loading * I

    With ``loading = 0`` the result is ``(alpha P_prev^-1 + r r^H)^-1``.

    Arguments:
        P_prev: shape as (..., M, M), Hermitian positive definite
        r: shape as (..., M)
        alpha: forgetting factor in (0, 1]
        loading: scalar or shape (...), added on the diagonal
        check: raise NonFiniteError on NaN/Inf; batched callers that mask
            bad rows themselves pass False
    Return:
        k: shape as (..., M)
        P: shape as (..., M, M), re-symmetrized
    """
    P_prev = np.asarray(P_prev)
    r = np.asarray(r)
    if r.shape[-1] != P_prev.shape[-1]:
        raise ValueError(f"dimension mismatch: len(r)={r.shape[-1]}, dim(P)={P_prev.shape[-1]}")
    inv_a = 1.0 / alpha
    Pr = np.einsum("...mn,...n->...m", P_prev, r)
    # r^H P r is real for Hermitian P
    rPr = np.einsum("...m,...m->...", np.conj(r), Pr).real
    k = inv_a * Pr / (1.0 + inv_a * rPr)[..., None]
    # r^H P = (P r)^H for Hermitian P
    P = inv_a * (P_prev - k[..., :, None] * np.conj(Pr)[..., None, :])
    loading = np.asarray(loading, dtype=float)
    if np.any(loading != 0.0):
        M = P.shape[-1]
        P = P + loading[..., None, None] * np.eye(M)
    P = symmetrize(P)
    if check and not (np.all(np.isfinite(k)) and np.all(np.isfinite(P))):
        raise NonFiniteError("non-finite value in inverse-covariance update")
    return k, P
