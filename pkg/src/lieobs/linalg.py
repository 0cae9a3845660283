"""Dense small-matrix numerics: exponential, principal logarithm, inverses.

Every function accepts a single ``(n, n)`` array or a stack ``(..., n, n)``
and operates matrix-wise, so whole batches of simulation replicas can be
pushed through one call.  All norms are the induced 2-norm unless stated.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import (
    BranchCutViolation,
    DimensionMismatch,
    DomainViolation,
    NonConvergence,
    Singular,
)

DEFAULT_TOL = 1e-12
DEFAULT_MAX_ITER = 200
EPS = np.finfo(float).eps

# spectrum flags
IMAG_TOL = 1e-10
REAL_TOL = 1e-12

# sqrt reduction target for the logarithm
LOG_REDUCE_RADIUS = 0.5
EXP_SCALE_RADIUS = 0.5


def _as_square(A, name="A"):
    A = np.asarray(A, dtype=float)
    if A.ndim < 2 or A.shape[-1] != A.shape[-2] or A.shape[-1] < 1:
        raise DimensionMismatch(f"{name} must be square, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise DomainViolation(f"{name} has non-finite entries")
    return A


def _eye_like(A):
    return np.broadcast_to(np.eye(A.shape[-1]), A.shape)


def _frob(A):
    return np.sqrt(np.sum(A * A, axis=(-2, -1)))


def _flat_indices(mask):
    return np.flatnonzero(np.atleast_1d(mask))


def operator_norm(A):
    """Induced 2-norm (largest singular value)."""
    A = _as_square(A)
    return np.linalg.norm(A, 2, axis=(-2, -1))


def frobenius_norm(A):
    return _frob(_as_square(A))


def commutator(A, B):
    A = _as_square(A, "A")
    B = _as_square(B, "B")
    if A.shape[-1] != B.shape[-1]:
        raise DimensionMismatch(f"commutator of {A.shape} and {B.shape}")
    return A @ B - B @ A


def inverse_general(X, rcond=1e-14):
    """Inverse by LU, refusing numerically singular input.

    Singularity is judged by the Hadamard ratio |det X| / prod ||row_i||,
    which lies in [0, 1] and vanishes exactly for singular matrices.
    """
    X = _as_square(X, "X")
    rows = np.prod(np.linalg.norm(X, axis=-1), axis=-1)
    ratio = np.abs(np.linalg.det(X)) / np.where(rows > 0, rows, 1.0)
    bad = (ratio <= rcond) | (rows == 0)
    if np.any(bad):
        raise Singular(
            f"matrix is singular to working precision at {_flat_indices(bad).tolist()}"
        )
    return np.linalg.inv(X)


def adjoint(X, A):
    """Similarity transform ``X A X^{-1}``."""
    X = _as_square(X, "X")
    A = _as_square(A, "A")
    if X.shape[-1] != A.shape[-1]:
        raise DimensionMismatch(f"adjoint of {A.shape} by {X.shape}")
    return X @ A @ inverse_general(X)


def inverse_neumann(X, max_iter=DEFAULT_MAX_ITER):
    """Inverse of ``X`` near the identity from the series sum (I - X)^k.

    Partial sums are doubled each iteration, S <- S (I + M^(2^j)), so after
    j iterations the first 2^j terms are summed.  Requires
    ``||X - I|| < 1``.
    """
    X = _as_square(X, "X")
    M = _eye_like(X) - X
    r = operator_norm(M)
    if np.any(r >= 1.0):
        raise DomainViolation(
            f"||X - I|| = {np.max(r):.6g} >= 1; the series does not converge"
        )
    S = np.eye(X.shape[-1]) + M
    P = M
    for _ in range(max_iter):
        P = P @ P
        if np.all(_frob(P) <= EPS * _frob(S)):
            return S
        S = S + S @ P
    raise NonConvergence(f"inverse series did not converge in {max_iter} doublings")


@dataclass(frozen=True)
class SpectrumReport:
    eigenvalues: np.ndarray
    has_nonpositive_real_eigenvalue: bool
    max_imag_abs: float

    @property
    def pairs(self):
        return [(float(z.real), float(z.imag)) for z in np.ravel(self.eigenvalues)]


def _nonpositive_real_mask(w):
    """Per-matrix flag: some eigenvalue on the closed negative real axis."""
    on_axis = (np.abs(w.imag) <= IMAG_TOL) & (w.real <= REAL_TOL)
    return np.any(on_axis, axis=-1)


def spectrum_report(X):
    """Eigenvalues of ``X`` with the branch-cut flag of the principal log.

    For a stack the flag is true if any member has an eigenvalue on
    (-inf, 0].
    """
    X = _as_square(X, "X")
    try:
        w = np.linalg.eigvals(X)
    except np.linalg.LinAlgError as exc:
        raise NonConvergence(f"eigenvalue iteration failed: {exc}") from exc
    return SpectrumReport(
        eigenvalues=w,
        has_nonpositive_real_eigenvalue=bool(np.any(_nonpositive_real_mask(w))),
        max_imag_abs=float(np.max(np.abs(w.imag))),
    )


def check_log_domain(X):
    """Raise BranchCutViolation unless every matrix is off the branch cut."""
    w = np.linalg.eigvals(X)
    bad = _nonpositive_real_mask(w)
    if np.any(bad):
        idx = _flat_indices(bad)
        first = w.reshape(-1, w.shape[-1])[idx[0]]
        raise BranchCutViolation(
            f"eigenvalue on the closed negative real axis: {np.round(first, 12).tolist()}",
            indices=idx if np.ndim(bad) else (),
            eigenvalues=first,
        )


def mat_exp(A, max_terms=DEFAULT_MAX_ITER):
    """Matrix exponential by scaling and squaring with a Taylor core.

    Each matrix is scaled by 2^-s so that its 2-norm is at most 1/2, the
    Taylor series is summed until a term drops below machine precision
    relative to the partial sum, and the result is squared s times.
    """
    A = _as_square(A)
    norms = operator_norm(A)
    with np.errstate(divide="ignore"):
        s = np.where(norms > EXP_SCALE_RADIUS,
                     np.ceil(np.log2(np.maximum(norms, EXP_SCALE_RADIUS) / EXP_SCALE_RADIUS)),
                     0).astype(int)
    if np.any(s > 1100):
        raise NonConvergence(f"input norm {np.max(norms):.3g} too large for exp")
    As = A / np.ldexp(1.0, s)[..., None, None]
    result = np.array(_eye_like(A))
    term = result.copy()
    for k in range(1, max_terms + 1):
        term = term @ As / k
        result = result + term
        if np.all(_frob(term) <= EPS * _frob(result)):
            break
    else:
        raise NonConvergence(f"Taylor series did not settle in {max_terms} terms")
    for j in range(int(np.max(s, initial=0))):
        need = s > j
        if np.all(need):
            result = result @ result
        else:
            result[need] = result[need] @ result[need]
    if not np.all(np.isfinite(result)):
        raise NonConvergence("exponential overflowed")
    return result


def sqrtm_denman_beavers(X, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
    """Principal square root by the Denman-Beavers iteration."""
    X = _as_square(X, "X")
    Y = X
    Z = np.array(_eye_like(X))
    for _ in range(max_iter):
        Yi = np.linalg.inv(Y)
        Zi = np.linalg.inv(Z)
        Y_next = 0.5 * (Y + Zi)
        Z = 0.5 * (Z + Yi)
        done = _frob(Y_next - Y) <= tol * _frob(Y_next)
        Y = Y_next
        if np.all(done):
            return Y
    raise NonConvergence(f"Denman-Beavers iteration stalled after {max_iter} steps")


def _mercator_series(M, max_terms):
    """sum_{k>=1} (-1)^(k+1) M^k / k, cut off at machine precision."""
    total = M.copy()
    power = M
    for k in range(2, max_terms + 1):
        power = power @ M
        term = power / k
        total = total - term if k % 2 == 0 else total + term
        if np.all(_frob(term) <= EPS * _frob(total)):
            return total
    raise NonConvergence(f"logarithm series did not settle in {max_terms} terms")


def mat_log_principal(X, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
    """Principal logarithm by inverse scaling and squaring.

    Square roots are taken until ``||X^(1/2^k) - I|| <= 1/2``; the
    logarithm series is summed there and the result multiplied by 2^k.

    Raises
    ------
    BranchCutViolation
        If any eigenvalue lies on (-inf, 0].
    NonConvergence
        If the square-root iteration or the series stalls.
    """
    X = _as_square(X, "X")
    check_log_domain(X)
    Z = X.copy()
    eye = np.eye(X.shape[-1])
    k = np.zeros(X.shape[:-2], dtype=int)
    for _ in range(max_iter):
        need = operator_norm(Z - eye) > LOG_REDUCE_RADIUS
        if not np.any(need):
            break
        if np.all(need):
            Z = sqrtm_denman_beavers(Z, tol, max_iter)
        else:
            Z[need] = sqrtm_denman_beavers(Z[need], tol, max_iter)
        k = k + need
    else:
        raise NonConvergence(f"square-root reduction exceeded {max_iter} levels")
    L = _mercator_series(Z - eye, max_iter)
    return L * np.ldexp(1.0, k)[..., None, None]


def mat_log_gregory(X, max_terms=DEFAULT_MAX_ITER):
    """Logarithm from the inverse hyperbolic tangent series.

    log X = -2 sum_k C^(2k+1) / (2k+1) with C = (I - X)(I + X)^-1; needs every
    eigenvalue of ``X`` in the open right half-plane.  Convergence slows as
    eigenvalues approach the imaginary axis.
    """
    X = _as_square(X, "X")
    w = np.linalg.eigvals(X)
    if np.any(w.real <= 0):
        raise DomainViolation(
            f"eigenvalue with nonpositive real part: min Re = {np.min(w.real):.6g}"
        )
    eye = np.eye(X.shape[-1])
    C = (eye - X) @ np.linalg.inv(eye + X)
    C2 = C @ C
    power = C
    total = C.copy()
    for k in range(1, max_terms + 1):
        power = power @ C2
        term = power / (2 * k + 1)
        total = total + term
        if np.all(_frob(term) <= EPS * _frob(total)):
            return -2.0 * total
    raise NonConvergence(f"Gregory series did not settle in {max_terms} terms")
