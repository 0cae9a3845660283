"""Matrix Lie groups GL(n), SL(n), SO(n): membership, projections, SO(3) maps.

Group and algebra elements are plain ndarrays; a :class:`GroupFamily`
carries the tag and dimension and knows the defining equations.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import DimensionMismatch, DomainViolation, NearBranchCut
from .linalg import _as_square, inverse_general, mat_exp, operator_norm

FAMILIES = ("GL", "SL", "SO")

MEMBER_TOL = 1e-9
DATA_TOL = 5e-4
ANGLE_GUARD = 1e-6


@dataclass(frozen=True)
class GroupFamily:
    tag: str
    n: int

    def __post_init__(self):
        if self.tag not in FAMILIES:
            raise ValueError(f"unknown group family {self.tag!r}")
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"dimension must be a positive integer, got {self.n}")
        if self.tag in ("SO", "SL") and self.n < 2:
            raise ValueError(f"{self.tag} requires n >= 2")

    def __str__(self):
        return f"{self.tag}({self.n})"

    @classmethod
    def parse(cls, text):
        """``'SO(3)'`` -> GroupFamily('SO', 3)."""
        text = text.strip().replace(" ", "")
        tag, _, rest = text.partition("(")
        if not rest.endswith(")"):
            raise ValueError(f"expected e.g. 'SO(3)', got {text!r}")
        return cls(tag.upper(), int(rest[:-1]))

    def check_shape(self, X):
        if X.shape[-2:] != (self.n, self.n):
            raise DimensionMismatch(f"{self} expects {self.n}x{self.n}, got {X.shape}")

    def identity(self):
        return np.eye(self.n)

    def reproject(self, X):
        """Nearest-ish group element: polar factor for SO, det scaling for SL."""
        X = np.asarray(X, dtype=float)
        if self.tag == "SO":
            U, _, Vt = np.linalg.svd(X)
            d = np.sign(np.linalg.det(U @ Vt))
            U = U.copy()
            U[..., :, -1] *= np.asarray(d)[..., None]
            return U @ Vt
        if self.tag == "SL":
            det = np.linalg.det(X)
            scale = np.sign(det) * np.abs(det) ** (1.0 / self.n)
            return X / np.asarray(scale)[..., None, None]
        return X


def _family(family):
    return GroupFamily.parse(family) if isinstance(family, str) else family


def is_in_group(X, family, tol=MEMBER_TOL):
    """True iff ``X`` satisfies the family's defining equations within tol.

    For a stack, returns a boolean array.
    """
    family = _family(family)
    X = np.asarray(X, dtype=float)
    family.check_shape(X)
    finite = np.all(np.isfinite(X), axis=(-2, -1))
    X = np.where(finite[..., None, None], X, 0.0)
    det = np.linalg.det(X)
    if family.tag == "GL":
        ok = np.abs(det) > tol
    elif family.tag == "SL":
        ok = np.abs(det - 1.0) <= tol
    else:
        defect = operator_norm(X @ np.swapaxes(X, -1, -2) - np.eye(family.n))
        ok = (defect <= tol) & (det > 0)
    ok = ok & finite
    return bool(ok) if np.ndim(ok) == 0 else ok


def is_in_algebra(A, family, tol=MEMBER_TOL):
    family = _family(family)
    A = np.asarray(A, dtype=float)
    family.check_shape(A)
    if family.tag == "SO":
        ok = operator_norm(A + np.swapaxes(A, -1, -2)) <= tol
    elif family.tag == "SL":
        ok = np.abs(np.trace(A, axis1=-2, axis2=-1)) <= tol
    else:
        ok = np.all(np.isfinite(A), axis=(-2, -1))
    return bool(ok) if np.ndim(ok) == 0 else ok


def project_algebra(A, family):
    """Linear projection onto the Lie algebra.

    SO: anti-symmetric part (A - A^T)/2.  SL: trace removal.  GL: identity.
    """
    family = _family(family)
    A = np.asarray(A, dtype=float)
    family.check_shape(A)
    if family.tag == "SO":
        return 0.5 * (A - np.swapaxes(A, -1, -2))
    if family.tag == "SL":
        tr = np.trace(A, axis1=-2, axis2=-1) / family.n
        return A - np.asarray(tr)[..., None, None] * np.eye(family.n)
    return A.copy()


def skew3(v):
    """3-vector (or stack of them) to the skew matrix S(v) with S(v) w = v x w."""
    v = np.asarray(v, dtype=float)
    if v.shape[-1] != 3:
        raise DimensionMismatch(f"skew3 needs 3-vectors, got shape {v.shape}")
    S = np.zeros(v.shape[:-1] + (3, 3))
    S[..., 0, 1] = -v[..., 2]
    S[..., 0, 2] = v[..., 1]
    S[..., 1, 0] = v[..., 2]
    S[..., 1, 2] = -v[..., 0]
    S[..., 2, 0] = -v[..., 1]
    S[..., 2, 1] = v[..., 0]
    return S


def unskew3(A, tol=MEMBER_TOL):
    """Inverse of :func:`skew3` applied to the skew part of ``A``."""
    A = np.asarray(A, dtype=float)
    if A.shape[-2:] != (3, 3):
        raise DimensionMismatch(f"unskew3 needs 3x3 input, got {A.shape}")
    sym = 0.5 * (A + np.swapaxes(A, -1, -2))
    if tol is not None and np.any(np.abs(sym) > tol * np.maximum(1.0, np.abs(A).max())):
        raise DomainViolation("matrix is not skew-symmetric")
    return _vee(A)


def _vee(A):
    return 0.5 * np.stack(
        [A[..., 2, 1] - A[..., 1, 2], A[..., 0, 2] - A[..., 2, 0], A[..., 1, 0] - A[..., 0, 1]],
        axis=-1,
    )


def _check_so3(R, tol):
    R = np.asarray(R, dtype=float)
    ok = is_in_group(R, GroupFamily("SO", 3), tol)
    if not np.all(ok):
        raise DomainViolation("matrix is not a rotation within tolerance")
    return R


def rotation_angle(R, tol=DATA_TOL):
    """Axis-angle rotation angle arccos((tr R - 1) / 2) in [0, pi]."""
    R = _check_so3(R, tol)
    c = (np.trace(R, axis1=-2, axis2=-1) - 1.0) / 2.0
    return np.arccos(np.clip(c, -1.0, 1.0))


def _angle_axis_parts(R):
    """Accurate angle from atan2(|vee(pi_a R)|, (tr R - 1)/2) plus vee(pi_a R)."""
    w = _vee(R)
    s = np.linalg.norm(w, axis=-1)
    c = (np.trace(R, axis1=-2, axis2=-1) - 1.0) / 2.0
    return np.arctan2(s, c), w, s


def log_so3_closed_form(R, guard=ANGLE_GUARD, tol=MEMBER_TOL):
    """SO(3) logarithm as (theta / sin theta) * pi_a(R).

    Raises NearBranchCut when theta >= pi - guard.  ``tol=None`` skips the
    membership check.
    """
    R = np.asarray(R, dtype=float) if tol is None else _check_so3(R, tol)
    theta, w, s = _angle_axis_parts(R)
    bad = theta >= np.pi - guard
    if np.any(bad):
        idx = np.flatnonzero(np.atleast_1d(bad))
        raise NearBranchCut(
            f"rotation angle {np.max(theta):.9f} within {guard:g} of pi",
            indices=idx if np.ndim(bad) else (),
        )
    factor = theta / np.where(s > 0, s, 1.0)
    factor = np.where(s > 0, factor, 1.0)
    return skew3(w * np.asarray(factor)[..., None])


def exp_so3(A):
    """Rodrigues formula for exp of a 3x3 skew matrix (skew part is used)."""
    A = np.asarray(A, dtype=float)
    K = 0.5 * (A - np.swapaxes(A, -1, -2))
    theta = np.sqrt(0.5 * np.sum(K * K, axis=(-2, -1)))
    small = theta < 1e-4
    th = np.where(small, 1.0, theta)
    t2 = theta * theta
    a = np.where(small, 1.0 - t2 / 6.0, np.sin(th) / th)
    b = np.where(small, 0.5 - t2 / 24.0, (1.0 - np.cos(th)) / (th * th))
    return np.eye(3) + a[..., None, None] * K + b[..., None, None] * (K @ K)


def random_rotation(sigma, rng, size=None):
    """N = exp(skew(v)), v with i.i.d. Normal(0, sigma^2) components.

    ``rng`` is a ``numpy.random.Generator`` (advanced in place) or an integer
    seed.  ``size`` adds leading batch dimensions.
    """
    if not np.isfinite(sigma) or sigma < 0:
        raise ValueError(f"sigma must be finite and nonnegative, got {sigma}")
    rng = np.random.default_rng(rng)
    shape = (3,) if size is None else tuple(np.atleast_1d(size)) + (3,)
    v = sigma * rng.standard_normal(shape)
    return exp_so3(skew3(v))


def tangency_defect(X, V, family):
    """Distance of ``X^{-1} V`` from the Lie algebra (zero iff V in T_X G)."""
    family = _family(family)
    X = _as_square(X, "X")
    V = _as_square(V, "V")
    B = inverse_general(X) @ V
    return operator_norm(project_algebra(B, family) - B)


def algebra_exp(A, family):
    """Exponential with the Rodrigues fast path for SO(3)."""
    family = _family(family)
    if family.tag == "SO" and family.n == 3:
        return exp_so3(A)
    return mat_exp(A)


def random_algebra(family, rng, size=None, scale=1.0):
    """Random algebra element(s) with operator norm exactly ``scale``."""
    family = _family(family)
    rng = np.random.default_rng(rng)
    shape = (() if size is None else tuple(np.atleast_1d(size))) + (family.n, family.n)
    A = project_algebra(rng.standard_normal(shape), family)
    return A * (scale / operator_norm(A))[..., None, None]
