"""Invariant estimation errors between a plant state X and an estimate Xhat.

E_l = X^-1 Xhat is invariant under left translation of both arguments,
E_r = Xhat X^-1 under right translation; their logarithms give algebra
coordinates in which the matched observer error dynamics are linear.
"""

import numpy as np

from .exceptions import (
    BranchCutViolation,
    DimensionMismatch,
    DomainViolation,
    InsufficientData,
)
from .groups import _family, log_so3_closed_form
from .linalg import _as_square, inverse_general, mat_exp, mat_log_principal, operator_norm

DECAY_FLOOR = 1e-13


def left_error(X, Xhat):
    X = _as_square(X, "X")
    Xhat = _as_square(Xhat, "Xhat")
    if X.shape[-1] != Xhat.shape[-1]:
        raise DimensionMismatch(f"{X.shape} vs {Xhat.shape}")
    return inverse_general(X) @ Xhat


def right_error(X, Xhat):
    X = _as_square(X, "X")
    Xhat = _as_square(Xhat, "Xhat")
    if X.shape[-1] != Xhat.shape[-1]:
        raise DimensionMismatch(f"{X.shape} vs {Xhat.shape}")
    return Xhat @ inverse_general(X)


def group_log(E, family=None, method="auto"):
    """Principal log, using the SO(3) closed form when allowed.

    ``method`` is ``"general"``, ``"so3"`` or ``"auto"`` (closed form when
    the family is SO(3)).
    """
    family = _family(family) if family is not None else None
    so3 = family is not None and family.tag == "SO" and family.n == 3
    if method == "so3" or (method == "auto" and so3):
        return log_so3_closed_form(np.asarray(E, dtype=float), tol=None)
    if method not in ("general", "auto", "so3"):
        raise ValueError(f"unknown log method {method!r}")
    return mat_log_principal(E)


def log_error(E, family=None, method="general"):
    """Log coordinates e = log(E) of an invariant error.

    Raises BranchCutViolation when E has an eigenvalue on (-inf, 0].
    """
    return group_log(E, family, method)


def safe_log(E, family=None, method="auto"):
    """Like :func:`log_error` on a stack, with NaN where the log is undefined."""
    E = np.asarray(E, dtype=float)
    try:
        return group_log(E, family, method)
    except BranchCutViolation as exc:
        if E.ndim == 2:
            return np.full_like(E, np.nan)
        flat = E.reshape((-1,) + E.shape[-2:])
        out = np.full_like(flat, np.nan)
        bad = np.zeros(flat.shape[0], dtype=bool)
        bad[list(exc.indices)] = True
        if np.any(~bad):
            out[~bad] = safe_log(flat[~bad], family, method)
        return out.reshape(E.shape)


def algebra_error(x, xhat):
    x = np.asarray(x, dtype=float)
    xhat = np.asarray(xhat, dtype=float)
    if x.shape != xhat.shape:
        raise DimensionMismatch(f"{x.shape} vs {xhat.shape}")
    return x - xhat


def closed_form_error_solution(E0, a0, t):
    """Exact solution exp(exp(-a0 t) log E0) of dE/dt = -a0 E log E.

    ``t`` may be an array, in which case a stack indexed by time is returned.
    Requires ||log E0|| < log 2 and a0 > 0.
    """
    if not a0 > 0:
        raise DomainViolation(f"a0 must be positive, got {a0}")
    E0 = _as_square(E0, "E0")
    L = mat_log_principal(E0)
    if np.any(operator_norm(L) >= np.log(2.0)):
        raise DomainViolation("||log E0|| must be below log 2")
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise DomainViolation("t must be nonnegative")
    scale = np.exp(-a0 * t)
    return mat_exp(scale[..., None, None] * L)


def decay_rate_fit(t, values, discard=0.1, floor=DECAY_FLOOR):
    """Least-squares slope of log(value) against t.

    The first ``discard`` fraction of samples is dropped as transient.
    Returns ``(rate, r_squared)``.
    """
    t = np.asarray(t, dtype=float)
    values = np.asarray(values, dtype=float)
    if t.shape != values.shape or t.ndim != 1:
        raise InsufficientData("t and values must be 1-D arrays of equal length")
    start = int(np.floor(discard * len(t)))
    t, values = t[start:], values[start:]
    if len(t) < 10:
        raise InsufficientData(f"need at least 10 samples, got {len(t)}")
    if not np.all(values > floor):
        raise InsufficientData(f"values must exceed {floor:g}")
    y = np.log(values)
    A = np.column_stack([t, np.ones_like(t)])
    (slope, intercept), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - (slope * t + intercept)
    ss_tot = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 if ss_tot == 0 else 1.0 - np.sum(resid**2) / ss_tot
    return float(slope), float(r2)


def sandwich_bounds(X, Xhat):
    """Both sides of the two state-error/group-error norm inequalities.

    Returns ``(lhs1, rhs1, lhs2, rhs2)`` with
    ||Xhat - X|| <= ||X|| ||E_l - I|| and ||E_l - I|| <= ||X^-1|| ||Xhat - X||.
    """
    X = _as_square(X, "X")
    Xhat = _as_square(Xhat, "Xhat")
    eye = np.eye(X.shape[-1])
    Xi = inverse_general(X)
    diff = operator_norm(Xhat - X)
    el = operator_norm(Xi @ Xhat - eye)
    return diff, operator_norm(X) * el, el, operator_norm(Xi) * diff

