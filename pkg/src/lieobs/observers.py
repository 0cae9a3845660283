"""Local full-state and partial-state observers for left-invariant systems.

Each observer is a pure map from the current estimate, the measured output
Y and the input u to the time derivative of the estimate.  All of them share
the innovation term -a X̂ log(Y^-1 X̂), which vanishes when X̂ = Y; they differ
in the synchronization term that copies the plant motion:

    passive:  X̂ u            (or X̂ x̂_2 for the chain model)
    direct:   Y u Y^-1 X̂     (or Y x̂_2 Y^-1 X̂)

Arguments may be single matrices or stacks of them.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple

import numpy as np

from .error_functions import group_log
from .exceptions import DimensionMismatch, GainsInvalid
from .groups import _angle_axis_parts, project_algebra
from .linalg import inverse_general

HURWITZ_MARGIN = 1e-12


class ObserverKind(str, Enum):
    LFSO_PASSIVE = "lfso_passive"
    LFSO_DIRECT = "lfso_direct"
    LPSO_PASSIVE = "lpso_passive"
    LPSO_DIRECT = "lpso_direct"

    @property
    def full_state(self):
        return self in (ObserverKind.LFSO_PASSIVE, ObserverKind.LFSO_DIRECT)

    @property
    def direct(self):
        return self in (ObserverKind.LFSO_DIRECT, ObserverKind.LPSO_DIRECT)


@dataclass(frozen=True)
class ObserverGains:
    """Coefficients a_0, ..., a_{d-1} of p(s) = s^d + a_{d-1} s^{d-1} + ... + a_0."""

    coefficients: tuple

    def __post_init__(self):
        object.__setattr__(self, "coefficients", tuple(float(a) for a in self.coefficients))
        if len(self.coefficients) < 1:
            raise GainsInvalid("at least one gain is required")

    @property
    def d(self):
        return len(self.coefficients)

    def __getitem__(self, i):
        return self.coefficients[i]


class GainsReport(NamedTuple):
    ok: bool
    roots: np.ndarray
    message: str


def companion_matrix(gains):
    a = np.asarray(gains.coefficients)
    d = len(a)
    C = np.zeros((d, d))
    C[:, 0] = -a[::-1]
    C[: d - 1, 1:] = np.eye(d - 1)
    return C


def validate_gains(gains):
    """Check that p(s) is Hurwitz with a strict margin; report its roots."""
    roots = np.linalg.eigvals(companion_matrix(gains))
    worst = float(np.max(roots.real))
    ok = worst < -HURWITZ_MARGIN
    msg = "Hurwitz" if ok else f"root with real part {worst:.6g} is not in the open left half-plane"
    return GainsReport(ok, roots, msg)


def require_gains(gains, d=None):
    if d is not None and gains.d != d:
        raise GainsInvalid(f"expected {d} gains, got {gains.d}")
    report = validate_gains(gains)
    if not report.ok:
        raise GainsInvalid(report.message)
    return report


@dataclass
class ChainState:
    """Group-valued X with algebra-valued derivatives x_2, ..., x_d."""

    X: np.ndarray
    xs: tuple = field(default_factory=tuple)

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        self.xs = tuple(np.asarray(x, dtype=float) for x in self.xs)
        for x in self.xs:
            if x.shape != self.X.shape:
                raise DimensionMismatch(f"chain slot shape {x.shape} != {self.X.shape}")

    @property
    def d(self):
        return 1 + len(self.xs)

    @property
    def slots(self):
        return [self.X, *self.xs]

    def copy(self):
        return ChainState(self.X.copy(), tuple(x.copy() for x in self.xs))


def innovation_log(Xhat, Y, family=None, log_method="general"):
    """log(Y^-1 X̂), the algebra-valued measurement discrepancy."""
    return group_log(inverse_general(Y) @ Xhat, family, log_method)


def lfso_passive_rhs(Xhat, Y, u, gains, family=None, log_method="general"):
    a0 = gains[0]
    return Xhat @ u - a0 * Xhat @ innovation_log(Xhat, Y, family, log_method)


def lfso_direct_rhs(Xhat, Y, u, gains, family=None, log_method="general"):
    a0 = gains[0]
    Yi = inverse_general(Y)
    ell = group_log(Yi @ Xhat, family, log_method)
    return Y @ u @ Yi @ Xhat - a0 * Xhat @ ell


def _lpso_rhs(state_hat, Y, u, gains, family, log_method, direct):
    d = gains.d
    if state_hat.d != d:
        raise GainsInvalid(f"chain depth {state_hat.d} needs {state_hat.d} gains, got {d}")
    if d < 2:
        raise GainsInvalid("partial-state observers need d >= 2")
    Xhat, xs = state_hat.X, state_hat.xs
    Yi = inverse_general(Y)
    ell = group_log(Yi @ Xhat, family, log_method)
    if direct:
        sync = Y @ xs[0] @ Yi @ Xhat
    else:
        sync = Xhat @ xs[0]
    out = [sync - gains[d - 1] * Xhat @ ell]
    for i in range(2, d):
        out.append(xs[i - 1] - gains[d - i] * ell)
    out.append(u - gains[0] * ell)
    return out


def lpso_direct_rhs(state_hat, Y, u, gains, family=None, log_method="general"):
    """Slot derivatives of the direct partial-state observer.

    Slot 1 is Y x̂_2 Y^-1 X̂ - a_{d-1} X̂ log(Y^-1 X̂); slot i (2 <= i < d) is
    x̂_{i+1} - a_{d-i} log(Y^-1 X̂); slot d is u - a_0 log(Y^-1 X̂).
    """
    return _lpso_rhs(state_hat, Y, u, gains, family, log_method, direct=True)


def lpso_passive_rhs(state_hat, Y, u, gains, family=None, log_method="general"):
    """As :func:`lpso_direct_rhs` but with synchronization X̂ x̂_2 in slot 1."""
    return _lpso_rhs(state_hat, Y, u, gains, family, log_method, direct=False)


def observer_rhs(kind, state_hat, Y, u, gains, family=None, log_method="general"):
    """Dispatch on :class:`ObserverKind`; always returns a list of slots."""
    kind = ObserverKind(kind)
    if kind.full_state:
        if state_hat.d != 1:
            raise GainsInvalid(f"{kind.value} needs a plain group state")
        f = lfso_direct_rhs if kind.direct else lfso_passive_rhs
        return [f(state_hat.X, Y, u, gains, family, log_method)]
    f = lpso_direct_rhs if kind.direct else lpso_passive_rhs
    return f(state_hat, Y, u, gains, family, log_method)


def so3_projection_innovation(Rhat, Y):
    """(theta / sin theta) * pi_a(Y^T R̂), theta the angle of Y^T R̂.

    Equals log(Y^T R̂) on SO(3) away from theta = pi.
    """
    M = np.swapaxes(Y, -1, -2) @ Rhat
    theta, _, s = _angle_axis_parts(M)
    factor = np.where(s > 0, theta / np.where(s > 0, s, 1.0), 1.0)
    return np.asarray(factor)[..., None, None] * project_algebra(M, "SO(3)")


def lfso_passive_rhs_projection(Rhat, Y, u, a0):
    return Rhat @ u - a0 * Rhat @ so3_projection_innovation(Rhat, Y)


def lfso_direct_rhs_projection(Rhat, Y, u, a0):
    Yt = np.swapaxes(Y, -1, -2)
    return Y @ u @ Yt @ Rhat - a0 * Rhat @ so3_projection_innovation(Rhat, Y)
