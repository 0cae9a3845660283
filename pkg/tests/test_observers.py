import numpy as np
import pytest

from lieobs.exceptions import GainsInvalid
from lieobs.groups import GroupFamily, exp_so3, random_algebra, skew3
from lieobs.linalg import mat_exp, mat_log_principal
from lieobs.observers import (
    ChainState,
    ObserverGains,
    ObserverKind,
    companion_matrix,
    lfso_direct_rhs,
    lfso_direct_rhs_projection,
    lfso_passive_rhs,
    lfso_passive_rhs_projection,
    lpso_direct_rhs,
    lpso_passive_rhs,
    observer_rhs,
    require_gains,
    so3_projection_innovation,
    validate_gains,
)

GL3 = GroupFamily("GL", 3)


@pytest.mark.parametrize("coeffs,ok", [
    ((1.0,), True),
    ((1.0, 2.0), True),
    ((6.0, 11.0, 6.0), True),  # (s+1)(s+2)(s+3)
    ((-1.0,), False),
    ((1.0, 0.0), False),  # s^2 + 1, roots on the imaginary axis
    ((1.0, -2.0), False),
])
def test_validate_gains(coeffs, ok):
    report = validate_gains(ObserverGains(coeffs))
    assert report.ok is ok
    assert len(report.roots) == len(coeffs)


def test_gain_roots_are_polynomial_roots():
    report = validate_gains(ObserverGains((6.0, 11.0, 6.0)))
    np.testing.assert_allclose(sorted(report.roots.real), [-3, -2, -1], atol=1e-12)
    np.testing.assert_allclose(validate_gains(ObserverGains((1.0, 2.0))).roots, [-1, -1], atol=1e-7)


def test_companion_layout():
    C = companion_matrix(ObserverGains((1.0, 2.0, 3.0)))
    np.testing.assert_array_equal(C[:, 0], [-3, -2, -1])
    np.testing.assert_array_equal(C[:2, 1:], np.eye(2))


def test_require_gains():
    require_gains(ObserverGains((1.0, 2.0)), d=2)
    with pytest.raises(GainsInvalid):
        require_gains(ObserverGains((1.0, 2.0)), d=3)
    with pytest.raises(GainsInvalid):
        require_gains(ObserverGains((-1.0,)))
    with pytest.raises(GainsInvalid):
        ObserverGains(())


def _random_pair(rng):
    X = mat_exp(random_algebra(GL3, rng, None, 1.0))
    Xh = X @ mat_exp(random_algebra(GL3, rng, None, 0.8))
    u = rng.standard_normal((3, 3))
    return X, Xh, u


def test_passive_observer_right_error_rate(rng):
    # with Y = X, dE_r/dt = Xh' X^-1 - Xh X^-1 X' X^-1 = -a0 E_r log E_r
    X, Xh, u = _random_pair(rng)
    a0 = 1.7
    Xi = np.linalg.inv(X)
    Xh_dot = lfso_passive_rhs(Xh, X, u, ObserverGains((a0,)))
    Er = Xh @ Xi
    Er_dot = Xh_dot @ Xi - Xh @ Xi @ (X @ u) @ Xi
    np.testing.assert_allclose(Er_dot, -a0 * Er @ mat_log_principal(Er), atol=1e-12)


def test_direct_observer_left_error_rate(rng):
    X, Xh, u = _random_pair(rng)
    a0 = 0.6
    Xi = np.linalg.inv(X)
    Xh_dot = lfso_direct_rhs(Xh, X, u, ObserverGains((a0,)))
    El = Xi @ Xh
    El_dot = -Xi @ (X @ u) @ Xi @ Xh + Xi @ Xh_dot
    np.testing.assert_allclose(El_dot, -a0 * El @ mat_log_principal(El), atol=1e-12)


def test_passive_observer_left_error_commutator(rng):
    # mismatched pairing: dE_l/dt = [E_l, u] - a0 E_l log E_l
    X, Xh, u = _random_pair(rng)
    Xi = np.linalg.inv(X)
    Xh_dot = lfso_passive_rhs(Xh, X, u, ObserverGains((1.0,)))
    El = Xi @ Xh
    El_dot = -Xi @ (X @ u) @ Xi @ Xh + Xi @ Xh_dot
    np.testing.assert_allclose(El_dot, El @ u - u @ El - El @ mat_log_principal(El), atol=1e-12)


def test_innovation_vanishes_when_estimate_matches_output(rng):
    X, _, u = _random_pair(rng)
    g = ObserverGains((2.0,))
    np.testing.assert_allclose(lfso_passive_rhs(X, X, u, g), X @ u, atol=1e-12)
    np.testing.assert_allclose(lfso_direct_rhs(X, X, u, g), X @ u, atol=1e-12)


def test_lpso_slots_d3(rng):
    X, Xh, u = _random_pair(rng)
    x2, x3 = rng.standard_normal((2, 3, 3))
    g = ObserverGains((1.0, 3.0, 3.0))
    ell = mat_log_principal(np.linalg.inv(X) @ Xh)
    out = lpso_passive_rhs(ChainState(Xh, (x2, x3)), X, u, g)
    np.testing.assert_allclose(out[0], Xh @ x2 - 3.0 * Xh @ ell, atol=1e-12)
    np.testing.assert_allclose(out[1], x3 - 3.0 * ell, atol=1e-12)
    np.testing.assert_allclose(out[2], u - 1.0 * ell, atol=1e-12)
    direct = lpso_direct_rhs(ChainState(Xh, (x2, x3)), X, u, g)
    np.testing.assert_allclose(direct[0], X @ x2 @ np.linalg.inv(X) @ Xh - 3.0 * Xh @ ell, atol=1e-12)
    np.testing.assert_allclose(direct[1:], out[1:])


def test_lpso_requires_matching_depth(rng):
    X, Xh, u = _random_pair(rng)
    with pytest.raises(GainsInvalid):
        lpso_direct_rhs(ChainState(Xh, (u,)), X, u, ObserverGains((1.0, 3.0, 3.0)))
    with pytest.raises(GainsInvalid):
        observer_rhs("lfso_passive", ChainState(Xh, (u,)), X, u, ObserverGains((1.0,)))


def test_observer_dispatch(rng):
    X, Xh, u = _random_pair(rng)
    g = ObserverGains((1.0,))
    out = observer_rhs(ObserverKind.LFSO_DIRECT, ChainState(Xh), X, u, g)
    np.testing.assert_allclose(out[0], lfso_direct_rhs(Xh, X, u, g))
    assert ObserverKind("lpso_passive").full_state is False
    assert ObserverKind("lfso_direct").direct is True


def test_projection_forms_match_log_forms(rng):
    R = exp_so3(skew3(rng.standard_normal(3)))
    Y = R @ exp_so3(skew3([0.4, -0.9, 1.1]))
    u = skew3(rng.standard_normal(3))
    g = ObserverGains((1.3,))
    np.testing.assert_allclose(so3_projection_innovation(R, Y), mat_log_principal(Y.T @ R), atol=1e-12)
    np.testing.assert_allclose(lfso_passive_rhs_projection(R, Y, u, 1.3),
                               lfso_passive_rhs(R, Y, u, g), atol=1e-12)
    np.testing.assert_allclose(lfso_direct_rhs_projection(R, Y, u, 1.3),
                               lfso_direct_rhs(R, Y, u, g), atol=1e-12)
