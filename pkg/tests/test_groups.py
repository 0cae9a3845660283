import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial.transform import Rotation

from lieobs.exceptions import DimensionMismatch, DomainViolation, NearBranchCut
from lieobs.groups import (
    DATA_TOL,
    GroupFamily,
    algebra_exp,
    exp_so3,
    is_in_algebra,
    is_in_group,
    log_so3_closed_form,
    project_algebra,
    random_algebra,
    random_rotation,
    rotation_angle,
    skew3,
    tangency_defect,
    unskew3,
)
from lieobs.scenario import R0_DYNAMIC, R0_KINEMATIC

vec3 = st.lists(st.floats(-3, 3, allow_nan=False), min_size=3, max_size=3)


@pytest.mark.parametrize("text,tag,n", [("SO(3)", "SO", 3), ("gl(4)", "GL", 4), ("SL( 2 )", "SL", 2)])
def test_family_parse(text, tag, n):
    fam = GroupFamily.parse(text)
    assert (fam.tag, fam.n) == (tag, n)
    assert GroupFamily.parse(str(fam)) == fam


@pytest.mark.parametrize("text", ["SO3", "XX(3)", "SO(1)", "GL(0)"])
def test_family_parse_rejects(text):
    with pytest.raises(ValueError):
        GroupFamily.parse(text)


def test_membership_examples():
    assert is_in_group(np.eye(3), "SO(3)")
    assert not is_in_group(np.diag([1.0, 1.0, -1.0]), "SO(3)")  # det -1
    assert is_in_group(np.diag([2.0, 0.5, 1.0]), "SL(3)")
    assert not is_in_group(np.diag([2.0, 0.5, 1.0]), "SO(3)")
    assert not is_in_group(np.zeros((3, 3)), "GL(3)")
    with pytest.raises(DimensionMismatch):
        is_in_group(np.eye(2), "SO(3)")


def test_printed_initial_rotations_are_rotations_at_data_tolerance():
    assert is_in_group(R0_KINEMATIC, "SO(3)", DATA_TOL)
    assert not is_in_group(R0_KINEMATIC, "SO(3)")  # 4-decimal truncation
    assert is_in_group(R0_DYNAMIC, "SO(3)")


@pytest.mark.parametrize("fam", ["SO(3)", "SL(3)", "GL(3)", "SO(4)"])
def test_projection_is_idempotent_and_lands_in_algebra(rng, fam):
    n = GroupFamily.parse(fam).n
    A = rng.standard_normal((n, n))
    P = project_algebra(A, fam)
    assert is_in_algebra(P, fam)
    np.testing.assert_allclose(project_algebra(P, fam), P)


@pytest.mark.parametrize("fam", ["SO(3)", "SL(3)", "GL(3)"])
def test_exp_of_algebra_is_in_group(rng, fam):
    A = random_algebra(fam, rng, 20, 2.0)
    assert np.all(is_in_group(algebra_exp(A, fam), fam))


def test_reproject_snaps_printed_rotation():
    fam = GroupFamily("SO", 3)
    R = fam.reproject(R0_KINEMATIC)
    assert is_in_group(R, fam, 1e-14)
    assert np.max(np.abs(R - R0_KINEMATIC)) < 1e-4


def test_reproject_sl_has_unit_determinant(rng):
    fam = GroupFamily("SL", 3)
    X = rng.standard_normal((3, 3))
    assert np.linalg.det(fam.reproject(X)) == pytest.approx(1.0)


@settings(max_examples=50, deadline=None)
@given(vec3, vec3)
def test_skew_implements_cross_product(v, w):
    np.testing.assert_allclose(skew3(v) @ np.array(w), np.cross(v, w), atol=1e-12)
    np.testing.assert_allclose(unskew3(skew3(v)), v)


def test_unskew_rejects_symmetric():
    with pytest.raises(DomainViolation):
        unskew3(np.eye(3))


def test_initial_angular_velocity_matrix():
    np.testing.assert_array_equal(skew3([1, 1, 1]), [[0, -1, 1], [1, 0, -1], [-1, 1, 0]])


@settings(max_examples=50, deadline=None)
@given(vec3)
def test_exp_so3_matches_expm(v):
    np.testing.assert_allclose(exp_so3(skew3(v)), sla.expm(skew3(v)), atol=1e-13)


def test_exp_so3_small_angle_branch():
    A = skew3([1e-6, -2e-6, 3e-7])
    np.testing.assert_allclose(exp_so3(A), sla.expm(A), atol=1e-16)


def test_closed_form_log_matches_rotvec_oracle(rng):
    # scipy's rotation-vector conversion is an independent quaternion route
    rot = Rotation.random(200, random_state=7)
    R = rot.as_matrix()
    angles = np.linalg.norm(rot.as_rotvec(), axis=1)
    keep = angles < np.pi - 1e-3
    L = log_so3_closed_form(R[keep])
    np.testing.assert_allclose(unskew3(L), rot.as_rotvec()[keep], atol=1e-10)


def test_closed_form_log_near_pi_raises():
    R = exp_so3(skew3([0, 0, np.pi - 1e-8]))
    with pytest.raises(NearBranchCut):
        log_so3_closed_form(R)


def test_closed_form_log_of_identity():
    np.testing.assert_array_equal(log_so3_closed_form(np.eye(3)), np.zeros((3, 3)))


def test_closed_form_log_requires_rotation():
    with pytest.raises(DomainViolation):
        log_so3_closed_form(2 * np.eye(3))


def test_rotation_angle_examples():
    assert rotation_angle(np.eye(3)) == 0.0
    assert rotation_angle(exp_so3(skew3([0, 0.5, 0]))) == pytest.approx(0.5)
    assert rotation_angle(R0_KINEMATIC) == pytest.approx(1.9718, abs=1e-4)


def test_random_rotation_is_reproducible_and_valid():
    a = random_rotation(0.4, 3, size=10)
    b = random_rotation(0.4, np.random.default_rng(3), size=10)
    np.testing.assert_array_equal(a, b)
    assert np.all(is_in_group(a, "SO(3)", 1e-12))
    np.testing.assert_array_equal(random_rotation(0.0, 1), np.eye(3))
    with pytest.raises(ValueError):
        random_rotation(-1.0, 1)


def test_random_rotation_angle_statistics():
    # v ~ N(0, s^2 I3): E|v|^2 = 3 s^2
    R = random_rotation(0.1, 0, size=20000)
    theta = rotation_angle(R)
    assert np.mean(theta**2) == pytest.approx(3 * 0.01, rel=0.03)


def test_tangency_defect(rng):
    X = exp_so3(skew3(rng.standard_normal(3)))
    assert tangency_defect(X, X @ skew3([1, 2, 3]), "SO(3)") < 1e-12
    assert tangency_defect(X, X @ np.eye(3), "SO(3)") > 0.5
