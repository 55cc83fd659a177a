import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from levelset_lab.domain_flow import (
    DomainSpec,
    OdeOptions,
    builtin_fields,
    check_subtangential,
    eval_flow_map,
    make_field,
    make_shape,
    radial_outward,
    reference_levelset,
)
from levelset_lab.domain_flow.fields import rotation
from levelset_lab.errors import DomainEscape, NotOnBoundary

BOX2 = DomainSpec.unit_box(2)
BALL2 = DomainSpec.ball((0.5, 0.5), 0.5)


def central_jacobian(field, t, x, step=1e-4):
    d = field.dimension
    out = np.empty((len(x), d, d))
    for j in range(d):
        e = np.zeros(d)
        e[j] = step
        out[:, :, j] = (field.eval(t, x + e) - field.eval(t, x - e)) / (2 * step)
    return out


def central_hessian(field, t, x, step=1e-4):
    d = field.dimension
    out = np.empty((len(x), d, d, d))
    for k in range(d):
        e = np.zeros(d)
        e[k] = step
        out[:, :, :, k] = (field.jacobian(t, x + e) - field.jacobian(t, x - e)) / (2 * step)
    return out


def test_domain_rejects_bad_bounds():
    with pytest.raises(ValueError):
        DomainSpec(2, (0.0, 1.0), (1.0, 0.5))
    with pytest.raises(ValueError):
        DomainSpec.ball((0.5, 0.5), 0.0)


def test_zero_field_flow_is_identity():
    f = make_field("zero", BOX2)
    xi = np.array([[0.2, 0.7], [0.5, 0.5]])
    assert np.array_equal(eval_flow_map(f, 0.8, 0.0, xi), xi)


def test_rigid_rotation_quarter_turn():
    f = rotation(BALL2, omega=1.0)
    c = np.array([0.5, 0.5])
    r = 0.3
    x = eval_flow_map(f, np.pi / 2, 0.0, c + [r, 0.0], OdeOptions(step=1e-3))
    assert np.allclose(x, c + [0.0, r], atol=1e-8)


def test_vortex_reversal_returns_home():
    f = make_field("vortex", BOX2, period=1.0)
    xi = np.array([[0.5, 0.75], [0.3, 0.4], [0.8, 0.2]])
    back = eval_flow_map(f, 1.0, 0.0, xi, OdeOptions(step=1e-4))
    assert np.max(np.abs(back - xi)) <= 1e-6


def test_flow_group_property_and_inversion():
    f = make_field("vortex", BOX2)
    rng = np.random.default_rng(3)
    xi = BOX2.sample_interior(rng, 20, margin=0.05)
    opts = OdeOptions(step=1e-3)
    mid = eval_flow_map(f, 0.4, 0.1, xi, opts)
    direct = eval_flow_map(f, 0.9, 0.1, xi, opts)
    chained = eval_flow_map(f, 0.9, 0.4, mid, opts)
    assert np.max(np.abs(direct - chained)) <= 1e-9
    home = eval_flow_map(f, 0.1, 0.9, direct, opts)
    assert np.max(np.abs(home - xi)) <= 1e-9


def test_adaptive_matches_fixed_step():
    f = make_field("vortex", BOX2)
    xi = np.array([[0.5, 0.75]])
    fixed = eval_flow_map(f, 1.0, 0.0, xi, OdeOptions(step=1e-3))
    adaptive = eval_flow_map(f, 1.0, 0.0, xi, OdeOptions(method="rk45_adaptive", abs_tol=1e-11, rel_tol=1e-11))
    assert np.max(np.abs(fixed - adaptive)) <= 1e-9


def test_outward_field_escapes():
    f = radial_outward(BOX2)
    with pytest.raises(DomainEscape):
        eval_flow_map(f, 2.0, 0.0, np.array([[0.9, 0.5]]))


def test_reference_levelset_initial_and_zero_field():
    shape = make_shape("circle", center=(0.5, 0.5), radius=0.2)
    x = np.array([[0.1, 0.3], [0.5, 0.6]])
    f = make_field("vortex", BOX2)
    assert np.array_equal(reference_levelset(f, shape.value, 0.0, x), shape.value(x))
    z = make_field("zero", BOX2)
    assert np.array_equal(reference_levelset(z, shape.value, 0.7, x), shape.value(x))


def test_reference_levelset_back_rotation():
    c = np.array([0.5, 0.5])
    a, r0 = 0.2, 0.1
    shape = make_shape("circle", center=tuple(c + [a, 0.0]), radius=r0)
    f = rotation(BALL2, omega=1.0)
    # after half a turn the back-rotated image of c + (-a, 0) is the disc centre
    val = reference_levelset(f, shape.value, np.pi, c + [-a, 0.0], OdeOptions(step=1e-3))
    assert val == pytest.approx(r0, abs=1e-9)
    q = c + [-a, 0.05]
    back = c + [a, -0.05]
    val = reference_levelset(f, shape.value, np.pi, q, OdeOptions(step=1e-3))
    assert val == pytest.approx(float(shape.value(back)), abs=1e-9)


def test_vortex_corner_and_zero_lipschitz():
    v = make_field("vortex", BOX2)
    assert np.allclose(v.eval(0.3, np.array([[0.0, 0.0]])), 0.0, atol=1e-15)
    assert make_field("zero", BOX2).lipschitz_bound == 0.0


@pytest.mark.parametrize("dimension", [2, 3])
def test_builtin_derivatives_match_differences(dimension):
    rng = np.random.default_rng(11)
    for f in builtin_fields(dimension):
        x = f.domain.sample_interior(rng, 100, margin=0.01)
        assert np.max(np.abs(f.jacobian(0.3, x) - central_jacobian(f, 0.3, x))) <= 1e-5, f.id
        assert np.max(np.abs(f.second_derivs(0.3, x) - central_hessian(f, 0.3, x))) <= 1e-5, f.id


def test_vortex_jacobian_at_quarter_point():
    f = make_field("vortex", BOX2)
    x = np.array([[0.25, 0.25]])
    assert np.max(np.abs(f.jacobian(0.0, x) - central_jacobian(f, 0.0, x))) <= 1e-5


def test_shear_rate_at_centre():
    f = make_field("shear", BOX2, gamma=1.0)
    jac = f.jacobian(0.0, np.array([[0.5, 0.5]]))[0]
    assert np.allclose(np.abs(jac), [[0.0, 1.0], [0.0, 0.0]], atol=1e-12)


def test_rotation_bump_rotates_at_centre_and_stops_near_walls():
    f = make_field("rotation_bump", BOX2, omega=2.0)
    jac = f.jacobian(0.0, np.array([[0.5, 0.5]]))[0]
    assert np.allclose(jac, [[0.0, -2.0], [2.0, 0.0]], atol=1e-12)
    assert np.allclose(f.eval(0.0, np.array([[0.02, 0.5], [0.99, 0.99]])), 0.0)


@pytest.mark.parametrize("dimension", [2, 3])
def test_builtin_fields_are_subtangential(dimension):
    rng = np.random.default_rng(5)
    for f in builtin_fields(dimension):
        for t in (0.0, 0.5, 1.0):
            for x in f.domain.sample_boundary(rng, 50):
                assert check_subtangential(f, f.domain, t, x).verdict, (f.id, t, x)


def test_vortex_boundary_ratios_vanish():
    f = make_field("vortex", BOX2)
    rep = check_subtangential(f, BOX2, 0.2, np.array([0.0, 0.4]))
    assert rep.verdict
    assert np.all(rep.ratios_plus == 0) and np.all(rep.ratios_minus == 0)


def test_rotation_on_ball_ratios_shrink_linearly():
    f = rotation(BALL2, omega=1.0)
    x = np.array([0.5 + 0.5 * np.cos(0.3), 0.5 + 0.5 * np.sin(0.3)])
    rep = check_subtangential(f, BALL2, 0.0, x)
    assert rep.verdict
    # |x + h z - c| = R sqrt(1 + h^2 w^2), so dist / h = R (sqrt(1 + h^2 w^2) - 1) / h
    R, speed = 0.5, 0.5
    expect = R * (np.sqrt(1 + (rep.h_values * speed / R) ** 2) - 1) / rep.h_values
    coarse = rep.h_values >= 1e-5  # below this the distance cancels to round-off
    assert np.allclose(rep.ratios_plus[coarse], expect[coarse], rtol=1e-6)


def test_outward_radial_fails_subtangential():
    f = radial_outward(BALL2)
    x = np.array([1.0, 0.5])
    rep = check_subtangential(f, BALL2, 0.0, x)
    assert not rep.verdict
    assert rep.ratios_plus[-1] == pytest.approx(0.5, rel=1e-6)


def test_subtangential_needs_boundary_point():
    with pytest.raises(NotOnBoundary):
        check_subtangential(make_field("vortex", BOX2), BOX2, 0.0, np.array([0.5, 0.5]))


@settings(max_examples=25, deadline=None)
@given(st.floats(0.05, 0.95), st.floats(0.05, 0.95), st.floats(0.0, 1.0))
def test_flow_stays_in_box(x0, y0, t):
    f = make_field("vortex", BOX2)
    x = eval_flow_map(f, t, 0.0, np.array([[x0, y0]]), OdeOptions(step=1e-2))
    assert BOX2.contains(x).all()
