import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from levelset_lab.analysis import (
    InterfaceSet,
    compare_in_tube,
    convergence_csv,
    convergence_study,
    default_m0,
    distance_to_set,
    drift_markers,
    extract_interface,
    format_table,
    gradient_drift_unmodified,
    hausdorff,
    marker_interface,
)
from levelset_lab.characteristics import LINEAR, build_tube
from levelset_lab.domain_flow import DomainSpec, make_field, make_shape
from levelset_lab.domain_flow.fields import rotation
from levelset_lab.errors import EmptyInterface
from levelset_lab.eulerian import GridField, GridSpec

BOX2 = DomainSpec.unit_box(2)
BOX3 = DomainSpec.unit_box(3)


def circle_points(center, r, m=2000):
    th = np.linspace(0, 2 * np.pi, m, endpoint=False)
    return np.c_[center[0] + r * np.cos(th), center[1] + r * np.sin(th)]


def test_extract_interface_of_linear_field_is_exact():
    spec = GridSpec(BOX2, 16)
    grid = GridField(0.0, spec.nodes[..., 0] - 0.3, spec)
    iface = extract_interface(grid)
    assert np.allclose(iface.points[:, 0], 0.3, atol=1e-14)
    assert len(iface) == 17
    assert len(iface.segments) == 16


def test_extract_interface_of_circle_is_close():
    n, r = 64, 0.2
    spec = GridSpec(BOX2, n)
    shape = make_shape("circle", center=(0.5, 0.5), radius=r)
    iface = extract_interface(GridField(0.0, shape.value(spec.nodes), spec))
    dev = np.abs(np.linalg.norm(iface.points - 0.5, axis=1) - r)
    h = spec.h
    assert np.max(dev) <= h**2 / (2 * r)
    exact = InterfaceSet(2, circle_points((0.5, 0.5), r), "analytic")
    assert hausdorff(iface, exact) <= h**2 / (2 * r)


def test_extract_interface_in_3d():
    spec = GridSpec(BOX3, 24)
    shape = make_shape("sphere", center=(0.5, 0.5, 0.5), radius=0.3)
    iface = extract_interface(GridField(0.0, shape.value(spec.nodes), spec))
    assert iface.segments is None
    assert np.max(np.abs(np.linalg.norm(iface.points - 0.5, axis=1) - 0.3)) <= spec.h**2 / 0.6


def test_extract_interface_empty_and_exact_zero_nodes():
    spec = GridSpec(BOX2, 8)
    empty = extract_interface(GridField(0.0, np.ones(spec.shape), spec))
    assert empty.is_empty
    vals = np.ones(spec.shape)
    vals[4, 4] = 0.0
    iface = extract_interface(GridField(0.0, vals, spec))
    assert np.allclose(iface.points, [[0.5, 0.5]])


def test_hausdorff_examples():
    a = InterfaceSet(2, [[0.0, 0.0], [1.0, 0.0]], "analytic")
    b = InterfaceSet(2, [[0.0, 0.5], [1.0, 0.5]], "analytic")
    assert hausdorff(a, b) == pytest.approx(0.5)
    assert hausdorff(a, a) == 0.0
    c = InterfaceSet(2, [[0.0, 0.0], [1.0, 0.0], [1.0, 0.2]], "analytic")
    assert hausdorff(a, c) == pytest.approx(0.2)
    with pytest.raises(EmptyInterface):
        hausdorff(a, InterfaceSet(2, np.zeros((0, 2)), "analytic"))


def test_hausdorff_uses_segments():
    line = InterfaceSet(2, [[0.0, 0.0], [1.0, 0.0]], "grid_contour", segments=[[0, 1]])
    mid = InterfaceSet(2, [[0.5, 0.0]], "analytic")
    assert distance_to_set(mid.points, line)[0] == 0.0
    # without segments the midpoint is half a unit from the nearest vertex
    assert hausdorff(mid, InterfaceSet(2, line.points, "analytic")) == pytest.approx(0.5)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.floats(0, 1), st.floats(0, 1)), min_size=1, max_size=20), st.floats(-0.3, 0.3))
def test_hausdorff_of_translate(points, shift):
    a = InterfaceSet(2, points, "analytic")
    b = InterfaceSet(2, np.asarray(points) + [shift, 0.0], "analytic")
    assert hausdorff(a, b) <= abs(shift) + 1e-12
    assert hausdorff(a, b) == pytest.approx(hausdorff(b, a))


def test_drift_identity_examples():
    shape = make_shape("circle", center=(0.5, 0.5), radius=0.2)
    xi = circle_points((0.5, 0.5), 0.2, 40)
    stats = gradient_drift_unmodified(make_field("zero", BOX2), drift_markers(make_field("zero", BOX2), xi, shape.grad(xi), 0.1))
    assert stats.max_residual <= 1e-12 and stats.max_rel_drift == 0.0
    ball = DomainSpec.ball((0.5, 0.5), 0.5)
    rot = rotation(ball)
    stats = gradient_drift_unmodified(rot, drift_markers(rot, xi, shape.grad(xi), 0.5))
    assert stats.max_rel_drift <= 1e-10 and stats.max_residual <= 1e-8


def test_drift_identity_holds_under_shear():
    shape = make_shape("circle", center=(0.5, 0.5), radius=0.15)
    xi = circle_points((0.5, 0.5), 0.15, 64)
    f = make_field("shear", BOX2)
    stats = gradient_drift_unmodified(f, drift_markers(f, xi, shape.grad(xi), 1.0))
    assert stats.max_residual <= 1e-6
    assert stats.max_rel_drift >= 0.05


def test_drift_needs_uniform_times():
    f = make_field("zero", BOX2)
    xi = circle_points((0.5, 0.5), 0.2, 4)
    b = drift_markers(f, xi, xi - 0.5, 0.1, step=0.05)
    with pytest.raises(ValueError):
        gradient_drift_unmodified(f, b)


@pytest.fixture(scope="module")
def still_tube():
    shape = make_shape("circle", center=(0.5, 0.5), radius=0.2)
    tube = build_tube(LINEAR, make_field("zero", BOX2), shape, 0.06, 0.02, 0.5, [0.25, 0.5], interface_spacing=0.01)
    return shape, tube


def test_compare_in_tube_zero_field(still_tube):
    shape, tube = still_tube
    spec = GridSpec(BOX2, 64)
    snaps = [GridField(t, shape.value(spec.nodes), spec) for t in (0.0, 0.25, 0.5)]
    rep = compare_in_tube(snaps, tube)
    assert list(rep.times) == [0.0, 0.25, 0.5]
    # the tube is the exact distance up to MLS curvature error
    assert np.max(rep.sup_error_in_band) <= 1e-3
    assert np.all(rep.band_node_counts > 0)
    assert np.all(rep.sign_mismatches == 0)
    assert rep.to_csv().splitlines()[0] == "time,m0,band_nodes,sup_error,sign_mismatches"
    with pytest.raises(ValueError):
        compare_in_tube(snaps, tube, times=[0.3])


def test_default_m0(still_tube):
    _, tube = still_tube
    assert default_m0(tube, 0.0) == pytest.approx(0.03)
    assert default_m0(tube, 0.0, 0.01) == 0.01
    with pytest.raises(ValueError):
        default_m0(tube, 0.0, 0.0)


def test_marker_interface_is_the_circle(still_tube):
    _, tube = still_tube
    iface = marker_interface(tube, 0.5)
    assert np.allclose(np.linalg.norm(iface.points - 0.5, axis=1), 0.2, atol=1e-10)
    assert iface.segments is not None


def test_convergence_study_exact_and_single_row():
    shape = make_shape("plane", normal=(1.0, 0.0), offset_point=(0.3, 0.5))
    ref = InterfaceSet(2, [[0.3, 0.0], [0.3, 1.0]], "analytic", segments=[[0, 1]])

    def run(n):
        spec = GridSpec(BOX2, n)
        return GridField(0.0, shape.value(spec.nodes), spec)

    rows = convergence_study(run, ref, [10, 20, 40])
    assert rows[0].order is None
    assert [r.order for r in rows[1:]] == ["exact", "exact"]
    one = convergence_study(run, ref, [16])
    assert len(one) == 1 and one[0].order is None
    assert "order" in format_table(rows).splitlines()[0]
    assert convergence_csv(rows).splitlines()[2].endswith(",exact")
    with pytest.raises(ValueError):
        convergence_study(run, ref, [20, 10])


def test_convergence_order_from_known_errors():
    def run(n):
        spec = GridSpec(BOX2, n)
        # interface offset by h from the reference line
        return GridField(0.0, spec.nodes[..., 1] - 1.0 / n - 0.5, spec)

    ref = InterfaceSet(2, [[0.0, 0.5], [1.0, 0.5]], "analytic", segments=[[0, 1]])
    rows = convergence_study(run, ref, [16, 32, 64])
    assert rows[1].order == pytest.approx(1.0, abs=1e-9)
    assert rows[2].order == pytest.approx(1.0, abs=1e-9)
