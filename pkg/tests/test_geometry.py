import numpy as np
import pytest

from emrtm.geometry import (
    Aperture,
    BoundaryCondition,
    Component,
    ParametricBoundary,
    SamplingGrid,
    Scene,
    boundary_nodes,
    make_aperture,
)


@pytest.mark.parametrize(
    "boundary,area",
    [
        (ParametricBoundary.circle(2.0, (1.0, -1.0)), 4 * np.pi),
        (ParametricBoundary.kite(), 1.5 * np.pi),
        (ParametricBoundary.n_leaf(5), 1.02 * np.pi),
    ],
)
def test_enclosed_area_and_outward_normals(boundary, area):
    # divergence theorem: area = 1/2 oint x . nu ds (positive only for outward normals)
    pts, nu, jac = boundary_nodes(boundary, 256)
    c = np.asarray(boundary.center)
    a = 0.5 * np.sum(np.sum((pts - c) * nu, -1) * jac) * 2 * np.pi / 256
    assert a == pytest.approx(area, rel=1e-12)
    assert np.allclose(np.hypot(nu[:, 0], nu[:, 1]), 1.0)


def test_kite_parametrisation():
    b = ParametricBoundary.kite()
    x, dx, ddx = b.derivatives(np.array([0.0, np.pi / 2]))
    assert np.allclose(x, [[1.0, 0.0], [-1.3, 1.5]])
    h = 1e-6
    t = np.array([0.7])
    xp, _, _ = b.derivatives(t + h)
    xm, _, _ = b.derivatives(t - h)
    _, d1, d2 = b.derivatives(t)
    assert np.allclose((xp - xm) / (2 * h), d1, rtol=1e-8)
    _, dp, _ = b.derivatives(t + h)
    _, dm, _ = b.derivatives(t - h)
    assert np.allclose((dp - dm) / (2 * h), d2, rtol=1e-7)


def test_n_leaf_radius():
    b = ParametricBoundary.n_leaf(5, center=(0.5, 0.0))
    th = np.linspace(0, 2 * np.pi, 13)
    x, _, _ = b.derivatives(th)
    r = np.hypot(x[:, 0] - 0.5, x[:, 1])
    assert np.allclose(r, 1 + 0.2 * np.cos(5 * th))


def test_boundary_validation():
    with pytest.raises(ValueError):
        ParametricBoundary("ellipse")
    with pytest.raises(ValueError):
        ParametricBoundary.circle(0.0)
    with pytest.raises(ValueError):
        ParametricBoundary.n_leaf(0)
    with pytest.raises(ValueError):
        boundary_nodes(ParametricBoundary.circle(), 7)


def test_boundary_conditions():
    assert BoundaryCondition.pec().to_dict() == {"kind": "pec"}
    imp = BoundaryCondition.impedance((1000.0, 1.0))
    assert not imp.eta_constant
    assert imp.eta_at(np.array([0.1, np.pi + 0.1])).tolist() == [1000.0, 1.0]
    assert BoundaryCondition.impedance(2.0).eta_at(np.zeros(3)).tolist() == [2.0] * 3
    with pytest.raises(ValueError):
        BoundaryCondition.impedance(0.0)
    with pytest.raises(ValueError):
        BoundaryCondition.impedance(-1.0)
    with pytest.raises(ValueError):
        BoundaryCondition.penetrable(0.0)
    with pytest.raises(ValueError):
        BoundaryCondition("dirichlet")


def test_aperture_rings_and_weights():
    ap = make_aperture(256, 1000, 128, 500)
    assert ap.sources.shape == (256, 2)
    assert np.allclose(np.hypot(*ap.receivers.T), 500.0)
    assert ap.w_s == pytest.approx(2 * np.pi * 1000 / 256)
    assert ap.w_r == pytest.approx(2 * np.pi * 500 / 128)
    assert not ap.coincident
    assert Aperture(8, 10.0, 8, 10.0).coincident
    # exact axis points
    assert ap.sources[64].tolist() == [0.0, 1000.0]
    with pytest.raises(ValueError):
        Aperture(0, 1.0, 1, 1.0)


def test_grid_is_vertex_centred():
    g = SamplingGrid.square(2.0, 101)
    assert g.x1[0] == -2.0 and g.x1[-1] == 2.0
    assert g.x1[50] == 0.0
    pts = g.points()
    assert pts.shape == (101, 101, 2)
    # values are indexed [iy, ix]
    assert pts[3, 7].tolist() == [g.x1[7], g.x2[3]]
    assert g.circumradius() == pytest.approx(2 * np.sqrt(2))
    with pytest.raises(ValueError):
        SamplingGrid(1.0, 0.0, 0.0, 1.0, 5, 5)


def test_scene_digest():
    a = Scene.single(ParametricBoundary.circle(), BoundaryCondition.pec())
    b = Scene.single(ParametricBoundary.circle(), BoundaryCondition.pec())
    c = Scene.single(ParametricBoundary.circle(1.0 + 1e-9), BoundaryCondition.pec())
    assert a.digest() == b.digest()
    assert a.digest() != c.digest()
    assert len(a.digest()) == 16
    empty = Scene(())
    assert empty.is_empty and len(empty) == 0
    two = Scene((Component(ParametricBoundary.circle(), BoundaryCondition.pec()),) * 2)
    assert len(two) == 2
