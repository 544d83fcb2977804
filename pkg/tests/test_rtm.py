import os
import subprocess
import sys

import numpy as np
import pytest

from emrtm import _accel
from emrtm.forward import ScatterDataSet, generate_dataset
from emrtm.geometry import Aperture, BoundaryCondition, ParametricBoundary, SamplingGrid, Scene
from emrtm.green import WaveConfig, dyadic_g2, g2
from emrtm.rtm import (
    back_propagate,
    cross_section,
    image,
    image_multifreq,
    image_points,
    read_image,
    sum_images,
    write_image,
    write_profile_csv,
)
from emrtm.verify import scattered_energy

GRID = SamplingGrid.square(1.5, 13)


@pytest.fixture(scope="module")
def pec_data():
    scene = Scene.single(ParametricBoundary.circle(), BoundaryCondition.pec())
    return generate_dataset(scene, Aperture(24, 30.0, 24, 30.0), WaveConfig(4.0), [(1.0, 0.0), (0.0, 1.0)])


def _with_values(d, values):
    return ScatterDataSet(values, d.aperture, d.wave, d.polarizations, d.scene_digest, d.solver, dict(d.noise))


def _brute_force(data, z, variant="g"):
    # direct triple sum, independent of the tiled kernels
    ap = data.aperture
    tot = 0.0j
    for ip, p in enumerate(data.polarizations):
        for s, xs in enumerate(ap.sources):
            S = g2(z, xs, data.wave) * p if variant == "g" else dyadic_g2(z, xs, data.wave) @ p
            for r, xr in enumerate(ap.receivers):
                G = dyadic_g2(z, xr, data.wave)
                tot += S @ (G.T @ np.conj(data.values[s, r, ip]))
    return -data.wave.k**2 * ap.w_s * ap.w_r * tot.imag


@pytest.mark.parametrize("variant", ["g", "dyadic"])
def test_image_matches_direct_sum(pec_data, variant):
    z = np.array([[0.3, -1.2], [1.4, 0.0]])
    vals = image_points(pec_data, z, variant=variant)
    for zi, v in zip(z, vals):
        assert v == pytest.approx(_brute_force(pec_data, zi, variant), rel=1e-12)


def test_zero_data_gives_zero_image(pec_data):
    img = image(_with_values(pec_data, np.zeros_like(pec_data.values)), GRID)
    assert np.all(img.values == 0)


def test_conjugation_antisymmetry(pec_data):
    # replacing E by -E flips the sign of every pixel
    a = image(pec_data, GRID).values
    b = image(_with_values(pec_data, -pec_data.values), GRID).values
    assert np.array_equal(a, -b)


def test_linearity_and_multifreq_sum(pec_data):
    one = image(pec_data, GRID)
    two = image(_with_values(pec_data, 2 * pec_data.values), GRID)
    assert np.allclose(two.values, 2 * one.values, rtol=1e-13, atol=0)
    both = image_multifreq([pec_data, pec_data], GRID)
    assert np.allclose(both.values, 2 * one.values, rtol=1e-13, atol=0)
    single = image_multifreq([pec_data], GRID)
    assert single.values.tobytes() == one.values.tobytes()
    assert len(both.provenance["waves"]) == 2
    assert both.provenance["dataset_digests"] == [pec_data.digest()] * 2


def test_polarization_selection_sums(pec_data):
    a = image(pec_data, GRID, polarizations=[(1.0, 0.0)]).values
    b = image(pec_data, GRID, polarizations=[(0.0, 1.0)]).values
    ab = image(pec_data, GRID).values
    assert np.allclose(a + b, ab, rtol=1e-12, atol=1e-12 * np.abs(ab).max())
    with pytest.raises(ValueError):
        image(pec_data, GRID, polarizations=[(0.6, 0.8)])


def test_invalid_variant(pec_data):
    with pytest.raises(ValueError):
        image(pec_data, GRID, variant="scalar")


def test_back_propagate_definition(pec_data):
    z = np.array([0.2, 0.5])
    fb = back_propagate(pec_data, z, 3, 1)
    ref = -pec_data.aperture.w_r * sum(
        dyadic_g2(z, xr, pec_data.wave).T @ np.conj(pec_data.values[3, r, 1])
        for r, xr in enumerate(pec_data.aperture.receivers)
    )
    assert np.allclose(fb, ref, rtol=1e-12)
    assert back_propagate(pec_data, np.zeros((3, 4, 2)), 0, 0).shape == (3, 4, 2)


def test_multifreq_rejects_mixed_scenes(pec_data):
    other = generate_dataset(
        Scene.single(ParametricBoundary.circle(1.1), BoundaryCondition.pec()),
        pec_data.aperture,
        pec_data.wave,
        [(1.0, 0.0), (0.0, 1.0)],
    )
    with pytest.raises(ValueError):
        image_multifreq([pec_data, other], GRID)
    with pytest.raises(ValueError):
        image_multifreq([], GRID)
    with pytest.raises(ValueError):
        sum_images([image(pec_data, GRID), image(pec_data, SamplingGrid.square(1.0, 13))])


@pytest.mark.skipif(not _accel.HAVE_NUMBA, reason="numba not installed")
def test_backends_agree(pec_data):
    a = image(pec_data, GRID, backend="numba").values
    b = image(pec_data, GRID, backend="numpy").values
    assert np.max(np.abs(a - b)) <= 1e-12 * np.max(np.abs(a))


def test_numpy_fallback_switch():
    code = "from emrtm import _accel; print(_accel.backend_name())"
    env = dict(os.environ, EMRTM_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"


@pytest.mark.parametrize("bc", [BoundaryCondition.penetrable(0.25), BoundaryCondition.pec()])
def test_image_equals_scattered_energy_oracle(bc):
    # for a single circle the functional reproduces the far-field energy of the
    # field scattered from Im G(., z) p, computed here by the modal solver alone;
    # the remaining gap is the finite aperture radius
    wave = WaveConfig.from_wavelength(0.5)
    circle = ParametricBoundary.circle()
    ap = Aperture(128, 100.0, 128, 100.0)
    pols = [(1.0, 0.0), (0.0, 1.0)]
    data = generate_dataset(Scene.single(circle, bc), ap, wave, pols)
    z = np.array([[0.0, 0.0], [0.95, 0.1], [-0.3, 1.2], [1.6, -0.4], [0.5, 0.5]])
    img = image_points(data, z)
    T = scattered_energy(circle, bc, z, pols, wave)
    assert np.max(np.abs(img - T)) <= 5e-4 * np.max(T)


def test_cross_section_and_csv(pec_data, tmp_path):
    img = image(pec_data, GRID)
    x, v = cross_section(img, "x1", 0.1)
    assert np.array_equal(x, GRID.x1)
    assert np.array_equal(v, img.values[6])
    y, w = cross_section(img, "x2", -1.5)
    assert np.array_equal(w, img.values[:, 0])
    with pytest.raises(ValueError):
        cross_section(img, "x1", 2.0)
    with pytest.raises(ValueError):
        cross_section(img, "x3", 0.0)
    path = tmp_path / "p.csv"
    write_profile_csv(path, x, v)
    rows = path.read_text().splitlines()
    assert rows[0] == "x1,I" and len(rows) == 14
    assert float(rows[7].split(",")[1]) == v[6]


def test_image_round_trip(pec_data, tmp_path):
    img = image(pec_data, GRID)
    write_image(img, tmp_path / "im")
    raw = np.fromfile(tmp_path / "im.bin", dtype="<f8")
    assert raw[1] == img.values[0, 1]
    back = read_image(tmp_path / "im")
    assert back.values.tobytes() == img.values.tobytes()
    assert back.grid == img.grid
    assert back.provenance["scene_digest"] == pec_data.scene_digest
    assert back.provenance["weights"]["w_s"] == pec_data.aperture.w_s
