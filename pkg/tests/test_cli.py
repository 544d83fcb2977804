import json
import os
import subprocess
import sys

import numpy as np
import pytest
import yaml
from importlib import resources
from scipy.optimize import brentq
from scipy.special import jv

from emrtm.cli import main
from emrtm.config import ConfigError, bundled_configs, load_config, parse_config
from emrtm.rtm import read_image

SMALL = {
    "name": "small",
    "scene": [{"shape": {"kind": "circle", "radius": 1.0}, "bc": {"kind": "pec"}}],
    "waves": [{"wavelength": 1.0}],
    "aperture": {"n_s": 16, "r_s": 20.0, "n_r": 16, "r_r": 20.0},
    "grid": {"a1": -2.0, "b1": 2.0, "a2": -2.0, "b2": 2.0, "nx": 11, "ny": 11},
    "polarizations": [[1.0, 0.0], [0.0, 1.0]],
    "profiles": [{"axis": "x1", "offset": 0.0}],
}


def _write(tmp_path, cfg, name="c.cfg"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(cfg))
    return str(path)


def _run(tmp_path, cfg, *extra, sub="run"):
    out = tmp_path / "out"
    code = main(["--output", str(out), *extra, sub, _write(tmp_path, cfg)])
    return code, out


def test_run_writes_artifacts_and_manifest(tmp_path):
    cfg = dict(SMALL, waves=[{"wavelength": 1.0}, {"wavelength": 0.5}], verify={"in_run": True})
    code, out = _run(tmp_path, cfg)
    assert code == 0
    names = set(os.listdir(out))
    for f in ("data_0.bin", "data_0.json", "image_1.bin", "image_sum.json", "profile_0_x1_0.csv",
              "profile_sum_x1_0.csv", "reports.jsonl", "manifest.json"):
        assert f in names
    man = json.loads((out / "manifest.json").read_text())
    assert set(man["artifacts"]) <= names
    assert man["identity_checks_passed"] is True
    assert {"numpy", "scipy", "emrtm"} <= set(man["versions"])
    img0, img1, tot = (read_image(out / s) for s in ("image_0", "image_1", "image_sum"))
    assert np.allclose(tot.values, img0.values + img1.values, rtol=1e-14, atol=0)


def test_empty_scene_gives_zero_image(tmp_path):
    code, out = _run(tmp_path, dict(SMALL, scene=[]))
    assert code == 0
    assert np.all(read_image(out / "image_0").values == 0)


def test_rerun_is_bit_identical_and_seeded(tmp_path):
    cfg = dict(SMALL, noise={"level": 0.2, "seed": 7})
    _, out = _run(tmp_path, cfg)
    first = (out / "image_0.bin").read_bytes()
    m1 = json.loads((out / "manifest.json").read_text())
    _, out = _run(tmp_path, cfg, "--threads", "1")
    assert (out / "image_0.bin").read_bytes() == first
    m2 = json.loads((out / "manifest.json").read_text())
    assert m1["artifacts"] == m2["artifacts"] and m1["config_digest"] == m2["config_digest"]
    # --seed overrides the config and changes both the noise and the digest
    _, out = _run(tmp_path, cfg, "--seed", "8")
    m3 = json.loads((out / "manifest.json").read_text())
    assert (out / "image_0.bin").read_bytes() != first
    assert m3["config_digest"] != m1["config_digest"]
    assert m3["config"]["noise"]["seed"] == 8


def test_digest_tracks_every_field():
    base = parse_config(SMALL).digest()
    assert parse_config(json.loads(json.dumps(SMALL))).digest() == base
    # key order is irrelevant
    assert parse_config(dict(reversed(list(SMALL.items())))).digest() == base
    for change in ({"variant": "dyadic"}, {"grid": dict(SMALL["grid"], nx=13)}, {"name": "other"}):
        assert parse_config(dict(SMALL, **change)).digest() != base


@pytest.mark.parametrize(
    "mutation",
    [
        {"waves": []},
        {"waves": [{"wavelength": 1.0}, {"wavelength": 1.0}]},
        {"polarizations": [[1.0, 1.0]]},
        {"aperture": {"n_s": 0, "r_s": 20.0, "n_r": 16, "r_r": 20.0}},
        {"variant": "scalar"},
        {"scene": [{"shape": {"kind": "ellipse"}, "bc": {"kind": "pec"}}]},
        {"scene": [{"shape": {"kind": "circle"}, "bc": {"kind": "impedance", "eta": -1.0}}]},
        {"grid": {"a1": 1.0, "b1": -1.0, "a2": -1.0, "b2": 1.0, "nx": 5, "ny": 5}},
        {"unknown_key": 1},
    ],
)
def test_config_errors_exit_1(tmp_path, mutation):
    code, _ = _run(tmp_path, dict(SMALL, **mutation))
    assert code == 1
    with pytest.raises(ConfigError):
        parse_config(dict(SMALL, **mutation))


def test_unreadable_config(tmp_path):
    assert main(["run", str(tmp_path / "missing.cfg")]) == 1
    bad = tmp_path / "bad.cfg"
    bad.write_text("scene: [unclosed\n")
    assert main(["run", str(bad)]) == 1
    bad.write_text("- just a list\n")
    assert main(["run", str(bad)]) == 1


def test_resonance_exits_2(tmp_path, capsys):
    k = brentq(lambda x: jv(0, x), 2.0, 3.0)
    cfg = dict(SMALL, waves=[{"k": k}], solver="nystrom")
    code, _ = _run(tmp_path, cfg)
    assert code == 2
    assert "resonance" in capsys.readouterr().err


def test_unwritable_output_exits_3(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    code = main(["--output", str(blocker / "sub"), "run", _write(tmp_path, SMALL)])
    assert code == 3
    assert main(["info", str(tmp_path / "nothing.json")]) == 3


def test_verify_reports_and_tolerance(tmp_path, capsys):
    cfg = dict(SMALL, verify={"checks": ["hk_exact", "hk_farfield", "energy_flux", "reciprocity"]})
    code, out = _run(tmp_path, cfg, sub="verify")
    assert code == 0
    lines = (out / "reports.jsonl").read_text().splitlines()
    assert [json.loads(l)["name"] for l in lines] == ["hk_exact", "hk_farfield", "energy_flux", "reciprocity"]
    capsys.readouterr()
    cfg["verify"]["tolerance"] = 0.0
    code, _ = _run(tmp_path, cfg, sub="verify")
    assert code == 4


def test_verify_theorem_needs_penetrable_circle(tmp_path):
    code, _ = _run(tmp_path, dict(SMALL, verify={"checks": ["theorem31"]}), sub="verify")
    assert code == 1
    pen = dict(SMALL, scene=[{"shape": {"kind": "circle"}, "bc": {"kind": "penetrable", "n0": 0.25}}],
               verify={"checks": ["theorem31"], "theorem_points": 10})
    code, out = _run(tmp_path, pen, sub="verify")
    rep = json.loads((out / "reports.jsonl").read_text())
    assert rep["name"] == "theorem31_consistency"
    assert code == (0 if rep["passed"] else 4)


def test_info_on_every_artifact_kind(tmp_path, capsys):
    _, out = _run(tmp_path, SMALL)
    capsys.readouterr()
    kinds = []
    for target in (out, out / "image_0.bin", out / "data_0.json"):
        assert main(["info", str(target)]) == 0
        kinds.append(json.loads(capsys.readouterr().out)["kind"])
    assert kinds == ["manifest", "image", "dataset"]


def test_bundled_configs_parse():
    names = bundled_configs()
    assert len(names) >= 20
    root = resources.files("emrtm").joinpath("configs")
    for name in names:
        cfg = load_config(str(root.joinpath(name)))
        assert cfg.waves and cfg.output


def test_console_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "emrtm.cli", "--help"], capture_output=True, text=True)
    assert out.returncode == 0
    for word in ("run", "verify", "info", "--threads", "--seed", "--output"):
        assert word in out.stdout
