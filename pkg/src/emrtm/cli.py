"""Command line harness: ``emrtm run|verify|info``.

Exit codes: 0 success, 1 config error, 2 solver failure, 3 I/O error,
4 failed identity check.
"""
import argparse
import hashlib
import json
import logging
import os
import platform
import sys
import time

import numpy as np

from . import __version__
from ._accel import backend_name, set_threads
from .config import ConfigError, load_config
from .forward import (
    AliasingError,
    ResonanceError,
    SingularConfigurationError,
    SolverError,
    add_noise,
    generate_dataset,
    mie_solve,
    modal_solution,
    write_dataset,
)
from .geometry import Aperture, BoundaryCondition
from .io import atomic_write_text
from .rtm import cross_section, image, sum_images, write_image, write_profile_csv
from . import verify as _verify

log = logging.getLogger("emrtm")

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_IO, EXIT_IDENTITY = 0, 1, 2, 3, 4
ALL_CHECKS = ("hk_exact", "hk_farfield", "energy_flux", "reciprocity", "theorem31")
SOLVER_ERRORS = (ResonanceError, SolverError, SingularConfigurationError, AliasingError)


def _versions():
    out = {"emrtm": __version__, "python": platform.python_version(), "numpy": np.__version__}
    for mod in ("scipy", "numba"):
        try:
            out[mod] = __import__(mod).__version__
        except ImportError:
            out[mod] = None
    out["backend"] = backend_name()
    return out


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _noise_seeds(seed, n):
    return [int(s) for s in np.random.SeedSequence(seed).generate_state(n)]


def _write_profiles(img, cfg, tag, outdir):
    paths = []
    for prof in cfg.profiles:
        coords, vals = cross_section(img, prof["axis"], prof["offset"])
        name = f"profile_{tag}_{prof['axis']}_{prof['offset']:g}.csv"
        path = os.path.join(outdir, name)
        write_profile_csv(path, coords, vals, prof["axis"])
        paths.append(path)
    return paths


def run_experiment(cfg):
    """Forward data, images, profiles and manifest for one config; returns the manifest."""
    t0 = time.perf_counter()
    outdir = cfg.output
    os.makedirs(outdir, exist_ok=True)
    artifacts = []
    images = []
    seeds = _noise_seeds(cfg.seed, len(cfg.waves))
    for i, wave in enumerate(cfg.waves):
        log.info("wave %d: k = %.6g (wavelength %.6g)", i, wave.k, wave.wavelength)
        data = generate_dataset(
            cfg.scene, cfg.aperture, wave, cfg.polarizations, cfg.solver, cfg.points_per_wavelength
        )
        if cfg.noise_level > 0:
            data = add_noise(data, cfg.noise_level, seeds[i])
        artifacts += write_dataset(data, os.path.join(outdir, f"data_{i}"))
        img = image(data, cfg.grid, cfg.polarizations, cfg.variant)
        images.append(img)
        artifacts += write_image(img, os.path.join(outdir, f"image_{i}"))
        artifacts += _write_profiles(img, cfg, str(i), outdir)
    if len(images) > 1:
        total = sum_images(images)
        artifacts += write_image(total, os.path.join(outdir, "image_sum"))
        artifacts += _write_profiles(total, cfg, "sum", outdir)
    reports = []
    if cfg.verify.get("in_run"):
        reports = verify_suite(cfg)
        artifacts.append(os.path.join(outdir, "reports.jsonl"))
    manifest = {
        "name": cfg.name,
        "config_digest": cfg.digest(),
        "config": cfg.raw,
        "scene_digest": cfg.scene.digest(),
        "versions": _versions(),
        "noise_seeds": seeds if cfg.noise_level > 0 else [],
        "artifacts": {os.path.basename(p): _sha256(p) for p in artifacts},
        "identity_checks_passed": all(r.passed for r in reports) if reports else None,
        "runtime_s": round(time.perf_counter() - t0, 3),
    }
    atomic_write_text(os.path.join(outdir, "manifest.json"), json.dumps(manifest, indent=2, sort_keys=True))
    return manifest, reports


def _energy_solution(cfg, wave):
    scene = cfg.scene
    if len(scene) == 1 and scene.components[0].boundary.kind == "circle":
        bc = scene.components[0].bc
        if bc.kind != "impedance" or bc.eta_constant:
            return modal_solution(scene, cfg.aperture.sources[0], cfg.polarizations[0], wave)
    # fallback: single-mode excitation of a unit PEC circle
    m_max = 8
    a = np.zeros(2 * m_max + 1, complex)
    a[m_max] = 1.0
    return mie_solve(a, BoundaryCondition.pec(), 1.0, wave)


def _theorem_qualifies(scene):
    if len(scene) != 1:
        return False
    c = scene.components[0]
    return c.boundary.kind == "circle" and c.bc.kind == "penetrable"


def verify_suite(cfg):
    """Run the requested identity checks; writes ``reports.jsonl`` in the output directory."""
    vcfg = cfg.verify
    requested = vcfg.get("checks")
    if requested is None:
        requested = [c for c in ALL_CHECKS if c != "theorem31" or _theorem_qualifies(cfg.scene)]
    if "theorem31" in requested and not _theorem_qualifies(cfg.scene):
        raise ConfigError("theorem31 needs a scene made of one penetrable circle")
    tol = vcfg.get("tolerance")
    kw = {} if tol is None else {"tol": float(tol)}
    wave = cfg.waves[0]
    lam = wave.wavelength
    ap = cfg.aperture
    if not ap.coincident:
        ap = Aperture(ap.n_s, ap.r_s, ap.n_s, ap.r_s)
    checks = []
    for name in requested:
        if name == "hk_exact":
            checks.append(lambda: _verify.hk_exact((0.3, -0.2), (-0.4, 0.1), 5 * lam, wave, 512, **kw))
        elif name == "hk_farfield":
            checks.append(lambda: _verify.hk_farfield((0.0, 0.0), (0.0, 0.0), 100 * lam, wave, **kw))
        elif name == "energy_flux":
            def _energy():
                sol = _energy_solution(cfg, wave)
                return _verify.energy_flux(sol, sol.radius + 100 * lam, **kw)
            checks.append(_energy)
        elif name == "reciprocity":
            def _recip():
                data = generate_dataset(
                    cfg.scene, ap, wave, cfg.polarizations, cfg.solver, cfg.points_per_wavelength
                )
                return _verify.reciprocity_check(data, **kw)
            checks.append(_recip)
        elif name == "theorem31":
            def _thm():
                g = cfg.grid
                rng = np.random.default_rng(cfg.seed)
                n = int(vcfg.get("theorem_points", 50))
                pts = np.column_stack([rng.uniform(g.a1, g.b1, n), rng.uniform(g.a2, g.b2, n)])
                rkw = {} if tol is None else {"min_corr": 1.0 - float(tol)}
                return _verify.theorem31_consistency(cfg.scene, pts, wave, ap, cfg.polarizations, **rkw)
            checks.append(_thm)
    reports = _verify.run_checks(checks)
    os.makedirs(cfg.output, exist_ok=True)
    lines = "".join(r.to_json() + "\n" for r in reports)
    atomic_write_text(os.path.join(cfg.output, "reports.jsonl"), lines)
    return reports


def _info(path):
    if os.path.isdir(path):
        path = os.path.join(path, "manifest.json")
    if path.endswith(".bin"):
        path = path[:-4] + ".json"
    with open(path) as fh:
        meta = json.load(fh)
    if "artifacts" in meta:
        summary = {
            "kind": "manifest",
            "name": meta.get("name"),
            "config_digest": meta.get("config_digest"),
            "versions": meta.get("versions"),
            "artifacts": sorted(meta.get("artifacts", {})),
        }
    elif "grid" in meta:
        prov = meta.get("provenance", {})
        summary = {
            "kind": "image",
            "grid": meta["grid"],
            "waves": prov.get("waves"),
            "polarizations": prov.get("polarizations"),
            "variant": prov.get("variant"),
            "scene_digest": prov.get("scene_digest"),
        }
    else:
        summary = {
            "kind": "dataset",
            "shape": meta.get("shape"),
            "wave": meta.get("wave"),
            "aperture": meta.get("aperture"),
            "solver": meta.get("solver"),
            "noise": meta.get("noise"),
            "scene_digest": meta.get("scene_digest"),
        }
    return summary


def build_parser():
    p = argparse.ArgumentParser(prog="emrtm", description="2D TE electromagnetic reverse time migration")
    p.add_argument("--threads", type=int, default=None, help="worker threads for compiled kernels")
    p.add_argument("--seed", type=int, default=None, help="noise seed (overrides the config)")
    p.add_argument("--output", default=None, help="output directory (overrides the config)")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="generate data and images for a config")
    r.add_argument("config")
    v = sub.add_parser("verify", help="run identity checks for a config")
    v.add_argument("config")
    i = sub.add_parser("info", help="summarise a data set, image or manifest")
    i.add_argument("artifact")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.threads is not None:
        set_threads(args.threads)
    if args.command == "info":
        try:
            print(json.dumps(_info(args.artifact), indent=2))
        except (OSError, ValueError) as exc:
            print(f"error: cannot read artifact {args.artifact}: {exc}", file=sys.stderr)
            return EXIT_IO
        return EXIT_OK
    try:
        cfg = load_config(args.config, seed=args.seed, output=args.output)
        if args.command == "run":
            manifest, reports = run_experiment(cfg)
            print(json.dumps({"output": cfg.output, "config_digest": manifest["config_digest"]}))
            if reports and not all(r.passed for r in reports):
                return EXIT_IDENTITY
            return EXIT_OK
        reports = verify_suite(cfg)
        for rep in reports:
            print(rep.to_json())
        return EXIT_OK if all(r.passed for r in reports) else EXIT_IDENTITY
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SOLVER_ERRORS as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        if isinstance(exc, (ResonanceError, SingularConfigurationError)):
            print("hint: shift the wavelength slightly to move off the resonance", file=sys.stderr)
        return EXIT_SOLVER
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
