#!/usr/bin/env python3
"""Benchmark the compiled correlation kernel against the numpy fallback.

Runs the imaging functional's inner kernel on a realistic desk-scale
problem (PEC circle, both polarizations) and reports wall time per backend,
the speedup and the largest disagreement between the two results.

    python benchmarks/bench_correlate.py [--points 2000] [--sources 128] [--repeat 3]
"""
import argparse
import time

import numpy as np

from emrtm import Aperture, BoundaryCondition, ParametricBoundary, Scene, WaveConfig, generate_dataset
from emrtm._accel import HAVE_NUMBA
from emrtm.green import dyadic_g2, g2
from emrtm.kernels import correlate_numba, correlate_numpy


def _problem(n_points, n_sources, wavelength, seed):
    wave = WaveConfig.from_wavelength(wavelength)
    scene = Scene.single(ParametricBoundary.circle(), BoundaryCondition.pec())
    ap = Aperture(n_sources, 100.0, n_sources, 100.0)
    data = generate_dataset(scene, ap, wave, [(1.0, 0.0), (0.0, 1.0)])
    z = np.random.default_rng(seed).uniform(-2, 2, (n_points, 2))
    G = dyadic_g2(z[:, None, :], ap.receivers[None, :, :], wave)
    gs = g2(z[:, None, :], ap.sources[None, :, :], wave)
    S = gs[:, :, None, None] * data.polarizations[None, None, :, :]
    cE = np.ascontiguousarray(np.conj(data.values))
    return S, G, cE


def _time(fn, args, repeat):
    best = np.inf
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=2000)
    ap.add_argument("--sources", type=int, default=128)
    ap.add_argument("--wavelength", type=float, default=0.5)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    S, G, cE = _problem(args.points, args.sources, args.wavelength, args.seed)
    work = S.shape[0] * S.shape[1] * S.shape[2] * G.shape[1]
    print(f"=== correlate: {S.shape[0]} points, {S.shape[1]} sources, {G.shape[1]} receivers, "
          f"{S.shape[2]} polarizations ({work / 1e6:.1f}M terms) ===")

    t_np, ref = _time(correlate_numpy, (S, G, cE), args.repeat)
    print(f"numpy:  {t_np:.3f} s")
    if not HAVE_NUMBA:
        print("numba not importable; compiled path skipped")
        return
    t0 = time.perf_counter()
    correlate_numba(S[:2], G[:2], cE)
    print(f"numba JIT warm-up: {time.perf_counter() - t0:.3f} s")
    t_nb, out = _time(correlate_numba, (S, G, cE), args.repeat)
    print(f"numba:  {t_nb:.3f} s")
    print(f"speedup: {t_np / t_nb:.1f}x")
    rel = np.max(np.abs(out - ref)) / np.max(np.abs(ref))
    print(f"max relative difference: {rel:.2e}")


if __name__ == "__main__":
    main()
