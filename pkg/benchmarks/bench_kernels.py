"""Compiled kernels vs the plain-numpy fallback.

Each path runs in its own interpreter because the JIT switch is read at
import time. Timings exclude compilation (one warm-up call first).

    python benchmarks/bench_kernels.py [--repeat N]
"""
from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, sys, time
import numpy as np
from nvcdamage import _jit
from nvcdamage.driver import ScenarioConfig
from nvcdamage.fem.mechanics import MechanicsSolver
from nvcdamage.fem.transport import TransportSolver
from nvcdamage.gurson import material_point

repeat = int(sys.argv[1])
cfg = ScenarioConfig()
params, elastic = cfg.material(), cfg.elastic
mesh = cfg.build_mesh()
nel = mesh.n_elements
zeros = np.zeros((nel, 4))


def best(fn):
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


mp = params.pack(elastic)
rng = np.random.default_rng(0)
strains = rng.normal(0.0, 1e-3, (1000, 4)) + np.array([0.0, 4e-3, 0.0, 0.0])
sig = np.empty(4)
D = np.empty((4, 4))


def points():
    for de in strains:
        material_point(np.zeros(4), 0.0, params.f0, -1, de, 31.5, mp, sig, D)


mech = MechanicsSolver(mesh, params, elastic)
for _ in range(5):
    mech.solve_increment(2e-3 * mesh.half_gage, zeros, zeros)
du = np.zeros((mesh.n_nodes, 2))
du[mesh.loaded, 1] = 1e-3 * mesh.half_gage
du[:, 1] += 1e-3 * mesh.nodes[:, 1]


def assembly():
    mech.evaluate(du, zeros, zeros)


ts = TransportSolver(mesh, cfg.traps)
H = ts.initial_state(mesh.nodes, 31.5)
sig_kk = mech.state.sig[:, :, :3].sum(axis=2)


def transport():
    ts.step(H, mech.state.X, sig_kk, mech.state.ep, 100.0)


print(json.dumps({"jit": _jit.USING_NUMBA,
                  "1000 point updates": best(points),
                  f"mechanics assembly ({nel} el)": best(assembly),
                  "transport step": best(transport)}))
"""


def run(disable: bool, repeat: int) -> dict:
    env = dict(os.environ, NVCDAMAGE_DISABLE_JIT="1" if disable else "0")
    out = subprocess.run([sys.executable, "-c", WORKER, str(repeat)], env=env,
                         capture_output=True, text=True, check=True)
    return json.loads(out.stdout.strip().splitlines()[-1])


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    fast = run(False, args.repeat)
    slow = run(True, args.repeat)
    print(f"{'kernel':32s} {'numba (s)':>11s} {'numpy (s)':>11s} {'speed-up':>9s}")
    for key in fast:
        if key == "jit":
            continue
        print(f"{key:32s} {fast[key]:11.4f} {slow[key]:11.4f} {slow[key] / fast[key]:8.1f}x")


if __name__ == "__main__":
    main()
