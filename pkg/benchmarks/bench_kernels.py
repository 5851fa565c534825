"""Compare the compiled kernels against the numpy fallback.

Two layers:

  * micro: time dz_centered and thomas_batch on solver-shaped arrays,
    checking first that both implementations return bit-identical
    results (they mirror each other operation for operation).
  * macro (--solver): run the same short convection integration in two
    subprocesses, one with BENARD_PURE_PYTHON=1, and compare wall time
    and the final diagnostics, which must agree to the last digit.

Run from the repository root:

    python3 benchmarks/bench_kernels.py
    python3 benchmarks/bench_kernels.py --solver
"""

import argparse
import json
import os
import subprocess
import sys
import timeit

import numpy as np

from benard.kernels import HAVE_COMPILED, _fallback

try:
    from benard.kernels import _ckernels
except ImportError:
    _ckernels = None

SHAPES = [(64, 64), (128, 64), (256, 128)]


def micro_inputs(nx, nz, seed=0):
    rng = np.random.default_rng(seed)
    field = rng.standard_normal((nx, nz))
    b = nx // 2 + 1
    n = nz - 2
    # diagonally dominant bands, complex right sides as the solver uses
    dl = rng.standard_normal((b, n - 1)) * 0.3
    du = rng.standard_normal((b, n - 1)) * 0.3
    d = 2.0 + np.abs(rng.standard_normal((b, n)))
    rhs = rng.standard_normal((b, n)) + 1j * rng.standard_normal((b, n))
    return field, (dl, d, du, rhs)


def best_time(fn, repeat, number):
    return min(timeit.repeat(fn, repeat=repeat, number=number)) / number


def run_micro(repeat):
    if _ckernels is None:
        print("compiled extension not importable; micro comparison skipped")
        return
    print(f"{'kernel':<14} {'shape':<12} {'compiled':>10} {'fallback':>10} "
          f"{'speedup':>8}")
    for nx, nz in SHAPES:
        field, tri = micro_inputs(nx, nz)
        dz = 1.0 / (nz - 1)

        a = _ckernels.dz_centered(field, dz)
        b = _fallback.dz_centered(field, dz)
        assert a.tobytes() == b.tobytes(), "dz_centered paths disagree"
        number = max(1, int(2e6 / (nx * nz)))
        tc = best_time(lambda: _ckernels.dz_centered(field, dz), repeat, number)
        tf = best_time(lambda: _fallback.dz_centered(field, dz), repeat, number)
        print(f"{'dz_centered':<14} {f'{nx}x{nz}':<12} {tc * 1e6:>8.1f}us "
              f"{tf * 1e6:>8.1f}us {tf / tc:>7.2f}x")

        dl, d, du, rhs = tri
        a = _ckernels.thomas_batch(dl, d, du, rhs)
        b = _fallback.thomas_batch(dl, d, du, rhs)
        assert a.tobytes() == b.tobytes(), "thomas_batch paths disagree"
        number = max(1, int(5e5 / d.size))
        tc = best_time(lambda: _ckernels.thomas_batch(dl, d, du, rhs),
                       repeat, number)
        tf = best_time(lambda: _fallback.thomas_batch(dl, d, du, rhs),
                       repeat, number)
        print(f"{'thomas_batch':<14} {f'{d.shape[0]}x{d.shape[1]}':<12} "
              f"{tc * 1e6:>8.1f}us {tf * 1e6:>8.1f}us {tf / tc:>7.2f}x")


SOLVER_CONFIG = """
nx = 64
nz = 64
Lx = 2.0
Lz = 1.0
nu = 0.5
kappa = 0.5
g_alpha = 500.0
dt = 1e-3
t_end = 0.5
diag_every = 100
profile_u = noise amp=1e-3
profile_theta = inrange amp=0.25
seed = 11
"""


def solver_child():
    import time

    from benard.config import parse_config
    from benard.kernels import HAVE_COMPILED as compiled
    from benard.solver import run_from_config

    t0 = time.monotonic()
    traj = run_from_config(parse_config(SOLVER_CONFIG))
    elapsed = time.monotonic() - t0
    last = traj.diagnostics[-1]
    print(json.dumps({"compiled": compiled, "elapsed": elapsed,
                      "u_l2": f"{last[1]:.17g}",
                      "theta_l2": f"{last[3]:.17g}"}))


def run_solver_comparison():
    results = {}
    for label, force in (("compiled", ""), ("fallback", "1")):
        env = dict(os.environ, BENARD_PURE_PYTHON=force)
        if not force:
            env.pop("BENARD_PURE_PYTHON", None)
        proc = subprocess.run(
            [sys.executable, os.path.abspath(__file__), "--solver-child"],
            env=env, capture_output=True, text=True, check=True)
        results[label] = json.loads(proc.stdout.strip().splitlines()[-1])
    comp, fall = results["compiled"], results["fallback"]
    if not comp["compiled"]:
        print("compiled extension unavailable; both runs used the fallback")
    print(f"solver 64x64, 500 steps: compiled {comp['elapsed']:.2f}s, "
          f"fallback {fall['elapsed']:.2f}s "
          f"({fall['elapsed'] / comp['elapsed']:.2f}x)")
    same = comp["u_l2"] == fall["u_l2"] and comp["theta_l2"] == fall["theta_l2"]
    print(f"final diagnostics identical: {same} "
          f"(u_l2={comp['u_l2']}, theta_l2={comp['theta_l2']})")
    if not same:
        raise SystemExit("kernel paths diverged")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5,
                    help="timing repeats per kernel (default 5)")
    ap.add_argument("--solver", action="store_true",
                    help="also run the end-to-end solver comparison")
    ap.add_argument("--solver-child", action="store_true",
                    help=argparse.SUPPRESS)
    args = ap.parse_args()
    if args.solver_child:
        solver_child()
        return
    print(f"compiled extension active: {HAVE_COMPILED}")
    run_micro(args.repeat)
    if args.solver:
        run_solver_comparison()


if __name__ == "__main__":
    main()
