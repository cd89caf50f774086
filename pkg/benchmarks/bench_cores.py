"""Compare the compiled assembly core against the pure-NumPy fallback.

Times the element-pair loop on a 1D and a 2D mesh under both backends and
checks that they produce identical matrices before reporting the speedup.

Run from the repository root::

    python3 benchmarks/bench_cores.py [--repeat 3]
"""

import argparse
import time

import numpy as np

from fracfem import _corepy
from fracfem.core import BACKEND
from fracfem.geometry import mesh_disc, mesh_interval
from fracfem.kernel import normalization_constant


def _blocks(mod, mesh, s, level=1):
    return mod.assemble_pair_blocks(
        mesh.verts, mesh.simplices, mesh.node_to_dof, mesh.elem_inside,
        mesh.n_core, mesh.n_dof, mesh.dim, s,
        normalization_constant(mesh.dim, s), level)


def _time(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def run_case(label, mesh, s, repeat):
    if BACKEND != "compiled":
        raise SystemExit(
            "compiled backend unavailable (FRACFEM_FORCE_FALLBACK set or "
            "extension not built); nothing to compare")
    from fracfem import _speedups

    t_fast, fast = _time(lambda: _blocks(_speedups, mesh, s), repeat)
    t_slow, slow = _time(lambda: _blocks(_corepy, mesh, s), repeat)

    worst = 0.0
    for a, b in zip(fast, slow):
        da, db = np.asarray(a), np.asarray(b)
        scale = max(np.abs(da).max(), 1e-30)
        worst = max(worst, np.abs(da - db).max() / scale)
    if worst > 1e-12:
        raise SystemExit(f"{label}: backends disagree by {worst:.3e}")

    print(f"{label:28s} compiled {t_fast * 1e3:9.1f} ms   "
          f"fallback {t_slow * 1e3:9.1f} ms   "
          f"speedup {t_slow / t_fast:6.1f}x   agreement {worst:.1e}")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=3,
                    help="timing repetitions, best-of (default 3)")
    args = ap.parse_args()

    print(f"active backend: {BACKEND}")
    run_case("interval h=1/64, s=0.5",
             mesh_interval(1 / 64, r=1.0, H_target=1.0), 0.5, args.repeat)
    run_case("interval h=1/128, s=0.25",
             mesh_interval(1 / 128, r=1.0, H_target=1.0), 0.25, args.repeat)
    run_case("disc h=0.2, s=0.5",
             mesh_disc(0.2, r=0.5, H_target=0.5), 0.5, args.repeat)
    run_case("disc h=0.15, s=0.7",
             mesh_disc(0.15, r=0.5, H_target=0.5), 0.7, args.repeat)


if __name__ == "__main__":
    main()
