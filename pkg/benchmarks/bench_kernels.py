"""Time the Type I co-phase metric: numba kernel versus numpy einsum.

    python3 benchmarks/bench_kernels.py [--repeat N]
"""
from __future__ import annotations

import argparse
import timeit

import numpy as np

from nrcodebook import _kernels
from nrcodebook.beamgrid import AntennaConfig
from nrcodebook.channel import gen_channel
from nrcodebook.type1 import _projections, panel_coeffs

CASES = [
    ("SP 4x2 o4, 13 subbands", AntennaConfig(4, 2, 4, 4), 1, 13),
    ("SP 8x2 o4, 13 subbands", AntennaConfig(8, 2, 4, 4), 1, 13),
    ("MP 2x2x2 o4, 13 subbands", AntennaConfig(2, 2, 4, 4, ng=2), 1, 13),
]


def inputs(cfg: AntennaConfig, c_m: int, n_3: int):
    proj = _projections(gen_channel(cfg, 2, n_3, seed=0).h, cfg)
    if cfg.ng == 1:
        coeffs = np.array([panel_coeffs(1, c_m, (), (n,), 1) for n in range(4)])
    else:
        coeffs = np.array([panel_coeffs(cfg.ng, c_m, (p,), (n,), 1) for p in range(4) for n in range(4)])
    return proj, coeffs


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args()
    if not _kernels.HAVE_NUMBA:
        print("numba unavailable (or disabled); only the numpy path is timed")
    print(f"{'case':28s} {'numpy ms':>10s} {'numba ms':>10s} {'speedup':>8s}")
    for name, cfg, c_m, n_3 in CASES:
        proj, coeffs = inputs(cfg, c_m, n_3)
        t_np = min(timeit.repeat(lambda: _kernels.cophase_metric_numpy(proj, coeffs), number=1, repeat=args.repeat))
        if _kernels.HAVE_NUMBA:
            _kernels.cophase_metric_numba(proj, coeffs)  # compile outside the timing
            t_nb = min(timeit.repeat(lambda: _kernels.cophase_metric_numba(proj, coeffs), number=1, repeat=args.repeat))
            print(f"{name:28s} {1e3 * t_np:10.3f} {1e3 * t_nb:10.3f} {t_np / t_nb:8.2f}")
        else:
            print(f"{name:28s} {1e3 * t_np:10.3f} {'-':>10s} {'-':>8s}")


if __name__ == "__main__":
    main()
