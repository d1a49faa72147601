"""Time the numba and numpy kernel paths side by side.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--Z 2 8]

Both backends are imported in the same process, so MIMO_CRB_NUMBA does not
matter here.  The first numba call (JIT compile or cache load) is excluded.
"""

import argparse
import timeit

import numpy as np

from mimo_crb import _kernels
from mimo_crb.channel import SystemConfig
from mimo_crb.exact import fim_exact, invert_fim
from mimo_crb.montecarlo import EnsembleSpec, draw_realization, rect_grid


def _cases(Zs):
    cfg = SystemConfig()
    t, f = rect_grid(np.arange(99, 110), np.arange(0, 2048, 16))
    for Z in Zs:
        r = draw_realization(EnsembleSpec(Z=Z, trials=1), cfg, 0)
        params = np.stack([r.mu_r, r.mu_t, r.nu, r.eta])
        grids = (np.arange(cfg.n_rx), np.arange(cfg.n_tx), cfg.pilot_times(), cfg.pilot_subcarriers())
        W = _kernels.quadform_weights(r.alpha, params, cfg.n_rx, cfg.n_tx,
                                      invert_fim(fim_exact(r, cfg, 0.03)))
        yield Z, f"fim  Z={Z}", (r.alpha, params, grids), _kernels.fim_sum_numpy, _kernels.fim_sum_numba
        yield Z, f"mseb Z={Z} ({t.size} pts)", (W, r.nu, r.eta, t, f), _kernels.quadform_numpy, _kernels.quadform_numba


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--Z", type=int, nargs="+", default=[1, 2, 4, 8])
    args = ap.parse_args(argv)
    if not _kernels.HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")

    print(f"{'kernel':<26}{'numpy ms':>10}{'numba ms':>10}{'speedup':>9}{'max rel diff':>14}")
    for _, label, call, f_np, f_nb in _cases(args.Z):
        a, b = f_np(*call), f_nb(*call)  # warm-up; also checks agreement
        diff = np.abs(a - b).max() / np.abs(a).max()
        t_np = min(timeit.repeat(lambda: f_np(*call), number=1, repeat=args.repeat)) * 1e3
        t_nb = min(timeit.repeat(lambda: f_nb(*call), number=1, repeat=args.repeat)) * 1e3
        print(f"{label:<26}{t_np:>10.2f}{t_nb:>10.2f}{t_np / t_nb:>8.1f}x{diff:>14.1e}")


if __name__ == "__main__":
    main()
