"""Seeded Monte Carlo averaging of the exact bound over random channels.

Every trial draws its channel from an RNG seeded by ``(master_seed,
trial_index)``, so a trial's result does not depend on how trials are
scheduled across worker processes; the reduction always runs in trial order.
"""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np

from .channel import ChannelRealization, NoiseModel, SystemConfig, wrap_angle
from .errors import AllTrialsDiscarded, NonRectangularGrid, SingularFim
from .exact import active_slots, fim_block_diagonal, fim_exact, invert_fim, mseb_points

log = logging.getLogger(__name__)

__all__ = [
    "DelayProfile",
    "EnsembleSpec",
    "BoundSurface",
    "load_delay_profile",
    "default_delay_profile",
    "draw_realization",
    "rect_grid",
    "average_bound",
    "surface_statistics",
    "resolve_workers",
]

DEFAULT_PROFILE = "winner2_c2_nlos"
WORKERS_ENV = "MIMO_CRB_WORKERS"


@dataclass(frozen=True)
class DelayProfile:
    name: str
    delays: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "delays", tuple(float(d) for d in self.delays))
        if not self.delays:
            raise ValueError("delay profile is empty")
        for d in self.delays:
            if not (math.isfinite(d) and d >= 0):
                raise ValueError(f"delays must be finite and >= 0, got {d}")

    @property
    def max_delay(self) -> float:
        return max(self.delays)

    def first(self, Z: int) -> np.ndarray:
        """First Z delays, reusing the profile cyclically if it is shorter than Z."""
        d = np.asarray(self.delays)
        return d[np.arange(Z) % d.size]


def load_delay_profile(path, name: str | None = None) -> DelayProfile:
    """Read one delay (seconds) per line; ``#`` starts a comment."""
    delays = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            delays.append(float(line))
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: not a delay value: {line!r}") from exc
    return DelayProfile(name or Path(path).stem, tuple(delays))


def default_delay_profile() -> DelayProfile:
    ref = resources.files("mimo_crb") / "data" / f"{DEFAULT_PROFILE}.txt"
    with resources.as_file(ref) as p:
        return load_delay_profile(p, DEFAULT_PROFILE)


@dataclass(frozen=True)
class EnsembleSpec:
    """Random channel ensemble.

    Amplitudes are CN(0, 1); arrival/departure angles and the travel-direction
    angle are uniform on [-pi, pi); Doppler is ``2 pi dx sin(theta_v)``; the
    path delays are the first Z entries of ``delay_profile``.
    """

    Z: int = 2
    delay_profile: DelayProfile = field(default_factory=default_delay_profile)
    master_seed: int = 1
    trials: int = 200

    def __post_init__(self):
        if self.Z < 1:
            raise ValueError("Z must be >= 1")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")


def draw_realization(spec: EnsembleSpec, config: SystemConfig, trial_index: int) -> ChannelRealization:
    if not 0 <= trial_index < spec.trials:
        raise IndexError(f"trial_index {trial_index} outside [0, {spec.trials})")
    rng = np.random.default_rng([spec.master_seed, trial_index])
    Z = spec.Z
    alpha = (rng.standard_normal(Z) + 1j * rng.standard_normal(Z)) / math.sqrt(2.0)
    theta_r = rng.uniform(-np.pi, np.pi, Z)
    theta_t = rng.uniform(-np.pi, np.pi, Z)
    theta_v = rng.uniform(-np.pi, np.pi, Z)
    mu_r = wrap_angle(2 * np.pi * config.rx_spacing * np.sin(theta_r))
    mu_t = wrap_angle(2 * np.pi * config.tx_spacing * np.sin(theta_t))
    nu = 2 * np.pi * config.spatial_step * np.sin(theta_v)
    eta = 2 * np.pi * config.delta_f * spec.delay_profile.first(Z)
    return ChannelRealization.from_arrays(alpha, mu_r, mu_t, nu, eta)


def rect_grid(t_idx: Sequence[float], f_idx: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
    """Cartesian product of time and subcarrier indices, time-major."""
    T, F = np.meshgrid(np.asarray(t_idx, dtype=float), np.asarray(f_idx, dtype=float), indexing="ij")
    return T.ravel(), F.ravel()


@dataclass
class BoundSurface:
    t_idx: np.ndarray
    f_idx: np.ndarray
    mean_nmse: np.ndarray
    stderr: np.ndarray
    mean_rnmse: np.ndarray  # trial mean of per-trial RNMSE (alternative convention)
    trials_used: int
    trials_discarded: int
    trial_nmse: np.ndarray = field(repr=False)  # (trials_used, npts)
    discarded: tuple[int, ...] = ()

    @property
    def rnmse(self) -> np.ndarray:
        return np.sqrt(self.mean_nmse)

    @property
    def trials_requested(self) -> int:
        return self.trials_used + self.trials_discarded


def resolve_workers(workers: int | None = None) -> int:
    """Explicit value wins, then ``MIMO_CRB_WORKERS``, then 1."""
    if workers is None:
        env = os.environ.get(WORKERS_ENV, "").strip()
        workers = int(env) if env else 1
    return max(1, int(workers))


def _run_trials(payload, indices) -> list[np.ndarray | None]:
    spec, config, noise, t, f, mode, cond_limit = payload
    fim = fim_exact if mode == "full" else fim_block_diagonal
    active = active_slots(config, spec.Z)
    out = []
    for k in indices:
        r = draw_realization(spec, config, k)
        try:
            Finv = invert_fim(fim(r, config, noise), cond_limit, None if active.all() else active)
        except SingularFim as exc:
            log.debug("trial %d discarded: %s", k, exc)
            out.append(None)
            continue
        out.append(mseb_points(r, config, Finv, t, f) / (config.n_rx * config.n_tx * spec.Z))
    return out


def average_bound(spec: EnsembleSpec, config: SystemConfig, noise: NoiseModel, grid,
                  mode: str = "full", workers: int | None = None,
                  cond_limit: float = 1e12) -> BoundSurface:
    """Trial-averaged exact NMSE bound on the given (t_idx, f_idx) points.

    ``grid`` is a pair of equal-length index arrays (see :func:`rect_grid`).
    Singular trials are dropped from the mean and counted.
    """
    if mode in ("blockdiag", "block_diagonal"):
        mode = "block-diagonal"
    if mode not in ("full", "block-diagonal"):
        raise ValueError(f"unknown FIM mode {mode!r}")
    t, f = (np.asarray(a, dtype=float).ravel() for a in grid)
    if t.size == 0 or t.size != f.size:
        raise ValueError("grid must be two nonempty index arrays of equal length")

    payload = (spec, config, noise, t, f, mode, cond_limit)
    n_workers = min(resolve_workers(workers), spec.trials)
    if n_workers == 1:
        results = _run_trials(payload, range(spec.trials))
    else:
        chunks = np.array_split(np.arange(spec.trials), 4 * n_workers)
        results = []
        with ProcessPoolExecutor(max_workers=n_workers) as ex:
            for part in ex.map(_run_trials, [payload] * len(chunks), [c.tolist() for c in chunks]):
                results.extend(part)

    discarded = tuple(k for k, v in enumerate(results) if v is None)
    kept = [v for v in results if v is not None]
    if not kept:
        raise AllTrialsDiscarded(f"all {spec.trials} trials produced a singular FIM")
    stack = np.vstack(kept)
    n = stack.shape[0]
    stderr = stack.std(axis=0, ddof=1) / math.sqrt(n) if n > 1 else np.zeros(t.size)
    return BoundSurface(
        t_idx=t, f_idx=f,
        mean_nmse=stack.mean(axis=0),
        stderr=stderr,
        mean_rnmse=np.sqrt(stack).mean(axis=0),
        trials_used=n,
        trials_discarded=len(discarded),
        trial_nmse=stack,
        discarded=discarded,
    )


def _rectangular(t, f):
    tu, ti = np.unique(t, return_inverse=True)
    fu, fi = np.unique(f, return_inverse=True)
    if t.size != tu.size * fu.size:
        raise NonRectangularGrid(f"{t.size} points do not form a {tu.size}x{fu.size} product grid")
    cell = ti * fu.size + fi
    if np.unique(cell).size != cell.size:
        raise NonRectangularGrid("grid has repeated points")
    return tu, fu, ti, fi


def surface_statistics(surface: BoundSurface, axis: str = "time", average: str = "nmse"):
    """Collapse a rectangular surface onto one axis.

    ``axis`` names the retained axis (``"time"`` or ``"frequency"``).  With
    ``average="nmse"`` the NMSE is averaged over the other axis and then
    square-rooted; ``average="rnmse"`` averages the per-trial RNMSE instead.
    Returns ``(axis_values, rnmse)``.
    """
    tu, fu, ti, fi = _rectangular(surface.t_idx, surface.f_idx)
    if average == "nmse":
        vals = surface.mean_nmse
    elif average == "rnmse":
        vals = surface.mean_rnmse
    else:
        raise ValueError(f"average must be 'nmse' or 'rnmse', got {average!r}")
    table = np.empty((tu.size, fu.size))
    table[ti, fi] = vals
    if axis == "time":
        keep, m = tu, table.mean(axis=1)
    elif axis == "frequency":
        keep, m = fu, table.mean(axis=0)
    else:
        raise ValueError(f"axis must be 'time' or 'frequency', got {axis!r}")
    return keep, (np.sqrt(m) if average == "nmse" else m)
