"""Experiment orchestration and tabular result files.

Each ``run_*`` function maps an :class:`ExperimentConfig` to a
:class:`ResultTable`: comma-separated rows preceded by ``#`` metadata lines
that echo the full configuration, so a table can be recomputed and checked
(:func:`verify_table`).
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from . import __version__
from .asymptotic import anmseb
from .channel import NoiseModel, SystemConfig, validate_config
from .errors import NegativeHorizon, OutOfBand, StructuralError
from .montecarlo import (
    EnsembleSpec,
    average_bound,
    default_delay_profile,
    load_delay_profile,
    rect_grid,
    surface_statistics,
)

__all__ = [
    "ExperimentConfig",
    "ResultTable",
    "default_experiment",
    "horizon_to_index",
    "subcarrier_to_frequency",
    "to_db",
    "from_db",
    "run_fig1",
    "run_fig2",
    "run_fig3",
    "run_fig4",
    "run_bound_asymptotic",
    "run_bound_exact",
    "run_command",
    "verify_table",
    "COMMANDS",
]


def to_db(rnmse):
    """RNMSE in dB, ``20 log10``."""
    return 20.0 * np.log10(rnmse)


def from_db(value_db):
    return 10.0 ** (np.asarray(value_db, dtype=float) / 20.0)


def horizon_to_index(lambda_h: float, config: SystemConfig, anchor: str = "last_pilot") -> int:
    """Absolute symbol index of a prediction horizon given in wavelengths.

    The mobile moves ``spatial_step`` wavelengths per symbol.  Horizon 0 is the
    last training pilot, ``(P-1) U_t``, or symbol 0 with
    ``anchor="window_start"``.  Non-integer symbol offsets are rounded half to
    even, with a warning.
    """
    if lambda_h < 0:
        raise NegativeHorizon(f"horizon must be >= 0, got {lambda_h}")
    if config.spatial_step <= 0:
        raise StructuralError("spatial_step must be positive to map horizons to symbols")
    if anchor == "last_pilot":
        base = (config.P - 1) * config.U_t
    elif anchor == "window_start":
        base = 0
    else:
        raise ValueError(f"unknown horizon anchor {anchor!r}")
    steps = lambda_h / config.spatial_step
    k = round(steps)  # half-to-even
    if abs(steps - k) > 1e-9:
        warnings.warn(f"horizon {lambda_h} wavelengths is {steps:.6g} symbols; rounded to {k}",
                      stacklevel=2)
    return base + int(k)


def subcarrier_to_frequency(f_idx: int, config: SystemConfig) -> float:
    if not 0 <= f_idx <= config.n_sc:
        raise OutOfBand(f"subcarrier {f_idx} outside [0, {config.n_sc}]")
    return f_idx * config.delta_f


def _sweep(start: float, stop: float, step: float) -> np.ndarray:
    if step <= 0 or stop < start:
        raise StructuralError(f"bad sweep ({start}, {stop}, {step})")
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return np.round(start + step * np.arange(n), 12)


@dataclass
class ExperimentConfig:
    system: SystemConfig = field(default_factory=SystemConfig)
    Z: int = 2
    trials: int = 200
    seed: int = 1
    # path to a delay profile file; None selects the bundled default
    delay_profile: str | None = None
    snr_db: list[float] = field(default_factory=lambda: [15.0])
    horizon: tuple[float, float, float] = (0.0, 2.0, 0.2)  # wavelengths: start, stop, step
    frequency: tuple[int, int, int] = (0, 2047, 16)  # subcarriers: start, stop, step
    horizon_anchor: str = "last_pilot"
    mode: str = "full"
    bounds: str = "both"  # both | exact | asymptotic
    eval_horizon: float = 1.0  # wavelengths, for the P and Z sweeps
    p_sweep: list[int] = field(default_factory=lambda: [25, 50, 75, 100, 125, 150, 175, 200])
    antenna_sweep: list[tuple[int, int]] = field(default_factory=lambda: [(1, 1), (2, 2), (4, 4)])
    z_sweep: list[int] = field(default_factory=lambda: list(range(1, 9)))
    cond_limit: float = 1e12
    max_discard_fraction: float = 0.01

    def __post_init__(self):
        if isinstance(self.system, dict):
            self.system = SystemConfig.from_dict(self.system)
        self.snr_db = [float(s) for s in self.snr_db]
        self.horizon = tuple(float(x) for x in self.horizon)
        self.frequency = tuple(int(x) for x in self.frequency)
        self.antenna_sweep = [tuple(int(v) for v in nm) for nm in self.antenna_sweep]
        self.p_sweep = [int(p) for p in self.p_sweep]
        self.z_sweep = [int(z) for z in self.z_sweep]
        if self.mode in ("blockdiag", "block_diagonal"):
            self.mode = "block-diagonal"
        problems = []
        if not self.snr_db:
            problems.append("snr_db sweep is empty")
        if self.mode not in ("full", "block-diagonal"):
            problems.append(f"mode must be full or block-diagonal, got {self.mode!r}")
        if self.bounds not in ("both", "exact", "asymptotic"):
            problems.append(f"bounds must be both, exact or asymptotic, got {self.bounds!r}")
        if self.horizon_anchor not in ("last_pilot", "window_start"):
            problems.append(f"unknown horizon_anchor {self.horizon_anchor!r}")
        if self.Z < 1 or self.trials < 1:
            problems.append("Z and trials must be >= 1")
        if not (self.p_sweep and self.antenna_sweep and self.z_sweep):
            problems.append("sweeps must be nonempty")
        if problems:
            raise StructuralError("; ".join(problems))
        _sweep(*self.horizon)
        _sweep(*self.frequency)

    # -- serialization -----------------------------------------------------
    def to_dict(self) -> dict:
        d = asdict(self)
        d["horizon"] = list(self.horizon)
        d["frequency"] = list(self.frequency)
        d["antenna_sweep"] = [list(nm) for nm in self.antenna_sweep]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise StructuralError(f"unknown experiment keys: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def load(cls, path, base: "ExperimentConfig | None" = None) -> "ExperimentConfig":
        """Load a JSON config; keys override ``base`` (``system`` keys merge)."""
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise StructuralError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise StructuralError("config file must hold a JSON object")
        merged = (base or cls()).to_dict()
        sys_over = data.pop("system", {})
        merged.update(data)
        merged["system"] = {**merged["system"], **sys_over}
        return cls.from_dict(merged)

    # -- derived -------------------------------------------------------------
    def profile(self):
        return default_delay_profile() if self.delay_profile is None else load_delay_profile(self.delay_profile)

    def horizons(self) -> np.ndarray:
        return _sweep(*self.horizon)

    def subcarriers(self) -> np.ndarray:
        f = _sweep(*self.frequency).astype(np.int64)
        if f.min() < 0 or f.max() > self.system.n_sc:
            raise OutOfBand(f"frequency sweep leaves the band [0, {self.system.n_sc}]")
        return f

    def ensemble(self, Z: int | None = None) -> EnsembleSpec:
        return EnsembleSpec(Z=Z or self.Z, delay_profile=self.profile(),
                            master_seed=self.seed, trials=self.trials)


def default_experiment(command: str) -> ExperimentConfig:
    """Defaults for each command; fig2 sweeps SNR over {0, 5} dB, the rest use 15 dB."""
    cfg = ExperimentConfig()
    if command == "fig2":
        cfg.snr_db = [0.0, 5.0]
    return cfg


@dataclass
class ResultTable:
    name: str
    columns: list[tuple[str, str]]  # (name, unit)
    rows: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.rows = np.asarray(self.rows, dtype=float).reshape(-1, len(self.columns))

    @property
    def names(self) -> list[str]:
        return [c for c, _ in self.columns]

    def column(self, name: str) -> np.ndarray:
        return self.rows[:, self.names.index(name)]

    def to_csv(self) -> str:
        meta = {"table": self.name, "version": __version__, **self.metadata,
                "units": dict(self.columns)}
        lines = [f"# {k}: {json.dumps(v, sort_keys=True)}" for k, v in meta.items()]
        lines.append(",".join(self.names))
        for row in self.rows:
            lines.append(",".join(_fmt(x) for x in row))
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        meta = {"table": self.name, "version": __version__, **self.metadata}
        return json.dumps({"metadata": meta, "columns": [{"name": c, "unit": u} for c, u in self.columns],
                           "rows": [[_json_num(x) for x in r] for r in self.rows]}, indent=1, sort_keys=True)

    def write(self, path, json_mirror: bool = False) -> None:
        path = Path(path)
        path.write_text(self.to_csv())
        if json_mirror:
            path.with_suffix(".json").write_text(self.to_json() + "\n")

    @classmethod
    def from_csv(cls, text: str) -> "ResultTable":
        meta, body = {}, []
        for line in text.splitlines():
            if line.startswith("#"):
                key, _, val = line[1:].strip().partition(":")
                meta[key.strip()] = json.loads(val)
            elif line.strip():
                body.append(line)
        names = body[0].split(",")
        units = meta.pop("units", {})
        name = meta.pop("table", "")
        meta.pop("version", None)
        rows = [[float(x) for x in r.split(",")] for r in body[1:]]
        return cls(name, [(n, units.get(n, "")) for n in names], np.array(rows, dtype=float), meta)

    @classmethod
    def read(cls, path) -> "ResultTable":
        return cls.from_csv(Path(path).read_text())


def _fmt(x: float) -> str:
    x = float(x)
    if x.is_integer() and abs(x) < 2**53:
        return str(int(x))
    return repr(x)


def _json_num(x: float):
    x = float(x)
    return x if math.isfinite(x) else None


# --------------------------------------------------------------------------
# experiment runners
# --------------------------------------------------------------------------

def _check_aliasing(system: SystemConfig, cfg: ExperimentConfig, Z: int) -> None:
    # Doppler in Hz: nu_max / (2 pi dt) with nu_max = 2 pi dx
    validate_config(system, tau_max=float(cfg.profile().first(Z).max()),
                    omega_max=system.spatial_step / system.delta_t)


class _Runner:
    def __init__(self, cfg: ExperimentConfig, workers: int | None):
        self.cfg = cfg
        self.workers = workers
        self.used = 0
        self.discarded = 0
        self.worst_fraction = 0.0

    def exact(self, system: SystemConfig, Z: int, snr_db: float, t, f):
        spec = self.cfg.ensemble(Z)
        surf = average_bound(spec, system, NoiseModel.from_db(snr_db), (t, f), mode=self.cfg.mode,
                             workers=self.workers, cond_limit=self.cfg.cond_limit)
        self.used += surf.trials_used
        self.discarded += surf.trials_discarded
        self.worst_fraction = max(self.worst_fraction, surf.trials_discarded / surf.trials_requested)
        return surf

    def table(self, name, columns, rows) -> ResultTable:
        meta = {
            "command": name,
            "seed": self.cfg.seed,
            "config": self.cfg.to_dict(),
            "trials_used": self.used,
            "trials_discarded": self.discarded,
            "max_discard_fraction_observed": self.worst_fraction,
        }
        return ResultTable(name, columns, rows, meta)

    @property
    def want_exact(self) -> bool:
        return self.cfg.bounds in ("both", "exact")

    @property
    def want_asym(self) -> bool:
        return self.cfg.bounds in ("both", "asymptotic")


def _bound_columns(run: _Runner, prefix: str, unit: str = "") -> list[tuple[str, str]]:
    cols = []
    if run.want_exact:
        cols.append((f"{prefix}_exact", unit))
    if run.want_asym:
        cols.append((f"{prefix}_asymptotic", unit))
    return cols


def _surface_rows(cfg, run, name):
    system, Z = cfg.system, cfg.Z
    _check_aliasing(system, cfg, Z)
    lam = cfg.horizons()
    times = np.array([horizon_to_index(h, system, cfg.horizon_anchor) for h in lam])
    freqs = cfg.subcarriers()
    t, f = rect_grid(times, freqs)
    lam_pts = np.repeat(lam, freqs.size)
    rows = []
    for snr in cfg.snr_db:
        cols = [np.full(t.size, snr), lam_pts, t, f, f * system.delta_f]
        if run.want_exact:
            cols.append(run.exact(system, Z, snr, t, f).rnmse)
        if run.want_asym:
            cols.append(np.sqrt(anmseb(t, f, Z, NoiseModel.from_db(snr), system)))
        rows.append(np.column_stack(cols))
    columns = [("snr_db", "dB"), ("horizon_lambda", "wavelengths"), ("t_idx", "symbols"),
               ("f_idx", "subcarriers"), ("frequency_hz", "Hz")] + _bound_columns(run, "rnmse")
    return run.table(name, columns, np.vstack(rows))


def run_fig1(cfg: ExperimentConfig, workers: int | None = None) -> ResultTable:
    """RNMSE surface over horizon x subcarrier."""
    return _surface_rows(cfg, _Runner(cfg, workers), "fig1")


def run_fig2(cfg: ExperimentConfig, workers: int | None = None) -> ResultTable:
    """Frequency-averaged RNMSE versus horizon, one block of rows per SNR."""
    run = _Runner(cfg, workers)
    system, Z = cfg.system, cfg.Z
    _check_aliasing(system, cfg, Z)
    lam = cfg.horizons()
    times = np.array([horizon_to_index(h, system, cfg.horizon_anchor) for h in lam])
    freqs = cfg.subcarriers()
    t, f = rect_grid(times, freqs)
    rows = []
    for snr in cfg.snr_db:
        cols = [np.full(lam.size, snr), lam, times.astype(float)]
        ex = asy = None
        if run.want_exact:
            _, ex = surface_statistics(run.exact(system, Z, snr, t, f), axis="time")
            cols.append(ex)
        if run.want_asym:
            asy = np.sqrt(anmseb(t, f, Z, NoiseModel.from_db(snr), system).reshape(times.size, freqs.size).mean(axis=1))
            cols.append(asy)
        if ex is not None and asy is not None:
            cols.extend([to_db(ex), to_db(asy), to_db(ex) - to_db(asy)])
        rows.append(np.column_stack(cols))
    columns = [("snr_db", "dB"), ("horizon_lambda", "wavelengths"), ("t_idx", "symbols")]
    columns += _bound_columns(run, "rnmse")
    if run.want_exact and run.want_asym:
        columns += [("rnmse_exact_db", "dB"), ("rnmse_asymptotic_db", "dB"), ("gap_db", "dB")]
    return run.table("fig2", columns, np.vstack(rows))


def _freq_avg(run, cfg, system, Z, snr, t_idx):
    freqs = cfg.subcarriers()
    t, f = rect_grid([t_idx], freqs)
    out = []
    if run.want_exact:
        out.append(float(np.sqrt(run.exact(system, Z, snr, t, f).mean_nmse.mean())))
    if run.want_asym:
        out.append(float(np.sqrt(np.mean(anmseb(t, f, Z, NoiseModel.from_db(snr), system)))))
    return out


def run_fig3(cfg: ExperimentConfig, workers: int | None = None) -> ResultTable:
    """Frequency-averaged RNMSE at ``eval_horizon`` versus the number of time pilots."""
    run = _Runner(cfg, workers)
    rows = []
    for snr in cfg.snr_db:
        for N, M in cfg.antenna_sweep:
            for P in cfg.p_sweep:
                system = cfg.system.replace(n_rx=N, n_tx=M, n_time_pilots=P, n_train=P * cfg.system.U_t)
                _check_aliasing(system, cfg, cfg.Z)
                t_idx = horizon_to_index(cfg.eval_horizon, system, cfg.horizon_anchor)
                rows.append([snr, N, M, P, t_idx] + _freq_avg(run, cfg, system, cfg.Z, snr, t_idx))
    columns = [("snr_db", "dB"), ("n_rx", ""), ("n_tx", ""), ("P", "pilots"), ("t_idx", "symbols")]
    return run.table("fig3", columns + _bound_columns(run, "rnmse"), rows)


def run_fig4(cfg: ExperimentConfig, workers: int | None = None) -> ResultTable:
    """Frequency-averaged bounds at ``eval_horizon`` versus the number of paths."""
    run = _Runner(cfg, workers)
    system = cfg.system
    t_idx = horizon_to_index(cfg.eval_horizon, system, cfg.horizon_anchor)
    rows = []
    for snr in cfg.snr_db:
        for Z in cfg.z_sweep:
            _check_aliasing(system, cfg, Z)
            r = _freq_avg(run, cfg, system, Z, snr, t_idx)
            rows.append([snr, Z, t_idx] + [v * v for v in r] + r)
    columns = [("snr_db", "dB"), ("Z", "paths"), ("t_idx", "symbols")]
    columns += _bound_columns(run, "nmse") + _bound_columns(run, "rnmse")
    return run.table("fig4", columns, rows)


def run_bound_asymptotic(cfg: ExperimentConfig, workers: int | None = None) -> ResultTable:
    """Closed-form bound on the horizon x subcarrier grid (no Monte Carlo)."""
    return _surface_rows(replace(cfg, bounds="asymptotic"), _Runner(replace(cfg, bounds="asymptotic"), workers),
                         "bound-asymptotic")


def run_bound_exact(cfg: ExperimentConfig, workers: int | None = None) -> ResultTable:
    """Trial-averaged exact bound on the horizon x subcarrier grid, with standard errors."""
    run = _Runner(cfg, workers)
    system, Z = cfg.system, cfg.Z
    _check_aliasing(system, cfg, Z)
    lam = cfg.horizons()
    times = np.array([horizon_to_index(h, system, cfg.horizon_anchor) for h in lam])
    freqs = cfg.subcarriers()
    t, f = rect_grid(times, freqs)
    rows = []
    for snr in cfg.snr_db:
        s = run.exact(system, Z, snr, t, f)
        rows.append(np.column_stack([np.full(t.size, snr), np.repeat(lam, freqs.size), t, f,
                                     s.mean_nmse, s.stderr, s.rnmse]))
    columns = [("snr_db", "dB"), ("horizon_lambda", "wavelengths"), ("t_idx", "symbols"),
               ("f_idx", "subcarriers"), ("nmse", ""), ("nmse_stderr", ""), ("rnmse", "")]
    return run.table("bound-exact", columns, np.vstack(rows))


COMMANDS = {
    "fig1": run_fig1,
    "fig2": run_fig2,
    "fig3": run_fig3,
    "fig4": run_fig4,
    "bound-asymptotic": run_bound_asymptotic,
    "bound-exact": run_bound_exact,
}


def run_command(name: str, cfg: ExperimentConfig, workers: int | None = None) -> ResultTable:
    return COMMANDS[name](cfg, workers=workers)


def verify_table(path, workers: int | None = None, rtol: float = 1e-9):
    """Recompute a result file from its metadata and compare.

    Returns ``(ok, max_relative_difference, recomputed_table)``.
    """
    table = ResultTable.read(path)
    command = table.metadata.get("command")
    if command not in COMMANDS:
        raise StructuralError(f"{path}: unknown or missing command {command!r} in metadata")
    cfg = ExperimentConfig.from_dict(table.metadata["config"])
    fresh = run_command(command, cfg, workers)
    if fresh.names != table.names or fresh.rows.shape != table.rows.shape:
        return False, math.inf, fresh
    a, b = table.rows, fresh.rows
    denom = np.maximum(np.abs(a), np.abs(b))
    rel = np.where(denom > 0, np.abs(a - b) / np.where(denom > 0, denom, 1), 0.0)
    worst = float(rel.max(initial=0.0))
    return worst <= rtol, worst, fresh
