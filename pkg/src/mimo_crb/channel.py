"""Ray-based MIMO-OFDM channel model on a pilot grid.

Each path contributes ``alpha * exp(j(t*nu - (n-1)*mu_r - (m-1)*mu_t - f*eta))``
to entry ``(n, m)`` of the channel matrix at absolute OFDM symbol ``t`` and
absolute subcarrier ``f``.  Antenna indices ``n``/``m`` are 1-based throughout
the library; time and frequency indices are absolute (0-based) integers, so the
pilot with counters ``(p, q)`` sits at ``t = p*U_t``, ``f = q*U_f``.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from .errors import AliasingViolation, StructuralError

__all__ = [
    "SystemConfig",
    "PathParameters",
    "ChannelRealization",
    "NoiseModel",
    "GridSpacing",
    "validate_config",
    "steering_vector",
    "channel_entry",
    "channel_matrix",
    "observe",
    "frobenius_normalizer",
    "wrap_angle",
    "load_system_config",
    "save_system_config",
]


def wrap_angle(x):
    """Wrap radians into [-pi, pi)."""
    return (np.asarray(x) + np.pi) % (2 * np.pi) - np.pi


@dataclass(frozen=True)
class SystemConfig:
    """Deterministic geometry of the antenna arrays and the pilot grid.

    ``n_time_pilots`` (P) and ``n_freq_pilots`` (Q) are pilot counts;
    the spacings U_t, U_f and the subcarrier spacing are derived so that
    ``U_f = ceil(n_sc / Q)``, ``U_t = ceil(n_train / P)`` and
    ``delta_f = bandwidth / n_sc`` always hold.
    """

    n_rx: int = 2
    n_tx: int = 2
    n_sc: int = 2048
    bandwidth: float = 20e6
    n_train: int = 100
    n_time_pilots: int = 100
    n_freq_pilots: int = 64
    rx_spacing: float = 0.5
    tx_spacing: float = 0.5
    spatial_step: float = 0.2
    # None -> n_sc / bandwidth (cyclic prefix ignored)
    symbol_period: float | None = None

    def __post_init__(self):
        problems = _structural_problems(self)
        if problems:
            raise StructuralError("; ".join(problems))

    # Short aliases matching the usual notation.
    @property
    def N(self) -> int:
        return self.n_rx

    @property
    def M(self) -> int:
        return self.n_tx

    @property
    def P(self) -> int:
        return self.n_time_pilots

    @property
    def Q(self) -> int:
        return self.n_freq_pilots

    @property
    def U_t(self) -> int:
        return -(-self.n_train // self.n_time_pilots)

    @property
    def U_f(self) -> int:
        return -(-self.n_sc // self.n_freq_pilots)

    @property
    def delta_f(self) -> float:
        return self.bandwidth / self.n_sc

    @property
    def delta_t(self) -> float:
        if self.symbol_period is None:
            return self.n_sc / self.bandwidth
        return self.symbol_period

    @property
    def n_samples(self) -> int:
        """Observed samples per path: N*M*P*Q."""
        return self.n_rx * self.n_tx * self.n_time_pilots * self.n_freq_pilots

    def pilot_times(self) -> np.ndarray:
        return np.arange(self.P, dtype=np.int64) * self.U_t

    def pilot_subcarriers(self) -> np.ndarray:
        return np.arange(self.Q, dtype=np.int64) * self.U_f

    def replace(self, **changes) -> "SystemConfig":
        d = asdict(self)
        d.update(changes)
        return SystemConfig(**d)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "SystemConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise StructuralError(f"unknown SystemConfig keys: {sorted(unknown)}")
        return cls(**d)


def _structural_problems(c: SystemConfig) -> list[str]:
    out = []
    for name in ("n_rx", "n_tx", "n_sc", "n_train", "n_time_pilots", "n_freq_pilots"):
        v = getattr(c, name)
        if not isinstance(v, (int, np.integer)) or isinstance(v, bool):
            out.append(f"{name} must be an integer, got {v!r}")
        elif v < 1:
            out.append(f"{name} must be >= 1, got {v}")
    if out:
        return out
    if c.n_freq_pilots > c.n_sc:
        out.append(f"Q={c.n_freq_pilots} exceeds N_sc={c.n_sc}")
    if c.n_time_pilots > c.n_train:
        out.append(f"P={c.n_time_pilots} exceeds N_pilot={c.n_train}")
    if not (c.bandwidth > 0 and math.isfinite(c.bandwidth)):
        out.append(f"bandwidth must be positive, got {c.bandwidth}")
    if c.symbol_period is not None and not c.symbol_period > 0:
        out.append(f"symbol_period must be positive, got {c.symbol_period}")
    for name in ("rx_spacing", "tx_spacing", "spatial_step"):
        v = getattr(c, name)
        if not (v >= 0 and math.isfinite(v)):
            out.append(f"{name} must be finite and >= 0, got {v}")
    return out


def load_system_config(path) -> SystemConfig:
    """Read a SystemConfig from a JSON object (flat key/value)."""
    with open(path) as fh:
        return SystemConfig.from_dict(json.load(fh))


def save_system_config(config: SystemConfig, path) -> None:
    Path(path).write_text(json.dumps(config.to_dict(), indent=2) + "\n")


class GridSpacing(NamedTuple):
    delta_f: float
    U_f: int
    U_t: int


def validate_config(
    config: SystemConfig,
    tau_max: float = 0.0,
    omega_max: float = 0.0,
    doppler_units: str = "cycles",
) -> GridSpacing:
    """Check the structural and anti-aliasing constraints of a pilot grid.

    The frequency constraint is ``delta_f * tau_max * U_f <= 1`` and the time
    constraint ``2 * delta_t * omega_max * U_t <= 1``.  ``omega_max`` is read
    as a Doppler frequency in Hz when ``doppler_units="cycles"`` (default) and
    in rad/s when ``doppler_units="radians"``; the raw product is compared with
    1 in both cases.
    """
    problems = _structural_problems(config)
    if problems:
        raise StructuralError("; ".join(problems))
    if doppler_units not in ("cycles", "radians"):
        raise ValueError(f"doppler_units must be 'cycles' or 'radians', got {doppler_units!r}")
    if tau_max < 0 or omega_max < 0:
        raise ValueError("tau_max and omega_max must be non-negative")

    freq = config.delta_f * tau_max * config.U_f
    if freq > 1.0:
        raise AliasingViolation("frequency", freq)
    time = 2.0 * config.delta_t * omega_max * config.U_t
    if time > 1.0:
        raise AliasingViolation(f"time ({doppler_units})", time)
    return GridSpacing(config.delta_f, config.U_f, config.U_t)


def steering_vector(mu: float, n_elem: int) -> np.ndarray:
    """ULA response ``[1, e^{-j mu}, ..., e^{-j (n_elem-1) mu}]``."""
    if n_elem < 1:
        raise ValueError("n_elem must be >= 1")
    return np.exp(-1j * mu * np.arange(n_elem))


@dataclass(frozen=True)
class PathParameters:
    alpha: complex
    mu_r: float
    mu_t: float
    nu: float
    eta: float

    def as_tuple(self) -> tuple:
        return (complex(self.alpha), float(self.mu_r), float(self.mu_t), float(self.nu), float(self.eta))


@dataclass(frozen=True)
class ChannelRealization:
    """An ordered set of Z >= 1 distinct propagation paths."""

    paths: tuple[PathParameters, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "paths", tuple(self.paths))
        if not self.paths:
            raise ValueError("a realization needs at least one path")
        seen = set()
        for p in self.paths:
            key = p.as_tuple()
            if key in seen:
                raise ValueError(f"duplicate path parameters {key}; paths must be distinct")
            seen.add(key)

    @property
    def Z(self) -> int:
        return len(self.paths)

    @property
    def alpha(self) -> np.ndarray:
        return np.array([p.alpha for p in self.paths], dtype=complex)

    @property
    def mu_r(self) -> np.ndarray:
        return np.array([p.mu_r for p in self.paths], dtype=float)

    @property
    def mu_t(self) -> np.ndarray:
        return np.array([p.mu_t for p in self.paths], dtype=float)

    @property
    def nu(self) -> np.ndarray:
        return np.array([p.nu for p in self.paths], dtype=float)

    @property
    def eta(self) -> np.ndarray:
        return np.array([p.eta for p in self.paths], dtype=float)

    @classmethod
    def from_arrays(cls, alpha, mu_r, mu_t, nu, eta) -> "ChannelRealization":
        cols = np.broadcast_arrays(
            np.asarray(alpha, complex), *(np.asarray(a, float) for a in (mu_r, mu_t, nu, eta))
        )
        return cls(tuple(PathParameters(complex(a), float(b), float(c), float(d), float(e))
                         for a, b, c, d, e in zip(*(np.atleast_1d(x) for x in cols))))

    def to_vector(self) -> np.ndarray:
        """Real parameter vector, 6 slots per path: Re a, Im a, mu_r, mu_t, nu, eta."""
        out = np.empty(6 * self.Z)
        for z, p in enumerate(self.paths):
            out[6 * z: 6 * z + 6] = (p.alpha.real, p.alpha.imag, p.mu_r, p.mu_t, p.nu, p.eta)
        return out

    @classmethod
    def from_vector(cls, theta: Sequence[float]) -> "ChannelRealization":
        theta = np.asarray(theta, dtype=float)
        if theta.ndim != 1 or theta.size == 0 or theta.size % 6:
            raise ValueError("parameter vector length must be a positive multiple of 6")
        v = theta.reshape(-1, 6)
        return cls.from_arrays(v[:, 0] + 1j * v[:, 1], v[:, 2], v[:, 3], v[:, 4], v[:, 5])


@dataclass(frozen=True)
class NoiseModel:
    """Noise level under the per-path SNR convention.

    ``sigma2_single = 1/snr`` is the noise variance of a single-path channel;
    a Z-path channel at the same SNR sees ``sigma2(Z) = Z/snr``.
    """

    snr: float

    def __post_init__(self):
        if not self.snr > 0:
            raise ValueError(f"snr must be positive, got {self.snr}")

    @classmethod
    def from_db(cls, snr_db: float) -> "NoiseModel":
        return cls(10.0 ** (snr_db / 10.0))

    @property
    def snr_db(self) -> float:
        return 10.0 * math.log10(self.snr)

    @property
    def sigma2_single(self) -> float:
        return 1.0 / self.snr

    def sigma2(self, Z: int) -> float:
        if Z < 1:
            raise ValueError("Z must be >= 1")
        return Z / self.snr


def _phase(r: ChannelRealization, n, m, t_idx, f_idx):
    # broadcast over trailing axes; path axis first
    n = np.asarray(n)[None]
    m = np.asarray(m)[None]
    t = np.asarray(t_idx)[None]
    f = np.asarray(f_idx)[None]
    sh = (-1,) + (1,) * (max(n.ndim, m.ndim, t.ndim, f.ndim) - 1)
    return np.exp(1j * (t * r.nu.reshape(sh) - (n - 1) * r.mu_r.reshape(sh)
                        - (m - 1) * r.mu_t.reshape(sh) - f * r.eta.reshape(sh)))


def channel_entry(realization: ChannelRealization, n: int, m: int, t_idx: int, f_idx: int) -> complex:
    e = _phase(realization, n, m, t_idx, f_idx)
    return complex(np.sum(realization.alpha * e))


def channel_matrix(realization: ChannelRealization, config: SystemConfig | None = None,
                   t_idx: int = 0, f_idx: int = 0, *, n_rx: int | None = None,
                   n_tx: int | None = None) -> np.ndarray:
    """N x M frequency response at absolute (t_idx, f_idx).

    Array sizes come from ``config`` unless ``n_rx``/``n_tx`` are given.
    """
    N = n_rx if n_rx is not None else config.n_rx
    M = n_tx if n_tx is not None else config.n_tx
    H = np.zeros((N, M), dtype=complex)
    for p in realization.paths:
        H += (p.alpha * np.exp(1j * (t_idx * p.nu - f_idx * p.eta))
              * np.outer(steering_vector(p.mu_r, N), steering_vector(p.mu_t, M)))
    return H


def pilot_response(realization: ChannelRealization, config: SystemConfig) -> np.ndarray:
    """Noiseless channel on the pilot grid, shape (N, M, P, Q)."""
    n = np.arange(1, config.n_rx + 1)[:, None, None, None]
    m = np.arange(1, config.n_tx + 1)[None, :, None, None]
    t = config.pilot_times()[None, None, :, None]
    f = config.pilot_subcarriers()[None, None, None, :]
    e = _phase(realization, n, m, t, f)
    return np.tensordot(realization.alpha, e, axes=(0, 0))


def observe(realization: ChannelRealization, config: SystemConfig, noise: NoiseModel,
            seed) -> np.ndarray:
    """Noisy pilot observations h + w, shape (N, M, P, Q).

    ``w`` is i.i.d. circular complex Gaussian with variance ``noise.sigma2(Z)``.
    """
    h = pilot_response(realization, config)
    var = noise.sigma2(realization.Z)
    if var == 0:
        return h
    rng = np.random.default_rng(seed)
    w = rng.standard_normal(h.shape + (2,)) @ np.array([1.0, 1j])
    return h + math.sqrt(var / 2.0) * w


def frobenius_normalizer(N: int, M: int, Z: int) -> int:
    """E||H||_F^2 = N*M*Z for unit-power paths."""
    if min(N, M, Z) < 1:
        raise ValueError("N, M, Z must all be >= 1")
    return N * M * Z
