"""Exact (finite-sample, channel-dependent) Cramer-Rao bound on channel MSE.

The parameter vector holds six real slots per path, ``[Re a, Im a, mu_r,
mu_t, nu, eta]``.  With white complex Gaussian noise of variance ``sigma2``,
the Fisher information is ``(2/sigma2) Re sum g g^H`` over the pilot grid,
and the MSE bound on the N x M channel at one (t, f) point is
``sum_{n,m} g J^{-1} g^H``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from . import _kernels
from .channel import ChannelRealization, NoiseModel, SystemConfig
from .errors import SingularFim

__all__ = [
    "FisherMatrix",
    "gradient",
    "full_gradient",
    "fim_exact",
    "fim_block_diagonal",
    "invert_fim",
    "active_slots",
    "mseb_point",
    "mseb_points",
    "nmse",
    "rnmse",
]

SLOT_NAMES = ("re_alpha", "im_alpha", "mu_r", "mu_t", "nu", "eta")


@dataclass(frozen=True)
class FisherMatrix:
    entries: np.ndarray
    mode: str
    sigma2: float

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def Z(self) -> int:
        return self.dim // 6

    def block(self, z: int, y: int | None = None) -> np.ndarray:
        y = z if y is None else y
        return self.entries[6 * z: 6 * z + 6, 6 * y: 6 * y + 6]


def gradient(realization: ChannelRealization, z: int, n: int, m: int, t_idx, f_idx) -> np.ndarray:
    """d h(n, m, t, f) / d theta_z for path ``z`` (0-based), a complex 6-vector."""
    p = realization.paths[z]
    e = np.exp(1j * (t_idx * p.nu - (n - 1) * p.mu_r - (m - 1) * p.mu_t - f_idx * p.eta))
    a = p.alpha
    return np.array([e, 1j * e, -1j * (n - 1) * a * e, -1j * (m - 1) * a * e,
                     1j * t_idx * a * e, -1j * f_idx * a * e])


def full_gradient(realization: ChannelRealization, n: int, m: int, t_idx, f_idx) -> np.ndarray:
    """The 6Z gradient row of h(n, m, t, f)."""
    return np.concatenate([gradient(realization, z, n, m, t_idx, f_idx)
                           for z in range(realization.Z)])


def _params(r: ChannelRealization) -> np.ndarray:
    return np.stack([r.mu_r, r.mu_t, r.nu, r.eta])


def fim_exact(realization: ChannelRealization, config: SystemConfig, noise: NoiseModel | float) -> FisherMatrix:
    """Full 6Z x 6Z Fisher information over the P x Q pilot grid.

    ``noise`` may be a NoiseModel (variance ``noise.sigma2(Z)``) or a raw
    per-sample noise variance.
    """
    sigma2 = noise.sigma2(realization.Z) if isinstance(noise, NoiseModel) else float(noise)
    grids = (np.arange(config.n_rx), np.arange(config.n_tx),
             config.pilot_times(), config.pilot_subcarriers())
    J = (2.0 / sigma2) * _kernels.fim_sum(realization.alpha, _params(realization), grids)
    # exact symmetry; the kernel fills both triangles from the same products
    J = 0.5 * (J + J.T)
    return FisherMatrix(J, "full", sigma2)


def fim_block_diagonal(realization: ChannelRealization, config: SystemConfig,
                       noise: NoiseModel | float) -> FisherMatrix:
    """Per-path blocks of the full FIM; cross-path blocks set to zero."""
    full = fim_exact(realization, config, noise)
    J = np.zeros_like(full.entries)
    for z in range(realization.Z):
        s = slice(6 * z, 6 * z + 6)
        J[s, s] = full.entries[s, s]
    return FisherMatrix(J, "block-diagonal", full.sigma2)


def active_slots(config: SystemConfig, Z: int) -> np.ndarray:
    """Mask of parameter slots that influence the channel at all.

    A single receive (transmit) antenna makes mu_r (mu_t) drop out of the
    model entirely: its derivative is identically zero, on the pilot grid and
    at every evaluation point.
    """
    mask = np.ones(6, dtype=bool)
    if config.n_rx == 1:
        mask[2] = False
    if config.n_tx == 1:
        mask[3] = False
    return np.tile(mask, Z)


def invert_fim(F: FisherMatrix | np.ndarray, cond_limit: float = 1e12,
               active: np.ndarray | None = None) -> np.ndarray:
    """Cholesky-based inverse of a FIM, with an identifiability check.

    The condition number is measured after symmetric diagonal equilibration,
    so that it reflects parameter coupling rather than the unit scale of each
    slot.  Slots excluded by ``active`` are dropped before inversion and come
    back as zero rows/columns.
    """
    J = F.entries if isinstance(F, FisherMatrix) else np.asarray(F, dtype=float)
    if J.ndim != 2 or J.shape[0] != J.shape[1]:
        raise ValueError("FIM must be square")
    scale = max(np.abs(J).max(), np.finfo(float).tiny)
    if np.abs(J - J.T).max() > 1e-10 * scale:
        raise ValueError("FIM is not symmetric")

    if active is not None:
        active = np.asarray(active, dtype=bool)
        out = np.zeros_like(J)
        sub = invert_fim(J[np.ix_(active, active)], cond_limit)
        out[np.ix_(active, active)] = sub
        return out

    d = np.diag(J).copy()
    if np.any(d <= 0):
        raise SingularFim(f"FIM has {np.sum(d <= 0)} non-positive diagonal entries", np.inf)
    s = 1.0 / np.sqrt(d)
    E = J * s[:, None] * s[None, :]
    E = 0.5 * (E + E.T)
    w = np.linalg.eigvalsh(E)
    cond = w[-1] / w[0] if w[0] > 0 else np.inf
    if not cond <= cond_limit:
        raise SingularFim(f"FIM condition number {cond:.3g} exceeds {cond_limit:.3g}", cond)
    try:
        cf = linalg.cho_factor(E, lower=True, check_finite=False)
    except linalg.LinAlgError as exc:  # pragma: no cover - guarded by the eigenvalue test
        raise SingularFim(str(exc)) from exc
    Einv = linalg.cho_solve(cf, np.eye(E.shape[0]), check_finite=False)
    Jinv = Einv * s[:, None] * s[None, :]
    return 0.5 * (Jinv + Jinv.T)


def mseb_points(realization: ChannelRealization, config: SystemConfig, finv: np.ndarray,
                t_idx, f_idx, rtol_imag: float = 1e-10) -> np.ndarray:
    """MSE bound at every (t_idx[k], f_idx[k]) pair, summed over all N*M entries."""
    t = np.atleast_1d(np.asarray(t_idx, dtype=float))
    f = np.atleast_1d(np.asarray(f_idx, dtype=float))
    t, f = np.broadcast_arrays(t, f)
    W = _kernels.quadform_weights(realization.alpha, _params(realization),
                                  config.n_rx, config.n_tx, finv)
    q = _kernels.quadform(W, realization.nu, realization.eta, t.ravel(), f.ravel())
    ref = max(np.abs(q.real).max(initial=0.0), np.finfo(float).tiny)
    worst = np.abs(q.imag).max(initial=0.0)
    if worst > rtol_imag * ref:
        raise ArithmeticError(f"quadratic form has imaginary residue {worst:.3g} (scale {ref:.3g})")
    return q.real.reshape(t.shape)


def mseb_point(realization: ChannelRealization, config: SystemConfig, finv: np.ndarray,
               t_idx: int, f_idx: int) -> float:
    return float(mseb_points(realization, config, finv, [t_idx], [f_idx])[0])


def nmse(mseb, N: int, M: int, Z: int):
    return np.asarray(mseb) / (N * M * Z) if np.ndim(mseb) else float(mseb) / (N * M * Z)


def rnmse(nmse_value):
    return np.sqrt(nmse_value) if np.ndim(nmse_value) else float(np.sqrt(nmse_value))
