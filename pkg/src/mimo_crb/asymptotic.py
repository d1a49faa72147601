"""Closed-form asymptotic bound, independent of the channel parameters.

For many antennas and/or pilots, each path's FIM block tends to
``(N M P Q / sigma2) * K`` where ``K = 2 I_2 (+) D A D`` with
``D = diag(N, M, P U_t, Q U_f)`` and ``A`` a fixed 4x4 matrix.  ``K`` has an
exact closed-form inverse, ``K^-1 = I_2 / 2 (+) D^-1 B D^-1``, which gives the
MSE bound as a quadratic polynomial in the absolute time and subcarrier
index.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import NoiseModel, SystemConfig

__all__ = [
    "CORE_A",
    "CORE_B",
    "AsymptoticCore",
    "asymptotic_core",
    "k_matrix",
    "k_inverse",
    "k_matrix_finite",
    "bracket",
    "amseb",
    "anmseb",
    "amseb_oracle",
]

# rows/cols: mu_r, mu_t, nu, eta
CORE_A = np.array([
    [2 / 3, 1 / 2, -1 / 2, 1 / 2],
    [1 / 2, 2 / 3, -1 / 2, 1 / 2],
    [-1 / 2, -1 / 2, 2 / 3, -1 / 2],
    [1 / 2, 1 / 2, -1 / 2, 2 / 3],
])

CORE_B = np.array([
    [60, -18, 18, -18],
    [-18, 60, 18, -18],
    [18, 18, 60, 18],
    [-18, -18, 18, 60],
]) / 13.0


def _dims(config: SystemConfig) -> np.ndarray:
    return np.array([config.N, config.M, config.P * config.U_t, config.Q * config.U_f], dtype=float)


def k_matrix(config: SystemConfig) -> np.ndarray:
    D = _dims(config)
    K = np.zeros((6, 6))
    K[0, 0] = K[1, 1] = 2.0
    K[2:, 2:] = CORE_A * np.outer(D, D)
    return K


def k_inverse(config: SystemConfig) -> np.ndarray:
    Dinv = 1.0 / _dims(config)
    Kinv = np.zeros((6, 6))
    Kinv[0, 0] = Kinv[1, 1] = 0.5
    Kinv[2:, 2:] = CORE_B * np.outer(Dinv, Dinv)
    return Kinv


def k_matrix_finite(config: SystemConfig) -> np.ndarray:
    """Per-sample FIM core with exact index sums instead of their limits.

    Uses ``mean(x) = (A-1) U / 2`` and ``mean(x^2) = (A-1)(2A-1) U^2 / 6`` for
    an index running over ``0, U, ..., (A-1) U``; scaled by ``NMPQ/sigma2`` it
    equals the alpha-averaged exact FIM block with ``E|alpha|^2 = 1``.
    """
    counts = np.array([config.N, config.M, config.P, config.Q], dtype=float)
    steps = np.array([1.0, 1.0, config.U_t, config.U_f])
    first = (counts - 1) * steps / 2
    second = (counts - 1) * (2 * counts - 1) * steps**2 / 6
    signs = np.array([-1.0, -1.0, 1.0, -1.0])
    ang = 2 * np.outer(signs * first, signs * first)
    np.fill_diagonal(ang, 2 * second)
    K = np.zeros((6, 6))
    K[0, 0] = K[1, 1] = 2.0
    K[2:, 2:] = ang
    return K


@dataclass(frozen=True)
class AsymptoticCore:
    K: np.ndarray
    K_inv: np.ndarray
    scale: float  # N M P Q / sigma2


def asymptotic_core(config: SystemConfig, sigma2: float = 1.0) -> AsymptoticCore:
    return AsymptoticCore(k_matrix(config), k_inverse(config), config.n_samples / sigma2)


def _sigma2(noise) -> float:
    return noise.sigma2_single if isinstance(noise, NoiseModel) else float(noise)


def bracket(t_idx, f_idx, config: SystemConfig):
    """``44 - 36u + 60u^2 - 36w + 60w^2 - 36uw`` with u = t/(P U_t), w = f/(Q U_f)."""
    u = np.asarray(t_idx, dtype=float) / (config.P * config.U_t)
    w = np.asarray(f_idx, dtype=float) / (config.Q * config.U_f)
    return 44 - 36 * u + 60 * u * u - 36 * w + 60 * w * w - 36 * u * w


def amseb(t_idx, f_idx, Z: int, noise, config: SystemConfig):
    """Asymptotic MSE bound on the N x M channel at absolute (t_idx, f_idx).

    ``noise`` is a NoiseModel or the single-path noise variance; the Z-path
    variance ``Z * sigma2`` is applied internally, hence the ``Z**2`` factor.
    """
    out = Z * Z * _sigma2(noise) / (13.0 * config.P * config.Q) * bracket(t_idx, f_idx, config)
    return float(out) if np.ndim(out) == 0 else out


def anmseb(t_idx, f_idx, Z: int, noise, config: SystemConfig):
    out = amseb(t_idx, f_idx, Z, noise, config) / (config.N * config.M * Z)
    return float(out) if np.ndim(out) == 0 else out


def amseb_oracle(t_idx: float, f_idx: float, Z: int, noise, config: SystemConfig) -> float:
    """``sum_paths sum_{n,m} E_alpha[g J^-1 g^H]`` with ``J = NMPQ K / sigma_Z^2``.

    Independent route to :func:`amseb`: numeric inverse of ``K``, an explicit
    expected-outer-product of the 6-term gradient (``E|alpha|^2 = 1``,
    ``E alpha = 0``), and Gauss-Legendre quadrature for the large-array sum
    over antenna positions ``n - 1 = N a``, ``m - 1 = M b`` with a, b on [0, 1).
    """
    sigma2_z = Z * _sigma2(noise)
    Kinv = np.linalg.inv(k_matrix(config))
    x, wq = np.polynomial.legendre.leggauss(3)
    x = (x + 1) / 2
    wq = wq / 2
    total = 0.0
    for a, wa in zip(x, wq):
        for b, wb in zip(x, wq):
            v = np.array([1, 1j, -1j * config.N * a, -1j * config.M * b, 1j * t_idx, -1j * f_idx])
            E = np.outer(v, v.conj())
            E[:2, 2:] = 0  # E[alpha] = 0 kills amplitude/angle cross moments
            E[2:, :2] = 0
            total += wa * wb * np.sum(Kinv * E).real
    # N*M antenna positions, each weighted by sigma_Z^2 / (NMPQ)
    per_path = config.N * config.M * total * sigma2_z / config.n_samples
    return Z * per_path
