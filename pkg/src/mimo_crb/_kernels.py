"""Hot kernels: FIM assembly and CRB quadratic forms.

Each kernel has a numba ``@njit`` implementation and a pure-numpy fallback
computing the same sums.  The numba path is used when numba imports and the
environment variable ``MIMO_CRB_NUMBA`` is not set to ``0``/``false``/``off``.

Both kernels exploit that the path phase is separable over the four grid
dimensions (rx antenna, tx antenna, time, subcarrier), so

    sum_{n,m,t,f} x_i x_j e_z conj(e_z') = prod_d sum_{idx_d} idx_d^k_d exp(j s_d idx_d (p_z - p_z'))

with ``k_d`` the number of the two gradient slots that carry the dimension-d
index factor.  Gradient slot layout per path: Re a, Im a, mu_r, mu_t, nu, eta.
"""

from __future__ import annotations

import os

import numpy as np

__all__ = [
    "BACKEND",
    "HAVE_NUMBA",
    "SIGNS",
    "coefficients",
    "moments",
    "fim_sum",
    "fim_sum_numpy",
    "fim_sum_numba",
    "quadform",
    "quadform_numpy",
    "quadform_numba",
    "quadform_weights",
]

# phase sign of each grid dimension: -(n-1)mu_r, -(m-1)mu_t, +t nu, -f eta
SIGNS = np.array([-1.0, -1.0, 1.0, -1.0])
# gradient slot -> grid dimension carrying its index factor (-1: none)
SLOT_DIM = np.array([-1, -1, 0, 1, 2, 3], dtype=np.int64)


def _numba_requested() -> bool:
    return os.environ.get("MIMO_CRB_NUMBA", "1").strip().lower() not in ("0", "false", "off", "no")


try:
    import numba
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and _numba_requested()
BACKEND = "numba" if USE_NUMBA else "numpy"


def coefficients(alpha: np.ndarray) -> np.ndarray:
    """Per-path gradient prefactors, shape (Z, 6)."""
    a = np.asarray(alpha, dtype=complex)
    c = np.empty((a.size, 6), dtype=complex)
    c[:, 0] = 1.0
    c[:, 1] = 1j
    c[:, 2] = -1j * a
    c[:, 3] = -1j * a
    c[:, 4] = 1j * a
    c[:, 5] = -1j * a
    return c


def moments(idx: np.ndarray, params: np.ndarray, sign: float) -> np.ndarray:
    """``S[k, z, z'] = sum_i idx_i^k exp(j sign idx_i (p_z - p_z'))`` for k = 0, 1, 2."""
    idx = np.asarray(idx, dtype=float)
    d = params[:, None] - params[None, :]
    ph = np.exp(1j * sign * idx[:, None, None] * d[None])
    out = np.empty((3,) + d.shape, dtype=complex)
    out[0] = ph.sum(axis=0)
    w = idx[:, None, None] * ph
    out[1] = w.sum(axis=0)
    out[2] = (idx[:, None, None] * w).sum(axis=0)
    return out


def _slot_orders():
    # k[i, j, d]: power of dimension-d index in x_i * x_j
    k = np.zeros((6, 6, 4), dtype=np.int64)
    for i in range(6):
        for j in range(6):
            if SLOT_DIM[i] >= 0:
                k[i, j, SLOT_DIM[i]] += 1
            if SLOT_DIM[j] >= 0:
                k[i, j, SLOT_DIM[j]] += 1
    return k


SLOT_ORDERS = _slot_orders()


# --------------------------------------------------------------------------
# numpy fallbacks
# --------------------------------------------------------------------------

def fim_sum_numpy(alpha, params, grids) -> np.ndarray:
    """Real part of ``sum_grid g g^H`` (unscaled FIM), shape (6Z, 6Z).

    ``params`` is a (4, Z) array of (mu_r, mu_t, nu, eta); ``grids`` a sequence
    of the four index arrays (n-1, m-1, t, f).
    """
    params = np.asarray(params, dtype=float)
    Z = params.shape[1]
    c = coefficients(alpha)
    S = [moments(grids[d], params[d], SIGNS[d]) for d in range(4)]
    J = np.empty((Z, 6, Z, 6))
    for i in range(6):
        for j in range(i, 6):
            k = SLOT_ORDERS[i, j]
            prod = S[0][k[0]] * S[1][k[1]] * S[2][k[2]] * S[3][k[3]]
            blk = (c[:, i, None] * np.conj(c[None, :, j]) * prod).real
            J[:, i, :, j] = blk
            J[:, j, :, i] = blk.T
    return J.reshape(6 * Z, 6 * Z)


def quadform_weights(alpha, params, n_rx: int, n_tx: int, finv: np.ndarray) -> np.ndarray:
    """Point-independent part of ``sum_{n,m} g F g^H``, shape (Z, 6, Z, 6).

    Entry ``[z,i,z',j] = F[zi,z'j] c_zi conj(c_z'j) * (antenna moment sums)``.
    """
    params = np.asarray(params, dtype=float)
    Z = params.shape[1]
    c = coefficients(alpha)
    An = moments(np.arange(n_rx), params[0], SIGNS[0])
    Am = moments(np.arange(n_tx), params[1], SIGNS[1])
    F = np.asarray(finv, dtype=float).reshape(Z, 6, Z, 6)
    W = np.empty((Z, 6, Z, 6), dtype=complex)
    for i in range(6):
        for j in range(6):
            k = SLOT_ORDERS[i, j]
            W[:, i, :, j] = F[:, i, :, j] * c[:, i, None] * np.conj(c[None, :, j]) * An[k[0]] * Am[k[1]]
    return W


_MONOMIALS = [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]


def _group_by_monomial(W) -> np.ndarray:
    # Wp[k] collects the slot pairs multiplying t^a f^b, (a, b) = _MONOMIALS[k]
    Wp = np.zeros((6, W.shape[0], W.shape[0]), dtype=complex)
    for i in range(6):
        for j in range(6):
            k = SLOT_ORDERS[i, j]
            Wp[_MONOMIALS.index((k[2], k[3]))] += W[:, i, :, j]
    return Wp


def quadform_numpy(W, nu, eta, t_pts, f_pts) -> np.ndarray:
    """Complex ``sum_{n,m} g F g^H`` at each (t, f) point."""
    t = np.asarray(t_pts, dtype=float)
    f = np.asarray(f_pts, dtype=float)
    Wp = _group_by_monomial(W)
    poly = np.stack([np.ones_like(t), t, f, t * t, t * f, f * f], axis=1)
    dnu = nu[:, None] - nu[None, :]
    deta = eta[:, None] - eta[None, :]
    out = np.empty(t.size, dtype=complex)
    # chunk to bound the (chunk, Z, Z) temporaries
    step = max(1, 2_000_000 // max(1, dnu.size))
    for s in range(0, t.size, step):
        sl = slice(s, s + step)
        ph = np.exp(1j * (t[sl, None, None] * dnu - f[sl, None, None] * deta))
        inner = np.einsum("pk,kzy->pzy", poly[sl], Wp)
        out[sl] = (inner * ph).sum(axis=(1, 2))
    return out


# --------------------------------------------------------------------------
# numba kernels
# --------------------------------------------------------------------------

if HAVE_NUMBA:
    @numba.njit(cache=True)
    def _fim_sum_nb(coef, params, g0, g1, g2, g3, signs, slot_orders):
        Z = coef.shape[0]
        grids = (g0, g1, g2, g3)
        S = np.zeros((4, 3, Z, Z), dtype=np.complex128)
        for d in range(4):
            g = grids[d]
            for z in range(Z):
                for y in range(Z):
                    dp = signs[d] * (params[d, z] - params[d, y])
                    s0 = 0j
                    s1 = 0j
                    s2 = 0j
                    for ii in range(g.shape[0]):
                        x = g[ii]
                        e = np.exp(1j * x * dp)
                        s0 += e
                        s1 += x * e
                        s2 += x * x * e
                    S[d, 0, z, y] = s0
                    S[d, 1, z, y] = s1
                    S[d, 2, z, y] = s2
        J = np.empty((6 * Z, 6 * Z))
        for z in range(Z):
            for y in range(Z):
                for i in range(6):
                    for j in range(6):
                        k = slot_orders[i, j]
                        prod = S[0, k[0], z, y] * S[1, k[1], z, y] * S[2, k[2], z, y] * S[3, k[3], z, y]
                        J[6 * z + i, 6 * y + j] = (coef[z, i] * np.conj(coef[y, j]) * prod).real
        return J

    @numba.njit(cache=True)
    def _quadform_nb(Wp, nu, eta, t_pts, f_pts):
        Z = Wp.shape[1]
        npts = t_pts.shape[0]
        out = np.empty(npts, dtype=np.complex128)
        e = np.empty(Z, dtype=np.complex128)
        for p in range(npts):
            t = t_pts[p]
            f = f_pts[p]
            for z in range(Z):
                e[z] = np.exp(1j * (t * nu[z] - f * eta[z]))
            acc = 0j
            for z in range(Z):
                for y in range(Z):
                    blk = (Wp[0, z, y] + t * Wp[1, z, y] + f * Wp[2, z, y]
                           + t * t * Wp[3, z, y] + t * f * Wp[4, z, y] + f * f * Wp[5, z, y])
                    acc += blk * e[z] * np.conj(e[y])
            out[p] = acc
        return out


def fim_sum_numba(alpha, params, grids) -> np.ndarray:
    if not HAVE_NUMBA:
        raise RuntimeError("numba is not installed")
    g = [np.ascontiguousarray(x, dtype=np.float64) for x in grids]
    return _fim_sum_nb(coefficients(alpha), np.ascontiguousarray(params, dtype=np.float64),
                       g[0], g[1], g[2], g[3], SIGNS, SLOT_ORDERS)


def quadform_numba(W, nu, eta, t_pts, f_pts) -> np.ndarray:
    if not HAVE_NUMBA:
        raise RuntimeError("numba is not installed")
    return _quadform_nb(_group_by_monomial(W), np.asarray(nu, np.float64), np.asarray(eta, np.float64),
                        np.asarray(t_pts, np.float64), np.asarray(f_pts, np.float64))


fim_sum = fim_sum_numba if USE_NUMBA else fim_sum_numpy
quadform = quadform_numba if USE_NUMBA else quadform_numpy
