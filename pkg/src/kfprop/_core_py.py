"""Pure-numpy implementations of the hot kernels (fallback for kfprop._core)."""

import numpy as np


def free_apply_direct(f, x, v, kmat, sigma, omega, period):
    """Direct quadrature of the free kernel against f (n = 1, real field).

    out[ix, iv] = sum_{jx, jv} G(x[ix] - x[jx] - omega*(v[iv]+v[jv])) * kmat[iv, jv] * f[jx, jv]

    with G the x-Gaussian exp(-d^2/(4 sigma)) summed over the periodic images
    d, d +- period (displacements are folded into [-period/2, period/2) first;
    only the nearest images ever matter). Cell volumes are NOT included.
    """
    f = np.asarray(f, dtype=float)
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    nx, nv = x.size, v.size
    vsum = omega * (v[:, None] + v[None, :])  # (iv, jv)
    out = np.empty((nx, nv))
    inv4s = 1.0 / (4.0 * sigma)
    # widths beyond which an image Gaussian is below ~1e-300: no contribution
    reach = np.sqrt(4.0 * sigma * 700.0)
    for ix in range(nx):
        d = (x[ix] - x)[:, None, None] - vsum[None, :, :]  # (jx, iv, jv)
        d -= period * np.round(d / period)
        g = np.exp(-(d * d) * inv4s)
        near_edge = np.abs(d) > 0.5 * period - reach
        if np.any(near_edge):
            dd = d[near_edge]
            g[near_edge] += np.exp(-((dd - period) ** 2) * inv4s)
            g[near_edge] += np.exp(-((dd + period) ** 2) * inv4s)
        out[ix] = np.einsum("jab,ab,jb->a", g, kmat, f, optimize=True)
    return out


def shift_v_linear(a, delta):
    """Shift each row of a by delta[r] cells (sampling at k + delta), zero fill.

    Linear interpolation: convex combinations of in-range samples, so the
    result is bounded by the row max and preserves non-negativity.
    """
    a = np.asarray(a, dtype=float)
    delta = np.asarray(delta, dtype=float)
    rows, nv = a.shape
    base = np.floor(delta).astype(np.int64)
    w = delta - base
    k = np.arange(nv)[None, :]
    j0 = k + base[:, None]
    out = np.zeros_like(a)
    for off, coef in ((0, 1.0 - w), (1, w)):
        j = j0 + off
        ok = (j >= 0) & (j < nv)
        out[ok] += (np.broadcast_to(coef[:, None], a.shape)[ok]) * a[
            np.broadcast_to(np.arange(rows)[:, None], a.shape)[ok], j[ok]
        ]
    return out


def _cubic_weights(w):
    # 4-point Lagrange weights at offsets -1, 0, 1, 2 for fraction w in [0, 1)
    wm1 = -w * (w - 1.0) * (w - 2.0) / 6.0
    w0 = (w + 1.0) * (w - 1.0) * (w - 2.0) / 2.0
    w1 = -(w + 1.0) * w * (w - 2.0) / 2.0
    w2 = (w + 1.0) * w * (w - 1.0) / 6.0
    return wm1, w0, w1, w2


def shift_v_cubic(a, delta):
    """Row-wise shift with 4-point cubic Lagrange interpolation, zero fill."""
    a = np.asarray(a, dtype=float)
    delta = np.asarray(delta, dtype=float)
    rows, nv = a.shape
    base = np.floor(delta).astype(np.int64)
    w = delta - base
    weights = _cubic_weights(w)
    k = np.arange(nv)[None, :]
    j0 = k + base[:, None]
    out = np.zeros_like(a)
    ridx = np.broadcast_to(np.arange(rows)[:, None], a.shape)
    for off, coef in zip((-1, 0, 1, 2), weights):
        j = j0 + off
        ok = (j >= 0) & (j < nv)
        out[ok] += np.broadcast_to(coef[:, None], a.shape)[ok] * a[ridx[ok], j[ok]]
    return out
