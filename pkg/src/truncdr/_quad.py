"""Vectorized Gauss-Legendre quadrature over per-subject intervals.

Integrands here are smooth between known breakpoints (support edges, clamp
crossings), so fixed-order panels reach near machine precision while staying
fully vectorized across subjects.
"""

import numpy as np

_GL_CACHE = {}


def _gl_nodes(order):
    if order not in _GL_CACHE:
        x, w = np.polynomial.legendre.leggauss(order)
        _GL_CACHE[order] = (x, w)
    return _GL_CACHE[order]


def panel_integrate(f, lo, hi, breakpoints=(), order=64):
    """Integrate ``f`` over ``[lo_i, hi_i]`` for each subject ``i``.

    Parameters
    ----------
    f : callable
        Maps a (n, k) matrix of times to integrand values of the same shape.
    lo, hi : ndarray of shape (n,)
        Integration limits; empty intervals (``hi <= lo``) contribute zero.
    breakpoints : sequence of float
        Global locations where the integrand may have kinks; panels never
        straddle them.
    order : int
        Gauss-Legendre order per panel.

    Returns
    -------
    ndarray of shape (n,)
    """
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    n = lo.shape[0]
    total = np.zeros(n)
    if n == 0:
        return total
    finite_lo = np.min(lo)
    finite_hi = np.max(hi)
    cuts = np.array(
        sorted({float(b) for b in breakpoints if finite_lo < b < finite_hi}), dtype=float
    )
    edges = np.concatenate(([finite_lo], cuts, [max(finite_hi, finite_lo)]))
    x, w = _gl_nodes(order)
    for a, b in zip(edges[:-1], edges[1:]):
        pa = np.clip(lo, a, b)
        pb = np.clip(hi, a, b)
        half = 0.5 * (pb - pa)
        alive = half > 0
        if not np.any(alive):
            continue
        mid = 0.5 * (pb + pa)
        t = mid[:, None] + half[:, None] * x[None, :]
        vals = f(t)
        contrib = half * (vals @ w)
        total += np.where(alive, contrib, 0.0)
    return total
