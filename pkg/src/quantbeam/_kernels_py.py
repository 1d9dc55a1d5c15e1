"""Pure numpy implementations of the hot kernels.

These are the reference versions; ``_kernels.pyx`` must agree with them
(bit-exactly for :func:`quantize_midrise`, to rounding for
:func:`array_gain`).
"""
import numpy as np


def quantize_midrise(x, step, n_levels):
    """Map each real sample to the nearest mid-rise level ``(k + 1/2) * step``.

    ``k`` is clamped to ``[-n_levels/2, n_levels/2 - 1]`` so that inputs
    beyond the clip level saturate at the outermost level.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    half = n_levels // 2
    k = np.floor(x / step)
    np.clip(k, -half, half - 1, out=k)
    return (k + 0.5) * step


def array_gain(weights, sector, u, v, spacing):
    """``|w_s^H a(u, v)|^2`` for a batch of (beam, direction) pairs.

    weights : complex (S, rows, cols), one unit-norm beam per transmitter
    sector  : int (P,), which beam each pair uses
    u, v    : float (P,), direction cosines ``sin(az)cos(el)`` and ``sin(el)``
    The steering vector ``a`` is the unit-norm planar-array response, so the
    result lies in ``[0, 1]``.
    """
    weights = np.asarray(weights, dtype=np.complex128)
    sector = np.asarray(sector, dtype=np.int64)
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    _, rows, cols = weights.shape
    out = np.empty(sector.shape[0])
    kr = 2.0 * np.pi * spacing * np.arange(rows)
    kc = 2.0 * np.pi * spacing * np.arange(cols)
    norm = 1.0 / (rows * cols)
    # group by beam so each group is two small matrix products
    order = np.argsort(sector, kind="stable")
    bounds = np.searchsorted(sector[order], np.arange(weights.shape[0] + 1))
    for s in range(weights.shape[0]):
        idx = order[bounds[s]:bounds[s + 1]]
        if idx.size == 0:
            continue
        er = np.exp(1j * np.outer(v[idx], kr))
        ec = np.exp(1j * np.outer(u[idx], kc))
        m = er @ np.conj(weights[s])
        out[idx] = np.abs(np.sum(m * ec, axis=1)) ** 2 * norm
    return out
