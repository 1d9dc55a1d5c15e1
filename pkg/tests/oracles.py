"""Independent reference computations used by the tests.

These deliberately avoid the package's closed-form cell moments and its
bounded-Brent step search: MSE and correlation come from adaptive
quadrature per decision cell, and the step is found by a plain
golden-section search.
"""
import math

import numpy as np
from scipy import integrate


def _phi(x):
    return math.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)


def _cells(bits, step):
    half = 2 ** (bits - 1)
    edges = [-math.inf] + [k * step for k in range(-half + 1, half)] + [math.inf]
    levels = [(k + 0.5) * step for k in range(-half, half)]
    return list(zip(edges[:-1], edges[1:], levels))


def mse_quad(bits, step):
    total = 0.0
    for lo, hi, lev in _cells(bits, step):
        total += integrate.quad(lambda x: (x - lev) ** 2 * _phi(x), lo, hi, epsabs=1e-14, epsrel=1e-12)[0]
    return total


def correlation_quad(bits, step):
    """E[Q(y) y] for y ~ N(0, 1)."""
    total = 0.0
    for lo, hi, lev in _cells(bits, step):
        total += lev * integrate.quad(lambda x: x * _phi(x), lo, hi, epsabs=1e-14, epsrel=1e-12)[0]
    return total


def golden_section(f, a, b, tol=1e-9):
    g = (math.sqrt(5.0) - 1.0) / 2.0
    c, d = b - g * (b - a), a + g * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - g * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + g * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def uniform_alpha_oracle(bits):
    """(step, alpha) of the min-MSE mid-rise quantizer by quadrature + golden section."""
    step = golden_section(lambda s: mse_quad(bits, s), 1e-3, 2.5, tol=1e-10)
    return step, 1.0 - correlation_quad(bits, step)


def alpha_monte_carlo(bits, step, n, seed):
    rng = np.random.default_rng(seed)
    y = rng.standard_normal(n)
    half = 2 ** (bits - 1)
    q = (np.clip(np.floor(y / step), -half, half - 1) + 0.5) * step
    return 1.0 - float(np.mean(q * y)) / float(np.mean(y * y))


def dominant_eigvec(cov):
    vals, vecs = np.linalg.eigh(cov)
    return vecs[:, -1], vals[-1]


def ks_distance(a, b):
    a, b = np.sort(a), np.sort(b)
    grid = np.concatenate([a, b])
    fa = np.searchsorted(a, grid, side="right") / a.size
    fb = np.searchsorted(b, grid, side="right") / b.size
    return float(np.max(np.abs(fa - fb)))
