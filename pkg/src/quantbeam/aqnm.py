"""Additive quantization noise model (AQNM) for low-resolution receivers.

A uniform ``n``-bit quantizer acting on a Gaussian sample ``y`` is modelled
as ``Q(y) = (1 - alpha) y + v`` with ``v`` uncorrelated with ``y`` and
``E|v|^2 = alpha (1 - alpha) E|y|^2``.  ``alpha`` (the inverse coding gain)
depends only on the quantizer.  The closed forms below turn per-antenna
energies and the receive beamforming gain into the post-beamforming SINR.

All quantizer moments are evaluated in closed form from truncated Gaussian
integrals, so every value here is deterministic.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import ndtr

from . import kernels
from .errors import FitError, InfiniteSinrError, InvalidArgumentError, InvalidInputError

MIN_BITS = 1
MAX_BITS = 16

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def _pdf(x):
    return _INV_SQRT_2PI * np.exp(-0.5 * np.square(x))


@dataclass(frozen=True)
class QuantizerSpec:
    """An ``n``-bit mid-rise uniform quantizer for unit-variance input.

    Reconstruction levels are ``(k + 1/2) * step`` for
    ``k = -2**(n-1) ... 2**(n-1) - 1``; ``clip`` is the saturation level
    ``2**(n-1) * step``.
    """

    bits: int
    step: float
    alpha: float = field(default=math.nan)

    def __post_init__(self):
        _check_bits(self.bits)
        if not (self.step > 0 and math.isfinite(self.step)):
            raise InvalidArgumentError(f"step must be positive, got {self.step!r}")
        if not math.isnan(self.alpha) and not 0.0 <= self.alpha < 1.0:
            raise InvalidArgumentError(f"alpha must lie in [0, 1), got {self.alpha!r}")

    @property
    def n_levels(self) -> int:
        return 2 ** self.bits

    @property
    def clip(self) -> float:
        return 2 ** (self.bits - 1) * self.step

    def levels(self) -> np.ndarray:
        half = self.n_levels // 2
        return (np.arange(-half, half) + 0.5) * self.step

    def thresholds(self) -> np.ndarray:
        """Interior decision thresholds (``n_levels - 1`` of them)."""
        half = self.n_levels // 2
        return np.arange(-half + 1, half) * self.step


@dataclass(frozen=True)
class LinkBudget:
    """Per-antenna energies seen at the quantizer input, plus the Rx BF gain."""

    es: float
    sigma_n2: float
    sigma_z2: float = 0.0
    g_ue: float = 1.0

    def __post_init__(self):
        for name in ("es", "sigma_n2", "sigma_z2"):
            if not getattr(self, name) >= 0:
                raise InvalidArgumentError(f"{name} must be >= 0")
        if not self.g_ue >= 1:
            raise InvalidArgumentError(f"g_ue must be >= 1, got {self.g_ue!r}")

    @property
    def gamma_bf(self) -> float:
        """Post-beamforming SINR without quantization (linear)."""
        den = self.sigma_n2 + self.sigma_z2
        if den == 0:
            if self.es == 0:
                return 0.0
            return math.inf
        return self.g_ue * self.es / den

    @property
    def input_energy(self) -> float:
        return self.es + self.sigma_z2 + self.sigma_n2


def _check_bits(bits):
    if isinstance(bits, bool) or not isinstance(bits, (int, np.integer)):
        raise InvalidArgumentError(f"bits must be an integer, got {bits!r}")
    if not MIN_BITS <= bits <= MAX_BITS:
        raise InvalidArgumentError(f"bits must be in [{MIN_BITS}, {MAX_BITS}], got {bits}")


def _check_alpha(alpha):
    if not 0.0 <= alpha < 1.0:
        raise InvalidArgumentError(f"alpha must lie in [0, 1), got {alpha!r}")


def _cell_moments(bits, step):
    """Per-cell ``P``, ``E[y 1_cell]``, ``E[y^2 1_cell]`` for y ~ N(0, 1)."""
    half = 2 ** (bits - 1)
    edges = np.concatenate(([-np.inf], np.arange(-half + 1, half) * step, [np.inf]))
    lo, hi = edges[:-1], edges[1:]
    p = ndtr(hi) - ndtr(lo)
    m1 = _pdf(lo) - _pdf(hi)
    # x * pdf(x) -> 0 at +-inf
    xlo = np.where(np.isfinite(lo), lo, 0.0) * _pdf(lo)
    xhi = np.where(np.isfinite(hi), hi, 0.0) * _pdf(hi)
    m2 = p - (xhi - xlo)
    levels = (np.arange(-half, half) + 0.5) * step
    return levels, p, m1, m2


def quantizer_mse(bits: int, step: float) -> float:
    """Mean-squared error of the mid-rise quantizer on a unit-variance Gaussian."""
    levels, p, m1, m2 = _cell_moments(bits, step)
    # sum E[(y - l)^2 1_cell]; drop tiny negative rounding
    return max(float(np.sum(m2 - 2.0 * levels * m1 + levels**2 * p)), 0.0)


def estimate_alpha(spec: QuantizerSpec | tuple[int, float]) -> float:
    """``alpha = 1 - E[Q(y) y] / E[y^2]`` for a unit-variance Gaussian input.

    Accepts a :class:`QuantizerSpec` (its ``alpha`` field is ignored) or a
    ``(bits, step)`` pair.
    """
    if isinstance(spec, QuantizerSpec):
        bits, step = spec.bits, spec.step
    else:
        bits, step = spec
        QuantizerSpec(bits, step)
    levels, _, m1, _ = _cell_moments(bits, step)
    alpha = 1.0 - float(np.sum(levels * m1))
    return min(max(alpha, 0.0), math.nextafter(1.0, 0.0))


def _min_mse_step(bits):
    # Optimal loading grows like sqrt(2 ln L); search log(step) around it.
    centre = 2.0 * math.sqrt(2.0 * math.log(2.0 ** bits) + 1.0) / 2 ** bits
    lo, hi = math.log(centre / 4.0), math.log(centre * 4.0)
    res = minimize_scalar(
        lambda t: quantizer_mse(bits, math.exp(t)),
        bounds=(lo, hi),
        method="bounded",
        options={"xatol": 1e-10, "maxiter": 500},
    )
    return math.exp(res.x)


def design_uniform_quantizer(bits: int) -> QuantizerSpec:
    """Min-MSE mid-rise uniform quantizer for zero-mean unit-variance Gaussian input."""
    _check_bits(bits)
    step = _min_mse_step(bits)
    return QuantizerSpec(bits=bits, step=step, alpha=estimate_alpha((bits, step)))


def lloyd_max_alpha(bits: int, iterations: int = 20000, tol: float = 1e-13) -> float:
    """Inverse coding gain of the Lloyd-Max (non-uniform) Gaussian quantizer.

    Not used on the main path; kept for comparison with published AQNM
    tables, which are computed for this quantizer family.
    """
    _check_bits(bits)
    levels = design_uniform_quantizer(bits).levels()
    for _ in range(iterations):
        thr = 0.5 * (levels[1:] + levels[:-1])
        edges = np.concatenate(([-np.inf], thr, [np.inf]))
        p = ndtr(edges[1:]) - ndtr(edges[:-1])
        new = (_pdf(edges[:-1]) - _pdf(edges[1:])) / p
        if np.max(np.abs(new - levels)) < tol:
            levels = new
            break
        levels = new
    thr = 0.5 * (levels[1:] + levels[:-1])
    edges = np.concatenate(([-np.inf], thr, [np.inf]))
    m1 = _pdf(edges[:-1]) - _pdf(edges[1:])
    return 1.0 - float(np.sum(levels * m1))


def _as_block(block):
    arr = np.asarray(block)
    if arr.size and not np.all(np.isfinite(arr)):
        raise InvalidInputError("sample block contains NaN or Inf")
    return arr.astype(np.complex128, copy=False)


def quantize(spec: QuantizerSpec, block, input_rms: float) -> np.ndarray:
    """Quantize complex samples with ideal AGC.

    ``input_rms`` is the complex RMS ``sqrt(E|y|^2)``.  Each real dimension
    is scaled to unit variance, quantized independently, and scaled back.
    """
    if not (input_rms > 0 and math.isfinite(input_rms)):
        raise InvalidArgumentError(f"input_rms must be positive, got {input_rms!r}")
    y = _as_block(block)
    shape = y.shape
    flat = y.ravel()
    scale = input_rms / math.sqrt(2.0)
    re = kernels.quantize_midrise(flat.real / scale, spec.step, spec.n_levels)
    im = kernels.quantize_midrise(flat.imag / scale, spec.step, spec.n_levels)
    return ((re + 1j * im) * scale).reshape(shape)


def quantization_noise_variance(link: LinkBudget, alpha: float) -> float:
    """Per-antenna AQN variance ``alpha (1 - alpha) (E_s + sigma_z^2 + sigma_n^2)``."""
    _check_alpha(alpha)
    return alpha * (1.0 - alpha) * link.input_energy


def sinr_from_gamma(gamma_bf, alpha, g_ue):
    """Vectorised effective SINR from the unquantized post-BF SINR.

    ``(1 - alpha) gamma / (1 + (alpha / G_UE) gamma)``; used by the system
    simulator on whole arrays.
    """
    gamma_bf = np.asarray(gamma_bf, dtype=float)
    g_ue = np.asarray(g_ue, dtype=float)
    with np.errstate(invalid="ignore", over="ignore"):
        out = (1.0 - alpha) * gamma_bf / (1.0 + (alpha / g_ue) * gamma_bf)
    if alpha > 0:
        out = np.where(np.isinf(gamma_bf), g_ue * (1.0 - alpha) / alpha, out)
    return out


def effective_sinr(link: LinkBudget, alpha: float) -> float:
    """Post-beamforming SINR with quantization, linear scale."""
    _check_alpha(alpha)
    gamma = link.gamma_bf
    if math.isinf(gamma):
        if alpha == 0:
            raise InfiniteSinrError("no noise or interference and infinite resolution")
        return high_snr_limit(alpha, link.g_ue)
    return (1.0 - alpha) * gamma / (1.0 + (alpha / link.g_ue) * gamma)


def low_snr_approx(gamma_bf: float, alpha: float) -> float:
    if gamma_bf < 0:
        raise InvalidArgumentError("gamma_bf must be >= 0")
    return (1.0 - alpha) * gamma_bf


def high_snr_limit(alpha: float, g_ue: float) -> float:
    """SINR ceiling ``G_UE (1 - alpha) / alpha`` reached as gamma_bf -> inf."""
    if alpha == 0:
        raise InfiniteSinrError("infinite resolution has no SINR ceiling")
    _check_alpha(alpha)
    if g_ue < 1:
        raise InvalidArgumentError("g_ue must be >= 1")
    return g_ue * (1.0 - alpha) / alpha


def _db(x):
    return 10.0 * np.log10(x)


def fit_alpha(pairs: Iterable[Sequence[float]], g_ue: float = 1.0) -> float:
    """Least-squares fit of alpha to measured (input SNR, output SNR) pairs, in dB.

    The objective is one-dimensional, so a log-spaced grid locates the basin
    and a bounded Brent search refines it.
    """
    data = np.asarray(list(pairs), dtype=float)
    if data.ndim != 2 or data.shape[1] != 2 or data.shape[0] < 3:
        raise FitError("need at least 3 (input_snr_db, output_snr_db) pairs")
    if not np.all(np.isfinite(data)):
        raise FitError("pairs must be finite")
    x_db, y_db = data[:, 0], data[:, 1]
    if np.ptp(x_db) < 10.0:
        raise FitError("input SNRs must span at least 10 dB")
    gamma = 10.0 ** (x_db / 10.0)

    def cost(alpha):
        pred = (1.0 - alpha) * gamma / (1.0 + (alpha / g_ue) * gamma)
        return float(np.sum((_db(pred) - y_db) ** 2))

    grid = np.concatenate(([0.0], np.logspace(-9, math.log10(0.999), 400)))
    costs = np.array([cost(a) for a in grid])
    i = int(np.argmin(costs))
    lo = grid[max(i - 1, 0)]
    hi = grid[min(i + 1, grid.size - 1)]
    res = minimize_scalar(cost, bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
    best = res.x if res.fun <= costs[i] else grid[i]
    return float(best)


def analytic_alpha_table(bits_list) -> dict:
    """``{bits: alpha}`` for the min-MSE uniform design; ``None``/inf map to 0."""
    out = {}
    for b in bits_list:
        if b is None or (isinstance(b, float) and math.isinf(b)):
            out[b] = 0.0
        else:
            out[b] = design_uniform_quantizer(int(b)).alpha
    return out
