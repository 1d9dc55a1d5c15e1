"""Single-link OFDM simulator used to check the AQN model against true quantization.

One slot is a reference OFDM symbol (known QPSK pilots on every used
subcarrier) followed by data symbols.  The receiver band-selects the used
subcarriers, samples them with an ideal-AGC n-bit ADC, runs least-squares
channel estimation from the reference symbol, equalizes with one tap per
subcarrier and scores EVM against the transmitted symbols.

Two ADC placements are supported.  ``adc_rate="critical"`` (default)
samples the band-limited useful symbol at the occupied bandwidth, so all
quantization distortion stays in band.  ``adc_rate="fft"`` quantizes the
full ``fft_size``-rate waveform including the cyclic prefix; the fraction
``1 - used/fft`` of the distortion then lands in unused bins.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .aqnm import QuantizerSpec, design_uniform_quantizer, quantize
from .errors import InvalidArgumentError, ProtocolError

CP_TYPES = ("type0", "type1")
ADC_RATES = ("critical", "fft")


@dataclass(frozen=True)
class OfdmNumerology:
    used_bandwidth: float = 90e6
    fft_size: int = 2048
    subcarrier_spacing: float = 75e3
    used_subcarriers: int = 1200
    cp_type: str = "type0"
    symbol_duration: dict = field(
        default_factory=lambda: {"type0": 14.3750, "type1": 14.2708}
    )  # microseconds, per CP type
    slot_duration: float = 100.0  # microseconds
    pilot_group: int = 1200  # LS estimates averaged per group; full band by default
    adc_rate: str = "critical"

    def __post_init__(self):
        if self.cp_type not in CP_TYPES:
            raise InvalidArgumentError(f"cp_type must be one of {CP_TYPES}")
        if self.adc_rate not in ADC_RATES:
            raise InvalidArgumentError(f"adc_rate must be one of {ADC_RATES}")
        if self.used_subcarriers > self.fft_size or self.used_subcarriers % 2:
            raise InvalidArgumentError("used_subcarriers must be even and <= fft_size")
        if self.subcarrier_spacing * self.fft_size < self.used_bandwidth:
            raise InvalidArgumentError("fft_size * subcarrier_spacing must cover used_bandwidth")
        if self.pilot_group < 1 or self.used_subcarriers % self.pilot_group:
            raise InvalidArgumentError("pilot_group must divide used_subcarriers")
        if self.symbols_per_slot < 2:
            raise InvalidArgumentError("slot must hold a reference and at least one data symbol")

    @property
    def sample_rate(self) -> float:
        return self.fft_size * self.subcarrier_spacing

    @property
    def cp_length(self) -> int:
        useful = 1e6 / self.subcarrier_spacing
        return int(round((self.symbol_duration[self.cp_type] - useful) * 1e-6 * self.sample_rate))

    @property
    def symbols_per_slot(self) -> int:
        sym = self.symbol_duration[self.cp_type]
        return int(math.floor(self.slot_duration / sym + 1e-9))

    @property
    def occupancy(self) -> float:
        return self.used_subcarriers / self.fft_size

    def used_bins(self) -> np.ndarray:
        """FFT bin indices of the used subcarriers, in ascending frequency.

        The occupied block is contiguous, ``-used/2 ... used/2 - 1``.
        """
        half = self.used_subcarriers // 2
        return np.arange(-half, half) % self.fft_size


@dataclass
class OfdmSlot:
    """Transmitted time samples plus the ground truth the receiver scores against."""

    samples: np.ndarray
    grid: np.ndarray  # (symbols, used_subcarriers) transmitted constellation points
    numerology: OfdmNumerology
    ref_index: int | None = 0


@dataclass(frozen=True)
class LinkMeasurement:
    input_snr_db: float
    bits: float  # math.inf for the unquantized chain
    post_eq_snr_db: float
    evm_rms: float
    seed: int


def _qpsk(rng, shape):
    re = rng.integers(0, 2, size=shape) * 2 - 1
    im = rng.integers(0, 2, size=shape) * 2 - 1
    return (re + 1j * im) / math.sqrt(2.0)


def build_slot(numerology: OfdmNumerology, rng_seed) -> OfdmSlot:
    """One slot: symbol 0 is the reference, the rest carry random QPSK data."""
    rng = np.random.default_rng(rng_seed)
    nsym = numerology.symbols_per_slot
    n = numerology.fft_size
    grid = _qpsk(rng, (nsym, numerology.used_subcarriers))
    freq = np.zeros((nsym, n), dtype=np.complex128)
    freq[:, numerology.used_bins()] = grid
    # unitary IDFT: per-bin power 1 -> per-sample power used/fft
    time = np.fft.ifft(freq, axis=1, norm="ortho")
    cp = numerology.cp_length
    with_cp = np.concatenate((time[:, n - cp:], time), axis=1) if cp else time
    return OfdmSlot(samples=with_cp.ravel(), grid=grid, numerology=numerology, ref_index=0)


def awgn(block, snr_db: float, rng_seed, occupancy: float = 1.0, signal_power: float | None = None):
    """Add complex white Gaussian noise over the full sampled band.

    The noise level is set so that ``signal_power / (noise power falling in
    the occupied fraction of the band)`` equals ``snr_db``.  With
    ``occupancy=1`` this is the plain per-sample SNR.
    """
    x = np.asarray(block, dtype=np.complex128)
    if x.size == 0:
        raise InvalidArgumentError("block must be nonempty")
    if math.isinf(snr_db) and snr_db > 0:
        return x.copy()
    if signal_power is None:
        signal_power = float(np.mean(np.abs(x) ** 2))
    noise_var = signal_power / (occupancy * 10.0 ** (snr_db / 10.0))
    rng = np.random.default_rng(rng_seed)
    noise = rng.standard_normal((2,) + x.shape) * math.sqrt(noise_var / 2.0)
    return x + noise[0] + 1j * noise[1]


def slot_signal_power(numerology: OfdmNumerology) -> float:
    """Expected per-sample power of a slot from :func:`build_slot`."""
    return numerology.occupancy


def _demodulate(block, numerology):
    n, cp = numerology.fft_size, numerology.cp_length
    nsym = numerology.symbols_per_slot
    sym = np.asarray(block).reshape(nsym, n + cp)[:, cp:]
    return np.fft.fft(sym, axis=1, norm="ortho")[:, numerology.used_bins()]


def _critical_adc(bins, quant):
    """Quantize the band-limited symbols sampled at the occupied bandwidth.

    ``bins`` holds the used subcarriers in ascending frequency; their
    ``used``-point IDFT is the critically sampled ADC input.  The CP is not
    sampled: a memoryless quantizer acting on discarded samples cannot
    affect the kept ones.
    """
    x = np.fft.ifft(np.fft.ifftshift(bins, axes=1), axis=1, norm="ortho")
    rms = math.sqrt(float(np.mean(np.abs(x) ** 2)))
    xq = quantize(quant, x, rms)
    return np.fft.fftshift(np.fft.fft(xq, axis=1, norm="ortho"), axes=1)


def estimate_channel(ref_rx, ref_tx, group: int):
    """Per-subcarrier LS estimate, averaged over groups of ``group`` adjacent subcarriers."""
    ls = ref_rx / ref_tx
    if group == 1:
        return ls
    avg = ls.reshape(-1, group).mean(axis=1)
    return np.repeat(avg, group)


def receive_and_equalize(
    block,
    slot: OfdmSlot,
    quant: QuantizerSpec | None = None,
    *,
    input_snr_db: float = math.nan,
    seed: int = 0,
) -> LinkMeasurement:
    """Quantize (or bypass), demodulate, estimate, equalize and score one slot."""
    num = slot.numerology
    if slot.ref_index is None or slot.grid is None:
        raise ProtocolError("slot carries no reference symbol")
    y = np.asarray(block, dtype=np.complex128)
    if quant is not None and num.adc_rate == "fft":
        rms = math.sqrt(float(np.mean(np.abs(y) ** 2)))
        y = quantize(quant, y, rms)
    rx = _demodulate(y, num)
    if quant is not None and num.adc_rate == "critical":
        rx = _critical_adc(rx, quant)
    ref = slot.ref_index
    h = estimate_channel(rx[ref], slot.grid[ref], num.pilot_group)
    data = np.delete(np.arange(num.symbols_per_slot), ref)
    eq = rx[data] / h
    err = float(np.mean(np.abs(eq - slot.grid[data]) ** 2))
    evm = math.sqrt(err)
    bits = math.inf if quant is None else quant.bits
    return LinkMeasurement(
        input_snr_db=float(input_snr_db),
        bits=bits,
        post_eq_snr_db=-20.0 * math.log10(evm),
        evm_rms=evm,
        seed=int(seed),
    )


def _bits_key(b):
    if b is None or (isinstance(b, float) and math.isinf(b)):
        return math.inf
    return int(b)


def sweep(
    numerology: OfdmNumerology,
    bits_list: Sequence,
    snr_grid_db: Sequence[float],
    slots_per_point: int,
    seed: int,
    quantizers: dict | None = None,
) -> list[LinkMeasurement]:
    """Measure post-equalization SNR on a (bits x SNR) grid.

    Each slot index uses the same transmitted data and noise for every
    resolution, so curves for different ``bits`` share random numbers.
    EVM is averaged in the power domain over slots.  Rows are ordered by
    ``bits`` (in ``bits_list`` order) then SNR.
    """
    if not len(bits_list) or not len(snr_grid_db):
        raise InvalidArgumentError("bits_list and snr_grid_db must be nonempty")
    if slots_per_point < 1:
        raise InvalidArgumentError("slots_per_point must be >= 1")
    keys = [_bits_key(b) for b in bits_list]
    quantizers = dict(quantizers or {})
    for b in keys:
        if not math.isinf(b) and b not in quantizers:
            quantizers[b] = design_uniform_quantizer(b)
    power = slot_signal_power(numerology)
    acc = {(b, i): 0.0 for b in keys for i in range(len(snr_grid_db))}
    for i, snr in enumerate(snr_grid_db):
        for s in range(slots_per_point):
            tx_seed, noise_seed = np.random.SeedSequence([seed, i, s]).spawn(2)
            slot = build_slot(numerology, tx_seed)
            rx = awgn(slot.samples, snr, noise_seed, occupancy=numerology.occupancy,
                      signal_power=power)
            for b in keys:
                q = None if math.isinf(b) else quantizers[b]
                m = receive_and_equalize(rx, slot, q, input_snr_db=snr, seed=seed)
                acc[(b, i)] += m.evm_rms ** 2
    out = []
    for b in keys:
        for i, snr in enumerate(snr_grid_db):
            ms = acc[(b, i)] / slots_per_point
            out.append(LinkMeasurement(
                input_snr_db=float(snr),
                bits=b,
                post_eq_snr_db=-10.0 * math.log10(ms),
                evm_rms=math.sqrt(ms),
                seed=int(seed),
            ))
    return out
