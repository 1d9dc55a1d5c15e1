"""Receiver front-end power budgets for analog, hybrid and fully digital arrays.

Per-unit component powers reproduce the per-component entries of the
16-antenna comparison table below; ADC power follows ``P = c * f_s * 2**n``
per converter, two converters (I and Q) per digital chain.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass

from .errors import InvalidArgumentError

ARCH_KINDS = ("analog", "hybrid", "digital")

# Published 16-antenna comparison (mW): per-component entries and totals.
TABLE1_REFERENCE = {
    "analog": {"lna": 624.0, "ps": 312.0, "combiner": 19.5, "mixer": 16.8, "adc": 33.3, "total": 1005.8},
    "hybrid": {"lna": 624.0, "ps": 624.0, "combiner": 39.0, "mixer": 33.2, "adc": 66.6, "total": 1386.8},
    "digital-hi": {"lna": 624.0, "ps": 0.0, "combiner": 0.0, "mixer": 268.8, "adc": 532.5, "total": 1425.8},
    "digital-lo": {"lna": 624.0, "ps": 0.0, "combiner": 0.0, "mixer": 268.8, "adc": 33.3, "total": 926.1},
}

COMPONENTS = ("lna", "ps", "combiner", "mixer", "adc")


@dataclass(frozen=True)
class ComponentPowerDb:
    lna_mw: float = 39.0
    ps_mw: float = 19.5
    combiner_mw: float = 19.5
    mixer_mw: float = 16.8
    # The hybrid row lists 33.2 mW for two RF chains rather than 2 x 16.8.
    hybrid_mixer_mw: float = 16.6
    adc_fom_fj: float = 65.0
    sampling_rate_hz: float = 1e9

    def __post_init__(self):
        for name, value in vars(self).items():
            if not value > 0:
                raise InvalidArgumentError(f"{name} must be positive")


@dataclass(frozen=True)
class ArchitectureSpec:
    kind: str
    n_antennas: int = 16
    n_streams: int = 1
    adc_bits: int = 8

    def __post_init__(self):
        if self.kind not in ARCH_KINDS:
            raise InvalidArgumentError(f"kind must be one of {ARCH_KINDS}, got {self.kind!r}")
        if self.n_antennas < 1:
            raise InvalidArgumentError("n_antennas must be >= 1")
        if self.n_streams < 1:
            raise InvalidArgumentError("n_streams must be >= 1")
        if self.kind == "hybrid" and self.n_streams > self.n_antennas:
            raise InvalidArgumentError("hybrid needs n_streams <= n_antennas")
        if self.adc_bits < 1:
            raise InvalidArgumentError("adc_bits must be >= 1")


@dataclass(frozen=True)
class PowerBudget:
    arch: ArchitectureSpec
    items: dict  # component -> mW

    @property
    def total_mw(self) -> float:
        return sum(self.items[c] for c in COMPONENTS)


def adc_power(db: ComponentPowerDb, bits: int) -> float:
    """Power of one ADC in mW: ``c * f_s * 2**bits``."""
    if bits < 1:
        raise InvalidArgumentError("bits must be >= 1")
    return db.adc_fom_fj * 1e-15 * db.sampling_rate_hz * 2.0**bits * 1e3


def frontend_budget(arch: ArchitectureSpec, db: ComponentPowerDb | None = None) -> PowerBudget:
    """Itemized receive front-end power for one architecture."""
    db = db or ComponentPowerDb()
    n = arch.n_antennas
    if arch.kind == "analog":
        chains, ps, comb, mixer = 1, n, 1, db.mixer_mw
    elif arch.kind == "hybrid":
        k = arch.n_streams
        chains, ps, comb, mixer = k, k * n, k, k * db.hybrid_mixer_mw
    else:
        if arch.n_streams != 1:
            raise InvalidArgumentError("n_streams applies to hybrid only")
        chains, ps, comb, mixer = n, 0, 0, n * db.mixer_mw
    items = {
        "lna": n * db.lna_mw,
        "ps": ps * db.ps_mw,
        "combiner": comb * db.combiner_mw,
        "mixer": mixer,
        "adc": 2 * chains * adc_power(db, arch.adc_bits),
    }
    return PowerBudget(arch=arch, items=items)


def table1_architectures(n_antennas: int = 16, digital_lo_bits: int = 4):
    """The four rows of the comparison table, keyed by CLI name."""
    return {
        "analog": ArchitectureSpec("analog", n_antennas, 1, 8),
        "hybrid": ArchitectureSpec("hybrid", n_antennas, 2, 8),
        "digital-hi": ArchitectureSpec("digital", n_antennas, 1, 8),
        "digital-lo": ArchitectureSpec("digital", n_antennas, 1, digital_lo_bits),
    }


_HEADER = ["BF", "LNA", "PS", "Comb.", "Mixer", "ADC bits", "ADC", "Total"]


def _row(name, budget):
    it = budget.items
    return [name, it["lna"], it["ps"], it["combiner"], it["mixer"],
            budget.arch.adc_bits, it["adc"], budget.total_mw]


def format_table(budgets: dict) -> str:
    """Aligned text table, one row per architecture, values to 0.1 mW."""
    rows = [_HEADER]
    for name, b in budgets.items():
        r = _row(name, b)
        rows.append([r[0]] + [f"{v:.1f}" if isinstance(v, float) else str(v) for v in r[1:]])
    widths = [max(len(r[i]) for r in rows) for i in range(len(_HEADER))]
    lines = ["  ".join(c.ljust(w) if i == 0 else c.rjust(w) for i, (c, w) in enumerate(zip(r, widths)))
             for r in rows]
    return "\n".join(lines)


def table_csv(budgets: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["arch", "lna_mw", "ps_mw", "combiner_mw", "mixer_mw", "adc_bits", "adc_mw", "total_mw"])
    for name, b in budgets.items():
        r = _row(name, b)
        w.writerow([r[0]] + [f"{v:.6g}" for v in r[1:]])
    return buf.getvalue()
