"""Downlink multicell Monte Carlo with low-resolution receivers.

Each drop places UEs on the torus layout, associates them, forms long-term
beams on the serving links and accumulates white per-antenna interference
from every other active sector.  The unquantized post-BF SINR is then
mapped through the AQN formula for each ADC resolution, and through a
capped, overhead-adjusted Shannon formula to a per-UE rate.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels
from .aqnm import design_uniform_quantizer, lloyd_max_alpha, sinr_from_gamma
from .errors import ConfigError, InvalidArgumentError
from .geometry import (
    OUTAGE,
    ChannelConfig,
    SiteLayout,
    dbm_to_mw,
    direction_cosines,
    drop_ues,
    expand_subpaths,
    generate_layout,
    geometric_angles,
    longterm_beams,
    sample_clusters,
    sample_pathloss,
    sector_gain,
    wrap_angle,
)

INF_BITS = math.inf
ALPHA_MODES = ("analytic", "lloyd-max", "fitted")
COLUMNS = ("drop", "ue_id", "bits", "gamma_bf_db", "gamma_q_db", "rate_mbps")


@dataclass(frozen=True)
class SimConfig:
    channel: ChannelConfig = field(default_factory=ChannelConfig)
    bits_list: tuple = (2, 3, 4, 5, 6, INF_BITS)
    drops: int = 50
    overhead: float = 0.2
    shannon_loss_db: float = 3.0
    max_spec_eff: float = 5.5
    base_seed: int = 0
    alpha_mode: str = "analytic"
    fitted_alpha: tuple = ()  # ((bits, alpha), ...) used when alpha_mode == "fitted"
    layout_offset_m: tuple = (0.0, 0.0)

    def validate(self):
        problems = []
        if not 0 <= self.overhead < 1:
            problems.append("overhead must lie in [0, 1)")
        if not self.max_spec_eff > 0:
            problems.append("max_spec_eff must be positive")
        if self.drops < 1:
            problems.append("drops must be >= 1")
        if not self.bits_list:
            problems.append("bits_list must be nonempty")
        for b in self.bits_list:
            if not (math.isinf(b) or (float(b).is_integer() and 1 <= b <= 16)):
                problems.append(f"invalid resolution {b!r}")
        if self.alpha_mode not in ALPHA_MODES:
            problems.append(f"alpha_mode must be one of {ALPHA_MODES}")
        if self.alpha_mode == "fitted":
            have = {float(b) for b, _ in self.fitted_alpha}
            missing = [b for b in self.bits_list if not math.isinf(b) and float(b) not in have]
            if missing:
                problems.append(f"fitted_alpha lacks values for bits {missing}")
        if problems:
            raise ConfigError(problems)
        return self

    @property
    def bandwidth_hz(self):
        return self.channel.bandwidth_hz

    def alphas(self) -> dict:
        table = {float(b): float(a) for b, a in self.fitted_alpha}
        out = {}
        for b in self.bits_list:
            if math.isinf(b):
                out[b] = 0.0
            elif self.alpha_mode == "analytic":
                out[b] = design_uniform_quantizer(int(b)).alpha
            elif self.alpha_mode == "lloyd-max":
                out[b] = lloyd_max_alpha(int(b))
            else:
                out[b] = table[float(b)]
        return out


def rate_map(gamma_q, config: SimConfig, bandwidth_hz=None):
    """Per-UE rate in Mbps from linear SINR.

    ``(1 - overhead) * W * min(rho, log2(1 + gamma * 10**(-loss/10)))``.
    """
    w = config.bandwidth_hz if bandwidth_hz is None else bandwidth_hz
    g = np.asarray(gamma_q, dtype=float)
    if np.any(g < 0):
        raise InvalidArgumentError("gamma_q must be >= 0")
    loss = 10.0 ** (-config.shannon_loss_db / 10.0)
    se = np.minimum(config.max_spec_eff, np.log2(1.0 + g * loss))
    return (1.0 - config.overhead) * np.asarray(w, dtype=float) * se / 1e6


@dataclass
class DropResult:
    """Per-UE link quantities for one drop plus the rows derived from them."""

    drop: int
    gamma_bf: np.ndarray  # linear; nan for outage UEs
    g_ue: np.ndarray
    bandwidth_hz: np.ndarray
    outage: np.ndarray
    rows: dict  # column -> array, one row per (UE, bits)

    @property
    def n_ues(self) -> int:
        return self.gamma_bf.shape[0]


@dataclass
class LinkBudgets:
    es_mw: np.ndarray
    sigma_z2_mw: np.ndarray
    sigma_n2_mw: float
    g_bs: np.ndarray
    g_ue: np.ndarray
    serving_sector: np.ndarray
    outage: np.ndarray
    bandwidth_hz: np.ndarray

    @property
    def gamma_bf(self):
        with np.errstate(invalid="ignore", divide="ignore"):
            g = self.g_ue * self.es_mw / (self.sigma_n2_mw + self.sigma_z2_mw)
        return np.where(self.outage, np.nan, g)


_LAYOUT_CACHE: dict = {}


def _layout(cfg: SimConfig) -> SiteLayout:
    key = (cfg.channel.cell_radius_m, cfg.channel.area_m, tuple(cfg.layout_offset_m))
    if key not in _LAYOUT_CACHE:
        _LAYOUT_CACHE[key] = generate_layout(cfg.channel, offset=cfg.layout_offset_m)
    return _LAYOUT_CACHE[key]


def drop_link_budgets(config: SimConfig, drop_index: int) -> LinkBudgets:
    """Geometry, association, beams and interference for one drop."""
    ch = config.channel
    layout = _layout(config)
    rng = np.random.default_rng(config.base_seed + drop_index)
    ues = drop_ues(layout, ch.mean_ues_per_sector, rng, ch.min_distance_m,
                   math.radians(ch.sector_width_deg))
    S, U, nsec = layout.n_sites, ues.n, layout.sectors_per_site

    delta = layout.wrap(ues.positions[None, :, :] - layout.sites[:, None, :])  # (S, U, 2)
    aod_az, aod_el, aoa_az, aoa_el, d2d = geometric_angles(delta, ch)
    cls, pl, _ = sample_pathloss(d2d, rng, ch)  # (S, U)

    bores = np.asarray(layout.boresights)
    rel_az = wrap_angle(aod_az[:, None, :] - bores[None, :, None])  # (S, 3, U)
    gain = sector_gain(rel_az, ch)
    with np.errstate(divide="ignore"):
        eff = pl[:, None, :] - 10.0 * np.log10(gain)
    eff = eff.reshape(S * nsec, U)
    serving = np.argmin(eff, axis=0)
    outage = ~np.isfinite(eff[serving, np.arange(U)])
    site = serving // nsec
    ue_idx = np.arange(U)

    srv_pl = pl[site, ue_idx]
    srv_rel = rel_az.reshape(S * nsec, U)[serving, ue_idx]
    p, ba, be, ua, uel = expand_subpaths(rng, sample_clusters(
        rng, (srv_rel, aod_el[site, ue_idx]),
        (wrap_angle(aoa_az[site, ue_idx] - ues.orientation), aoa_el[site, ue_idx]), ch), ch)
    w_bs, _, g_bs, g_ue = longterm_beams(p, ba, be, ua, uel, ch.bs_array, ch.ue_array)

    srv_gain = gain.reshape(S * nsec, U)[serving, ue_idx]
    es = np.where(outage, 0.0, dbm_to_mw(ch.tx_power_dbm - np.where(outage, 0.0, srv_pl)) * srv_gain * g_bs)

    # one scheduled UE per sector transmits; its beam is what others see
    attached = np.where(outage, -1, serving)
    n_att = np.bincount(attached[attached >= 0], minlength=S * nsec)
    pick = rng.random(U)
    active_ue = np.full(S * nsec, -1)
    for sec in np.flatnonzero(n_att):
        members = np.flatnonzero(attached == sec)
        active_ue[sec] = members[int(pick[members[0]] * members.size) % members.size]
    active = np.flatnonzero(active_ue >= 0)

    # victim/interferer pairs that are not in outage and not the own sector
    sec_site = active // nsec
    vis = np.isfinite(pl[sec_site])  # (A, U)
    vis &= active[:, None] != serving[None, :]
    vis &= ~outage[None, :]
    ai, vi = np.nonzero(vis)
    sec = active[ai]
    s_site = sec // nsec
    rel = wrap_angle(aod_az[s_site, vi] - bores[sec % nsec])
    contrib = dbm_to_mw(ch.tx_power_dbm - pl[s_site, vi]) * sector_gain(rel, ch)
    if ch.interference_mode == "array-factor":
        u, v = direction_cosines(rel, aod_el[s_site, vi])
        beams = w_bs[active_ue[active]].reshape(-1, ch.bs_array.rows, ch.bs_array.cols)
        contrib = contrib * ch.bs_array.n * kernels.array_gain(
            beams, ai, u, v, ch.bs_array.element_spacing)
    sigma_z2 = np.bincount(vi, weights=contrib, minlength=U)

    bw = np.where(outage, 0.0, ch.bandwidth_hz / np.maximum(n_att[np.maximum(attached, 0)], 1))
    return LinkBudgets(
        es_mw=es, sigma_z2_mw=sigma_z2, sigma_n2_mw=float(dbm_to_mw(ch.noise_power_dbm)),
        g_bs=np.where(outage, np.nan, g_bs), g_ue=np.where(outage, np.nan, g_ue),
        serving_sector=np.where(outage, -1, serving), outage=outage, bandwidth_hz=bw,
    )


def _db(x):
    with np.errstate(divide="ignore", invalid="ignore"):
        return 10.0 * np.log10(x)


def run_drop(config: SimConfig, drop_index: int, alphas: dict | None = None) -> DropResult:
    """One Monte-Carlo drop: per-UE SINR and rate for every resolution."""
    config.validate()
    alphas = alphas if alphas is not None else config.alphas()
    lb = drop_link_budgets(config, drop_index)
    gamma = lb.gamma_bf
    U = gamma.shape[0]
    cols = {c: [] for c in COLUMNS}
    for b in config.bits_list:
        a = alphas[b]
        if a == 0.0:
            gq = gamma.copy()
        else:
            gq = sinr_from_gamma(gamma, a, lb.g_ue)
        rate = np.where(lb.outage, 0.0, rate_map(np.nan_to_num(gq), config, lb.bandwidth_hz))
        cols["drop"].append(np.full(U, drop_index))
        cols["ue_id"].append(np.arange(U))
        cols["bits"].append(np.full(U, float(b)))
        cols["gamma_bf_db"].append(_db(gamma))
        cols["gamma_q_db"].append(_db(gq))
        cols["rate_mbps"].append(rate)
    rows = {c: np.concatenate(v) for c, v in cols.items()}
    return DropResult(drop=drop_index, gamma_bf=gamma, g_ue=lb.g_ue,
                      bandwidth_hz=lb.bandwidth_hz, outage=lb.outage, rows=rows)


def _run_one(args):
    config, drop_index, alphas = args
    return run_drop(config, drop_index, alphas)


def run_drops(config: SimConfig, workers: int = 1) -> list[DropResult]:
    """All drops, optionally in a process pool; output order is by drop index."""
    config.validate()
    alphas = config.alphas()
    jobs = [(config, d, alphas) for d in range(config.drops)]
    if workers <= 1:
        return [_run_one(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_one, jobs))


@dataclass
class ResultTable:
    rows: dict  # column -> array, sorted by (drop, ue_id, bits)
    outage_count: int
    n_ues: int

    def select(self, bits):
        m = self.rows["bits"] == float(bits)
        return {c: v[m] for c, v in self.rows.items()}

    @property
    def bits_values(self):
        return sorted(set(self.rows["bits"].tolist()))


PERCENTILES = (10, 50, 90)


def empirical_cdf(values):
    v = np.sort(np.asarray(values, dtype=float))
    return v, np.arange(1, v.size + 1) / v.size


def aggregate(partials) -> tuple[ResultTable, dict]:
    """Merge drop results (any order) into one table and a percentile summary.

    Outage UEs are kept as rate-0 rows but left out of SINR statistics.
    """
    partials = list(partials)
    if not partials:
        raise InvalidArgumentError("aggregate needs at least one partial result")
    cat = {c: np.concatenate([p.rows[c] for p in partials]) for c in COLUMNS}
    order = np.lexsort((cat["bits"], cat["ue_id"], cat["drop"]))
    rows = {c: v[order] for c, v in cat.items()}
    outages = sum(int(p.outage.sum()) for p in partials)
    table = ResultTable(rows=rows, outage_count=outages, n_ues=sum(p.n_ues for p in partials))
    return table, summarize(table)


def _label(b):
    return "inf" if math.isinf(b) else str(int(b))


def summarize(table: ResultTable) -> dict:
    per_bits = {}
    for b in table.bits_values:
        sel = table.select(b)
        sinr = sel["gamma_q_db"][np.isfinite(sel["gamma_q_db"])]
        entry = {}
        for q in PERCENTILES:
            entry[f"p{q}_sinr_db"] = float(np.percentile(sinr, q)) if sinr.size else math.nan
            entry[f"p{q}_rate_mbps"] = float(np.percentile(sel["rate_mbps"], q))
        per_bits[b] = entry
    ref = per_bits.get(INF_BITS)
    summary = {}
    for b, entry in per_bits.items():
        if ref is not None:
            entry["delta_vs_inf"] = {
                f"p{q}_sinr_db": ref[f"p{q}_sinr_db"] - entry[f"p{q}_sinr_db"] for q in PERCENTILES
            } | {
                f"p{q}_rate_mbps": ref[f"p{q}_rate_mbps"] - entry[f"p{q}_rate_mbps"] for q in PERCENTILES
            }
        summary[_label(b)] = entry
    summary["_meta"] = {"n_ues": table.n_ues, "outage_ues": table.outage_count}
    return summary


def cdf_rows(table: ResultTable, column: str):
    """``(bits_label, value, cdf)`` triples per resolution, ready for CSV."""
    out = []
    for b in table.bits_values:
        vals = table.select(b)[column]
        vals = vals[np.isfinite(vals)]
        v, f = empirical_cdf(vals)
        out.extend((_label(b), float(x), float(y)) for x, y in zip(v, f))
    return out
