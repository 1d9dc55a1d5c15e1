"""Multicell geometry and propagation.

Hexagonal three-sector sites on a torus (wraparound), Poisson UE drops,
distance-dependent LOS/NLOS/outage path loss, planar-array steering
vectors and long-term (covariance-based) beam pairs under a few-cluster
channel model.

Coordinates are metres, angles radians.  Azimuth is measured
counter-clockwise from +x; a planar array's boresight is its local
azimuth 0, elevation 0.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgumentError, NoBeamError

LOS, NLOS, OUTAGE = 0, 1, 2
SPEED_OF_LIGHT = 299_792_458.0
BOLTZMANN_DBM_HZ = -174.0


@dataclass(frozen=True)
class ArrayGeometry:
    rows: int
    cols: int
    element_spacing: float = 0.5  # wavelengths

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise InvalidArgumentError("array needs at least one row and one column")
        if not self.element_spacing > 0:
            raise InvalidArgumentError("element_spacing must be positive")

    @property
    def n(self) -> int:
        return self.rows * self.cols


BS_ARRAY = ArrayGeometry(8, 8)
UE_ARRAY = ArrayGeometry(4, 4)


@dataclass(frozen=True)
class ChannelConfig:
    """Propagation and deployment parameters (28 GHz urban defaults)."""

    cell_radius_m: float = 100.0
    area_m: float = 2000.0
    carrier_ghz: float = 28.0
    tx_power_dbm: float = 30.0
    noise_figure_db: float = 7.0
    bandwidth_hz: float = 1e9
    bs_array: ArrayGeometry = BS_ARRAY
    ue_array: ArrayGeometry = UE_ARRAY
    bs_height_m: float = 10.0
    ue_height_m: float = 1.5
    min_distance_m: float = 10.0
    mean_ues_per_sector: float = 10.0
    # PL = a + 10 b log10(d) + N(0, sigma^2)
    los_a: float = 61.4
    los_b: float = 2.0
    los_sigma_db: float = 5.8
    nlos_a: float = 72.0
    nlos_b: float = 2.92
    nlos_sigma_db: float = 8.7
    # p_out = max(0, 1 - exp(-d/outage_scale_m + outage_offset)),
    # p_los = (1 - p_out) exp(-d/los_scale_m)
    outage_scale_m: float = 30.0
    outage_offset: float = 5.2
    los_scale_m: float = 67.1
    cluster_min: int = 1
    cluster_max: int = 4
    cluster_power_sigma_db: float = 4.0
    elevation_spread_deg: float = 5.0
    # intra-cluster rays; subpaths=1 with zero spreads gives specular clusters
    subpaths_per_cluster: int = 1
    bs_az_spread_deg: float = 10.2
    bs_el_spread_deg: float = 0.0
    ue_az_spread_deg: float = 15.5
    ue_el_spread_deg: float = 6.0
    sector_width_deg: float = 120.0
    sector_backlobe_db: float = 30.0
    interference_mode: str = "array-factor"

    def __post_init__(self):
        if not (self.cell_radius_m > 0 and self.area_m > 0):
            raise InvalidArgumentError("cell_radius_m and area_m must be positive")
        if self.cell_radius_m > self.area_m:
            raise InvalidArgumentError("cell radius larger than simulation area")
        if not 1 <= self.cluster_min <= self.cluster_max:
            raise InvalidArgumentError("need 1 <= cluster_min <= cluster_max")
        if self.interference_mode not in ("array-factor", "fixed-gain"):
            raise InvalidArgumentError("interference_mode must be 'array-factor' or 'fixed-gain'")
        if not self.mean_ues_per_sector >= 1:
            raise InvalidArgumentError("mean_ues_per_sector must be >= 1")

    @property
    def noise_power_dbm(self) -> float:
        """Thermal noise over the full bandwidth, per receive antenna."""
        return BOLTZMANN_DBM_HZ + 10.0 * math.log10(self.bandwidth_hz) + self.noise_figure_db


@dataclass(frozen=True)
class SiteLayout:
    sites: np.ndarray  # (S, 2)
    width: float
    height: float
    cell_radius_m: float
    boresights: tuple = (0.0, 2.0 * math.pi / 3.0, 4.0 * math.pi / 3.0)

    @property
    def n_sites(self) -> int:
        return self.sites.shape[0]

    @property
    def sectors_per_site(self) -> int:
        return len(self.boresights)

    @property
    def n_sectors(self) -> int:
        return self.n_sites * self.sectors_per_site

    @property
    def lattice_vectors(self):
        isd = math.sqrt(3.0) * self.cell_radius_m
        return np.array([isd, 0.0]), np.array([isd / 2.0, 1.5 * self.cell_radius_m])

    def wrap(self, delta):
        """Minimum-image displacement on the torus."""
        delta = np.asarray(delta, dtype=float)
        size = np.array([self.width, self.height])
        return delta - size * np.round(delta / size)

    def sector_site(self, sector):
        return np.asarray(sector) // self.sectors_per_site

    def sector_boresight(self, sector):
        return np.asarray(self.boresights)[np.asarray(sector) % self.sectors_per_site]


def generate_layout(config: ChannelConfig | None = None, offset=(0.0, 0.0)) -> SiteLayout:
    """Hexagonal site grid folded onto a torus close to ``area_m`` per side.

    The torus sides are rounded to whole lattice periods (an even number of
    site rows) so the tessellation closes on itself.
    """
    cfg = config or ChannelConfig()
    r = cfg.cell_radius_m
    isd = math.sqrt(3.0) * r
    ncols = max(1, int(round(cfg.area_m / isd)))
    nrows = max(2, 2 * int(round(cfg.area_m / (1.5 * r) / 2.0)))
    width, height = ncols * isd, nrows * 1.5 * r
    rr, cc = np.meshgrid(np.arange(nrows), np.arange(ncols), indexing="ij")
    x = (cc + 0.5 + 0.5 * (rr % 2)) * isd + offset[0]
    y = (rr + 0.5) * 1.5 * r + offset[1]
    sites = np.stack([np.mod(x.ravel(), width), np.mod(y.ravel(), height)], axis=1)
    return SiteLayout(sites=sites, width=width, height=height, cell_radius_m=r)


@dataclass(frozen=True)
class UeDrop:
    positions: np.ndarray  # (U, 2)
    home_sector: np.ndarray  # sector each UE was dropped into
    orientation: np.ndarray  # UE array boresight azimuth

    @property
    def n(self) -> int:
        return self.positions.shape[0]


def _in_hexagon(x, y, r):
    apothem = r * math.sqrt(3.0) / 2.0
    inside = np.ones(x.shape, dtype=bool)
    for th in (0.0, math.pi / 3.0, 2.0 * math.pi / 3.0):
        inside &= np.abs(x * math.cos(th) + y * math.sin(th)) <= apothem
    return inside


def _sample_wedge(rng, count, r, half_width, min_distance):
    """Uniform points in the 0-azimuth sector of a hexagon of circumradius r."""
    out = np.empty((0, 2))
    while out.shape[0] < count:
        need = count - out.shape[0]
        pts = rng.uniform(-r, r, size=(max(16, int(need * 5)), 2))
        ang = np.arctan2(pts[:, 1], pts[:, 0])
        ok = (_in_hexagon(pts[:, 0], pts[:, 1], r)
              & (np.abs(ang) <= half_width)
              & (np.hypot(pts[:, 0], pts[:, 1]) >= min_distance))
        out = np.concatenate([out, pts[ok]])
    return out[:count]


def drop_ues(layout: SiteLayout, mean_ues_per_sector: float = 10.0, rng_seed=None,
             min_distance_m: float = 0.0, sector_width: float = 2.0 * math.pi / 3.0) -> UeDrop:
    """Poisson(mean) UEs per sector, uniform over the sector's share of its hexagon."""
    if mean_ues_per_sector < 1:
        raise InvalidArgumentError("mean_ues_per_sector must be >= 1")
    rng = np.random.default_rng(rng_seed)
    counts = rng.poisson(mean_ues_per_sector, size=layout.n_sectors)
    total = int(counts.sum())
    local = _sample_wedge(rng, total, layout.cell_radius_m, sector_width / 2.0, min_distance_m)
    home = np.repeat(np.arange(layout.n_sectors), counts)
    rot = layout.sector_boresight(home)
    c, s = np.cos(rot), np.sin(rot)
    pts = np.stack([c * local[:, 0] - s * local[:, 1], s * local[:, 0] + c * local[:, 1]], axis=1)
    pts += layout.sites[layout.sector_site(home)]
    pts[:, 0] = np.mod(pts[:, 0], layout.width)
    pts[:, 1] = np.mod(pts[:, 1], layout.height)
    orientation = rng.uniform(-math.pi, math.pi, size=total)
    return UeDrop(positions=pts, home_sector=home, orientation=orientation)


def wrap_angle(a):
    return np.mod(np.asarray(a) + math.pi, 2.0 * math.pi) - math.pi


def free_space_pathloss_db(d_m, carrier_ghz):
    return 20.0 * np.log10(4.0 * math.pi * np.asarray(d_m) * carrier_ghz * 1e9 / SPEED_OF_LIGHT)


def link_state_probabilities(d_m, cfg: ChannelConfig):
    """(p_los, p_nlos, p_outage) at 2D distance ``d_m``."""
    d = np.asarray(d_m, dtype=float)
    p_out = np.maximum(0.0, 1.0 - np.exp(-d / cfg.outage_scale_m + cfg.outage_offset))
    p_los = (1.0 - p_out) * np.exp(-d / cfg.los_scale_m)
    return p_los, 1.0 - p_out - p_los, p_out


def sample_pathloss(d2d, rng, cfg: ChannelConfig):
    """Draw link class, shadowing and path loss for an array of links.

    Returns ``(los_class, pathloss_db, shadowing_db)``; outage links get
    ``inf`` path loss.  Path loss is floored at free space.
    """
    d2d = np.asarray(d2d, dtype=float)
    dh = cfg.bs_height_m - cfg.ue_height_m
    d3 = np.sqrt(d2d**2 + dh**2)
    p_los, p_nlos, _ = link_state_probabilities(d2d, cfg)
    u = rng.random(d2d.shape)
    cls = np.where(u < p_los, LOS, np.where(u < p_los + p_nlos, NLOS, OUTAGE))
    z = rng.standard_normal(d2d.shape)
    logd = np.log10(d3)
    los = cls == LOS
    shadow = np.where(los, cfg.los_sigma_db, cfg.nlos_sigma_db) * z
    pl = np.where(los, cfg.los_a + 10.0 * cfg.los_b * logd, cfg.nlos_a + 10.0 * cfg.nlos_b * logd) + shadow
    pl = np.maximum(pl, free_space_pathloss_db(d3, cfg.carrier_ghz))
    pl = np.where(cls == OUTAGE, np.inf, pl)
    return cls, pl, np.where(cls == OUTAGE, 0.0, shadow)


@dataclass(frozen=True)
class ClusterSet:
    """Specular clusters of one BS-UE link; angles local to each array."""

    powers: np.ndarray  # (K,) summing to 1
    bs_az: np.ndarray
    bs_el: np.ndarray
    ue_az: np.ndarray
    ue_el: np.ndarray


@dataclass(frozen=True)
class LinkState:
    distance_m: float
    los_class: int
    pathloss_db: float
    aod: tuple  # (azimuth, elevation) at the BS, global azimuth
    aoa: tuple  # (azimuth, elevation) at the UE, global azimuth
    shadowing_db: float
    clusters: ClusterSet | None = None

    @property
    def outage(self) -> bool:
        return self.los_class == OUTAGE


def geometric_angles(delta_xy, cfg: ChannelConfig):
    """BS-to-UE displacement -> (aod_az, aod_el, aoa_az, aoa_el, d2d)."""
    delta = np.asarray(delta_xy, dtype=float)
    d2d = np.hypot(delta[..., 0], delta[..., 1])
    az = np.arctan2(delta[..., 1], delta[..., 0])
    el = np.arctan2(cfg.bs_height_m - cfg.ue_height_m, d2d)
    return az, -el, wrap_angle(az + math.pi), el, d2d


def sample_clusters(rng, aod_local, aoa_local, cfg: ChannelConfig, n=None):
    """Few-cluster model around the geometric path, batched over links.

    Cluster 0 sits on the geometric path.  Extra clusters take BS azimuths
    uniform over the sector width and UE azimuths uniform over the circle.
    Unused cluster slots (beyond each link's drawn count) get zero power.
    Returns arrays of shape (L, cluster_max).
    """
    aod_az, aod_el = (np.atleast_1d(np.asarray(a, dtype=float)) for a in aod_local)
    aoa_az, aoa_el = (np.atleast_1d(np.asarray(a, dtype=float)) for a in aoa_local)
    L, K = aod_az.shape[0], cfg.cluster_max
    count = rng.integers(cfg.cluster_min, cfg.cluster_max + 1, size=L)
    half = math.radians(cfg.sector_width_deg) / 2.0
    spread = math.radians(cfg.elevation_spread_deg)
    bs_az = rng.uniform(-half, half, size=(L, K))
    ue_az = rng.uniform(-math.pi, math.pi, size=(L, K))
    bs_el = aod_el[:, None] + rng.uniform(-spread, spread, size=(L, K))
    ue_el = aoa_el[:, None] + rng.uniform(-spread, spread, size=(L, K))
    bs_az[:, 0], ue_az[:, 0] = aod_az, aoa_az
    bs_el[:, 0], ue_el[:, 0] = aod_el, aoa_el
    p = 10.0 ** (cfg.cluster_power_sigma_db * rng.standard_normal((L, K)) / 10.0)
    p[np.arange(K)[None, :] >= count[:, None]] = 0.0
    p /= p.sum(axis=1, keepdims=True)
    return p, bs_az, bs_el, ue_az, ue_el


def expand_subpaths(rng, clusters, cfg: ChannelConfig):
    """Split each cluster into equal-power rays with Gaussian angular offsets.

    Input/outputs are ``(p, bs_az, bs_el, ue_az, ue_el)`` tuples of
    (L, K) arrays; output has ``K * subpaths_per_cluster`` columns.
    """
    m = cfg.subpaths_per_cluster
    if m <= 1:
        return clusters
    p, bs_az, bs_el, ue_az, ue_el = clusters
    L, K = p.shape

    def spread(centre, deg):
        rays = np.repeat(centre, m, axis=1)
        if deg > 0:
            rays = rays + math.radians(deg) * rng.standard_normal((L, K * m))
        return rays

    return (
        np.repeat(p / m, m, axis=1),
        spread(bs_az, cfg.bs_az_spread_deg), spread(bs_el, cfg.bs_el_spread_deg),
        spread(ue_az, cfg.ue_az_spread_deg), spread(ue_el, cfg.ue_el_spread_deg),
    )


def sample_link(bs_pos, ue_pos, rng, cfg: ChannelConfig | None = None,
                layout: SiteLayout | None = None, bs_boresight: float = 0.0,
                ue_orientation: float = 0.0) -> LinkState:
    """Draw one BS-UE link: class, path loss, geometric angles and clusters."""
    cfg = cfg or ChannelConfig()
    delta = np.asarray(ue_pos, dtype=float) - np.asarray(bs_pos, dtype=float)
    if layout is not None:
        delta = layout.wrap(delta)
    aod_az, aod_el, aoa_az, aoa_el, d2d = geometric_angles(delta, cfg)
    if not d2d > 0:
        raise InvalidArgumentError("BS and UE positions coincide")
    cls, pl, sh = sample_pathloss(np.array([d2d]), rng, cfg)
    clusters = None
    if cls[0] != OUTAGE:
        p, ba, be, ua, ue = expand_subpaths(rng, sample_clusters(
            rng, (wrap_angle(aod_az - bs_boresight), aod_el),
            (wrap_angle(aoa_az - ue_orientation), aoa_el), cfg), cfg)
        keep = p[0] > 0
        clusters = ClusterSet(p[0][keep], ba[0][keep], be[0][keep], ua[0][keep], ue[0][keep])
    return LinkState(
        distance_m=float(d2d), los_class=int(cls[0]), pathloss_db=float(pl[0]),
        aod=(float(aod_az), float(aod_el)), aoa=(float(aoa_az), float(aoa_el)),
        shadowing_db=float(sh[0]), clusters=clusters,
    )


def direction_cosines(azimuth, elevation):
    az, el = np.asarray(azimuth, dtype=float), np.asarray(elevation, dtype=float)
    return np.sin(az) * np.cos(el), np.sin(el)


def steering_vector(geom: ArrayGeometry, azimuth, elevation) -> np.ndarray:
    """Unit-norm planar-array response; trailing axis is the element index.

    Element (r, c) sits at column offset ``c`` (horizontal) and row offset
    ``r`` (vertical), flattened row-major.
    """
    u, v = direction_cosines(azimuth, elevation)
    k = 2.0 * math.pi * geom.element_spacing
    rows = np.arange(geom.rows)
    cols = np.arange(geom.cols)
    phase = k * (rows[:, None] * v[..., None, None] + cols[None, :] * u[..., None, None])
    a = np.exp(1j * phase) / math.sqrt(geom.n)
    return a.reshape(a.shape[:-2] + (geom.n,))


def _dominant(a, p):
    """Dominant eigenvectors of ``sum_k p_k a_k a_k^H`` for a batch of links.

    ``a``: (L, N, K), ``p``: (L, K).  The covariance has rank <= K, so its
    top eigenvector is ``A P^(1/2) u`` with ``u`` the top eigenvector of the
    K x K Gram matrix ``P^(1/2) A^H A P^(1/2)``.
    """
    sp = np.sqrt(p)
    gram = np.einsum("lk,lnk,lnj,lj->lkj", sp, a.conj(), a, sp)
    _, vecs = np.linalg.eigh(gram)
    top = vecs[..., -1]
    w = np.einsum("lnk,lk,lk->ln", a, sp, top)
    w /= np.linalg.norm(w, axis=1, keepdims=True)
    # fix the global phase: first element real positive
    ph = w[:, :1] / np.maximum(np.abs(w[:, :1]), 1e-300)
    return w * np.where(np.abs(w[:, :1]) > 0, ph.conj(), 1.0)


def longterm_beams(powers, bs_az, bs_el, ue_az, ue_el, bs_geom=BS_ARRAY, ue_geom=UE_ARRAY):
    """Batched long-term BF: returns ``(w_bs, w_ue, g_bs, g_ue)``.

    ``g_bs = N_BS sum_k p_k |a_k^H w_bs|^2`` is the per-receive-antenna
    energy gain of the transmit beam; ``g_ue`` is the ratio of
    post-combining to per-antenna signal energy.
    """
    p = np.atleast_2d(np.asarray(powers, dtype=float))
    a_bs = np.swapaxes(steering_vector(bs_geom, np.atleast_2d(bs_az), np.atleast_2d(bs_el)), 1, 2)
    a_ue = np.swapaxes(steering_vector(ue_geom, np.atleast_2d(ue_az), np.atleast_2d(ue_el)), 1, 2)
    w_bs = _dominant(a_bs, p)
    c = np.abs(np.einsum("lnk,ln->lk", a_bs.conj(), w_bs)) ** 2
    g_bs = bs_geom.n * np.sum(p * c, axis=1)
    q = p * c
    q /= q.sum(axis=1, keepdims=True)
    w_ue = _dominant(a_ue, q)
    d = np.abs(np.einsum("lnk,ln->lk", a_ue.conj(), w_ue)) ** 2
    g_ue = ue_geom.n * np.sum(q * d, axis=1)
    return w_bs, w_ue, g_bs, g_ue


def longterm_bf_pair(link: LinkState, bs_geom=BS_ARRAY, ue_geom=UE_ARRAY):
    """Unit-norm ``(w_bs, w_ue)`` from the link's long-term spatial covariances."""
    if link.outage or link.clusters is None:
        raise NoBeamError("link is in outage")
    c = link.clusters
    w_bs, w_ue, _, _ = longterm_beams(c.powers[None], c.bs_az[None], c.bs_el[None],
                                      c.ue_az[None], c.ue_el[None], bs_geom, ue_geom)
    return w_bs[0], w_ue[0]


def beam_gains(link: LinkState, w_bs, w_ue, bs_geom=BS_ARRAY, ue_geom=UE_ARRAY):
    """``(G_BS, G_UE)`` achieved by a beam pair on the link's clusters."""
    c = link.clusters
    a_bs = steering_vector(bs_geom, c.bs_az, c.bs_el)
    a_ue = steering_vector(ue_geom, c.ue_az, c.ue_el)
    cb = np.abs(a_bs.conj() @ w_bs) ** 2
    q = c.powers * cb
    g_bs = bs_geom.n * float(np.sum(q))
    g_ue = ue_geom.n * float(np.sum(q * np.abs(a_ue.conj() @ w_ue) ** 2) / np.sum(q))
    return g_bs, g_ue


def sector_gain(rel_azimuth, cfg: ChannelConfig):
    """Ideal sector pattern: 1 inside the sector width, backlobe outside (linear)."""
    half = math.radians(cfg.sector_width_deg) / 2.0
    inside = np.abs(wrap_angle(rel_azimuth)) <= half + 1e-12
    return np.where(inside, 1.0, 10.0 ** (-cfg.sector_backlobe_db / 10.0))


def dbm_to_mw(x):
    return 10.0 ** (np.asarray(x, dtype=float) / 10.0)


def link_gains(w_bs, link: LinkState, cfg: ChannelConfig, serving=True, victim_direction=None,
               bs_geom=BS_ARRAY, bs_boresight: float = 0.0):
    """Per-receive-antenna power (mW) a BS beam delivers to a UE.

    ``serving=True``: the beam's energy gain over the link's clusters.
    Otherwise the beam (pointed at some other UE) is evaluated toward
    ``victim_direction`` = (global azimuth, elevation); in ``fixed-gain``
    mode the BS gain is 1.
    """
    if link.outage:
        return 0.0
    rx = float(dbm_to_mw(cfg.tx_power_dbm - link.pathloss_db))
    if serving:
        c = link.clusters
        a = steering_vector(bs_geom, c.bs_az, c.bs_el)
        return rx * bs_geom.n * float(np.sum(c.powers * np.abs(a.conj() @ w_bs) ** 2))
    az, el = victim_direction if victim_direction is not None else link.aod
    rel = float(wrap_angle(az - bs_boresight))
    pattern = float(sector_gain(rel, cfg))
    if cfg.interference_mode == "fixed-gain":
        return rx * pattern
    a = steering_vector(bs_geom, rel, el)
    return rx * pattern * bs_geom.n * float(np.abs(np.vdot(w_bs, a)) ** 2)
