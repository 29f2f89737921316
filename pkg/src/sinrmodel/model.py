"""Downlink SINR distribution with best-server association under shadowing.

The common shadowing component is divided out of the SINR, which leaves
independent link powers with standard deviation ``sqrt(1-rho)*sigma`` and a
random noise term with standard deviation ``sqrt(rho)*sigma``.  For each
candidate serving site and each serving power ``P_S`` the interferers are
clipped at ``P_S`` (they are weaker by definition of the best server), their
powers and the noise are added by logarithmic convolution, and the result is
weighted by the density of ``P_S``.  Summing over candidates gives the SINR
density.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as _k
from . import deployment as dep
from . import griddist as gd

DEFAULT_TAIL_CUTOFF = 1e-16
NEVER_SERVES = 1e-12
WORKERS_ENV = "SINRMODEL_WORKERS"


@dataclass(frozen=True)
class ShadowingModel:
    sigma_db: float = 8.0
    rho_intersite: float = 0.5
    rho_intrasite: float = 1.0

    def __post_init__(self):
        if self.sigma_db < 0:
            raise ValueError("sigma_db must be non-negative")
        if not 0.0 <= self.rho_intersite <= 1.0:
            raise ValueError("rho_intersite must lie in [0, 1]")
        if self.rho_intrasite != 1.0:
            raise ValueError("sectors of one site share their shadowing (rho_intrasite = 1)")

    @property
    def link_std_db(self):
        return math.sqrt(1.0 - self.rho_intersite) * self.sigma_db

    @property
    def common_std_db(self):
        return math.sqrt(self.rho_intersite) * self.sigma_db


@dataclass(frozen=True)
class NoiseModel:
    """Thermal noise ``density + 10log10(B) + NF``; ``enabled=False`` means no noise."""

    thermal_density_dbm_per_hz: float = -174.0
    noise_figure_db: float = 9.0
    bandwidth_hz: float = 20.0e6
    enabled: bool = True

    @property
    def power_dbm(self):
        if not self.enabled:
            return -math.inf
        return self.thermal_density_dbm_per_hz + 10 * math.log10(self.bandwidth_hz) + self.noise_figure_db


@dataclass(frozen=True)
class GridSpec:
    step_db: float = 0.1
    span_below_db: float = 80.0
    span_above_db: float = 40.0
    tail_cutoff: float = DEFAULT_TAIL_CUTOFF


@dataclass(frozen=True, eq=False)
class LinkEnsemble:
    """Per-location inputs of the SINR model, one entry per site."""

    ue_position: tuple
    strongest_sector: np.ndarray
    mean_dbm: np.ndarray
    sigma_eff_db: float
    gsec_db: np.ndarray
    intra_ratio: np.ndarray
    noise_mean_dbm: float
    noise_std_db: float
    grid: gd.DbGrid
    distance_m: np.ndarray
    coupling_loss_db: np.ndarray
    tail_cutoff: float = DEFAULT_TAIL_CUTOFF

    @property
    def num_sites(self):
        return len(self.mean_dbm)

    @property
    def has_noise(self):
        return math.isfinite(self.noise_mean_dbm)

    def order_by_power(self, exclude=None):
        """Site indices by descending mean power (stable)."""
        idx = np.argsort(-self.mean_dbm, kind="stable")
        return [int(j) for j in idx if j != exclude]


@dataclass(eq=False)
class SinrDistribution:
    """SINR (dB) distribution of one location or an area."""

    dist: gd.Dist
    association: np.ndarray
    ue_position: tuple | None = None
    mode: str = "best-server"
    skipped_mass: float = 0.0
    locations: list = field(default_factory=list, repr=False)
    raw_mass: float = 1.0  # integral before normalisation, kept as an accuracy diagnostic

    @property
    def mass(self):
        return self.dist.mass

    def cdf(self, x_db):
        return gd.cdf(self.dist, x_db)

    def outage(self, x_db):
        return gd.outage(self.dist, x_db)

    def quantile(self, p):
        return gd.quantile(self.dist, p)

    @property
    def median(self):
        return self.quantile(0.5 * self.mass)


def build_link_ensemble(deployment, shadowing, noise, ue_position, grid=None):
    """Decorrelated link powers seen at ``ue_position``."""
    grid = grid or GridSpec()
    pos = (float(ue_position[0]), float(ue_position[1]))
    n = deployment.num_sites
    best = np.empty(n, dtype=int)
    mean = np.empty(n)
    gsec = np.empty(n)
    ratio = np.empty(n)
    for j in range(n):
        p = dep.sector_powers_dbm(deployment, pos, j)
        b = int(np.argmax(p))
        best[j] = b
        mean[j] = p[b]
        ratio[j] = float(np.sum(10.0 ** ((np.delete(p, b) - p[b]) / 10.0)))
        gsec[j] = 10.0 * math.log10(1.0 + ratio[j])
    dist = dep.distances_m(deployment, pos)
    tx = np.array([deployment.sites[j].sectors[best[j]].transmit_power_dbm for j in range(n)])
    coupling = tx - mean
    p_grid = gd.make_grid(float(mean.max()), grid.span_below_db, grid.span_above_db, grid.step_db)
    return LinkEnsemble(
        ue_position=pos,
        strongest_sector=best,
        mean_dbm=mean,
        sigma_eff_db=shadowing.link_std_db,
        gsec_db=gsec,
        intra_ratio=ratio,
        noise_mean_dbm=noise.power_dbm,
        noise_std_db=shadowing.common_std_db if noise.enabled else 0.0,
        grid=p_grid,
        distance_m=dist,
        coupling_loss_db=coupling,
        tail_cutoff=grid.tail_cutoff,
    )


def _link_density(ens, mean_db):
    """Gaussian link power on the ensemble grid, ``None`` if far below it."""
    try:
        return gd.gaussian_on_grid(ens.grid, mean_db, ens.sigma_eff_db)
    except ValueError:
        if mean_db < ens.grid.min_db:
            return None
        raise


def _noise_dist(ens):
    if not ens.has_noise:
        return gd.NO_POWER
    try:
        return gd.gaussian_on_grid(ens.grid, ens.noise_mean_dbm, ens.noise_std_db)
    except ValueError:
        # ten sigma below an 80 dB window: no measurable contribution
        return gd.NO_POWER


def association_weight_density(ens, site_i, p_s_dbm):
    """Density of "site ``i`` serves with power ``P_S``": ``f_i(P_S) prod_j F_j(P_S)``."""
    p = np.asarray(p_s_dbm, dtype=float)
    fi = _link_density(ens, ens.mean_dbm[site_i])
    if fi is None:
        return np.zeros_like(p) if p.ndim else 0.0
    out = np.asarray(_density_at(fi, p), dtype=float)
    for j in range(ens.num_sites):
        if j == site_i:
            continue
        fj = _link_density(ens, ens.mean_dbm[j])
        if fj is not None:
            out = out * gd.cdf(fj, p)
    return float(out) if out.ndim == 0 else out


def _density_at(dist, x):
    if isinstance(dist, gd.Gridded):
        return np.interp(x, dist.grid.nodes, dist.density, left=0.0, right=0.0)
    raise ValueError("association weights need a continuous serving power")


def association_probabilities(ens):
    """Probability of each site being the best server (trapezoid over the grid)."""
    n = ens.num_sites
    if ens.sigma_eff_db == 0:
        w = np.zeros(n)
        w[int(np.argmax(ens.mean_dbm))] = 1.0
        return w
    nodes = ens.grid.nodes
    h = ens.grid.step_db
    tw = np.full(nodes.size, h)
    tw[0] = tw[-1] = 0.5 * h
    return np.array([float(np.sum(tw * association_weight_density(ens, i, nodes))) for i in range(n)])


def interference_noise_pdf(ens, serving_site_i, p_s_dbm):
    """Interference-plus-noise power given that site ``i`` serves with ``P_S``.

    Interferers are conditioned on staying below ``P_S`` (their strongest
    sector), lifted by their weaker-sector gain, log-convolved in descending
    order of mean power and combined with the noise; the serving site's own
    weaker sectors are added last as a power ``P_S + 10log10(sum g_s/g_s*)``.
    """
    acc = gd.NO_POWER
    for j in ens.order_by_power(exclude=serving_site_i):
        base = _link_density(ens, ens.mean_dbm[j] + ens.gsec_db[j])
        if base is None:
            continue
        part = gd.truncate_above_normalized(base, p_s_dbm + ens.gsec_db[j])
        acc = gd.log_convolve(acc, part)
    acc = gd.log_convolve(acc, _noise_dist(ens))
    r = ens.intra_ratio[serving_site_i]
    if r > 0:
        acc = gd.log_convolve(acc, gd.PointMass(p_s_dbm + 10 * math.log10(r)))
    if isinstance(acc, gd.NoPower):
        raise ValueError("no interferer and no noise: SINR is unbounded")
    return acc


def _isr_grid(ens):
    g = ens.grid
    return gd.DbGrid(-(g.size - 1) * g.step_db, g.step_db, 2 * g.size - 1)


def _finish(ens, site_i, isr):
    """Add the serving site's weaker sectors and flip ISR into SINR."""
    r = ens.intra_ratio[site_i]
    if r > 0 and not isinstance(isr, gd.Zero):
        isr = gd.log_convolve(isr, gd.PointMass(10 * math.log10(r)), check=False)
    return gd.trim(gd.negate(isr))


def _conditional(ens, site_i):
    """(sub-distribution, association probability, skipped mass) of one site."""
    if ens.sigma_eff_db == 0:
        best = int(np.argmax(ens.mean_dbm))
        if site_i != best:
            return gd.ZERO, 0.0, 0.0
        d = _fixed(ens, site_i)
        return d, 1.0, 0.0
    g = ens.grid
    h = g.step_db
    serv = _link_density(ens, ens.mean_dbm[site_i])
    if serv is None:
        return gd.ZERO, 0.0, 0.0
    rows, shifts = [], []
    for j in ens.order_by_power(exclude=site_i):
        base = _link_density(ens, ens.mean_dbm[j] + ens.gsec_db[j])
        if base is None:
            continue
        rows.append(np.asarray(base.density))
        shifts.append(ens.gsec_db[j] / h)
    noise = _noise_dist(ens)
    noise_kind, noise_f, noise_pos = 0, np.zeros(g.size), 0.0
    if isinstance(noise, gd.PointMass):
        noise_kind, noise_pos = 1, float(g.position(noise.location_db))
    elif isinstance(noise, gd.Gridded):
        noise_kind, noise_f = 2, np.asarray(noise.density)
    if not rows and noise_kind == 0:
        raise ValueError("no interferer and no noise: SINR is unbounded")
    interf = np.array(rows).reshape(len(rows), g.size)
    isr_grid = _isr_grid(ens)
    isr, assoc, skipped = _k.best_server_sweep(
        np.asarray(serv.density), interf, np.array(shifts, dtype=float),
        noise_kind, noise_f, noise_pos, h, ens.tail_cutoff,
        isr_grid.size, g.size - 1, *_k.conv_tables(h))
    if assoc < NEVER_SERVES:
        return gd.ZERO, assoc, skipped
    return _finish(ens, site_i, gd.Gridded(isr_grid, isr)), assoc, skipped


def conditional_sinr_dist(ens, site_i):
    """SINR density restricted to "site ``i`` is the best server".

    A sub-distribution whose mass is the association probability of site ``i``.
    """
    return _conditional(ens, site_i)[0]


def sinr_best_server(ens):
    """SINR distribution with the serving site chosen by received power."""
    parts, weights = [], np.zeros(ens.num_sites)
    skipped = 0.0
    prior = association_probabilities(ens)
    for i in range(ens.num_sites):
        if prior[i] < NEVER_SERVES:
            continue
        d, w, s = _conditional(ens, i)
        parts.append(d)
        weights[i] = w
        skipped += s
    dist, total = _normalized(gd.mixture(parts), ens.ue_position)
    return SinrDistribution(dist, weights, ens.ue_position, "best-server", skipped, raw_mass=total)


def _normalized(dist, where):
    total = dist.mass
    if abs(total - 1.0) > 1e-2:
        raise gd.NumericalAccuracyError(
            f"SINR mass {total:.6f} at {where}; widen or refine the grid")
    return gd.scale(dist, 1.0 / total), total


def serving_site(ens, mode):
    """Deterministic serving site; ties go to the lowest index."""
    if mode in ("distance", "shortest_distance"):
        return int(np.argmin(ens.distance_m))
    if mode in ("pathloss", "smallest_pathloss"):
        return int(np.argmin(ens.coupling_loss_db))
    if isinstance(mode, int):
        i = mode
    elif isinstance(mode, str) and mode.startswith("site:"):
        i = int(mode.split(":", 1)[1])
    else:
        raise ValueError(f"unknown association mode {mode!r}")
    if not 0 <= i < ens.num_sites:
        raise ValueError(f"site index {i} out of range")
    return i


def _fixed(ens, i):
    if not 0 <= i < ens.num_sites:
        raise ValueError(f"site index {i} out of range")
    acc = gd.NO_POWER
    for j in ens.order_by_power(exclude=i):
        part = _link_density(ens, ens.mean_dbm[j] + ens.gsec_db[j]) if ens.sigma_eff_db > 0 \
            else gd.PointMass(ens.mean_dbm[j] + ens.gsec_db[j])
        if part is not None:
            acc = gd.log_convolve(acc, part)
    acc = gd.log_convolve(acc, _noise_dist(ens))
    if isinstance(acc, gd.NoPower):
        raise ValueError("no interferer and no noise: SINR is unbounded")
    if ens.sigma_eff_db > 0:
        signal = gd.gaussian_on_grid(ens.grid, ens.mean_dbm[i], ens.sigma_eff_db)
    else:
        signal = gd.PointMass(float(ens.mean_dbm[i]))
    isr = gd.cross_difference(acc, signal)
    return _finish(ens, i, isr)


def sinr_fixed_association(ens, mode="distance"):
    """SINR distribution when the serving site does not depend on shadowing.

    ``mode`` is ``"distance"``, ``"pathloss"`` (smallest coupling loss, i.e.
    path loss minus antenna gains) or ``"site:<i>"``.
    """
    i = serving_site(ens, mode)
    w = np.zeros(ens.num_sites)
    w[i] = 1.0
    dist, total = _normalized(_fixed(ens, i), ens.ue_position)
    return SinrDistribution(dist, w, ens.ue_position, str(mode), raw_mass=total)


def sinr_distribution(ens, mode="best-server"):
    if mode in ("best-server", "best_server"):
        return sinr_best_server(ens)
    return sinr_fixed_association(ens, mode)


def points_in_polygon(polygon, spacing_m):
    """Centres of a ``spacing_m`` lattice that fall strictly inside ``polygon``."""
    poly = np.asarray(polygon, dtype=float)
    if poly.ndim != 2 or poly.shape[0] < 3:
        raise ValueError("polygon needs at least three vertices")
    if not spacing_m > 0:
        raise ValueError("spacing must be positive")
    x = poly[:, 0]
    y = poly[:, 1]
    area = 0.5 * abs(np.dot(x, np.roll(y, 1)) - np.dot(y, np.roll(x, 1)))
    if area <= 0:
        raise ValueError("degenerate polygon")
    # lattice anchored at the origin so nested areas share points
    gx = spacing_m * (np.arange(math.floor(x.min() / spacing_m), math.ceil(x.max() / spacing_m) + 1) + 0.5)
    gy = spacing_m * (np.arange(math.floor(y.min() / spacing_m), math.ceil(y.max() / spacing_m) + 1) + 0.5)
    px, py = np.meshgrid(gx, gy)
    px, py = px.ravel(), py.ravel()
    inside = np.zeros(px.size, dtype=bool)
    n = len(poly)
    for k in range(n):
        x1, y1 = poly[k]
        x2, y2 = poly[(k + 1) % n]
        crosses = (y1 > py) != (y2 > py)
        with np.errstate(divide="ignore", invalid="ignore"):
            xint = x1 + (py - y1) * (x2 - x1) / (y2 - y1)
        inside ^= crosses & (px < xint)
    pts = np.column_stack([px[inside], py[inside]])
    if len(pts) == 0:
        raise ValueError("no grid point falls inside the polygon")
    return pts


def _location_job(args):
    deployment, shadowing, noise, point, grid, mode = args
    ens = build_link_ensemble(deployment, shadowing, noise, point, grid)
    return sinr_distribution(ens, mode)


def worker_count():
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def evaluate_points(deployment, shadowing, noise, points, grid=None, mode="best-server", workers=None):
    """Per-location SINR distributions, in input order."""
    jobs = [(deployment, shadowing, noise, tuple(p), grid or GridSpec(), mode) for p in points]
    workers = workers or worker_count()
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(workers) as pool:
            return list(pool.map(_location_job, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    return [_location_job(j) for j in jobs]


def aggregate(results, weights=None):
    """User-density-weighted average of per-location SINR distributions."""
    if not results:
        raise ValueError("nothing to aggregate")
    w = np.full(len(results), 1.0 / len(results)) if weights is None else np.asarray(weights, float)
    w = w / w.sum()
    parts = [gd.scale(r.dist, wk) for wk, r in zip(w, results)]
    if not any(isinstance(d, gd.Gridded) for d in parts):
        step = GridSpec().step_db
        locs = [r.dist.location_db for r in results]
        grid = gd.DbGrid.from_range(math.floor(min(locs)) - 1, math.ceil(max(locs)) + 1, step)
        parts = [gd.resample(d, grid) for d in parts]
    assoc = sum(wk * r.association for wk, r in zip(w, results))
    return gd.mixture(parts), assoc


def area_sinr(deployment, shadowing, noise, polygon, spacing_m=10.0, mode="best-server",
              grid=None, weights=None, workers=None):
    """SINR distribution of a user placed uniformly (or by ``weights``) in ``polygon``."""
    pts = points_in_polygon(polygon, spacing_m)
    results = evaluate_points(deployment, shadowing, noise, pts, grid, mode, workers)
    dist, assoc = aggregate(results, weights)
    raw = float(np.average([r.raw_mass for r in results], weights=weights))
    out = SinrDistribution(dist, assoc, None, str(mode), sum(r.skipped_mass for r in results), raw_mass=raw)
    out.locations = list(zip([tuple(p) for p in pts], results))
    return out
