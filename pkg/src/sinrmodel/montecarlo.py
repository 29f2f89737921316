"""Monte Carlo SINR sampler used as an independent check of the model.

Shadowing is drawn directly as ``sqrt(rho)*xi + sqrt(1-rho)*eta_j`` per site,
every sector of a site inherits that site's value, the serving site is the
one with the strongest sector and the SINR sums every other sector plus the
(fixed) thermal noise.  No step of the analytical model is reused.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from . import deployment as dep

CHUNK = 1 << 18
CI_LEVEL = 0.99


@dataclass(frozen=True)
class SimConfig:
    num_samples: int = 10_000_000
    rng_seed: int = 1
    mode: str = "best-server"
    probe_levels: tuple = (1e-2, 1e-3, 1e-4, 1e-5)

    def __post_init__(self):
        if int(self.num_samples) < 1:
            raise ValueError("num_samples must be >= 1")


@dataclass(frozen=True, eq=False)
class _Budget:
    site_best_dbm: np.ndarray      # strongest-sector mean power per site
    site_total_mw: np.ndarray      # all sectors of a site, linear, without shadowing
    site_rest_mw: np.ndarray       # weaker sectors only
    noise_mw: float
    sigma_db: float
    rho: float
    serving: int | None


def _serving_index(deployment, ue_position, best_dbm, mode):
    if mode in ("best-server", "best_server"):
        return None
    if mode in ("distance", "shortest_distance"):
        return int(np.argmin(dep.distances_m(deployment, ue_position)))
    if mode in ("pathloss", "smallest_pathloss"):
        tx = np.array([s.sectors[dep.strongest_sector(deployment, ue_position, j)].transmit_power_dbm
                       for j, s in enumerate(deployment.sites)])
        return int(np.argmin(tx - best_dbm))
    if isinstance(mode, int):
        return mode
    if isinstance(mode, str) and mode.startswith("site:"):
        return int(mode.split(":", 1)[1])
    raise ValueError(f"unknown association mode {mode!r}")


def _budget(deployment, shadowing, noise, ue_position, mode="best-server"):
    n = deployment.num_sites
    best = np.empty(n)
    total = np.empty(n)
    rest = np.empty(n)
    for j in range(n):
        lin = 10.0 ** (dep.sector_powers_dbm(deployment, ue_position, j) / 10.0)
        b = int(np.argmax(lin))
        best[j] = 10.0 * math.log10(lin[b])
        total[j] = lin.sum()
        rest[j] = float(np.sum(np.delete(lin, b)))
    pn = noise.power_dbm
    noise_mw = 10.0 ** (pn / 10.0) if math.isfinite(pn) else 0.0
    serving = _serving_index(deployment, ue_position, best, mode)
    return _Budget(best, total, rest, noise_mw, shadowing.sigma_db, shadowing.rho_intersite, serving)


def _draw(b, rng, n):
    """SINR (dB) and serving index of ``n`` independent realizations."""
    L = b.site_best_dbm.size
    xi = rng.standard_normal(n)
    eta = rng.standard_normal((n, L))
    x = b.sigma_db * (math.sqrt(b.rho) * xi[:, None] + math.sqrt(1.0 - b.rho) * eta)
    if b.serving is None:
        serving = np.argmax(b.site_best_dbm[None, :] + x, axis=1)
    else:
        serving = np.full(n, b.serving)
    shadow = 10.0 ** (x / 10.0)
    rows = np.arange(n)
    sh_i = shadow[rows, serving]
    signal = sh_i * 10.0 ** (b.site_best_dbm[serving] / 10.0)
    others = shadow @ b.site_total_mw - sh_i * b.site_total_mw[serving]
    # guard against cancellation when the serving site dominates
    others = np.maximum(others, 0.0)
    denom = b.noise_mw + others + sh_i * b.site_rest_mw[serving]
    with np.errstate(divide="ignore"):
        sinr = 10.0 * np.log10(signal / denom)
    return sinr, serving


def sample_sinr(deployment, shadowing, noise, ue_position, rng, mode="best-server"):
    """One shadowing realization of the SINR in dB."""
    sinr, _ = _draw(_budget(deployment, shadowing, noise, ue_position, mode), rng, 1)
    return float(sinr[0])


def wilson_interval(k, n, level=CI_LEVEL):
    """Wilson score interval for a binomial proportion."""
    k = np.asarray(k, dtype=float)
    z = stats.norm.ppf(0.5 + level / 2)
    p = k / n
    den = 1 + z * z / n
    centre = (p + z * z / (2 * n)) / den
    half = z * np.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / den
    return np.maximum(centre - half, 0.0), np.minimum(centre + half, 1.0)


@dataclass(eq=False)
class EmpiricalCdf:
    """Sorted SINR samples with the serving site of each sample."""

    samples: np.ndarray
    serving: np.ndarray
    num_sites: int
    probe_levels: tuple = ()
    seed: int | None = None

    @property
    def count(self):
        return int(self.samples.size)

    def cdf(self, x_db):
        x = np.asarray(x_db, dtype=float)
        out = np.searchsorted(self.samples, x, side="right") / self.count
        return float(out) if out.ndim == 0 else out

    def counts_at(self, x_db):
        return np.searchsorted(self.samples, np.asarray(x_db, dtype=float), side="right")

    def confidence_interval(self, x_db, level=CI_LEVEL):
        return wilson_interval(self.counts_at(x_db), self.count, level)

    def quantile(self, p):
        """Smallest sample with empirical CDF >= ``p``."""
        if not 0 < p <= 1:
            raise ValueError("p must lie in (0, 1]")
        k = max(int(math.ceil(p * self.count)) - 1, 0)
        return float(self.samples[k])

    def association(self):
        return np.bincount(self.serving, minlength=self.num_sites) / self.count

    def conditioned_on(self, site):
        """Samples of the realizations served by ``site``."""
        mask = self.serving == site
        return EmpiricalCdf(self.samples[mask], self.serving[mask], self.num_sites, self.probe_levels, self.seed)

    def probes(self, level=CI_LEVEL):
        """Rows ``(level, threshold, empirical cdf, ci_low, ci_high)`` at the probe levels."""
        rows = []
        for p in self.probe_levels:
            if p * self.count < 1:
                continue
            x = self.quantile(p)
            lo, hi = self.confidence_interval(x, level)
            rows.append((p, x, self.cdf(x), float(lo), float(hi)))
        return rows

    def table(self, thresholds, level=CI_LEVEL):
        thr = np.asarray(thresholds, dtype=float)
        lo, hi = self.confidence_interval(thr, level)
        return np.column_stack([thr, self.cdf(thr), lo, hi])

    def to_csv(self, path, thresholds, level=CI_LEVEL):
        """Write ``sinr_db_threshold,empirical_cdf,ci_low,ci_high`` rows."""
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("sinr_db_threshold,empirical_cdf,ci_low,ci_high\n")
            for x, c, lo, hi in self.table(thresholds, level):
                fh.write(f"{x:.4f},{c:.12g},{lo:.12g},{hi:.12g}\n")


def run(sim, deployment, shadowing, noise, ue_position):
    """Draw ``sim.num_samples`` realizations at ``ue_position``.

    Samples come in fixed-size chunks, each from its own substream of
    ``SeedSequence(sim.rng_seed)``, so the output depends only on the seed
    and the sample count.
    """
    b = _budget(deployment, shadowing, noise, ue_position, sim.mode)
    n = int(sim.num_samples)
    nchunks = -(-n // CHUNK)
    seqs = np.random.SeedSequence(sim.rng_seed).spawn(nchunks)
    sinr = np.empty(n)
    serving = np.empty(n, dtype=np.int16)
    for c, ss in enumerate(seqs):
        lo = c * CHUNK
        m = min(CHUNK, n - lo)
        s, srv = _draw(b, np.random.Generator(np.random.PCG64(ss)), m)
        sinr[lo:lo + m] = s
        serving[lo:lo + m] = srv
    order = np.argsort(sinr, kind="stable")
    return EmpiricalCdf(sinr[order], serving[order], deployment.num_sites, tuple(sim.probe_levels), sim.rng_seed)


def _model_cdf(model):
    return model.cdf if hasattr(model, "cdf") else model


def ks_distance(empirical, model):
    """Sup-norm distance between the empirical CDF and ``model``'s CDF.

    ``model`` is anything with a ``cdf`` method or a vectorised CDF callable.
    Both one-sided limits are checked at every distinct sample value.
    """
    if empirical.count == 0:
        raise ValueError("empty sample")
    F = _model_cdf(model)
    x, idx = np.unique(empirical.samples, return_index=True)
    n = empirical.count
    below = idx / n
    upto = np.append(idx[1:], n) / n
    fx = np.asarray(F(x), dtype=float)
    fleft = np.asarray(F(np.nextafter(x, -np.inf)), dtype=float)
    return float(max(np.max(np.abs(upto - fx)), np.max(np.abs(fleft - below))))
