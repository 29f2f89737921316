import math

import numpy as np
import pytest
from scipy import stats

from helpers import omni_deployment
from sinrmodel import deployment as dep
from sinrmodel import model as m
from sinrmodel import montecarlo as mc

NO_NOISE = m.NoiseModel(enabled=False)


def test_zero_sigma_single_link_is_exact():
    d = omni_deployment([(0, 0)])
    noise = m.NoiseModel()
    rng = np.random.default_rng(1)
    mu = dep.mean_rx_power_dbm(d, (300.0, 0.0), 0, 0)
    for _ in range(3):
        v = mc.sample_sinr(d, m.ShadowingModel(0.0, 0.5), noise, (300.0, 0.0), rng)
        assert v == pytest.approx(mu - noise.power_dbm, abs=1e-9)


def test_zero_sigma_two_links_without_noise():
    d = omni_deployment([(-100, 0), (400, 0)])
    ue = (0.0, 0.0)
    mu = [dep.mean_rx_power_dbm(d, ue, j, 0) for j in range(2)]
    v = mc.sample_sinr(d, m.ShadowingModel(0.0, 0.0), NO_NOISE, ue, np.random.default_rng(3))
    assert v == pytest.approx(mu[0] - mu[1], abs=1e-9)


def test_seeded_replay():
    d = dep.paper12()
    a = mc.sample_sinr(d, m.ShadowingModel(), m.NoiseModel(), (10.0, 20.0), np.random.default_rng(42))
    b = mc.sample_sinr(d, m.ShadowingModel(), m.NoiseModel(), (10.0, 20.0), np.random.default_rng(42))
    assert a == b


def test_run_is_deterministic_and_chunk_independent(monkeypatch):
    d = omni_deployment([(-200, 0), (200, 0), (0, 350)])
    sim = mc.SimConfig(300_000, 9)
    a = mc.run(sim, d, m.ShadowingModel(), m.NoiseModel(), (10.0, 5.0))
    b = mc.run(sim, d, m.ShadowingModel(), m.NoiseModel(), (10.0, 5.0))
    assert np.array_equal(a.samples, b.samples)
    assert np.array_equal(a.serving, b.serving)
    c = mc.run(mc.SimConfig(300_000, 10), d, m.ShadowingModel(), m.NoiseModel(), (10.0, 5.0))
    assert not np.array_equal(a.samples, c.samples)


def test_single_sample_is_degenerate():
    d = omni_deployment([(-200, 0), (200, 0)])
    e = mc.run(mc.SimConfig(1, 2), d, m.ShadowingModel(), m.NoiseModel(), (0.0, 0.0))
    assert e.count == 1
    x = e.samples[0]
    assert e.cdf(x - 1e-9) == 0.0 and e.cdf(x) == 1.0
    with pytest.raises(ValueError):
        mc.SimConfig(0)


def test_zero_sigma_gives_single_value():
    d = omni_deployment([(-200, 0), (200, 0)])
    e = mc.run(mc.SimConfig(1000, 2), d, m.ShadowingModel(0.0, 0.5), m.NoiseModel(), (50.0, 0.0))
    assert np.unique(e.samples).size == 1


def test_symmetric_association_split():
    d = omni_deployment([(-200, 0), (200, 0)])
    n = 200_000
    e = mc.run(mc.SimConfig(n, 4), d, m.ShadowingModel(), m.NoiseModel(), (0.0, 0.0))
    assert abs(e.association()[0] - 0.5) < 3 * math.sqrt(0.25 / n)


def test_sectorized_site_sectors_share_shadowing():
    # a lone 3-sector site: own weaker sectors are the only interference
    d = dep.build_hex_grid(0)
    ue = (200.0, 30.0)
    p = 10 ** (dep.sector_powers_dbm(d, ue, 0) / 10)
    best = p.max()
    expected = 10 * math.log10(best / (p.sum() - best))
    e = mc.run(mc.SimConfig(1000, 1), d, m.ShadowingModel(), NO_NOISE, ue)
    assert np.allclose(e.samples, expected, atol=1e-9)


def test_forced_association_modes():
    d = omni_deployment([(-100, 0), (400, 0)])
    e = mc.run(mc.SimConfig(10_000, 1, mode="site:1"), d, m.ShadowingModel(), m.NoiseModel(), (0.0, 0.0))
    assert np.all(e.serving == 1)
    e = mc.run(mc.SimConfig(10_000, 1, mode="distance"), d, m.ShadowingModel(), m.NoiseModel(), (0.0, 0.0))
    assert np.all(e.serving == 0)
    with pytest.raises(ValueError):
        mc.run(mc.SimConfig(10, 1, mode="bogus"), d, m.ShadowingModel(), m.NoiseModel(), (0.0, 0.0))


def test_wilson_interval():
    lo, hi = mc.wilson_interval(10, 1000, 0.99)
    assert lo < 0.01 < hi
    # Wilson score bounds written out
    z, n, p = stats.norm.ppf(0.995), 1000, 0.01
    centre = (p + z * z / (2 * n)) / (1 + z * z / n)
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / (1 + z * z / n)
    assert float(lo) == pytest.approx(centre - half, rel=1e-12)
    assert float(hi) == pytest.approx(centre + half, rel=1e-12)
    assert float(lo) == pytest.approx(0.004530, abs=1e-6)
    lo, hi = mc.wilson_interval(0, 100)
    assert float(lo) == 0.0 and float(hi) > 0.0


def test_quantile_and_probes():
    d = omni_deployment([(-200, 0), (200, 0)])
    sim = mc.SimConfig(100_000, 6, probe_levels=(1e-2, 1e-3, 1e-6))
    e = mc.run(sim, d, m.ShadowingModel(), m.NoiseModel(), (20.0, 0.0))
    assert e.cdf(e.quantile(0.01)) >= 0.01
    assert e.cdf(np.nextafter(e.quantile(0.01), -np.inf)) < 0.01
    levels = [p[0] for p in e.probes()]
    assert levels == [1e-2, 1e-3]
    with pytest.raises(ValueError):
        e.quantile(0.0)


def test_csv_output(tmp_path):
    d = omni_deployment([(-200, 0), (200, 0)])
    e = mc.run(mc.SimConfig(10_000, 6), d, m.ShadowingModel(), m.NoiseModel(), (20.0, 0.0))
    path = tmp_path / "e.csv"
    e.to_csv(path, [-5.0, 0.0, 5.0])
    rows = path.read_text().splitlines()
    assert rows[0] == "sinr_db_threshold,empirical_cdf,ci_low,ci_high"
    vals = np.array([[float(v) for v in r.split(",")] for r in rows[1:]])
    assert np.all(np.diff(vals[:, 0]) > 0)
    assert np.all((vals[:, 2] <= vals[:, 1]) & (vals[:, 1] <= vals[:, 3]))


# KS distance

class _Exact:
    def __init__(self, mu, sd):
        self.mu, self.sd = mu, sd

    def cdf(self, x):
        return stats.norm.cdf(x, self.mu, self.sd)


def test_ks_identical_degenerate_is_zero():
    e = mc.EmpiricalCdf(np.full(10, 3.0), np.zeros(10, dtype=int), 1)
    assert mc.ks_distance(e, lambda x: (np.asarray(x) >= 3.0).astype(float)) == 0.0


def test_ks_detects_one_sigma_shift():
    s = np.sort(np.random.default_rng(1).normal(1.0, 1.0, 100_000))
    e = mc.EmpiricalCdf(s, np.zeros(s.size, dtype=int), 1)
    assert mc.ks_distance(e, _Exact(0.0, 1.0)) > 0.3


def test_ks_model_against_own_sampler():
    # one link, rho = 0: the SINR is exactly Gaussian and the sampler is exact
    d = omni_deployment([(0, 0)])
    sh = m.ShadowingModel(8.0, 0.0)
    n = 1_000_000
    e = mc.run(mc.SimConfig(n, 11), d, sh, m.NoiseModel(), (300.0, 0.0))
    model = m.sinr_best_server(m.build_link_ensemble(d, sh, m.NoiseModel(), (300.0, 0.0)))
    assert mc.ks_distance(e, model) < 1.63 / math.sqrt(n)


def test_ks_rejects_empty():
    e = mc.EmpiricalCdf(np.array([]), np.array([], dtype=int), 1)
    with pytest.raises(ValueError):
        mc.ks_distance(e, _Exact(0, 1))


# model agreement

@pytest.mark.parametrize("ue", [(0.0, 0.0), (150.0, 80.0)])
def test_model_and_sampler_agree_on_three_sites(ue):
    d = omni_deployment([(-300, 0), (300, 0), (0, 450)], [49.0, 46.0, 43.0])
    ens = m.build_link_ensemble(d, m.ShadowingModel(), m.NoiseModel(), ue)
    model = m.sinr_best_server(ens)
    e = mc.run(mc.SimConfig(1_000_000, 21), d, m.ShadowingModel(), m.NoiseModel(), ue)
    assert mc.ks_distance(e, model) < 0.005
    lo, hi = mc.wilson_interval(np.round(model.association * 0 + e.association() * e.count), e.count)
    assert np.all((lo <= model.association + 1e-12) & (model.association - 1e-12 <= hi))


def test_fixed_association_matches_forced_sampler():
    d = omni_deployment([(-150, 0), (350, 0)], [49.0, 47.0])
    ue = (0.0, 30.0)
    ens = m.build_link_ensemble(d, m.ShadowingModel(), m.NoiseModel(), ue)
    model = m.sinr_fixed_association(ens, "distance")
    e = mc.run(mc.SimConfig(1_000_000, 5, mode="distance"), d, m.ShadowingModel(), m.NoiseModel(), ue)
    assert mc.ks_distance(e, model) < 0.005
