import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from sinrmodel import deployment as dep


def omni_site(x, y, gain=0.0, power=49.0):
    return dep.Site((x, y), (dep.Sector(power, dep.AntennaPattern(kind="omni", max_gain_dbi=gain)),))


def test_hex_grid_sizes():
    assert dep.build_hex_grid(0).num_sites == 1
    assert dep.build_hex_grid(0).sites[0].position == (0.0, 0.0)
    ring1 = dep.build_hex_grid(1, 500.0)
    assert ring1.num_sites == 7
    d = np.hypot(*ring1.positions[1:].T)
    assert np.allclose(d, 500.0)
    assert dep.build_hex_grid(2).num_sites == 19
    assert dep.build_hex_grid(3).num_sites == 37


def test_hex_grid_sectors_and_boresights():
    d = dep.build_hex_grid(1)
    az = [s.antenna.boresight_azimuth_deg for s in d.sites[0].sectors]
    assert az == [30.0, 150.0, 270.0]
    d = dep.build_hex_grid(1, azimuth_offset_deg=10.0)
    assert [s.antenna.boresight_azimuth_deg for s in d.sites[0].sectors] == [40.0, 160.0, 280.0]
    d = dep.build_hex_grid(1, sectors_per_site=1)
    assert all(len(s.sectors) == 1 and s.sectors[0].antenna.kind == "omni" for s in d.sites)


@pytest.mark.parametrize("kwargs", [dict(num_rings=-1), dict(num_rings=1, inter_site_distance_m=0.0),
                                    dict(num_rings=1, sectors_per_site=2)])
def test_hex_grid_preconditions(kwargs):
    with pytest.raises(ValueError):
        dep.build_hex_grid(**kwargs)


@pytest.mark.parametrize("triangle", dep.PAPER12_TRIANGLES)
def test_paper12_layout(triangle):
    d = dep.paper12(triangle=triangle)
    assert d.num_sites == 12
    r = np.round(np.hypot(*d.positions.T) / 500.0, 3)
    assert sorted(r) == [0.577] * 3 + [1.155] * 3 + [1.528] * 6
    tri = dep.evaluation_triangle(d)
    sides = [math.dist(tri[k], tri[(k + 1) % 3]) for k in range(3)]
    assert np.allclose(sides, 500.0)


def test_paper12_triangle_orientation():
    # sector-edge: each vertex sees the centroid between two boresights
    d = dep.paper12()
    for site in d.sites[:3]:
        g = [dep.antenna_gain_db(s.antenna, (0.0, 0.0), site.position) for s in site.sectors]
        top = sorted(g)[-2:]
        assert top[0] == pytest.approx(top[1], abs=1e-9)
    d = dep.paper12(triangle="boresight")
    for site in d.sites[:3]:
        az = math.degrees(math.atan2(-site.position[1], -site.position[0])) % 360
        assert min(abs(az - s.antenna.boresight_azimuth_deg) for s in site.sectors) < 1e-6


def test_deployment_invariants():
    with pytest.raises(ValueError):
        dep.Deployment(())
    with pytest.raises(ValueError):
        dep.Deployment((omni_site(0, 0), omni_site(0, 0)))
    with pytest.raises(ValueError):
        dep.Site((0, 0), ())
    with pytest.raises(ValueError):
        dep.Sector(float("nan"))
    with pytest.raises(ValueError):
        dep.PropagationModel(pathloss_exponent_coeff=0.0)
    with pytest.raises(ValueError):
        dep.PropagationModel(bandwidth_hz=0.0)
    with pytest.raises(ValueError):
        dep.AntennaPattern(horizontal_3db_beamwidth_deg=0.0)


def test_path_loss_values():
    pm = dep.PropagationModel()
    assert dep.path_loss_db(pm, 1000.0) == pytest.approx(128.1)
    assert dep.path_loss_db(pm, 100.0) == pytest.approx(90.5)
    assert dep.path_loss_db(pm, 500.0) == pytest.approx(116.78, abs=0.01)
    with pytest.raises(ValueError):
        dep.path_loss_db(pm, 0.0)
    with pytest.raises(ValueError):
        dep.path_loss_db(pm, -5.0)


def test_path_loss_clamp():
    pm = dep.PropagationModel()
    assert dep.path_loss_db(pm, 1.0) == dep.path_loss_db(pm, 35.0)
    free = dep.PropagationModel(min_distance_m=None)
    assert dep.path_loss_db(free, 1.0) < dep.path_loss_db(pm, 1.0)


@given(st.floats(1.0, 1e5), st.floats(1.0, 1e5))
def test_path_loss_increasing(a, b):
    pm = dep.PropagationModel(min_distance_m=None)
    if a < b:
        assert dep.path_loss_db(pm, a) < dep.path_loss_db(pm, b)


def test_antenna_gain_examples():
    omni = dep.AntennaPattern(kind="omni", max_gain_dbi=5.0)
    assert dep.antenna_gain_db(omni, (123.0, -7.0), (0.0, 0.0)) == 5.0
    p = dep.AntennaPattern(boresight_azimuth_deg=0.0)
    # on boresight azimuth at the distance where the depression angle equals the tilt
    dist = (p.bs_height_m - p.ue_height_m) / math.tan(math.radians(p.downtilt_deg))
    assert dep.antenna_gain_db(p, (dist, 0.0), (0.0, 0.0)) == pytest.approx(p.max_gain_dbi, abs=1e-9)
    assert dep.antenna_gain_db(p, (-dist, 0.0), (0.0, 0.0)) == pytest.approx(p.max_gain_dbi - p.max_attenuation_db)


@settings(max_examples=100)
@given(x=st.floats(-2000, 2000), y=st.floats(-2000, 2000), az=st.floats(0, 360))
def test_antenna_gain_range(x, y, az):
    p = dep.AntennaPattern(boresight_azimuth_deg=az)
    if math.hypot(x, y) < 1e-3:
        return
    g = dep.antenna_gain_db(p, (x, y), (0.0, 0.0))
    assert p.max_gain_dbi - p.max_attenuation_db - 1e-9 <= g <= p.max_gain_dbi + 1e-9


def test_mean_rx_power_examples():
    d = dep.Deployment((omni_site(0, 0),))
    assert dep.mean_rx_power_dbm(d, (1000.0, 0.0), 0, 0) == pytest.approx(-79.1)
    d2 = dep.Deployment((omni_site(0, 0, power=49 + 10 * math.log10(2)),))
    diff = dep.mean_rx_power_dbm(d2, (1000.0, 0.0), 0, 0) - dep.mean_rx_power_dbm(d, (1000.0, 0.0), 0, 0)
    assert diff == pytest.approx(3.0103, abs=1e-4)
    d3 = dep.Deployment((omni_site(0, 0, gain=14.0),))
    assert dep.mean_rx_power_dbm(d3, (300.0, 40.0), 0, 0) - dep.mean_rx_power_dbm(d, (300.0, 40.0), 0, 0) \
        == pytest.approx(14.0)


def test_strongest_sector_examples():
    d = dep.build_hex_grid(0)
    assert dep.strongest_sector(dep.build_hex_grid(0, sectors_per_site=1), (100.0, 50.0), 0) == 0
    # sector 1 looks at 150 degrees
    u = (200 * math.cos(math.radians(150)), 200 * math.sin(math.radians(150)))
    assert dep.strongest_sector(d, u, 0) == 1


@settings(max_examples=60)
@given(x=st.floats(-1500, 1500), y=st.floats(-1500, 1500))
def test_strongest_sector_is_argmax(x, y):
    d = dep.build_hex_grid(1)
    assume(np.min(np.hypot(d.positions[:, 0] - x, d.positions[:, 1] - y)) > 1e-3)
    for j in range(d.num_sites):
        p = [dep.mean_rx_power_dbm(d, (x, y), j, s) for s in range(3)]
        assert dep.strongest_sector(d, (x, y), j) == int(np.argmax(p))


def test_gsec_examples():
    assert dep.site_gsec_db(dep.build_hex_grid(0, sectors_per_site=1), (100.0, 0.0), 0) == 0.0
    same = dep.Site((0.0, 0.0), (dep.Sector(antenna=dep.AntennaPattern(kind="omni")),) * 3)
    assert dep.site_gsec_db(dep.Deployment((same,)), (100.0, 0.0), 0) == pytest.approx(10 * math.log10(3), abs=1e-3)


@settings(max_examples=60)
@given(x=st.floats(-1500, 1500), y=st.floats(-1500, 1500))
def test_gsec_matches_linear_sum(x, y):
    d = dep.build_hex_grid(1)
    site = d.sites[0]
    if math.hypot(x, y) < 1e-3:
        return
    g = np.array([dep.antenna_gain_db(s.antenna, (x, y), site.position) for s in site.sectors])
    best = np.argmax(g)
    ratio = np.sum(10 ** ((np.delete(g, best) - g[best]) / 10))
    assert dep.site_gsec_db(d, (x, y), 0) == pytest.approx(10 * math.log10(1 + ratio), abs=1e-9)
    assert dep.site_gsec_db(d, (x, y), 0) >= 0.0


@settings(max_examples=40)
@given(dx=st.floats(-1e4, 1e4), dy=st.floats(-1e4, 1e4), rot=st.floats(0, 360))
def test_rx_power_invariant_under_translation_and_rotation(dx, dy, rot):
    c, s = math.cos(math.radians(rot)), math.sin(math.radians(rot))

    def move(p):
        return (c * p[0] - s * p[1] + dx, s * p[0] + c * p[1] + dy)

    base = dep.build_hex_grid(1)
    sites = [dep.Site(move(site.position),
                      [dep.Sector(sec.transmit_power_dbm,
                                  dep.AntennaPattern(boresight_azimuth_deg=(sec.antenna.boresight_azimuth_deg + rot) % 360))
                       for sec in site.sectors]) for site in base.sites]
    moved = dep.Deployment(tuple(sites))
    ue = (137.0, -211.0)
    for j in range(base.num_sites):
        for k in range(3):
            assert dep.mean_rx_power_dbm(moved, move(ue), j, k) == pytest.approx(
                dep.mean_rx_power_dbm(base, ue, j, k), abs=1e-7)
