"""Sites, sectors, antenna patterns and the deterministic link budget."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

THREE_SECTOR_BORESIGHTS = (30.0, 150.0, 270.0)


@dataclass(frozen=True)
class PropagationModel:
    """Log-distance path loss ``intercept + coeff*log10(d / reference)``.

    Defaults are the macro-cell values ``128.1 + 37.6 log10(d[km])`` at 2 GHz.
    """

    pathloss_intercept_db: float = 128.1
    pathloss_exponent_coeff: float = 37.6
    reference_distance_m: float = 1000.0
    carrier_freq_hz: float = 2.0e9
    bandwidth_hz: float = 20.0e6
    min_distance_m: float | None = 35.0

    def __post_init__(self):
        if not self.pathloss_exponent_coeff > 0:
            raise ValueError("pathloss_exponent_coeff must be positive")
        if not self.bandwidth_hz > 0:
            raise ValueError("bandwidth_hz must be positive")
        if not self.reference_distance_m > 0:
            raise ValueError("reference_distance_m must be positive")


@dataclass(frozen=True)
class AntennaPattern:
    """Omni or 3GPP-style 3D sector pattern (gains in dBi, angles in degrees)."""

    kind: str = "sector3d"
    boresight_azimuth_deg: float = 0.0
    horizontal_3db_beamwidth_deg: float = 70.0
    vertical_3db_beamwidth_deg: float = 10.0
    max_attenuation_db: float = 25.0
    sidelobe_attenuation_db: float = 20.0
    downtilt_deg: float = 15.0
    max_gain_dbi: float = 14.0
    bs_height_m: float = 32.0
    ue_height_m: float = 1.5

    def __post_init__(self):
        if self.kind not in ("omni", "sector3d"):
            raise ValueError(f"unknown antenna kind {self.kind!r}")
        if self.horizontal_3db_beamwidth_deg <= 0 or self.vertical_3db_beamwidth_deg <= 0:
            raise ValueError("beamwidths must be positive")


@dataclass(frozen=True)
class Sector:
    transmit_power_dbm: float = 49.0
    antenna: AntennaPattern = field(default_factory=AntennaPattern)

    def __post_init__(self):
        if not math.isfinite(self.transmit_power_dbm):
            raise ValueError("transmit power must be finite")


@dataclass(frozen=True)
class Site:
    position: tuple
    sectors: tuple

    def __post_init__(self):
        object.__setattr__(self, "position", (float(self.position[0]), float(self.position[1])))
        object.__setattr__(self, "sectors", tuple(self.sectors))
        if not self.sectors:
            raise ValueError("a site needs at least one sector")


@dataclass(frozen=True)
class Deployment:
    sites: tuple
    propagation: PropagationModel = field(default_factory=PropagationModel)
    ue_antenna_gain_dbi: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "sites", tuple(self.sites))
        if not self.sites:
            raise ValueError("a deployment needs at least one site")
        pos = [s.position for s in self.sites]
        if len(set(pos)) != len(pos):
            raise ValueError("site positions must be distinct")

    @property
    def num_sites(self):
        return len(self.sites)

    @property
    def positions(self):
        return np.array([s.position for s in self.sites])


def _sectorize(template, sectors_per_site, azimuth_offset_deg=0.0):
    if sectors_per_site == 1:
        return (template,)
    if sectors_per_site != 3:
        raise ValueError("sectors_per_site must be 1 or 3")
    return tuple(
        replace(template, antenna=replace(template.antenna, boresight_azimuth_deg=(az + azimuth_offset_deg) % 360.0))
        for az in THREE_SECTOR_BORESIGHTS
    )


def hex_ring_positions(num_rings, isd):
    """Site coordinates of a hexagonal lattice, ring by ring from the origin."""
    pos = [(0.0, 0.0)]
    # axial directions of a pointy-top lattice with sites on the x axis
    dirs = [(math.cos(math.radians(60 * k)), math.sin(math.radians(60 * k))) for k in range(6)]
    for ring in range(1, num_rings + 1):
        x, y = ring * isd * dirs[4][0], ring * isd * dirs[4][1]
        for side in range(6):
            dx, dy = dirs[side]
            for _ in range(ring):
                pos.append((round(x, 9), round(y, 9)))
                x += isd * dx
                y += isd * dy
    return pos


def build_hex_grid(num_rings, inter_site_distance_m=500.0, sector_template=None,
                   sectors_per_site=3, propagation=None, ue_antenna_gain_dbi=0.0,
                   azimuth_offset_deg=0.0):
    """Hexagonal deployment with ``1 + 3R(R+1)`` sites."""
    if num_rings < 0:
        raise ValueError("num_rings must be >= 0")
    if not inter_site_distance_m > 0:
        raise ValueError("inter_site_distance_m must be positive")
    if sector_template is None:
        kind = "omni" if sectors_per_site == 1 else "sector3d"
        sector_template = Sector(antenna=AntennaPattern(kind=kind))
    sectors = _sectorize(sector_template, sectors_per_site, azimuth_offset_deg)
    sites = [Site(p, sectors) for p in hex_ring_positions(num_rings, inter_site_distance_m)]
    return Deployment(tuple(sites), propagation or PropagationModel(), ue_antenna_gain_dbi)


PAPER12_TRIANGLES = ("sector-edge", "boresight")


def paper12_positions(isd=500.0, triangle="sector-edge"):
    """Twelve lattice sites closest to the centroid of one lattice triangle.

    The centre triangle (sites 0-2) is the evaluation area; the other nine
    sites form the surrounding interference tier.  Coordinates are relative
    to the triangle centroid.  With the 30/150/270 degree boresights a
    ``"sector-edge"`` triangle is seen by each of its sites along the border
    between two sectors, a ``"boresight"`` triangle is covered head-on by one
    sector of each site.
    """
    if triangle not in PAPER12_TRIANGLES:
        raise ValueError(f"triangle must be one of {PAPER12_TRIANGLES}")
    lattice = []
    for i in range(-4, 5):
        for j in range(-4, 5):
            lattice.append((isd * (i + 0.5 * j), isd * (math.sqrt(3) / 2) * j))
    a, b, c = np.array([0.0, 0.0]), np.array([isd, 0.0]), np.array([isd / 2, isd * math.sqrt(3) / 2])
    centroid = (a + b + c) / 3
    pts = np.array(lattice) - centroid
    if triangle == "sector-edge":
        pts = -pts
    d = np.round(np.hypot(pts[:, 0], pts[:, 1]) / isd, 9)
    # order by distance, then angle, so the output is deterministic
    ang = np.round(np.degrees(np.arctan2(pts[:, 1], pts[:, 0])) % 360.0, 6)
    order = np.lexsort((ang, d))[:12]
    return [(round(float(x), 9) + 0.0, round(float(y), 9) + 0.0) for x, y in pts[order]]


def paper12(inter_site_distance_m=500.0, sector_template=None, sectors_per_site=3,
            propagation=None, ue_antenna_gain_dbi=0.0, triangle="sector-edge"):
    """The twelve-site, three-sector evaluation layout."""
    if sector_template is None:
        sector_template = Sector()
    sectors = _sectorize(sector_template, sectors_per_site)
    sites = [Site(p, sectors) for p in paper12_positions(inter_site_distance_m, triangle)]
    return Deployment(tuple(sites), propagation or PropagationModel(), ue_antenna_gain_dbi)


def evaluation_triangle(deployment):
    """Vertices of the triangle spanned by the first three sites."""
    return [tuple(s.position) for s in deployment.sites[:3]]


def path_loss_db(model, distance_m):
    """Path loss in dB; rejects non-positive distances, clamps to ``min_distance_m``."""
    d = np.asarray(distance_m, dtype=float)
    if np.any(~(d > 0)):
        raise ValueError("distance must be positive")
    if model.min_distance_m:
        d = np.maximum(d, model.min_distance_m)
    out = model.pathloss_intercept_db + model.pathloss_exponent_coeff * np.log10(d / model.reference_distance_m)
    return float(out) if out.ndim == 0 else out


def _wrap180(a):
    return (np.asarray(a, dtype=float) + 180.0) % 360.0 - 180.0


def antenna_gain_db(pattern, ue_position, site_position):
    """Directional gain towards the UE, in dBi.

    Sector patterns combine a horizontal parabola ``-min(12(phi/phi3)^2, Am)``
    and a vertical one ``-min(12((theta - tilt)/theta3)^2, SLAv)``; the sum
    is floored at ``-Am``.  ``theta`` is the depression angle from the BS to
    the UE, computed from the configured heights.
    """
    if pattern.kind == "omni":
        return pattern.max_gain_dbi
    dx = ue_position[0] - site_position[0]
    dy = ue_position[1] - site_position[1]
    dist = math.hypot(dx, dy)
    phi = _wrap180(math.degrees(math.atan2(dy, dx)) - pattern.boresight_azimuth_deg)
    theta = math.degrees(math.atan2(pattern.bs_height_m - pattern.ue_height_m, dist))
    a_h = -min(12.0 * (float(phi) / pattern.horizontal_3db_beamwidth_deg) ** 2, pattern.max_attenuation_db)
    a_v = -min(12.0 * ((theta - pattern.downtilt_deg) / pattern.vertical_3db_beamwidth_deg) ** 2,
               pattern.sidelobe_attenuation_db)
    return pattern.max_gain_dbi - min(-(a_h + a_v), pattern.max_attenuation_db)


def _distance(ue_position, site):
    return math.hypot(ue_position[0] - site.position[0], ue_position[1] - site.position[1])


def mean_rx_power_dbm(deployment, ue_position, site_index, sector_index):
    """Transmit power + BS gain + UE gain - path loss."""
    site = deployment.sites[site_index]
    sector = site.sectors[sector_index]
    d = _distance(ue_position, site)
    return (sector.transmit_power_dbm
            + antenna_gain_db(sector.antenna, ue_position, site.position)
            + deployment.ue_antenna_gain_dbi
            - path_loss_db(deployment.propagation, d))


def sector_powers_dbm(deployment, ue_position, site_index):
    site = deployment.sites[site_index]
    return np.array([mean_rx_power_dbm(deployment, ue_position, site_index, s)
                     for s in range(len(site.sectors))])


def strongest_sector(deployment, ue_position, site_index):
    """Index of the sector with the highest mean received power (lowest on ties)."""
    return int(np.argmax(sector_powers_dbm(deployment, ue_position, site_index)))


def weaker_sector_ratio(deployment, ue_position, site_index):
    """Linear sum of the other sectors' gains relative to the strongest one."""
    p = sector_powers_dbm(deployment, ue_position, site_index)
    best = int(np.argmax(p))
    rest = np.delete(p, best)
    return float(np.sum(10.0 ** ((rest - p[best]) / 10.0)))


def site_gsec_db(deployment, ue_position, site_index):
    """Extra interfering power of a site's weaker sectors, in dB (>= 0)."""
    return 10.0 * math.log10(1.0 + weaker_sector_ratio(deployment, ue_position, site_index))


def distances_m(deployment, ue_position):
    return np.array([_distance(ue_position, s) for s in deployment.sites])


def site_path_losses_db(deployment, ue_position):
    return np.array([path_loss_db(deployment.propagation, max(d, 1e-9))
                     for d in distances_m(deployment, ue_position)])
