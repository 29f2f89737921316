"""Probability distributions of dB-domain quantities on a uniform grid.

A distribution is one of

* :class:`Gridded` -- a density (1/dB) sampled on a :class:`DbGrid`, read with
  linear interpolation between nodes and integrated with the trapezoid rule,
  optionally carrying exact CDF values at its nodes;
* :class:`PointMass` -- a deterministic value (e.g. noise when no shadowing
  component is attached to it);
* :class:`Zero` -- an identically-zero sub-distribution (impossible branch);
* :data:`NO_POWER` -- the identity of :func:`log_convolve`, i.e. a power of
  zero milliwatts ("no interferer").

Densities may be sub-probability: their trapezoidal mass is reported by
:func:`total_mass` and is preserved by every operation, so mixture weights
survive arithmetic.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from . import _kernels as _k

ALIGN_TOL = 1e-6
TRUNCATION_EPS = 1e-300


class NumericalAccuracyError(ArithmeticError):
    """Raised when a numerical result violates its mass-conservation contract."""


@dataclass(frozen=True)
class DbGrid:
    """Uniform grid ``min_db, min_db + step_db, ..., max_db``."""

    min_db: float
    step_db: float
    size: int

    def __post_init__(self):
        if not self.step_db > 0:
            raise ValueError("step_db must be positive")
        if self.size < 2:
            raise ValueError("a grid needs at least two nodes")

    @classmethod
    def from_range(cls, min_db, max_db, step_db=0.1):
        if not max_db > min_db:
            raise ValueError("max_db must exceed min_db")
        if not step_db > 0:
            raise ValueError("step_db must be positive")
        size = int(round((max_db - min_db) / step_db)) + 1
        return cls(float(min_db), float(step_db), size)

    @property
    def max_db(self):
        return self.min_db + (self.size - 1) * self.step_db

    @property
    def nodes(self):
        return self.min_db + self.step_db * np.arange(self.size)

    def position(self, x_db):
        """Fractional node index of ``x_db``."""
        return (np.asarray(x_db, dtype=float) - self.min_db) / self.step_db

    def aligned_with(self, other):
        if abs(self.step_db - other.step_db) > ALIGN_TOL * self.step_db:
            return False
        off = (self.min_db - other.min_db) / self.step_db
        return abs(off - round(off)) < ALIGN_TOL


@dataclass(frozen=True, eq=False)
class Gridded:
    """Density on a grid.

    ``node_cdf``, when given, holds CDF values at the nodes that are more
    accurate than the trapezoid partial sums of ``density`` (a power sum with
    a point mass can pile almost all of its mass into a fraction of a cell).
    Between nodes the CDF then follows the shape of the density inside the
    cell, scaled to the node values.
    """

    grid: DbGrid
    density: np.ndarray = field(repr=False)
    node_cdf: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        d = np.ascontiguousarray(self.density, dtype=float)
        if d.shape != (self.grid.size,):
            raise ValueError("density length does not match the grid")
        if np.any(d < 0) or not np.all(np.isfinite(d)):
            raise ValueError("density must be finite and non-negative")
        d.setflags(write=False)
        object.__setattr__(self, "density", d)
        if self.node_cdf is not None:
            c = np.ascontiguousarray(self.node_cdf, dtype=float)
            if c.shape != d.shape or not np.all(np.isfinite(c)) or c[0] < -1e-12:
                raise ValueError("node_cdf must be finite, non-negative and match the grid")
            c = np.maximum.accumulate(np.maximum(c, 0.0))
            c.setflags(write=False)
            object.__setattr__(self, "node_cdf", c)

    @property
    def mass(self):
        if self.node_cdf is not None:
            return float(self.node_cdf[-1])
        h = self.grid.step_db
        d = self.density
        return float(h * (d.sum() - 0.5 * (d[0] + d[-1])))


@dataclass(frozen=True)
class PointMass:
    location_db: float
    weight: float = 1.0

    @property
    def mass(self):
        return self.weight


@dataclass(frozen=True)
class Zero:
    @property
    def mass(self):
        return 0.0


@dataclass(frozen=True)
class NoPower:
    """Power of exactly 0 mW; the neutral element of :func:`log_convolve`."""

    @property
    def mass(self):
        return 1.0


NO_POWER = NoPower()
ZERO = Zero()

Dist = Union[Gridded, PointMass, Zero, NoPower]


def make_grid(p_max_dbm, span_below_db=80.0, span_above_db=40.0, step_db=0.1):
    """Power grid around the strongest mean received power.

    >>> make_grid(-60.0).size
    1201
    """
    if span_below_db <= 0 or span_above_db <= 0:
        raise ValueError("grid spans must be positive")
    return DbGrid.from_range(p_max_dbm - span_below_db, p_max_dbm + span_above_db, step_db)


def gaussian_on_grid(grid, mean_db, std_db):
    """Normal density on ``grid`` renormalised to unit trapezoidal mass.

    ``std_db == 0`` gives a :class:`PointMass`.  A mean lying more than ten
    standard deviations outside the grid cannot be represented and raises
    ``ValueError``.
    """
    if std_db < 0:
        raise ValueError("std_db must be non-negative")
    if std_db == 0:
        return PointMass(float(mean_db))
    if mean_db < grid.min_db - 10 * std_db or mean_db > grid.max_db + 10 * std_db:
        raise ValueError(
            f"Gaussian N({mean_db:.2f}, {std_db:.2f}) lies outside the grid "
            f"[{grid.min_db:.2f}, {grid.max_db:.2f}]"
        )
    z = (grid.nodes - mean_db) / std_db
    dens = np.exp(-0.5 * z * z) / (std_db * math.sqrt(2 * math.pi))
    out = Gridded(grid, dens)
    m = out.mass
    if not m > 0:
        raise ValueError("Gaussian has no mass on the grid")
    return Gridded(grid, dens / m)


def total_mass(dist):
    return dist.mass


def _cum(dist):
    if dist.node_cdf is not None:
        return dist.node_cdf
    return _k.cumulative(np.asarray(dist.density), dist.grid.step_db)


def _cell_fraction(f0, f1, t):
    # share of the cell integral of the linear interpolant reached at t
    total = f0 + f1
    part = t * (2 * f0 + t * (f1 - f0))
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(total > 0, part / np.where(total > 0, total, 1.0), t)


def cdf(dist, x_db):
    """Cumulative probability up to ``x_db`` (scalar or array).

    For gridded densities this integrates the linear interpolant exactly, so
    the values at nodes are the trapezoidal partial sums (or ``node_cdf``).
    """
    x = np.asarray(x_db, dtype=float)
    if isinstance(dist, Gridded):
        g = dist.grid
        c = _cum(dist)
        f = dist.density
        raw = g.position(x)
        pos = np.clip(raw, 0.0, g.size - 1)
        i = np.minimum(np.floor(pos).astype(int), g.size - 2)
        t = pos - i
        out = c[i] + (c[i + 1] - c[i]) * _cell_fraction(f[i], f[i + 1], t)
        out = np.where(raw < 0, 0.0, out)
    elif isinstance(dist, PointMass):
        out = np.where(x >= dist.location_db, dist.weight, 0.0)
    elif isinstance(dist, NoPower):
        out = np.ones_like(x)
    else:
        out = np.zeros_like(x)
    return float(out) if out.ndim == 0 else out


def outage(dist, x_db):
    """Probability that the quantity falls at or below ``x_db``."""
    return cdf(dist, x_db)


def quantile(dist, p):
    """Generalised inverse of :func:`cdf` (smallest ``x`` with ``cdf(x) >= p``)."""
    m = dist.mass
    if not 0 < p < m + 1e-12:
        raise ValueError(f"probability {p} outside (0, {m})")
    if isinstance(dist, PointMass):
        return dist.location_db
    if not isinstance(dist, Gridded):
        raise ValueError("quantile undefined for this distribution")
    g = dist.grid
    h = g.step_db
    f = dist.density
    c = _cum(dist)
    i = int(np.searchsorted(c, p, side="left"))
    if i == 0:
        return g.min_db
    if i >= g.size:
        return g.max_db
    i -= 1
    # solve c[i] + h*(f_i t + (f_{i+1}-f_i) t^2 / 2) = p for t in [0, 1],
    # with the cell integral rescaled to the node CDF increment
    inc = c[i + 1] - c[i]
    cell = 0.5 * h * (f[i] + f[i + 1])
    if inc <= 0:
        return g.min_db + i * h
    if cell <= 0:
        return g.min_db + (i + min(max((p - c[i]) / inc, 0.0), 1.0)) * h
    rem = (p - c[i]) / h * cell / inc
    a = 0.5 * (f[i + 1] - f[i])
    b = f[i]
    if abs(a) < 1e-14 * max(b, 1e-300):
        t = rem / b if b > 0 else 1.0
    else:
        disc = max(b * b + 4 * a * rem, 0.0)
        t = 2 * rem / (b + math.sqrt(disc))
    return g.min_db + (i + min(max(t, 0.0), 1.0)) * h


def _with_mass(dist, weight):
    if weight == 0:
        return ZERO
    if isinstance(dist, Gridded):
        c = None if dist.node_cdf is None else dist.node_cdf * weight
        return Gridded(dist.grid, dist.density * weight, c)
    if isinstance(dist, PointMass):
        return PointMass(dist.location_db, dist.weight * weight)
    raise TypeError(f"cannot rescale {type(dist).__name__}")


def scale(dist, factor):
    """Multiply the mass of ``dist`` by ``factor``."""
    return _with_mass(dist, factor)


def truncate_above(dist, p_s_dbm):
    """Clip the distribution above ``p_s_dbm`` without renormalising.

    The retained mass equals ``cdf(dist, p_s_dbm)`` exactly.
    """
    if isinstance(dist, Gridded):
        g = dist.grid
        pos = float(g.position(p_s_dbm))
        if pos >= g.size - 1:
            return dist
        out = np.empty(g.size)
        m = _k.truncate_into(np.asarray(dist.density), _cum(dist), g.step_db, pos, out)
        if m <= TRUNCATION_EPS:
            return ZERO
        return Gridded(g, out)
    if isinstance(dist, PointMass):
        return dist if dist.location_db <= p_s_dbm else ZERO
    if isinstance(dist, NoPower):
        return dist
    return ZERO


def truncate_above_normalized(dist, p_s_dbm):
    """Distribution conditioned on not exceeding ``p_s_dbm``."""
    out = truncate_above(dist, p_s_dbm)
    if isinstance(out, (Zero, NoPower)):
        return out
    m = out.mass
    if m < TRUNCATION_EPS:
        return ZERO
    return _with_mass(out, 1.0 / m)


def shift(dist, delta_db):
    """Distribution of ``X + delta_db``; exact (moves the grid)."""
    if isinstance(dist, Gridded):
        g = dist.grid
        return Gridded(DbGrid(g.min_db + delta_db, g.step_db, g.size), dist.density, dist.node_cdf)
    if isinstance(dist, PointMass):
        return PointMass(dist.location_db + delta_db, dist.weight)
    return dist


def negate(dist):
    """Distribution of ``-X``."""
    if isinstance(dist, Gridded):
        g = dist.grid
        c = None if dist.node_cdf is None else dist.mass - dist.node_cdf[::-1]
        return Gridded(DbGrid(-g.max_db, g.step_db, g.size), dist.density[::-1], c)
    if isinstance(dist, PointMass):
        return PointMass(-dist.location_db, dist.weight)
    if isinstance(dist, NoPower):
        raise ValueError("negating a zero power is undefined")
    return dist


def resample(dist, grid):
    """Put ``dist`` on ``grid``.

    Aligned grids are copied node by node; otherwise the density is linearly
    interpolated.  A point mass becomes a hat of width two cells with the
    same mass.  Node CDF values, if present, are re-evaluated on ``grid``.
    """
    if isinstance(dist, Gridded):
        src = dist.grid
        node_cdf = None if dist.node_cdf is None else cdf(dist, grid.nodes)
        if src.aligned_with(grid):
            off = int(round((src.min_db - grid.min_db) / grid.step_db))
            out = np.zeros(grid.size)
            lo = max(off, 0)
            hi = min(off + src.size, grid.size)
            if hi > lo:
                out[lo:hi] = dist.density[lo - off:hi - off]
            return Gridded(grid, out, node_cdf)
        out = np.interp(grid.nodes, src.nodes, dist.density, left=0.0, right=0.0)
        return Gridded(grid, out, node_cdf)
    if isinstance(dist, PointMass):
        out = np.zeros(grid.size)
        _k.deposit_point(out, float(grid.position(dist.location_db)), dist.weight, grid.step_db)
        return Gridded(grid, out)
    if isinstance(dist, Zero):
        return Gridded(grid, np.zeros(grid.size))
    raise ValueError("cannot grid a zero power")


def union_grid(grids):
    """Smallest grid aligned with the first that covers all ``grids``."""
    grids = list(grids)
    base = grids[0]
    h = base.step_db
    lo = min(g.min_db for g in grids)
    hi = max(g.max_db for g in grids)
    k_lo = math.floor((lo - base.min_db) / h + ALIGN_TOL)
    k_hi = math.ceil((hi - base.min_db) / h - ALIGN_TOL)
    return DbGrid(base.min_db + k_lo * h, h, k_hi - k_lo + 1)


def mixture(dists):
    """Sum of (sub-)distributions, on the union of their grids."""
    dists = [d for d in dists if not isinstance(d, Zero)]
    if not dists:
        return ZERO
    gridded = [d for d in dists if isinstance(d, Gridded)]
    if not gridded:
        if len(dists) == 1:
            return dists[0]
        raise ValueError("a mixture of point masses needs a grid; resample first")
    g = union_grid([d.grid for d in gridded])
    out = np.zeros(g.size)
    parts = [resample(d, g) for d in dists]
    for r in parts:
        out += r.density
    if all(r.node_cdf is None for r in parts):
        return Gridded(g, out)
    return Gridded(g, out, sum(_cum(r) for r in parts))


def trim(dist, tiny=0.0):
    """Drop leading and trailing nodes whose density is ``<= tiny``."""
    if not isinstance(dist, Gridded):
        return dist
    nz = np.nonzero(dist.density > tiny)[0]
    if nz.size == 0:
        return ZERO
    lo = max(nz[0] - 1, 0)
    hi = min(nz[-1] + 1, dist.grid.size - 1)
    if hi - lo < 1:
        hi = lo + 1
    g = dist.grid
    c = None if dist.node_cdf is None else dist.node_cdf[lo:hi + 1]
    return Gridded(DbGrid(g.min_db + lo * g.step_db, g.step_db, hi - lo + 1), dist.density[lo:hi + 1], c)


def _db_sum(a, b):
    hi, lo = max(a, b), min(a, b)
    return hi + 10 * math.log10(1 + 10 ** ((lo - hi) / 10))


def _db_difference(r, c):
    """``10log10(10^(r/10) - 10^(c/10))``, minus infinity where ``r <= c``."""
    r = np.asarray(r, dtype=float)
    gap = np.maximum(r - c, 0.0)
    with np.errstate(divide="ignore"):
        return np.where(r > c, r + 10 * np.log10(-np.expm1(-gap * math.log(10) / 10)), -np.inf)


def log_convolve(fx, fy, *, check=True):
    """Distribution of the power sum ``10log10(10^(X/10) + 10^(Y/10))``.

    Both gridded operands must share one grid; the result lives on the same
    grid (build it with headroom above the operands).  Raises
    :class:`NumericalAccuracyError` when the result mass departs from the
    product of the input masses by more than 1e-3 (relative).
    """
    if isinstance(fx, NoPower):
        return fy
    if isinstance(fy, NoPower):
        return fx
    if isinstance(fx, Zero) or isinstance(fy, Zero):
        return ZERO
    if isinstance(fx, PointMass) and isinstance(fy, PointMass):
        return PointMass(_db_sum(fx.location_db, fy.location_db), fx.weight * fy.weight)
    if isinstance(fx, PointMass):
        fx, fy = fy, fx
    g = fx.grid
    h = g.step_db
    node_cdf = None
    if isinstance(fy, PointMass):
        dens = _k.point_conv(np.asarray(fx.density), h, float(g.position(fy.location_db)), fy.weight)
        node_cdf = fy.weight * cdf(fx, _db_difference(g.nodes, fy.location_db))
    else:
        if fy.grid != g:
            if not fy.grid.aligned_with(g):
                raise ValueError("log_convolve needs operands on one grid")
            g = union_grid([g, fy.grid])
            fx, fy = resample(fx, g), resample(fy, g)
        dens = _k.log_conv(np.asarray(fx.density), np.asarray(fy.density), h, *_k.conv_tables(h))
    out = Gridded(g, np.maximum(dens, 0.0), node_cdf)
    if check:
        expected = fx.mass * fy.mass
        if abs(out.mass - expected) > 1e-3 * expected:
            raise NumericalAccuracyError(
                f"log-convolution mass {out.mass:.6g} deviates from {expected:.6g}; "
                "grid too narrow or too coarse"
            )
    return out


def cross_difference(fx, fy):
    """Distribution of ``X - Y`` for independent ``X`` and ``Y`` (both in dB)."""
    if isinstance(fx, Zero) or isinstance(fy, Zero):
        return ZERO
    if isinstance(fx, NoPower) or isinstance(fy, NoPower):
        raise ValueError("difference with a zero power is unbounded")
    if isinstance(fy, PointMass):
        return _with_mass(shift(fx, -fy.location_db), fy.weight) if not isinstance(fx, PointMass) \
            else PointMass(fx.location_db - fy.location_db, fx.weight * fy.weight)
    if isinstance(fx, PointMass):
        return _with_mass(shift(negate(fy), fx.location_db), fx.weight)
    gx, gy = fx.grid, fy.grid
    if abs(gx.step_db - gy.step_db) > ALIGN_TOL * gx.step_db:
        raise ValueError("cross_difference needs equal grid steps")
    h = gx.step_db
    wx = np.array(fx.density)
    wx[0] *= 0.5
    wx[-1] *= 0.5
    # out[m] = h * sum_n fx[n] fy[n - m'] with m' running over all offsets
    dens = np.convolve(wx, fy.density[::-1]) * h
    min_db = gx.min_db - gy.max_db
    return Gridded(DbGrid(min_db, h, dens.size), np.maximum(dens, 0.0))


def to_csv(dist, path):
    """Write ``db,density,cdf`` rows (header included)."""
    if not isinstance(dist, Gridded):
        raise ValueError("only gridded distributions can be dumped")
    c = cdf(dist, dist.grid.nodes)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("db,density,cdf\n")
        for x, d, p in zip(dist.grid.nodes, dist.density, c):
            fh.write(f"{x:.4f},{d:.12g},{p:.12g}\n")
