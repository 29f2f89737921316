"""Compiled inner loops for dB-domain density arithmetic.

All routines work on densities sampled on a uniform dB grid with spacing
``h`` and operate in *index units* (a position ``p`` means ``min_db + p*h``).
Everything here is pure array code; the object layer lives in
:mod:`sinrmodel.griddist`.
"""
from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from numba import njit

DB_PER_NEPER = 10.0 / math.log(10.0)
EQUAL_POWER_DB = 10.0 * math.log10(2.0)


@lru_cache(maxsize=16)
def conv_tables(step):
    """Precompute the quadrature tables of the logarithmic convolution.

    For a node ``z = r - k*h`` below the output node ``r`` the partner power is
    ``D(r, z) = r + d_k`` with ``d_k = 10*log10(1 - 10**(-k*h/10))``.  Nodes with
    ``k*h`` below the equal-power split are handled by the mirrored term, so
    only ``k >= kc`` appears.  For ``k < k0`` the offset ``d_k`` reaches past
    the neighbouring node and the term is evaluated directly.  From ``k0`` on,
    linear interpolation only touches ``fd[r]`` and ``fd[r-1]`` and the
    weights are power series in ``u = 10**(-k*h/10)``, summed by recursion.
    """
    h = float(step)
    kc = int(math.ceil(EQUAL_POWER_DB / h - 1e-9))
    tau = kc * h - EQUAL_POWER_DB
    q = 10.0 ** (-h / 10.0)

    k0 = kc + 1
    while -10.0 * math.log10(1.0 - q**k0) >= h:
        k0 += 1

    ks = np.arange(kc, k0)
    u = q ** ks.astype(float)
    p = -10.0 * np.log10(1.0 - u) / h
    nk = np.floor(p).astype(np.int64)
    tk = p - nk
    jk = 1.0 / (1.0 - u)

    kappa = DB_PER_NEPER / h
    u0 = q**k0
    harm = [0.0]
    m = 1
    while True:
        harm.append(harm[-1] + 1.0 / m)
        if kappa * harm[m] * u0**m < 1e-18 and u0**m < 1e-18:
            break
        m += 1
    nterms = len(harm)
    harm = np.asarray(harm)
    alpha = 1.0 - kappa * harm
    alpha[0] = 1.0
    beta = kappa * harm
    beta[0] = 0.0
    qm = q ** np.arange(nterms, dtype=float)
    qk0m = u0 ** np.arange(nterms, dtype=float)
    return (kc, tau, k0, nk, tk, jk, qm, qk0m, alpha, beta)


@njit(cache=True)
def _support(f):
    n = f.shape[0]
    lo = 0
    while lo < n and f[lo] == 0.0:
        lo += 1
    hi = n - 1
    while hi >= 0 and f[hi] == 0.0:
        hi -= 1
    return lo, hi


@njit(cache=True)
def _interp(f, pos):
    n = f.shape[0]
    if pos < 0.0 or pos > n - 1:
        return 0.0
    i = int(math.floor(pos))
    if i >= n - 1:
        return f[n - 1]
    t = pos - i
    return f[i] + t * (f[i + 1] - f[i])


@njit(cache=True)
def cumulative(f, h):
    """Trapezoidal running integral, ``c[0] = 0``."""
    n = f.shape[0]
    c = np.empty(n)
    acc = 0.0
    c[0] = 0.0
    for i in range(1, n):
        acc += 0.5 * h * (f[i - 1] + f[i])
        c[i] = acc
    return c


@njit(cache=True)
def cdf_at(f, c, h, pos):
    """Exact integral of the piecewise-linear density up to ``pos``."""
    n = f.shape[0]
    if pos <= 0.0:
        return 0.0
    if pos >= n - 1:
        return c[n - 1]
    i = int(math.floor(pos))
    t = pos - i
    fi = f[i] + t * (f[i + 1] - f[i])
    return c[i] + 0.5 * t * h * (f[i] + fi)


@njit(cache=True)
def truncate_into(f, c, h, pos, out):
    """Clip ``f`` above index position ``pos`` keeping trapezoidal mass exact.

    The node just below the cut absorbs the partial-cell mass, so the clipped
    array integrates (trapezoidally) to exactly ``cdf_at(pos)``.  Returns the
    retained mass.
    """
    n = f.shape[0]
    if pos < 0.0:
        out[:] = 0.0
        return 0.0
    if pos >= n - 1:
        out[:] = f
        return c[n - 1]
    i = int(math.floor(pos))
    target = cdf_at(f, c, h, pos)
    out[:i] = f[:i]
    out[i + 1:] = 0.0
    if i == 0:
        out[0] = 2.0 * target / h
    else:
        out[i] = 0.5 * f[i] + (target - c[i]) / h
    return target


@njit(cache=True, fastmath=True)
def _half(fz, fd, out, h, kc, tau, k0, nk, tk, jk, qm, qk0m, alpha, beta):
    # Adds  int_{z <= r - 3.01 dB} fz(z) fd(D(r, z)) J(r, z) dz  to out[r].
    n = fz.shape[0]
    az, bz = _support(fz)
    ad, bd = _support(fd)
    if az > bz or ad > bd:
        return
    r_lo = max(az + kc - 1, ad, 0)
    r_hi = min(n - 1, bd + kc + 1)
    if r_lo > r_hi:
        return
    fzw = fz.copy()
    fzw[0] *= 0.5

    # far part (k >= k0): power-series recursion over r
    nterms = qm.shape[0]
    g = np.zeros(nterms)
    for r in range(min(r_lo, az + k0), r_hi + 1):
        src = r - k0
        v = 0.0
        if src >= az and src <= bz:
            v = fzw[src]
        sa = 0.0
        sb = 0.0
        for m in range(nterms):
            g[m] = qm[m] * g[m] + qk0m[m] * v
            sa += alpha[m] * g[m]
            sb += beta[m] * g[m]
        if r >= r_lo:
            acc = sa * fd[r]
            if r >= 1:
                acc += sb * fd[r - 1]
            out[r] += h * acc

    # near part (kc <= k < k0): direct sum over k, contiguous views so the
    # inner loop vectorises
    for j in range(k0 - kc):
        k = kc + j
        w = h
        if k == kc:
            w = 0.5 * h + 0.5 * tau
        cw = w * jk[j]
        a = cw * (1.0 - tk[j])
        b = cw * tk[j]
        nn = nk[j]
        lo = max(r_lo, az + k, ad + nn, nn + 1)
        hi = min(r_hi, bz + k, bd + nn + 1) + 1
        if hi > lo:
            o = out[lo:hi]
            x = fzw[lo - k:hi - k]
            y = fd[lo - nn:hi - nn]
            z = fd[lo - nn - 1:hi - nn - 1]
            for r in range(hi - lo):
                o[r] += x[r] * (a * y[r] + b * z[r])
        # node r - nn == 0 has no lower neighbour
        if nn >= r_lo and nn <= r_hi and nn - k >= az and nn - k <= bz and nn - k >= 0:
            out[nn] += a * fzw[nn - k] * fd[0]

    # partial cell up to the equal-power split at r - kc + tau/h
    if tau > 0.0:
        phi = tau / h
        lo = max(r_lo, kc)
        hi = r_hi + 1
        if hi > lo:
            o = out[lo:hi]
            z0 = fz[lo - kc:hi - kc]
            z1 = fz[lo - kc + 1:hi - kc + 1]
            d0 = fd[lo - kc:hi - kc]
            d1 = fd[lo - kc + 1:hi - kc + 1]
            for r in range(hi - lo):
                o[r] += tau * ((1.0 - phi) * z0[r] + phi * z1[r]) * ((1.0 - phi) * d0[r] + phi * d1[r])


@njit(cache=True)
def log_conv(fx, fy, h, kc, tau, k0, nk, tk, jk, qm, qk0m, alpha, beta):
    """Density of ``10log10(10^(X/10) + 10^(Y/10))`` on the common grid."""
    out = np.zeros(fx.shape[0])
    _half(fx, fy, out, h, kc, tau, k0, nk, tk, jk, qm, qk0m, alpha, beta)
    _half(fy, fx, out, h, kc, tau, k0, nk, tk, jk, qm, qk0m, alpha, beta)
    return out


@njit(cache=True)
def _sum_pos(pos, cpos, h):
    # index position of the dB power sum of two index positions
    hi = max(pos, cpos)
    lo = min(pos, cpos)
    return hi + DB_PER_NEPER / h * math.log1p(10.0 ** (-(hi - lo) * h / 10.0))


@njit(cache=True)
def point_conv(f, h, cpos, weight):
    """Log-convolve a gridded density with a point mass at index ``cpos``.

    The result's CDF is exactly ``F(D(r, c))``; node densities are cell
    averages over ``[r - h/2, r + h/2]`` so the total mass is preserved and
    the pile-up just above ``c`` stays integrable.
    """
    n = f.shape[0]
    c = cumulative(f, h)
    out = np.zeros(n)
    scale = 10.0 / h
    prev = 0.0
    for i in range(n + 1):
        e = i - 0.5
        cur = 0.0
        if e > cpos:
            # D(e, c) in index units
            dpos = e + scale * math.log10(-math.expm1(-(e - cpos) * h / DB_PER_NEPER))
            cur = cdf_at(f, c, h, dpos)
        if i >= 1:
            out[i - 1] = weight * (cur - prev) / h
        prev = cur
    return out


@njit(cache=True)
def deposit_point(out, pos, mass, h):
    """Linear (cloud-in-cell) deposit of ``mass`` at index position ``pos``."""
    n = out.shape[0]
    i = int(math.floor(pos))
    t = pos - i
    if 0 <= i < n:
        out[i] += (1.0 - t) * mass / h
    if 0 <= i + 1 < n:
        out[i + 1] += t * mass / h


@njit(cache=True)
def best_server_sweep(serv, interf, interf_shift, noise_kind, noise_f, noise_pos,
                      h, threshold, isr_len, isr_offset,
                      kc, tau, k0, nk, tk, jk, qm, qk0m, alpha, beta):
    """Accumulate the interference-to-signal density of one serving site.

    For every serving-power node ``s`` the interferers (rows of ``interf``,
    already shifted by their weaker-sector gain) are clipped at
    ``s + interf_shift[j]`` without renormalisation, log-convolved in row
    order, combined with the noise and deposited at ``ISR = y - s`` with
    weight ``serv[s]`` times the trapezoid weight.  The clipped masses carry
    the product of interferer CDFs, so the deposited mass equals the
    association weight density.

    noise_kind: 0 none, 1 point mass at ``noise_pos``, 2 gridded ``noise_f``.
    Returns (isr density, association probability, skipped mass).
    """
    n = serv.shape[0]
    nint = interf.shape[0]
    isr = np.zeros(isr_len)
    cums = np.empty((nint, n))
    for j in range(nint):
        cums[j] = cumulative(interf[j], h)
    tmp = np.empty((nint, n))
    masses = np.empty(nint)
    assoc = 0.0
    skipped = 0.0
    for s in range(n):
        fs = serv[s]
        if fs == 0.0:
            continue
        ws = h
        if s == 0 or s == n - 1:
            ws = 0.5 * h
        prod = 1.0
        for j in range(nint):
            masses[j] = cdf_at(interf[j], cums[j], h, s + interf_shift[j])
            prod *= masses[j]
        weight = fs * ws * prod
        if weight == 0.0:
            continue
        assoc += weight
        if weight < threshold:
            skipped += weight
            continue
        scale = fs * ws
        if nint == 0:
            if noise_kind == 1:
                deposit_point(isr, noise_pos - s + isr_offset, scale, h)
            elif noise_kind == 2:
                for y in range(n):
                    isr[y - s + isr_offset] += scale * noise_f[y]
            continue
        for j in range(nint):
            truncate_into(interf[j], cums[j], h, s + interf_shift[j], tmp[j])
        acc = tmp[0].copy()
        for j in range(1, nint):
            acc = log_conv(acc, tmp[j], h, kc, tau, k0, nk, tk, jk, qm, qk0m, alpha, beta)
        if noise_kind == 1:
            acc = point_conv(acc, h, noise_pos, 1.0)
        elif noise_kind == 2:
            acc = log_conv(acc, noise_f, h, kc, tau, k0, nk, tk, jk, qm, qk0m, alpha, beta)
        for y in range(n):
            v = acc[y]
            if v != 0.0:
                isr[y - s + isr_offset] += scale * v
    return isr, assoc, skipped
