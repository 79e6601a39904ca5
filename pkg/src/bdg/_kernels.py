"""Compiled inner loops of the Strang splitting integrator.

All kernels act in place on *folded* arrays: each entry stands for an orbit
of modes with multiplicity ``w`` (1 or 2, see ``dynamics._Folding``). Every
reduction is the weighted pairwise sum :func:`wsum`, evaluated in a fixed
order so repeated runs are bit-identical.

A call to ``advance_*`` performs ``nsteps`` complete Strang steps
``kin(tau/2) o rk4(tau) o kin(tau/2)``; interior half-steps are fused into
one full kinetic rotation. The ``advance_*`` kernels release the GIL so
independent runs can share a thread pool.
"""

import numpy as np
from numba import njit

_BLOCK = 128


@njit(cache=True)
def _block_sum(x, w, lo, hi):
    r0 = r1 = r2 = r3 = 0.0
    i0 = i1 = i2 = i3 = 0.0
    m = lo + (hi - lo) // 4 * 4
    for j in range(lo, m, 4):
        v = x[j] * w[j]
        r0 += v.real
        i0 += v.imag
        v = x[j + 1] * w[j + 1]
        r1 += v.real
        i1 += v.imag
        v = x[j + 2] * w[j + 2]
        r2 += v.real
        i2 += v.imag
        v = x[j + 3] * w[j + 3]
        r3 += v.real
        i3 += v.imag
    re = (r0 + r1) + (r2 + r3)
    im = (i0 + i1) + (i2 + i3)
    for j in range(m, hi):
        v = x[j] * w[j]
        re += v.real
        im += v.imag
    return complex(re, im)


@njit(cache=True)
def wsum(x, w):
    """Pairwise sum of ``w * x``: blocks of 128, then a binary tree."""
    n = x.size
    nb = (n + _BLOCK - 1) // _BLOCK
    if nb == 0:
        return 0j
    part = np.empty(nb, dtype=np.complex128)
    for b in range(nb):
        hi = min(n, (b + 1) * _BLOCK)
        part[b] = _block_sum(x, w, b * _BLOCK, hi)
    while nb > 1:
        half = nb // 2
        for b in range(half):
            part[b] = part[2 * b] + part[2 * b + 1]
        if nb % 2:
            part[half] = part[nb - 1]
            nb = half + 1
        else:
            nb = half
    return part[0]


@njit(cache=True)
def _rotate(alpha, phase):
    for i in range(alpha.size):
        alpha[i] *= phase[i]


@njit(cache=True, nogil=True)
def advance_full(gamma, alpha, w, ph_half, ph_full, g, tau, nsteps):
    """Full coupled system; the interaction flow is

    ``gamma' = 4 g Im(conj(c) alpha)``, ``alpha' = -2i g c (2 gamma - 1)``
    with ``c = sum_k alpha(k)``.
    """
    if nsteps <= 0:
        return
    K = alpha.size
    ya = np.empty_like(alpha)
    yg = np.empty_like(gamma)
    acc_a = np.empty_like(alpha)
    acc_g = np.empty_like(gamma)
    ht = 0.5 * tau
    g2 = 2.0 * g
    g4 = 4.0 * g
    _rotate(alpha, ph_half)
    for n in range(nsteps):
        c = wsum(alpha, w)
        for i in range(K):
            v = alpha[i]
            s = g2 * (2.0 * gamma[i] - 1.0)
            ka = complex(s * c.imag, -s * c.real)
            kg = g4 * (c.real * v.imag - c.imag * v.real)
            acc_a[i] = ka
            acc_g[i] = kg
            ya[i] = v + ht * ka
            yg[i] = gamma[i] + ht * kg
        c = wsum(ya, w)
        for i in range(K):
            v = ya[i]
            s = g2 * (2.0 * yg[i] - 1.0)
            ka = complex(s * c.imag, -s * c.real)
            kg = g4 * (c.real * v.imag - c.imag * v.real)
            acc_a[i] += 2.0 * ka
            acc_g[i] += 2.0 * kg
            ya[i] = alpha[i] + ht * ka
            yg[i] = gamma[i] + ht * kg
        c = wsum(ya, w)
        for i in range(K):
            v = ya[i]
            s = g2 * (2.0 * yg[i] - 1.0)
            ka = complex(s * c.imag, -s * c.real)
            kg = g4 * (c.real * v.imag - c.imag * v.real)
            acc_a[i] += 2.0 * ka
            acc_g[i] += 2.0 * kg
            ya[i] = alpha[i] + tau * ka
            yg[i] = gamma[i] + tau * kg
        c = wsum(ya, w)
        sixth = tau / 6.0
        last = n == nsteps - 1
        for i in range(K):
            v = ya[i]
            s = g2 * (2.0 * yg[i] - 1.0)
            ka = complex(s * c.imag, -s * c.real)
            kg = g4 * (c.real * v.imag - c.imag * v.real)
            gamma[i] += sixth * (acc_g[i] + kg)
            a_new = alpha[i] + sixth * (acc_a[i] + ka)
            alpha[i] = a_new * (ph_half[i] if last else ph_full[i])


@njit(cache=True)
def _reduced_stage(src, base, acc, y, haux, coef, c, h, weight, clamp_tol, stage):
    """One RK4 stage of ``alpha' = -i coef sqrt(haux - |alpha|^2) c``.

    Returns ``(worst_excess, bad_index)``; ``bad_index >= 0`` flags a
    radicand below ``-clamp_tol``.
    """
    worst = 0.0
    bad = -1
    for i in range(src.size):
        v = src[i]
        r = haux[i] - (v.real * v.real + v.imag * v.imag)
        if r < 0.0:
            if -r > worst:
                worst = -r
            if -r > clamp_tol and bad < 0:
                bad = i
            r = 0.0
        s = coef[i] * np.sqrt(r)
        k = complex(s * c.imag, -s * c.real)
        if stage == 0:
            acc[i] = k
            y[i] = base[i] + h * k
        elif stage < 3:
            acc[i] += weight * k
            y[i] = base[i] + h * k
        else:
            y[i] = base[i] + h * (acc[i] + k)
    return worst, bad


@njit(cache=True)
def _degenerate_stage(va, src_g, base, gdeg, acc, y, acc_g, y_g, idx, c, h, weight, g, stage):
    """Full-system update of the few modes whose occupation is carried explicitly."""
    for j in range(idx.size):
        i = idx[j]
        v = va[j]
        s = 2.0 * g * (2.0 * src_g[j] - 1.0)
        ka = complex(s * c.imag, -s * c.real)
        kg = 4.0 * g * (c.real * v.imag - c.imag * v.real)
        if stage == 0:
            acc[i] = ka
            acc_g[j] = kg
            y[i] = base[i] + h * ka
            y_g[j] = gdeg[j] + h * kg
        elif stage < 3:
            acc[i] += weight * ka
            acc_g[j] += weight * kg
            y[i] = base[i] + h * ka
            y_g[j] = gdeg[j] + h * kg
        else:
            y[i] = base[i] + h * (acc[i] + ka)
            y_g[j] = gdeg[j] + h * (acc_g[j] + kg)


@njit(cache=True, nogil=True)
def advance_reduced(alpha, w, ph_half, ph_full, haux, coef, tau, nsteps, clamp_tol,
                    deg_idx, gdeg, g):
    """Reduced system with ``coef = 4 g branch``.

    Modes listed in ``deg_idx`` must have ``coef = 0`` and a radicand that
    cannot go negative; their occupations ``gdeg`` evolve with the full
    equations. Returns ``(worst_excess, bad_index, steps_done)``. On a
    radicand below ``-clamp_tol`` the kernel stops after completing the
    offending step.
    """
    worst = 0.0
    if nsteps <= 0:
        return worst, -1, 0
    y = np.empty_like(alpha)
    acc = np.empty_like(alpha)
    nd = deg_idx.size
    va = np.empty(nd, dtype=np.complex128)
    acc_g = np.empty(nd)
    y_g = np.empty(nd)
    ht = 0.5 * tau
    hs = (ht, ht, tau, tau / 6.0)
    ws = (1.0, 2.0, 2.0, 1.0)
    _rotate(alpha, ph_half)
    for n in range(nsteps):
        bad = -1
        for stage in range(4):
            src = alpha if stage == 0 else y
            src_g = gdeg if stage == 0 else y_g
            c = wsum(src, w)
            for j in range(nd):
                va[j] = src[deg_idx[j]]
            wx, b = _reduced_stage(src, alpha, acc, y, haux, coef, c, hs[stage], ws[stage],
                                   clamp_tol, stage)
            if nd:
                _degenerate_stage(va, src_g, alpha, gdeg, acc, y, acc_g, y_g, deg_idx, c,
                                  hs[stage], ws[stage], g, stage)
            worst = max(worst, wx)
            if bad < 0:
                bad = b
        for j in range(nd):
            gdeg[j] = y_g[j]
        last = n == nsteps - 1 or bad >= 0
        ph = ph_half if last else ph_full
        for i in range(alpha.size):
            alpha[i] = y[i] * ph[i]
        if bad >= 0:
            return worst, bad, n + 1
    return worst, -1, nsteps


@njit(cache=True, nogil=True)
def advance_linear(alpha, w, ph_half, ph_full, coef, tau, nsteps):
    """Linearized system, ``alpha' = -i coef c`` with ``coef = 2 g (2 gamma0 - 1)``."""
    if nsteps <= 0:
        return
    K = alpha.size
    y = np.empty_like(alpha)
    acc = np.empty_like(alpha)
    ht = 0.5 * tau
    _rotate(alpha, ph_half)
    for n in range(nsteps):
        c = wsum(alpha, w)
        for i in range(K):
            s = coef[i]
            k = complex(s * c.imag, -s * c.real)
            acc[i] = k
            y[i] = alpha[i] + ht * k
        c = wsum(y, w)
        for i in range(K):
            s = coef[i]
            k = complex(s * c.imag, -s * c.real)
            acc[i] += 2.0 * k
            y[i] = alpha[i] + ht * k
        c = wsum(y, w)
        for i in range(K):
            s = coef[i]
            k = complex(s * c.imag, -s * c.real)
            acc[i] += 2.0 * k
            y[i] = alpha[i] + tau * k
        c = wsum(y, w)
        sixth = tau / 6.0
        ph = ph_half if n == nsteps - 1 else ph_full
        for i in range(K):
            s = coef[i]
            k = complex(s * c.imag, -s * c.real)
            alpha[i] = (alpha[i] + sixth * (acc[i] + k)) * ph[i]
