"""Compiled write-transient loop: adaptive RK4 with in-loop circuit coupling.

Same physics and step control as :mod:`afmtj_lab.magdyn` and
:func:`afmtj_lab.integrator.integrate_adaptive`, flattened to scalars for
numba. The pure-numpy path stays the reference; tests compare the two.
"""

import numba as nb
import numpy as np

# parameter vector layout
GM, ALPHA, HK, DEMAG, HE, STT, SINGLE = 0, 1, 2, 3, 4, 5, 6
P1, P2 = 7, 10
RP, RAP, AREA, VOLT = 13, 14, 15, 16
NPAR = 17

DONE, NEED_NOISE, STIFF, NONFINITE = 0, 1, 2, 3


@nb.njit(cache=True)
def _cos_theta(y, single):
    if single > 0.5:
        lx, ly, lz = y[0], y[1], y[2]
    else:
        lx = 0.5 * (y[0] - y[3])
        ly = 0.5 * (y[1] - y[4])
        lz = 0.5 * (y[2] - y[5])
    n = np.sqrt(lx * lx + ly * ly + lz * lz)
    if n == 0.0:
        return 0.0
    return lz / n


@nb.njit(cache=True)
def resistance(y, par):
    c = _cos_theta(y, par[SINGLE])
    rp, rap = par[RP], par[RAP]
    return 2.0 * rp * rap / ((rap + rp) + (rap - rp) * c)


@nb.njit(cache=True)
def _llg(mx, my, mz, hx, hy, hz, tx, ty, tz, gm, alpha, out, o):
    # m x h
    ax = my * hz - mz * hy
    ay = mz * hx - mx * hz
    az = mx * hy - my * hx
    # m x (m x h)
    bx = my * az - mz * ay
    by = mz * ax - mx * az
    bz = mx * ay - my * ax
    # m x T
    cx = my * tz - mz * ty
    cy = mz * tx - mx * tz
    cz = mx * ty - my * tx
    k = 1.0 / (1.0 + alpha * alpha)
    out[o] = k * (-gm * ax - gm * alpha * bx + tx + alpha * cx)
    out[o + 1] = k * (-gm * ay - gm * alpha * by + ty + alpha * cy)
    out[o + 2] = k * (-gm * az - gm * alpha * bz + tz + alpha * cz)


@nb.njit(cache=True)
def rhs(y, hth, par, out):
    gm = par[GM]
    alpha = par[ALPHA]
    single = par[SINGLE] > 0.5
    j = par[VOLT] / (resistance(y, par) * par[AREA])
    a_j = par[STT] * j
    if single:
        mnz = y[2]
    else:
        mnz = 0.5 * (y[2] + y[5])
    demag = -par[DEMAG] * mnz
    he = par[HE]
    for s in range(2):
        o = 3 * s
        if single and s == 1:
            out[3] = 0.0
            out[4] = 0.0
            out[5] = 0.0
            break
        mx, my, mz = y[o], y[o + 1], y[o + 2]
        q = 3 - o
        hx = hth[o]
        hy = hth[o + 1]
        hz = par[HK] * mz + demag + hth[o + 2]
        if not single:
            hx -= he * y[q]
            hy -= he * y[q + 1]
            hz -= he * y[q + 2]
        pb = P1 if s == 0 else P2
        px, py, pz = par[pb], par[pb + 1], par[pb + 2]
        mp = mx * px + my * py + mz * pz
        mm = mx * mx + my * my + mz * mz
        # -a_J m x (m x p) = a_J (p |m|^2 - m (m.p)); stage states are not unit length
        tx = a_j * (px * mm - mx * mp)
        ty = a_j * (py * mm - my * mp)
        tz = a_j * (pz * mm - mz * mp)
        _llg(mx, my, mz, hx, hy, hz, tx, ty, tz, gm, alpha, out, o)


@nb.njit(cache=True)
def rk4(y, dt, hth, par, k1, k2, k3, k4, tmp, out):
    rhs(y, hth, par, k1)
    for i in range(6):
        tmp[i] = y[i] + 0.5 * dt * k1[i]
    rhs(tmp, hth, par, k2)
    for i in range(6):
        tmp[i] = y[i] + 0.5 * dt * k2[i]
    rhs(tmp, hth, par, k3)
    for i in range(6):
        tmp[i] = y[i] + dt * k3[i]
    rhs(tmp, hth, par, k4)
    for i in range(6):
        out[i] = y[i] + dt * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) / 6.0


@nb.njit(cache=True)
def _renorm(y, single):
    drift = 0.0
    for s in range(2):
        if single and s == 1:
            break
        o = 3 * s
        n = np.sqrt(y[o] ** 2 + y[o + 1] ** 2 + y[o + 2] ** 2)
        d = abs(n - 1.0)
        if d > drift:
            drift = d
        y[o] /= n
        y[o + 1] /= n
        y[o + 2] /= n
    return drift


@nb.njit(cache=True)
def integrate(y, t, dt, isample, k0, par, t_end, dt_min, dt_max, tol,
              sample_times, samples, noise, sigma_unit, stats):
    """Advance ``y`` in place from ``t`` to ``t_end``.

    ``stats`` accumulates [accepted, rejected, dt_lo, dt_hi, max_drift].
    Returns (status, t, dt, isample, k).
    """
    single = par[SINGLE] > 0.5
    n_samples = sample_times.shape[0]
    k1 = np.empty(6)
    k2 = np.empty(6)
    k3 = np.empty(6)
    k4 = np.empty(6)
    tmp = np.empty(6)
    full = np.empty(6)
    half = np.empty(6)
    new = np.empty(6)
    hth = np.zeros(6)
    k = k0
    thermal = sigma_unit > 0.0
    while isample < n_samples and t < t_end:
        if thermal and k - k0 >= noise.shape[0]:
            return NEED_NOISE, t, dt, isample, k
        remaining = t_end - t
        h = dt
        if remaining < h:
            h = remaining if remaining >= dt_min else dt_min
        if thermal:
            sig = sigma_unit / np.sqrt(h)
            for i in range(6):
                hth[i] = sig * noise[k - k0, i]
            if single:
                hth[3] = 0.0
                hth[4] = 0.0
                hth[5] = 0.0
        rk4(y, h, hth, par, k1, k2, k3, k4, tmp, full)
        rk4(y, 0.5 * h, hth, par, k1, k2, k3, k4, tmp, half)
        rk4(half, 0.5 * h, hth, par, k1, k2, k3, k4, tmp, new)
        err = 0.0
        for i in range(6):
            e = abs(full[i] - new[i])
            if not np.isfinite(e):
                return NONFINITE, t, dt, isample, k
            if e > err:
                err = e
        if err > tol:
            if h <= dt_min:
                return STIFF, t, dt, isample, k
            dt = max(0.5 * h, dt_min)
            stats[1] += 1
            continue
        drift = _renorm(new, single)
        if drift > stats[4]:
            stats[4] = drift
        stats[0] += 1
        if h < stats[2]:
            stats[2] = h
        if h > stats[3]:
            stats[3] = h
        t_new = t + h
        while isample < n_samples and sample_times[isample] <= t_new:
            w = (sample_times[isample] - t) / h
            for i in range(6):
                samples[isample, i] = y[i] + w * (new[i] - y[i])
            _renorm(samples[isample], single)
            isample += 1
        for i in range(6):
            y[i] = new[i]
        t = t_new
        k += 1
        if err < tol / 32.0:
            dt = min(2.0 * h, dt_max)
        else:
            dt = max(h, dt_min)
    return DONE, t, dt, isample, k
