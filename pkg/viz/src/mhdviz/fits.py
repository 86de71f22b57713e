"""Small frequency/growth fits for probe series.

Probe coefficients sampled at uniform report times carry either a
standing oscillation (real part A e^{mu t} cos(omega t + phi)) or clean
exponential growth.  An order-2 linear recurrence is exact for the
former; a tail log-slope handles the latter.
"""

import numpy as np


def _recurrence(dt, z):
    # z[n+1] = a z[n] + b z[n-1]; roots give e^{(mu +- i omega) dt}
    a, b = np.linalg.lstsq(
        np.column_stack([z[1:-1], z[:-2]]), z[2:], rcond=None)[0]
    roots = np.roots([1.0, -a, -b])
    if roots.size != 2 or np.min(np.abs(roots)) == 0.0:
        return None
    r = roots[np.argmax(np.abs(np.imag(roots)))]
    if abs(np.imag(r)) < 1e-14 * abs(r):
        return None
    return float(abs(np.angle(r)) / dt), float(np.log(abs(r)) / dt)


def _tail_slope(t, z):
    # pure growth/decay: fit log|z| on the back half, where any decaying
    # partner root has died off
    half = len(t) // 2
    tt, zz = t[half:], np.abs(z[half:])
    if np.min(zz) <= 0.0:
        return None
    coef = np.polyfit(tt, np.log(zz), 1)
    return 0.0, float(coef[0])


def fit_mode(t, z):
    """(omega, mu) from one sampled mode series.

    Accepts real or complex input; a complex series whose imaginary part
    is roundoff is treated as real.  Returns None when the series is too
    degenerate to fit (all zero, fewer than 4 samples).
    """
    t = np.asarray(t, dtype=float)
    z = np.asarray(z)
    if t.size < 4:
        return None
    if np.iscomplexobj(z):
        scale = float(np.max(np.abs(z)))
        if scale == 0.0:
            return None
        if float(np.max(np.abs(z.imag))) <= 1e-12 * scale:
            z = z.real.copy()
    if not np.iscomplexobj(z):
        if float(np.max(np.abs(z))) == 0.0:
            return None
        signs = np.sign(z[np.abs(z) > 1e-13 * np.max(np.abs(z))])
        if signs.size and np.all(signs == signs[0]):
            return _tail_slope(t, z)
        dts = np.diff(t)
        if not np.allclose(dts, dts[0], rtol=1e-8, atol=0.0):
            return None
        return _recurrence(float(dts[0]), z)
    # genuinely complex: single rotating exponential, order-1 recurrence
    num = np.vdot(z[:-1], z[1:])
    den = np.vdot(z[:-1], z[:-1])
    if den == 0.0 or num == 0.0:
        return None
    r = num / den
    dt = float(np.mean(np.diff(t)))
    return float(abs(np.angle(r)) / dt), float(np.log(abs(r)) / dt)
