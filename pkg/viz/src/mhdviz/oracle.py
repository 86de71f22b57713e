"""Closed-form linear theory used for figure overlays.

The flat two-strip state with constant tangential traces a+-, b+- and
surface tension sigma has one quadratic per Fourier mode xi:

    rho+ (w - xi.a+)^2 + rho- (w - xi.a-)^2
        = (xi.b+)^2 + (xi.b-)^2 + sigma |xi|^2 m(xi),

with m(xi) = |xi| tanh|xi| for the unit strips.  Real roots are
oscillation frequencies, complex pairs give the growth rate.
"""

import math


def strip_multiplier(k1, k2=0.0):
    xi = math.hypot(k1, k2)
    return xi * math.tanh(xi)


def dispersion_root(k1, k2, sigma, rho=(1.0, 1.0),
                    a=((0.0, 0.0), (0.0, 0.0)),
                    b=((0.0, 0.0), (0.0, 0.0))):
    """(omega, mu) for mode (k1, k2); omega >= 0 branch."""
    rp, rm = rho
    cp = k1 * a[0][0] + k2 * a[0][1]
    cm = k1 * a[1][0] + k2 * a[1][1]
    kb2 = (k1 * b[0][0] + k2 * b[0][1]) ** 2 \
        + (k1 * b[1][0] + k2 * b[1][1]) ** 2
    xi2 = k1 * k1 + k2 * k2
    big_a = rp + rm
    big_b = rp * cp + rm * cm
    big_c = rp * cp ** 2 + rm * cm ** 2 - kb2 \
        - sigma * xi2 * strip_multiplier(k1, k2)
    disc = big_b ** 2 - big_a * big_c
    if disc >= 0.0:
        # two real roots; report the larger-magnitude frequency
        w1 = (big_b + math.sqrt(disc)) / big_a
        w2 = (big_b - math.sqrt(disc)) / big_a
        return max(abs(w1), abs(w2)), 0.0
    return abs(big_b) / big_a, math.sqrt(-disc) / big_a


def capillary_omega(sigma, k):
    """Quiescent special case: sqrt(sigma k^3 tanh k / 2)."""
    return math.sqrt(sigma * k ** 3 * math.tanh(k) / 2.0)


def from_frame(frame, k1, k2):
    """Oracle point using the background stored in a snapshot frame."""
    return dispersion_root(
        k1, k2, frame.sigma, rho=(frame.rho_plus, frame.rho_minus),
        a=(frame.a_plus, frame.a_minus), b=(frame.b_plus, frame.b_minus))
