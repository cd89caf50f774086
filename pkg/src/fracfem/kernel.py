"""The fractional kernel and its analytic integrals over unresolved regions.

The operator is defined through the singular kernel

    K(x, y) = C(n, s) |x - y|^(-(n + 2s)),
    C(n, s) = 2^(2s) s Gamma(s + n/2) / (pi^(n/2) Gamma(1 - s)).

Two weight functions fold unbounded integration regions into ordinary element
quadrature.  Both return integrals of the *bare* kernel |x-y|^(-(n+2s)) — the
caller multiplies by C(n, s):

* ``tail_weight_outside_ball(x, R)``  = int_{|y| > R} |x-y|^(-(n+2s)) dy,  |x| < R,
* ``omega_weight_over_ball(y, r)``    = int_{|x| < r} |x-y|^(-(n+2s)) dx,  |y| > r.

In 1D both have closed forms; in 2D the angular integral is evaluated with
Gauss-Legendre quadrature after an exact radial integration along each ray,
doubled once (64 -> 128 points) with the agreement asserted at rel. 1e-10.
Values depend only on |x| (resp. |y|), and the 2D profiles are cached.
"""
from __future__ import annotations

from functools import lru_cache
from math import gamma, pi

import numpy as np

from .quadrules import gauss01

__all__ = [
    "normalization_constant",
    "kernel",
    "tail_weight_outside_ball",
    "omega_weight_over_ball",
    "weight_upper_bound",
]


def normalization_constant(dim: int, s: float) -> float:
    """C(n, s) = 2^(2s) s Gamma(s + n/2) / (pi^(n/2) Gamma(1 - s))."""
    if dim not in (1, 2):
        raise ValueError("dim must be 1 or 2")
    if not 0.0 < s < 1.0:
        raise ValueError("s must lie in (0, 1)")
    return 2.0 ** (2 * s) * s * gamma(s + dim / 2.0) / (pi ** (dim / 2.0) * gamma(1.0 - s))


def kernel(x, y, *, dim: int, s: float):
    """Full kernel C(n,s) |x-y|^(-(n+2s)), vectorized over leading axes."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if dim == 1:
        d = np.abs(x - y)
    else:
        d = np.linalg.norm(x - y, axis=-1)
    return normalization_constant(dim, s) * d ** (-(dim + 2.0 * s))


def _gauss_doubled(f, a: float, b: float, n0: int = 64, rtol: float = 1e-10) -> float:
    """Gauss-Legendre on [a, b], doubling the point count until agreement."""
    prev = None
    n = n0
    for _ in range(6):
        t, w = gauss01(n)
        val = float(np.sum(w * f(a + (b - a) * t)) * (b - a))
        if prev is not None and abs(val - prev) <= rtol * max(abs(val), 1e-300):
            return val
        prev = val
        n *= 2
    raise ArithmeticError("angular quadrature failed to converge")


@lru_cache(maxsize=4096)
def _tail_radial_2d(rho: float, R: float, s: float) -> float:
    """2D tail profile at |x| = rho: (1/2s) * int_0^{2pi} d(theta)^(-2s) dtheta.

    d(theta) = sqrt(R^2 - rho^2 sin^2 theta) - rho cos theta is the distance
    from x to the sphere |y| = R in direction theta; integrating the kernel
    exactly along each ray gives d^(-2s) / (2s).
    """

    def f(theta):
        d = np.sqrt(R * R - (rho * np.sin(theta)) ** 2) - rho * np.cos(theta)
        return d ** (-2.0 * s)

    # symmetric in theta -> integrate half and double
    return _gauss_doubled(f, 0.0, pi) * 2.0 / (2.0 * s)


@lru_cache(maxsize=4096)
def _omega_radial_2d(dist: float, r: float, s: float) -> float:
    """2D ball-weight profile at |y| = dist > r.

    Polar coordinates around y: rays hitting the disc do so on a chord
    [t-, t+] with t_{-,+} = dist*cos(theta) -+ sqrt(r^2 - dist^2 sin^2 theta);
    the radial kernel integral over the chord is (t-^(-2s) - t+^(-2s)) / (2s).
    The substitution sin(theta) = (r/dist) sin(psi) removes the square-root
    cusp at the grazing angle, leaving a smooth integrand on [0, pi/2].
    """
    q = r / dist

    def f(psi):
        sp = np.sin(psi)
        cp = np.cos(psi)
        ct = np.sqrt(1.0 - (q * sp) ** 2)
        t_minus = dist * ct - r * cp
        t_plus = dist * ct + r * cp
        jac = q * cp / ct  # d(theta)/d(psi)
        return (t_minus ** (-2.0 * s) - t_plus ** (-2.0 * s)) * jac

    return _gauss_doubled(f, 0.0, pi / 2.0) * 2.0 / (2.0 * s)


def tail_weight_outside_ball(x, R: float, *, dim: int, s: float):
    """int_{|y| > R} |x-y|^(-(n+2s)) dy for points x with |x| < R (bare kernel).

    1D closed form: [(R-x)^(-2s) + (R+x)^(-2s)] / (2s).
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[1] != dim:
        raise ValueError("point dimension mismatch")
    rho = np.linalg.norm(x, axis=1)
    if np.any(rho >= R):
        raise ValueError("tail weight requires |x| < R")
    if dim == 1:
        xi = x[:, 0]
        out = ((R - xi) ** (-2.0 * s) + (R + xi) ** (-2.0 * s)) / (2.0 * s)
    else:
        out = np.array([_tail_radial_2d(float(p), float(R), float(s)) for p in rho])
    return out if out.size > 1 else float(out[0])


def omega_weight_over_ball(y, r: float, *, dim: int, s: float):
    """int_{|x| < r} |x-y|^(-(n+2s)) dx for points y with |y| > r (bare kernel).

    1D closed form: [(|y|-r)^(-2s) - (|y|+r)^(-2s)] / (2s).
    """
    y = np.atleast_2d(np.asarray(y, dtype=float))
    if y.shape[1] != dim:
        raise ValueError("point dimension mismatch")
    dist = np.linalg.norm(y, axis=1)
    if np.any(dist <= r):
        raise ValueError("omega weight requires |y| > r")
    if dim == 1:
        out = ((dist - r) ** (-2.0 * s) - (dist + r) ** (-2.0 * s)) / (2.0 * s)
    else:
        out = np.array([_omega_radial_2d(float(p), float(r), float(s)) for p in dist])
    return out if out.size > 1 else float(out[0])


def weight_upper_bound(delta: float, *, dim: int, s: float) -> float:
    """sigma_{n-1} / (2 s delta^(2s)): bare-kernel integral over {|x-y| > delta}.

    Both weights are bounded by this bracket with delta = the distance from
    the evaluation point to the integration region.
    """
    sigma = 2.0 if dim == 1 else 2.0 * pi
    return sigma / (2.0 * s * delta ** (2.0 * s))
