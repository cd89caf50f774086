"""Exact and semi-analytic reference solutions on balls.

Three families cover every experiment:

* the closed-form solution of the constant-right-hand-side problem on a ball
  (zero exterior datum),

      u(x) = c_f * kappa(n, s) * (r^2 - |x|^2)_+^s,

  with kappa(2, s) = 1 / (2^(2s) Gamma(1+s)^2) and, in one dimension,
  kappa(1, s) = Gamma(1/2) / (2^(2s) Gamma(1/2+s) Gamma(1+s)) — the latter is
  validated against a principal-value quadrature oracle before use;

* s-harmonic functions (zero right-hand side) given by the Poisson-kernel
  integral u(x) = int_{|y|>r} g(y) P(x, y) dy for radial exterior data g;

* pointwise sums of the above.

For radial data the Poisson integral reduces, via polar coordinates and the
substitution rho'^2 - r^2 = t^2 (which cancels the (|y|^2-r^2)^(-s) boundary
singularity), to

    u(x) = (2 sin(pi s) / pi) * (r^2-|x|^2)^s
           * int_0^inf g(sqrt(r^2+t^2)) t^(1-2s) / (t^2 + r^2 - |x|^2) dt

in both one and two dimensions.  The outer truncation T carries an analytic
tail bound kept below 1e-8 of the accumulated value, and adaptive quadrature
must reach rel. 1e-6 or the evaluation fails loudly with the achieved
estimate.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import gamma, pi, sin, sqrt
from typing import Callable

import numpy as np
from scipy.integrate import quad
from scipy.special import betainc

from .kernel import normalization_constant

__all__ = [
    "QuadratureError",
    "getoor_prefactor",
    "getoor_solution",
    "getoor_gradient",
    "getoor_integral_over_ball",
    "poisson_kernel",
    "RadialDatum",
    "DATUM_GAUSS",
    "DATUM_POW4",
    "DATUM_ONE",
    "poisson_solution_value",
    "poisson_value_independent",
    "ReferenceSolution",
    "nonlocal_derivative_oracle",
]


class QuadratureError(ArithmeticError):
    """An adaptive integral failed to reach its accuracy contract."""


# -- constant-right-hand-side closed forms ------------------------------------


def getoor_prefactor(dim: int, s: float) -> float:
    """kappa(n, s) in u = c_f kappa (r^2-|x|^2)_+^s; kappa(1, 1/2) = 1."""
    if not 0.0 < s < 1.0:
        raise ValueError("s must lie in (0, 1)")
    if dim == 2:
        return 1.0 / (2.0 ** (2 * s) * gamma(1.0 + s) ** 2)
    if dim == 1:
        return gamma(0.5) / (2.0 ** (2 * s) * gamma(0.5 + s) * gamma(1.0 + s))
    raise ValueError("dim must be 1 or 2")


def _radii(x, dim: int) -> np.ndarray:
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[1] != dim:
        raise ValueError("point dimension mismatch")
    return np.linalg.norm(x, axis=1)


def getoor_solution(x, *, dim: int, s: float, r: float, rhs_value: float = 1.0):
    """c_f kappa(n,s) (r^2-|x|^2)_+^s, vectorized; zero outside the ball."""
    rho = _radii(x, dim)
    vals = rhs_value * getoor_prefactor(dim, s) * np.maximum(0.0, r * r - rho * rho) ** s
    return vals if vals.size > 1 else float(vals[0])


def getoor_gradient(x, *, dim: int, s: float, r: float, rhs_value: float = 1.0):
    """Gradient -2 s c_f kappa x (r^2-|x|^2)^(s-1), valid strictly inside."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    rho2 = np.sum(x * x, axis=1)
    if np.any(rho2 >= r * r):
        raise ValueError("gradient requested on or outside the ball boundary")
    fac = -2.0 * s * rhs_value * getoor_prefactor(dim, s) * (r * r - rho2) ** (s - 1.0)
    return fac[:, None] * x


def getoor_integral_over_ball(dim: int, s: float, r: float, rhs_value: float = 1.0) -> float:
    """int_{B_r} u dx in closed (Beta-function) form.

    1D: kappa r^(2s+1) sqrt(pi) Gamma(1+s)/Gamma(s+3/2);
    2D: kappa pi r^(2s+2) / (1+s).
    """
    kap = getoor_prefactor(dim, s)
    if dim == 1:
        return rhs_value * kap * r ** (2 * s + 1) * sqrt(pi) * gamma(1.0 + s) / gamma(s + 1.5)
    return rhs_value * kap * pi * r ** (2 * s + 2) / (1.0 + s)


# -- Poisson kernel ------------------------------------------------------------


def poisson_kernel(x, y, *, r: float, dim: int, s: float) -> float:
    """Gamma(n/2) sin(pi s) pi^(-(n/2+1)) ((r^2-|x|^2)/(|y|^2-r^2))^s |x-y|^(-n)."""
    x = np.asarray(x, dtype=float).reshape(-1)
    y = np.asarray(y, dtype=float).reshape(-1)
    if x.size != dim or y.size != dim:
        raise ValueError("point dimension mismatch")
    rx, ry = float(np.linalg.norm(x)), float(np.linalg.norm(y))
    if not rx < r < ry:
        raise ValueError("poisson_kernel requires |x| < r < |y|")
    pref = gamma(dim / 2.0) * sin(pi * s) / pi ** (dim / 2.0 + 1.0)
    ratio = (r * r - rx * rx) / (ry * ry - r * r)
    return pref * ratio ** s * float(np.linalg.norm(x - y)) ** (-dim)


# -- radial exterior data -------------------------------------------------------


@dataclass(frozen=True)
class RadialDatum:
    """Radial exterior datum g(|y|) with the analytic bounds the integrator needs.

    ``j_tail_bound(T, s)`` bounds int_T^inf g(sqrt(r^2+t^2)) t^(1-2s)/t^2 dt
    from above (monotone in the r-shift, so any r >= 0 is covered); ``None``
    means no useful finite-T bound exists and the integral runs on [0, inf).
    ``l2_tail_sq(R, dim)`` is int_{|y|>R} g(y)^2 dy, used by the whole-space
    error metric.
    """

    name: str
    g: Callable[[float], float]
    j_tail_bound: Callable[[float, float], float] | None
    l2_tail_sq: Callable[[float, int], float] | None


DATUM_GAUSS = RadialDatum(
    name="gauss",
    g=lambda rho: np.exp(-np.asarray(rho) ** 2),
    j_tail_bound=lambda T, s: 0.5 * np.exp(-T * T) * T ** (-2.0 - 2.0 * s),
    l2_tail_sq=lambda R, dim: (pi / 2.0) * np.exp(-2.0 * R * R) if dim == 2 else None,
)

DATUM_POW4 = RadialDatum(
    name="pow4",
    g=lambda rho: np.asarray(rho) ** -4.0,
    j_tail_bound=lambda T, s: T ** (-4.0 - 2.0 * s) / (4.0 + 2.0 * s),
    l2_tail_sq=lambda R, dim: (pi / 3.0) * R ** -6.0 if dim == 2 else None,
)

DATUM_ONE = RadialDatum(name="one", g=lambda rho: np.ones_like(np.asarray(rho, dtype=float)),
                        j_tail_bound=None, l2_tail_sq=None)

_DATA = {d.name: d for d in (DATUM_GAUSS, DATUM_POW4, DATUM_ONE)}


def radial_datum(name: str) -> RadialDatum:
    try:
        return _DATA[name]
    except KeyError:
        raise ValueError(f"unknown radial datum {name!r}") from None


def _j_integral(datum: RadialDatum, r: float, s: float, eps2: float) -> float:
    """J = int_0^inf g(sqrt(r^2+t^2)) t^(1-2s) / (t^2+eps2) dt to rel. 1e-6.

    The peak at t ~ sqrt(eps2) carries the weight g(r) int t^(1-2s)/(t^2+eps2),
    which integrates exactly to an incomplete beta function; subtracting it
    leaves a remainder that is O(t^(3-2s)) near zero with no eps2-scale spike.
    The substitution w = t^(2-2s) then flattens the endpoint weight for
    QUADPACK.
    """
    alpha = 1.0 / (2.0 - 2.0 * s)
    gr = float(datum.g(r))
    peak_full = gr * 0.5 * eps2 ** (-s) * pi / sin(pi * s)

    def peak_part(T: float) -> float:
        # g(r) * int_0^T t^(1-2s)/(t^2+eps2) dt via q = t^2/eps2, u = q/(1+q)
        X = T * T / eps2
        return peak_full * float(betainc(1.0 - s, s, X / (1.0 + X)))

    def fw(w: float) -> float:
        t = w ** alpha
        return (float(datum.g(sqrt(r * r + t * t))) - gr) / (t * t + eps2)

    rel_goal = 1e-6
    if datum.j_tail_bound is None:
        rem, err = quad(fw, 0.0, np.inf, limit=400, epsabs=1e-14, epsrel=1e-9)
        val = peak_full + alpha * rem
        err *= alpha
    else:
        T = max(4.0, 4.0 * sqrt(eps2))
        for _ in range(8):
            W = T ** (2.0 - 2.0 * s)
            w_peak = eps2 ** (1.0 - s)  # w at t = sqrt(eps2)
            pts = sorted({p for p in (w_peak, 10 * w_peak, 100 * w_peak) if 0.0 < p < W})
            rem, err = quad(fw, 0.0, W, points=pts or None, limit=400,
                            epsabs=1e-14, epsrel=1e-9)
            val = peak_part(T) + alpha * rem
            err *= alpha
            if datum.j_tail_bound(T, s) < 1e-8 * abs(val):
                break
            T *= 2.0
        else:
            raise QuadratureError("tail bound never reached 1e-8 of the value")
    if err > rel_goal * max(abs(val), 1e-300):
        raise QuadratureError(
            f"adaptive refinement stalled: achieved rel. {err / max(abs(val), 1e-300):.2e}"
        )
    return val


def poisson_solution_value(rho: float, *, datum: RadialDatum, r: float, s: float) -> float:
    """u(|x| = rho) for the s-harmonic problem with radial exterior datum."""
    if rho >= r:
        raise ValueError("evaluation point must be interior")
    eps2 = r * r - rho * rho
    if eps2 < 1e-28 * r * r:  # continuity limit u -> g(r) at the boundary
        return float(datum.g(r))
    return 2.0 * sin(pi * s) / pi * eps2 ** s * _j_integral(datum, r, s, eps2)


def poisson_value_independent(rho: float, *, datum: RadialDatum, r: float, s: float,
                              dps: int = 25) -> float:
    """Second, independent quadrature route (tanh-sinh on the rho' form).

    Integrates g(rho') rho' (rho'^2-r^2)^(-s) * 2/(rho'^2-rho^2) without the
    t-substitution; the endpoint singularity at rho' = r is left to mpmath's
    tanh-sinh rule.  Used once to certify frozen reference values.
    """
    import mpmath as mp

    with mp.workdps(dps):
        srho, sr = mp.mpf(rho), mp.mpf(r)
        pref = 2 * mp.sin(mp.pi * s) / mp.pi * (sr ** 2 - srho ** 2) ** s

        def f(rp):
            return (mp.mpf(float(datum.g(float(rp)))) * rp * (rp * rp - sr * sr) ** (-s)
                    / (rp * rp - srho * srho))

        val = mp.quad(f, [sr, 2 * sr, 8 * sr, 64 * sr, mp.inf])
        return float(pref * val)


# -- reference-solution evaluators ---------------------------------------------


class _RadialProfile:
    """Piecewise-Chebyshev interpolant of a radial function on [0, r].

    Panels refine geometrically toward the boundary, where the profile has a
    (r^2-rho^2)^s component; the innermost sliver falls back to direct
    evaluation.  The interpolant is validated against direct quadrature at
    random radii on construction.
    """

    _DEG = 16
    _LEVELS = 20

    def __init__(self, f: Callable[[float], float], r: float):
        from numpy.polynomial.chebyshev import Chebyshev

        self._f = f
        breaks = [0.0, 0.5 * r]
        for k in range(2, self._LEVELS + 1):
            breaks.append(r * (1.0 - 2.0 ** -k))
        self._breaks = np.asarray(breaks)
        self._inner_edge = self._breaks[-1]
        self._polys = [
            Chebyshev.interpolate(np.vectorize(f), self._DEG, domain=[a, b])
            for a, b in zip(self._breaks[:-1], self._breaks[1:])
        ]
        rng = np.random.default_rng(20260815)
        for rho in rng.uniform(0.0, self._inner_edge, size=24):
            direct = f(float(rho))
            if abs(self(float(rho)) - direct) > 1e-7 * max(abs(direct), 1e-12):
                raise QuadratureError("radial profile interpolation failed validation")

    def __call__(self, rho: float) -> float:
        if rho >= self._inner_edge:
            return self._f(rho)
        k = int(np.searchsorted(self._breaks, rho, side="right") - 1)
        k = min(max(k, 0), len(self._polys) - 1)
        return float(self._polys[k](rho))


class ReferenceSolution:
    """Radial exact-solution evaluator with a point-evaluation cache.

    kind is one of GETOOR_CONSTANT_RHS, GETOOR_TRACE_DATUM, POISSON_KERNEL,
    SUM.  The two closed-form kinds share the same formula; the trace-datum
    variant remembers its (larger) ball radius so gradients stay valid on the
    computational domain.
    """

    def __init__(self, kind: str, dim: int, s: float, evaluate_radial, *,
                 gradient_available: bool = False, radial_gradient=None, params=None):
        self.kind = kind
        self.dim = dim
        self.s = s
        self.params = params or {}
        self._radial = evaluate_radial
        self._radial_gradient = radial_gradient
        self.gradient_available = gradient_available

    # factories ---------------------------------------------------------

    @classmethod
    def getoor_constant_rhs(cls, *, dim: int, s: float, r: float, rhs_value: float = 1.0):
        kap = getoor_prefactor(dim, s)

        def u(rho):
            return rhs_value * kap * np.maximum(0.0, r * r - np.asarray(rho) ** 2) ** s

        def du(rho):  # d/drho, valid rho < r
            rho = np.asarray(rho)
            return -2.0 * s * rhs_value * kap * rho * (r * r - rho ** 2) ** (s - 1.0)

        return cls("GETOOR_CONSTANT_RHS", dim, s, u, gradient_available=False,
                   radial_gradient=du, params={"r": r, "rhs_value": rhs_value})

    @classmethod
    def getoor_trace_datum(cls, *, dim: int, s: float, ball_radius: float,
                           rhs_value: float = 1.0):
        base = cls.getoor_constant_rhs(dim=dim, s=s, r=ball_radius, rhs_value=rhs_value)
        return cls("GETOOR_TRACE_DATUM", dim, s, base._radial, gradient_available=True,
                   radial_gradient=base._radial_gradient,
                   params={"ball_radius": ball_radius, "rhs_value": rhs_value})

    @classmethod
    def poisson(cls, *, dim: int, s: float, r: float, datum: RadialDatum):
        profile_holder: dict = {}

        def u_scalar(rho: float) -> float:
            return poisson_solution_value(min(rho, r * (1 - 1e-16)), datum=datum, r=r, s=s)

        def u(rho):
            if "p" not in profile_holder:
                profile_holder["p"] = _RadialProfile(u_scalar, r)
            prof = profile_holder["p"]
            rho = np.atleast_1d(np.asarray(rho, dtype=float))
            out = np.empty(rho.shape, dtype=float)
            inside = rho < r
            out[inside] = [prof(float(p)) for p in rho[inside]]
            out[~inside] = datum.g(rho[~inside])  # s-harmonic: u = g off the ball
            return out

        return cls("POISSON_KERNEL", dim, s, u,
                   params={"r": r, "datum": datum.name})

    @classmethod
    def sum_of(cls, refs):
        refs = list(refs)
        dim, s = refs[0].dim, refs[0].s

        def u(rho):
            return sum(np.asarray(rf._radial(rho)) for rf in refs)

        grad_ok = all(rf.gradient_available for rf in refs)

        def du(rho):
            return sum(np.asarray(rf._radial_gradient(rho)) for rf in refs)

        return cls("SUM", dim, s, u, gradient_available=grad_ok,
                   radial_gradient=du if grad_ok else None,
                   params={"terms": [rf.kind for rf in refs]})

    # evaluation ---------------------------------------------------------

    def evaluate(self, x) -> np.ndarray:
        rho = _radii(x, self.dim)
        return np.asarray(self._radial(rho), dtype=float)

    def gradient(self, x) -> np.ndarray:
        if self._radial_gradient is None:
            raise ValueError(f"{self.kind} reference has no evaluable gradient")
        x = np.atleast_2d(np.asarray(x, dtype=float))
        rho = np.linalg.norm(x, axis=1)
        dr = np.asarray(self._radial_gradient(rho), dtype=float)
        with np.errstate(invalid="ignore", divide="ignore"):
            unit = np.where(rho[:, None] > 0, x / np.where(rho == 0, 1.0, rho)[:, None], 0.0)
        return dr[:, None] * unit

    def export_csv(self, path, points) -> None:
        """Reference-value table `x [y] u_exact` for harness consumption."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        vals = self.evaluate(points)
        with open(path, "w") as fh:
            fh.write(",".join(["x", "y"][: self.dim] + ["u_exact"]) + "\n")
            for p, v in zip(points, vals):
                coords = ",".join(f"{c:.12e}" for c in p)
                fh.write(f"{coords},{v:.12e}\n")


# -- nonlocal normal derivative oracle ------------------------------------------


def nonlocal_derivative_oracle(u, x, *, r: float, dim: int, s: float) -> float:
    """N_s u(x) = C(n,s) int_Omega (u(x) - u(y)) |x-y|^(-(n+2s)) dy, |x| > r.

    The integrand is bounded for exterior x but peaks near the boundary point
    closest to x; adaptive refinement is keyed to that distance.  In 2D a
    tensor Gauss rule in polar coordinates is used (the quantitative checks
    all run in 1D).
    """
    C = normalization_constant(dim, s)
    if dim == 1:
        x = float(np.asarray(x).reshape(-1)[0])
        if abs(x) <= r:
            raise ValueError("evaluation point must lie outside the closed ball")
        delta = abs(x) - r
        near = np.sign(x) * (r - np.minimum([delta, 10 * delta, 100 * delta], 2 * r * 0.9))
        pts = sorted({float(p) for p in near if -r < p < r})
        f = lambda y: (u(x) - u(y)) * abs(x - y) ** (-1.0 - 2.0 * s)
        val, err = quad(f, -r, r, points=pts or None, limit=400, epsabs=1e-13, epsrel=1e-10)
        if err > 1e-8 * max(abs(val), 1e-300):
            raise QuadratureError(f"oracle integral achieved only {err:.2e}")
        return C * val
    xv = np.asarray(x, dtype=float).reshape(-1)
    if np.linalg.norm(xv) <= r:
        raise ValueError("evaluation point must lie outside the closed ball")
    from .quadrules import gauss01

    trho, wrho = gauss01(96)
    tth, wth = gauss01(192)
    rho = r * trho
    theta = 2.0 * pi * tth
    P = np.stack([np.outer(rho, np.cos(theta)).ravel(),
                  np.outer(rho, np.sin(theta)).ravel()], axis=1)
    WW = (np.outer(wrho * rho * r, wth * 2.0 * pi)).ravel()
    ux = float(u(xv))
    uy = np.asarray([u(p) for p in P], dtype=float)
    dist = np.linalg.norm(P - xv[None, :], axis=1)
    return C * float(np.sum(WW * (ux - uy) * dist ** (-2.0 - 2.0 * s)))
