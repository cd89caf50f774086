"""Quadrature tables shared by assembly and error metrics.

All interval rules live on [0, 1]; triangle rules live on the unit simplex
{(a, b) : a, b >= 0, a + b <= 1} with weights summing to its area 1/2.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=None)
def gauss01(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes/weights transplanted to [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def _orbit3(a: float) -> list[tuple[float, float]]:
    """Symmetric orbit of barycentric (a, a, 1-2a), as unit-simplex points."""
    c = 1.0 - 2.0 * a
    return [(a, a), (c, a), (a, c)]


def _orbit6(a: float, b: float) -> list[tuple[float, float]]:
    c = 1.0 - a - b
    return [(a, b), (b, a), (a, c), (c, a), (b, c), (c, b)]


def _build_triangle_rule(spec: list[tuple[float, list[tuple[float, float]]]]):
    pts, wts = [], []
    for w, orbit in spec:
        for p in orbit:
            pts.append(p)
            wts.append(w)
    pts_arr = np.asarray(pts, dtype=float)
    wts_arr = np.asarray(wts, dtype=float)
    # Published coefficients are rounded; renormalize so constants integrate
    # exactly over the unit simplex.
    wts_arr *= 0.5 / wts_arr.sum()
    return pts_arr, wts_arr


# Dunavant symmetric rules (weights in the "sum to 1" convention before the
# area renormalization above).
_TRI_RULES = {
    2: [(1.0 / 3.0, _orbit3(1.0 / 6.0))],
    4: [
        (0.223381589678011, _orbit3(0.445948490915965)),
        (0.109951743655322, _orbit3(0.091576213509771)),
    ],
    5: [
        (0.225, [(1.0 / 3.0, 1.0 / 3.0)]),
        (0.132394152788506, _orbit3(0.470142064105115)),
        (0.125939180544827, _orbit3(0.101286507323456)),
    ],
    8: [
        (0.144315607677787, [(1.0 / 3.0, 1.0 / 3.0)]),
        (0.095091634413245, _orbit3(0.459292588292723)),
        (0.103217370534718, _orbit3(0.170569307751760)),
        (0.032458497623198, _orbit3(0.050547228317031)),
        (0.027230314174435, _orbit6(0.008394777409958, 0.263112829634638)),
    ],
}


@lru_cache(maxsize=None)
def triangle_rule(degree: int) -> tuple[np.ndarray, np.ndarray]:
    """Symmetric rule exact to the given polynomial degree on the unit simplex."""
    if degree not in _TRI_RULES:
        raise ValueError(f"no triangle rule of degree {degree}")
    return _build_triangle_rule(_TRI_RULES[degree])


@lru_cache(maxsize=None)
def duffy_triangle(p: int) -> tuple[np.ndarray, np.ndarray]:
    """Tensor Gauss rule on the unit simplex via the Duffy map (x, y(1-x)).

    The (1-x) grading resolves corner-concentrated (non-polynomial) behavior
    far better than symmetric interior rules of comparable size; weights sum
    to the simplex area 1/2.
    """
    x, w = gauss01(p)
    a = np.repeat(x, p)
    b = np.tile(x, p) * (1.0 - a)
    ww = np.repeat(w, p) * np.tile(w, p) * (1.0 - a)
    return np.column_stack([a, b]), ww


def simplex_rule(dim: int, degree: int) -> tuple[np.ndarray, np.ndarray]:
    """Reference-element rule: [0,1] for dim 1, unit simplex for dim 2.

    Points come back with shape (m, dim); weights sum to the reference
    element's measure.
    """
    if dim == 1:
        n = max(1, (degree + 2) // 2)
        x, w = gauss01(n)
        return x[:, None], w
    if dim == 2:
        pts, wts = triangle_rule(degree)
        return pts, wts
    raise ValueError(f"unsupported dimension {dim}")
