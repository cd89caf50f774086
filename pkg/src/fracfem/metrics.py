"""Error norms and experimental orders of convergence.

Three error measurements cover the experiments:

* plain ``L^2`` errors over the inner ball, over the whole computational
  domain, or over all of space (the last adds the closed-form tail norm of
  the exterior datum, since the discrete solution is zero beyond the mesh);
* an interpolation upper bound ``||e||_{L2}^(1-s) ||e||_{H1}^s`` for smooth
  solutions, which controls the ``H^s`` error without fractional quadrature;
* the Galerkin identity for homogeneous exterior data and constant forcing,
  which turns the energy error into ``sqrt(f * (int u - int u_h))``.

``ConvergenceReport`` collects rows of (h, H, Ndof, errors) per experiment
and serializes to CSV with a trailing least-squares EOC row.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from .geometry import Mesh, NodeClass
from .kernel import normalization_constant
from .quadrules import gauss01, simplex_rule
from .solve import DiscreteSolution

__all__ = [
    "MetricsError",
    "Region",
    "l2_error",
    "hs_error_smooth_bound",
    "hs_energy_error_homogeneous",
    "EnergyError",
    "eoc_fit",
    "lambda_l2_annulus",
    "ConvergenceReport",
]


class MetricsError(ArithmeticError):
    """An error measurement is inconsistent (e.g. negative energy radicand)."""


#: Valid integration regions for :func:`l2_error`.
REGION_OMEGA = "OMEGA"
REGION_OMEGA_H = "OMEGA_H"
REGION_RN = "RN"
Region = str
_REGIONS = (REGION_OMEGA, REGION_OMEGA_H, REGION_RN)


def _barycentric_phi(pts: np.ndarray) -> np.ndarray:
    """Hat-function values (m, k+1) at reference-simplex points (m, k)."""
    pts = np.atleast_2d(pts)
    lam0 = 1.0 - pts.sum(axis=1)
    return np.column_stack([lam0, pts])


def _element_quadrature(mesh: Mesh, degree: int, elems: np.ndarray):
    """Physical quadrature points, weights and hat values on selected elements.

    Returns (X, jw, phi) with X of shape (ne, m, dim), jw of shape (ne, m)
    holding jacobian-times-weight, and phi of shape (m, k+1).
    """
    pts, w = simplex_rule(mesh.dim, degree)
    phi = _barycentric_phi(pts)
    EV = mesh.element_vertices()[elems]  # (ne, k+1, dim)
    X = np.einsum("mk,ekd->emd", phi, EV)
    jac = mesh.volumes()[elems] * (2.0 if mesh.dim == 2 else 1.0)
    jw = jac[:, None] * w[None, :]
    return X, jw, phi


def _uh_at(phi: np.ndarray, nodal: np.ndarray, mesh: Mesh, elems: np.ndarray):
    """Discrete solution values (ne, m) at the quadrature points."""
    return np.einsum("mk,ek->em", phi, nodal[mesh.simplices[elems]])


# Grading exponent of the power-map quadrature toward interface vertices,
# where exact solutions behave like dist(x, ring)^s: substituting a = alpha^p
# turns a^s into alpha^(p s + p - 1), smooth enough for Gauss rules across
# the whole s range used here.
_CUSP_GRADE = 4


def _graded_corner_rule(v, ends, n: int, grade_b: bool):
    """Tensor rule on the simplex (v, *ends), graded toward the corner ``v``.

    Uses the Duffy parametrization x = v + a * (e1 + b (e2 - e1)) with
    a = alpha^p; with ``grade_b`` also b = beta^p, concentrating toward the
    e1 edge (used when that edge is tangent to the interface circle, where
    the distance to the circle degenerates from linear to quadratic).
    In 1D only the ``a`` direction exists.
    """
    p = _CUSP_GRADE
    ga, gw = gauss01(n)
    a = ga ** p
    da = p * ga ** (p - 1) * gw
    if len(ends) == 1:  # 1D interval
        e1 = ends[0] - v
        pts = v[None, :] + a[:, None] * e1[None, :]
        return pts, da * abs(float(e1[0]))
    e1 = ends[0] - v
    e2 = ends[1] - v
    if grade_b:
        b = ga ** p
        db = p * ga ** (p - 1) * gw
    else:
        b, db = ga, gw
    J = abs(float(e1[0] * e2[1] - e1[1] * e2[0]))
    dirs = e1[None, :] + b[:, None] * (e2 - e1)[None, :]  # (n, dim)
    pts = v[None, None, :] + a[:, None, None] * dirs[None, :, :]
    W = J * (a * da)[:, None] * db[None, :]
    return pts.reshape(-1, 2), W.reshape(-1)


def _cusp_element_rule(V: np.ndarray, singular: np.ndarray, n: int):
    """Quadrature (points, weights) for one element with ring vertices.

    ``singular`` flags which of the k+1 vertices lie on the interface ring.
    One flagged vertex: grade toward it.  Two flagged vertices (the joining
    edge is a chord of the ring, tangent to the circle at each end): split at
    the chord midpoint and grade each half toward its ring corner, in both
    the radial and the chord direction.
    """
    nsing = int(singular.sum())
    if V.shape[1] == 1 or nsing == 1:
        i = int(np.flatnonzero(singular)[0])
        return _graded_corner_rule(V[i], list(np.delete(V, i, axis=0)), n,
                                   grade_b=False)
    if nsing == 2:
        i, j = np.flatnonzero(singular)
        k = 3 - i - j
        mid = 0.5 * (V[i] + V[j])
        Pi, Wi = _graded_corner_rule(V[i], [mid, V[k]], n, grade_b=True)
        Pj, Wj = _graded_corner_rule(V[j], [mid, V[k]], n, grade_b=True)
        return np.vstack([Pi, Pj]), np.concatenate([Wi, Wj])
    # all three flagged: bisect once; corner children touch the ring at one
    # vertex, the middle child at none (graded anyway, which is still exact)
    m01, m02, m12 = 0.5 * (V[0] + V[1]), 0.5 * (V[0] + V[2]), 0.5 * (V[1] + V[2])
    out_p, out_w = [], []
    for child, flags in (
            (np.vstack([V[0], m01, m02]), (True, False, False)),
            (np.vstack([m01, V[1], m12]), (False, True, False)),
            (np.vstack([m02, m12, V[2]]), (False, False, True)),
            (np.vstack([m01, m12, m02]), (True, False, False))):
        P, W = _cusp_element_rule(child, np.asarray(flags), n)
        out_p.append(P)
        out_w.append(W)
    return np.vstack(out_p), np.concatenate(out_w)


def _l2_sq_elements(mesh: Mesh, elems: np.ndarray, nodal: np.ndarray, ref,
                    degree: int, refine_interface: bool) -> float:
    """Sum of int_T (u_h - u_ref)^2 over the selected elements."""
    iface = mesh.on_interface[mesh.simplices[elems]]  # (ne, k+1)
    cuspy = refine_interface & iface.any(axis=1)
    regular = elems[~cuspy]
    acc = 0.0
    if regular.size:
        X, jw, phi = _element_quadrature(mesh, degree, regular)
        uh = _uh_at(phi, nodal, mesh, regular)
        ur = np.asarray(ref.evaluate(X.reshape(-1, mesh.dim)), dtype=float)
        acc += float(np.sum(jw * (uh - ur.reshape(uh.shape)) ** 2))
    n_graded = (degree + 2) // 2 + 6
    EV = mesh.element_vertices()
    for e, flags in zip(elems[cuspy], iface[cuspy]):
        V = EV[e]
        P, W = _cusp_element_rule(V, flags, n_graded)
        edges = V[1:] - V[0]
        coords = (P - V[0]) @ np.linalg.inv(edges)
        phi = _barycentric_phi(coords)
        uh = phi @ nodal[mesh.simplices[e]]
        ur = np.asarray(ref.evaluate(P), dtype=float)
        acc += float(np.sum(W * (uh - ur) ** 2))
    return acc


def l2_error(sol: DiscreteSolution, ref, region: Region = REGION_OMEGA, *,
             degree: int = 4, datum=None, tail_l2_sq: float | None = None) -> float:
    """L2 norm of u_h - u_ref over a region.

    Parameters
    ----------
    sol : DiscreteSolution
    ref : ReferenceSolution
        Must be evaluable on the requested region (for OMEGA_H and RN this
        includes the annulus, where the exact solution equals the datum).
    region : {"OMEGA", "OMEGA_H", "RN"}
        Inner ball, whole meshed domain, or all of space.  RN integrates the
        datum over the unmeshed exterior analytically: the discrete solution
        vanishes there, so the tail contributes ``||g||^2`` outside B(0, R).
    degree : int
        Gauss quadrature degree per element.  Inner elements touching the
        interface ring are additionally graded geometrically toward their
        ring vertices, where exact solutions behave like dist(x, ring)^s.
    datum : RadialDatum, optional
        Supplies the closed-form exterior tail for RN via ``l2_tail_sq``.
    tail_l2_sq : float, optional
        Explicit tail value overriding ``datum`` (pass 0.0 for compactly
        supported data).

    Returns
    -------
    float
    """
    if region not in _REGIONS:
        raise ValueError(f"unknown region {region!r}; expected one of {_REGIONS}")
    mesh = sol.mesh
    if region == REGION_OMEGA:
        elems = np.flatnonzero(mesh.elem_inside)
    else:
        elems = np.arange(mesh.simplices.shape[0])
    acc = _l2_sq_elements(mesh, elems, sol.nodal_values(), ref, degree,
                          refine_interface=True)
    if region == REGION_RN:
        if tail_l2_sq is None:
            if datum is None or datum.l2_tail_sq is None:
                raise ValueError("region RN needs a datum with a closed-form "
                                 "exterior L2 tail (or an explicit tail_l2_sq)")
            tail_l2_sq = datum.l2_tail_sq(mesh.R, mesh.dim)
            if tail_l2_sq is None:
                raise ValueError(f"datum {datum.name!r} has no exterior L2 tail "
                                 f"in dimension {mesh.dim}")
        acc += float(tail_l2_sq)
    return float(np.sqrt(acc))


def _hat_gradients(mesh: Mesh, elems: np.ndarray) -> np.ndarray:
    """Physical gradients of the k+1 hat functions, shape (ne, k+1, dim)."""
    EV = mesh.element_vertices()[elems]
    edges = EV[:, 1:, :] - EV[:, :1, :]  # (ne, k, dim): rows are v_i - v_0
    ginv = np.linalg.inv(edges)          # columns of ginv are grad lambda_i
    glam = np.swapaxes(ginv, 1, 2)       # (ne, k, dim)
    g0 = -glam.sum(axis=1, keepdims=True)
    return np.concatenate([g0, glam], axis=1)


def hs_error_smooth_bound(sol: DiscreteSolution, ref, *, degree: int = 4) -> float:
    """Interpolation upper bound ||e||_{L2}^(1-s) * ||e||_{H1}^s over the ball.

    Valid when the reference solution is smooth on the closed inner ball (its
    gradient must be evaluable there); the result bounds the H^s error but is
    not the norm itself.

    Raises
    ------
    ValueError
        If the reference has no evaluable gradient.
    """
    if not getattr(ref, "gradient_available", False):
        raise ValueError(f"{ref.kind} reference has no evaluable gradient")
    mesh = sol.mesh
    s = sol.s
    elems = np.flatnonzero(mesh.elem_inside)
    X, jw, phi = _element_quadrature(mesh, degree, elems)
    nodal = sol.nodal_values()
    uh = _uh_at(phi, nodal, mesh, elems)
    flat = X.reshape(-1, mesh.dim)
    ur = np.asarray(ref.evaluate(flat), dtype=float).reshape(uh.shape)
    l2_sq = float(np.sum(jw * (uh - ur) ** 2))

    ghat = _hat_gradients(mesh, elems)                      # (ne, k+1, dim)
    guh = np.einsum("ek,ekd->ed", nodal[mesh.simplices[elems]], ghat)
    gur = np.asarray(ref.gradient(flat), dtype=float).reshape(X.shape)
    diff = guh[:, None, :] - gur                            # (ne, m, dim)
    semi_sq = float(np.sum(jw * np.sum(diff ** 2, axis=2)))
    h1_sq = l2_sq + semi_sq
    if l2_sq == 0.0:
        return 0.0
    return float(l2_sq ** (0.5 * (1.0 - s)) * h1_sq ** (0.5 * s))


@dataclass(frozen=True)
class EnergyError:
    """Energy-norm error of a homogeneous problem via the Galerkin identity.

    ``value`` is sqrt(f * (int u - int u_h)), the error in the energy norm
    induced by the assembled bilinear form; ``gagliardo`` rescales it by
    sqrt(2 / C(n,s)) to the Gagliardo H^s seminorm.  ``radicand`` is kept for
    monotonicity diagnostics.
    """

    value: float
    gagliardo: float
    radicand: float


def hs_energy_error_homogeneous(sol: DiscreteSolution, *, f_value: float,
                                exact_integral: float) -> EnergyError:
    """Energy error for g = 0 and constant f, from the solution integral.

    With homogeneous exterior data the Galerkin identity gives
    ``a(e, e) = f * (int_Omega u - int_Omega u_h)``; the integral of the
    piecewise-linear u_h is computed exactly (vertex average per element).

    Raises
    ------
    MetricsError
        If the radicand is below -1e-12 (assembly/quadrature inconsistency;
        Galerkin optimality makes it nonnegative in exact arithmetic).
    """
    mesh = sol.mesh
    nodal = sol.nodal_values()
    inner = np.flatnonzero(mesh.elem_inside)
    vols = mesh.volumes()[inner]
    means = nodal[mesh.simplices[inner]].mean(axis=1)
    uh_int = float(np.sum(vols * means))
    radicand = f_value * (exact_integral - uh_int)
    if radicand < -1e-12:
        raise MetricsError(
            f"negative energy radicand {radicand:.3e}: discrete solution "
            "integral exceeds the exact one beyond roundoff")
    value = float(np.sqrt(max(0.0, radicand)))
    cns = normalization_constant(mesh.dim, sol.s)
    return EnergyError(value=value, gagliardo=float(np.sqrt(2.0 / cns)) * value,
                       radicand=radicand)


def eoc_fit(pairs) -> float:
    """Least-squares slope of log(err) against log(h).

    Parameters
    ----------
    pairs : sequence of (h, err)
        At least three pairs, all entries positive.
    """
    pairs = [(float(h), float(e)) for h, e in pairs]
    if len(pairs) < 3:
        raise ValueError(f"EOC fit needs at least 3 pairs, got {len(pairs)}")
    if any(h <= 0 or e <= 0 for h, e in pairs):
        raise ValueError("EOC fit needs positive mesh sizes and errors")
    lx = np.log([h for h, _ in pairs])
    ly = np.log([e for _, e in pairs])
    dx = lx - lx.mean()
    denom = float(np.sum(dx * dx))
    if denom == 0.0:
        raise ValueError("EOC fit needs at least two distinct mesh sizes")
    return float(np.sum(dx * (ly - ly.mean())) / denom)


def lambda_l2_annulus(sol: DiscreteSolution, ns_exact, *, degree: int = 4):
    """L2 distance of the discrete multiplier to an exact flux on the annulus.

    Integrates (lambda_h - ns_exact)^2 over annulus elements that do not
    touch the outer boundary (a one-element strip is excluded: the multiplier
    space has no modes there, and the exact flux is least resolved).  Returns
    ``(err, ref_norm)`` so callers can form a relative measure.

    ``ns_exact`` is called with one point (array of shape (dim,)) at a time.
    """
    if sol.lam is None:
        raise ValueError("solution carries no multiplier (direct method?)")
    mesh = sol.mesh
    outer_nodes = mesh.node_class == NodeClass.BOUNDARY_OUTER
    keep = [e for e in np.flatnonzero(~mesh.elem_inside)
            if not outer_nodes[mesh.simplices[e]].any()]
    keep = np.asarray(keep, dtype=int)
    X, jw, phi = _element_quadrature(mesh, degree, keep)
    lam_nodal = np.zeros(mesh.verts.shape[0])
    dofs = mesh.node_to_dof
    mult = dofs >= mesh.n_interior
    lam_nodal[mult] = sol.lam[dofs[mult] - mesh.n_interior]
    lam_h = _uh_at(phi, lam_nodal, mesh, keep)
    ns = np.array([ns_exact(x) for x in X.reshape(-1, mesh.dim)]).reshape(lam_h.shape)
    err = float(np.sqrt(np.sum(jw * (lam_h - ns) ** 2)))
    ref_norm = float(np.sqrt(np.sum(jw * ns ** 2)))
    return err, ref_norm


@dataclass
class ConvergenceReport:
    """Rows of (h, H, Ndof, errors by norm) for one experiment and s.

    Rows are kept in insertion order (ladders run coarse to fine, so h is
    decreasing); ``eoc()`` fits each norm column once three or more rows are
    present.  Cells that failed are recorded as messages and excluded from
    fits.
    """

    experiment: str
    dim: int
    s: float
    norms: tuple
    calibration: tuple | None = None
    rows: list = field(default_factory=list)
    failures: list = field(default_factory=list)

    def add_row(self, *, h: float, H: float, ndof: int, **errors) -> None:
        missing = set(self.norms) - set(errors)
        extra = set(errors) - set(self.norms)
        if missing or extra:
            raise ValueError(f"row norms {sorted(errors)} do not match "
                             f"declared {list(self.norms)}")
        vals = {k: float(errors[k]) for k in self.norms}
        for k, v in vals.items():
            if not np.isfinite(v) or v < 0.0:
                raise ValueError(f"norm {k} has invalid value {v!r}")
        self.rows.append({"h": float(h), "H": float(H), "ndof": int(ndof), **vals})

    def record_failure(self, *, h: float, message: str) -> None:
        self.failures.append(f"h={h:g}: {message}")

    def eoc(self) -> dict:
        """Per-norm least-squares slope, or None with fewer than 3 rows."""
        if len(self.rows) < 3:
            return {k: None for k in self.norms}
        out = {}
        for k in self.norms:
            pairs = [(row["h"], row[k]) for row in self.rows if row[k] > 0.0]
            out[k] = eoc_fit(pairs) if len(pairs) >= 3 else None
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# experiment={self.experiment} n={self.dim} s={self.s:g}\n")
        buf.write(",".join(["h", "H", "Ndof", *self.norms]) + "\n")
        for row in self.rows:
            cells = [f"{row['h']:.12e}", f"{row['H']:.12e}", str(row["ndof"])]
            cells += [f"{row[k]:.12e}" for k in self.norms]
            buf.write(",".join(cells) + "\n")
        slopes = self.eoc()
        if any(v is not None for v in slopes.values()):
            cells = ["EOC", "", ""]
            cells += ["" if slopes[k] is None else f"{slopes[k]:.12e}"
                      for k in self.norms]
            buf.write(",".join(cells) + "\n")
        for msg in self.failures:
            buf.write(f"# failed {msg}\n")
        return buf.getvalue()

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(self.to_csv())
