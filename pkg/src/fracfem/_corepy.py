"""Pure-NumPy element-pair assembly core (fallback for the compiled extension).

Assembles the singular double integrals

    I(T1, T2)[i, j] = iint_{T1 x T2} (phi_i(x)-phi_i(y)) (phi_j(x)-phi_j(y))
                      |x - y|^(-(dim+2s)) dy dx

over all element pairs with T1 inside Omega, weighted C for distinct pairs
(both orders of a symmetric integrand) and C/2 for identical pairs.  Touching
pairs use exact cone reductions: the radial direction of the singularity is
integrated in closed form, leaving smooth low-dimensional Gauss quadrature.

Geometry of the reductions (union hats are linear-homogeneous along rays):

* 1D identical: closed form 2 l^(1-2s) / ((2-2s)(3-2s)) times [[1,-1],[-1,1]].
* 1D adjacent (shared node S): in (u, v) distances from S the kernel is
  (u+v)^(-1-2s); the square [0,l1]x[0,l2] is a cone over its two far faces和
  the ray integral gives the factor 1/(3-2s).
* 2D identical: Fubini in w = v - u gives the unit-simplex covariogram
  (1 - ell(w))^2 / 2 over a hexagon on whose boundary ell = 1; along each
  fan ray the t-integral is Beta(2-2s, 3)/2 = 1/((2-2s)(3-2s)(4-2s)).
* 2D edge-sharing: after integrating out the coordinate along the shared
  edge the domain is {Lambda(zeta) < 1} for a homogeneous piecewise-linear
  Lambda; 4 far facets (2 triangles, 2 squares), ray factor 1/((3-2s)(4-2s)).
* 2D vertex-sharing: the product of two unit simplices is the cone over 2
  prism facets {u1+u2 = 1} and {v1+v2 = 1}; ray factor 1/(4-2s).

Disjoint pairs use tensor rules with a separation zoning by
eta = |centroid1 - centroid2| / (diam1 + diam2): plain low-order far rule,
a higher-order mid rule, and recursive simplex bisection when eta is small.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .quadrules import duffy_triangle, gauss01, simplex_rule

__all__ = ["QuadParams", "make_quad_params", "assemble_pair_blocks"]

_HEX = np.array([(1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1)], dtype=float)


@dataclass(frozen=True)
class QuadParams:
    level: int
    eta_far: float
    eta_near: float
    max_depth: int
    far: tuple          # (pts (m,dim), w)
    mid: tuple
    t_gauss: tuple      # (x, w) on [0,1]: chords, 1D faces, square-face axes
    tri_face: tuple     # (pts (m,2), w): triangular far faces (Duffy tensor)


def make_quad_params(dim: int, level: int = 1) -> QuadParams:
    if level not in (1, 2):
        raise ValueError("quadrature level must be 1 (default) or 2 (doubled)")
    if dim == 1:
        far = simplex_rule(1, 12 if level == 1 else 24)
        mid = simplex_rule(1, 18 if level == 1 else 38)
    else:
        far = simplex_rule(2, 5 if level == 1 else 8)
        mid = simplex_rule(2, 8)
    return QuadParams(
        level=level,
        eta_far=2.0 if level == 1 else 3.0,
        eta_near=1.5 if level == 1 else 1.8,
        max_depth=2 if level == 1 else 3,
        far=far,
        mid=mid,
        t_gauss=gauss01(16 * level),
        tri_face=duffy_triangle(16 * level),
    )


# -- local matrices: touching topologies --------------------------------------


def _local_identical_1d(ell: float, s: float) -> np.ndarray:
    f = 2.0 * ell ** (1.0 - 2.0 * s) / ((2.0 - 2.0 * s) * (3.0 - 2.0 * s))
    return np.array([[f, -f], [-f, f]])


def _local_adjacent_1d(l1: float, l2: float, s: float, qp: QuadParams) -> np.ndarray:
    """Union ordering [S, P1, P2] with S the shared node."""
    b, w = qp.t_gauss
    L = np.zeros((3, 3))
    # face u = l1: hat differences (lS, lP1, lP2) = (b-1, 1, -b)
    lv = np.stack([b - 1.0, np.ones_like(b), -b])
    kw = w * (l1 + b * l2) ** (-1.0 - 2.0 * s)
    L += np.einsum("ap,bp,p->ab", lv, lv, kw)
    # face v = l2: (1-a, a, -1)
    lv = np.stack([1.0 - b, b, -np.ones_like(b)])
    kw = w * (b * l1 + l2) ** (-1.0 - 2.0 * s)
    L += np.einsum("ap,bp,p->ab", lv, lv, kw)
    return (l1 * l2 / (3.0 - 2.0 * s)) * L


def _accum_face(L: np.ndarray, lv: np.ndarray, m: np.ndarray, w: np.ndarray, s: float) -> None:
    kw = w * (m[:, 0] ** 2 + m[:, 1] ** 2) ** (-(1.0 + s))
    L += np.einsum("ap,bp,p->ab", lv, lv, kw)


def _local_identical_2d(ev: np.ndarray, Minv: np.ndarray, J: float, s: float,
                        qp: QuadParams) -> np.ndarray:
    E = ev[1:] - ev[0]  # rows: edge vectors
    grads = np.vstack([-Minv[0] - Minv[1], Minv[0], Minv[1]])  # (3, 2)
    mu, w = qp.t_gauss
    L = np.zeros((3, 3))
    for k in range(6):
        c = np.outer(1.0 - mu, _HEX[k]) + np.outer(mu, _HEX[(k + 1) % 6])  # (p, 2)
        mc = c @ E  # (p, 2)
        q = grads @ mc.T  # (3, p)
        kw = w * (mc[:, 0] ** 2 + mc[:, 1] ** 2) ** (-(1.0 + s))
        L += np.einsum("ap,bp,p->ab", q, q, kw)
    Wc = 1.0 / ((2.0 - 2.0 * s) * (3.0 - 2.0 * s) * (4.0 - 2.0 * s))
    return (J * J * Wc) * L


def _local_edge_2d(V0, V1, A1, A2, s: float, qp: QuadParams) -> np.ndarray:
    """Union ordering [V0, V1, A1, A2]; zeta = (delta, u2, v2)."""
    E, p1, p2 = V1 - V0, A1 - V0, A2 - V0
    J1 = abs(E[0] * p1[1] - E[1] * p1[0])
    J2 = abs(E[0] * p2[1] - E[1] * p2[0])
    tp, tw = qp.tri_face
    gx, gw = qp.t_gauss
    a, bb = tp[:, 0], tp[:, 1]
    one = np.ones_like(a)
    sq_a = np.repeat(gx, len(gx))
    sq_b = np.tile(gx, len(gx))
    sq_w = np.repeat(gw, len(gw)) * np.tile(gw, len(gw))
    ones_sq = np.ones_like(sq_a)
    faces = (
        (np.stack([-a, one, bb], axis=1), tw),                       # u2 far, delta<=0
        (np.stack([-sq_b, sq_a, 1.0 - sq_b], axis=1), sq_w),         # v2-delta far
        (np.stack([sq_b, 1.0 - sq_b, sq_a], axis=1), sq_w),          # u2+delta far
        (np.stack([a, bb, one], axis=1), tw),                        # v2 far, delta>=0
    )
    L = np.zeros((4, 4))
    for c, w in faces:
        m = np.outer(c[:, 0], E) + np.outer(c[:, 1], p1) - np.outer(c[:, 2], p2)
        lv = np.stack([-c[:, 0] - c[:, 1] + c[:, 2], c[:, 0], c[:, 1], -c[:, 2]])
        _accum_face(L, lv, m, w, s)
    We = 1.0 / ((3.0 - 2.0 * s) * (4.0 - 2.0 * s))
    return (J1 * J2 * We) * L


def _local_vertex_2d(V, A1, B1, A2, B2, s: float, qp: QuadParams) -> np.ndarray:
    """Union ordering [V, A1, B1, A2, B2]; zeta = (u1, u2, v1, v2)."""
    a1, b1, a2, b2 = A1 - V, B1 - V, A2 - V, B2 - V
    J1 = abs(a1[0] * b1[1] - a1[1] * b1[0])
    J2 = abs(a2[0] * b2[1] - a2[1] * b2[0])
    tp, tw = qp.tri_face
    gx, gw = qp.t_gauss
    nt, ng = len(tw), len(gx)
    # facet u1+u2 = 1: c = (1-al, al, v1, v2)
    al = np.repeat(gx, nt)
    wu = np.repeat(gw, nt) * np.tile(tw, ng)
    v1, v2 = np.tile(tp[:, 0], ng), np.tile(tp[:, 1], ng)
    cu = np.stack([1.0 - al, al, v1, v2], axis=1)
    # facet v1+v2 = 1: c = (u1, u2, 1-be, be)
    be = np.repeat(gx, nt)
    u1, u2 = np.tile(tp[:, 0], ng), np.tile(tp[:, 1], ng)
    cv = np.stack([u1, u2, 1.0 - be, be], axis=1)
    L = np.zeros((5, 5))
    for c, w in ((cu, wu), (cv, wu)):
        m = (np.outer(c[:, 0], a1) + np.outer(c[:, 1], b1)
             - np.outer(c[:, 2], a2) - np.outer(c[:, 3], b2))
        lv = np.stack([-c[:, 0] - c[:, 1] + c[:, 2] + c[:, 3],
                       c[:, 0], c[:, 1], -c[:, 2], -c[:, 3]])
        _accum_face(L, lv, m, w, s)
    Wv = 1.0 / (4.0 - 2.0 * s)
    return (J1 * J2 * Wv) * L


# -- disjoint pairs -------------------------------------------------------------


def _diam(ev: np.ndarray) -> float:
    if len(ev) == 2:
        return float(np.linalg.norm(ev[1] - ev[0]))
    return float(max(np.linalg.norm(ev[1] - ev[0]),
                     np.linalg.norm(ev[2] - ev[1]),
                     np.linalg.norm(ev[0] - ev[2])))


def _split(ev: np.ndarray) -> list[np.ndarray]:
    if len(ev) == 2:
        m = 0.5 * (ev[0] + ev[1])
        return [np.stack([ev[0], m]), np.stack([m, ev[1]])]
    m01 = 0.5 * (ev[0] + ev[1])
    m12 = 0.5 * (ev[1] + ev[2])
    m02 = 0.5 * (ev[0] + ev[2])
    return [np.stack([ev[0], m01, m02]), np.stack([m01, ev[1], m12]),
            np.stack([m02, m12, ev[2]]), np.stack([m01, m12, m02])]


def _leaf_disjoint(ev1, ev2, inv1, off1, inv2, off2, dim, s, rule) -> np.ndarray:
    pts, w = rule
    e1 = ev1[1:] - ev1[0]
    e2 = ev2[1:] - ev2[0]
    if dim == 1:
        J1, J2 = abs(e1[0, 0]), abs(e2[0, 0])
    else:
        J1 = abs(e1[0, 0] * e1[1, 1] - e1[0, 1] * e1[1, 0])
        J2 = abs(e2[0, 0] * e2[1, 1] - e2[0, 1] * e2[1, 0])
    x = ev1[0] + pts @ e1
    y = ev2[0] + pts @ e2
    lam1 = (x - off1) @ inv1.T
    lam2 = (y - off2) @ inv2.T
    phi1 = np.column_stack([1.0 - lam1.sum(axis=1), lam1])
    phi2 = np.column_stack([1.0 - lam2.sum(axis=1), lam2])
    diff = x[:, None, :] - y[None, :, :]
    r2 = np.sum(diff * diff, axis=2)
    WK = np.outer(w, w) * r2 ** (-(dim / 2.0 + s)) * (J1 * J2)
    k = dim + 1
    L = np.empty((2 * k, 2 * k))
    rows = WK.sum(axis=1)
    cols = WK.sum(axis=0)
    L[:k, :k] = np.einsum("pa,pb,p->ab", phi1, phi1, rows)
    L[k:, k:] = np.einsum("pa,pb,p->ab", phi2, phi2, cols)
    L12 = -phi1.T @ WK @ phi2
    L[:k, k:] = L12
    L[k:, :k] = L12.T
    return L


def _local_disjoint(ev1, ev2, inv1, off1, inv2, off2, dim, s, qp: QuadParams,
                    depth: int = 0) -> np.ndarray:
    c1 = ev1.mean(axis=0)
    c2 = ev2.mean(axis=0)
    eta = float(np.linalg.norm(c1 - c2)) / (_diam(ev1) + _diam(ev2))
    if eta > qp.eta_far:
        return _leaf_disjoint(ev1, ev2, inv1, off1, inv2, off2, dim, s, qp.far)
    if eta > qp.eta_near or depth >= qp.max_depth:
        return _leaf_disjoint(ev1, ev2, inv1, off1, inv2, off2, dim, s, qp.mid)
    L = np.zeros((2 * (dim + 1), 2 * (dim + 1)))
    for ch1 in _split(ev1):
        for ch2 in _split(ev2):
            L += _local_disjoint(ch1, ch2, inv1, off1, inv2, off2, dim, s, qp, depth + 1)
    return L


# -- pair dispatch and scatter ----------------------------------------------------


def _pair_local(e1: int, e2: int, EV, simplices, Minv, offs, J, dim, s, qp):
    """Local matrix and union node list for the unordered pair (e1, e2)."""
    s1 = simplices[e1]
    if e1 == e2:
        if dim == 1:
            return _local_identical_1d(J[e1], s), list(s1)
        return _local_identical_2d(EV[e1], Minv[e1], J[e1], s, qp), list(s1)
    s2 = simplices[e2]
    shared = [int(v) for v in s1 if v in s2]
    if dim == 1:
        if len(shared) == 1:
            S = shared[0]
            P1 = int(s1[0] if s1[1] == S else s1[1])
            P2 = int(s2[0] if s2[1] == S else s2[1])
            Sx = EV[e1][list(s1).index(S), 0]
            l1 = abs(EV[e1][list(s1).index(P1), 0] - Sx)
            l2 = abs(EV[e2][list(s2).index(P2), 0] - Sx)
            return _local_adjacent_1d(l1, l2, s, qp), [S, P1, P2]
    else:
        if len(shared) == 2:
            V0g, V1g = shared
            A1g = next(int(v) for v in s1 if v not in shared)
            A2g = next(int(v) for v in s2 if v not in shared)
            coords = {int(v): EV[e1][i] for i, v in enumerate(s1)}
            coords.update({int(v): EV[e2][i] for i, v in enumerate(s2)})
            Lm = _local_edge_2d(coords[V0g], coords[V1g], coords[A1g], coords[A2g], s, qp)
            return Lm, [V0g, V1g, A1g, A2g]
        if len(shared) == 1:
            Vg = shared[0]
            o1 = [int(v) for v in s1 if v != Vg]
            o2 = [int(v) for v in s2 if v != Vg]
            coords = {int(v): EV[e1][i] for i, v in enumerate(s1)}
            coords.update({int(v): EV[e2][i] for i, v in enumerate(s2)})
            Lm = _local_vertex_2d(coords[Vg], coords[o1[0]], coords[o1[1]],
                                  coords[o2[0]], coords[o2[1]], s, qp)
            return Lm, [Vg, o1[0], o1[1], o2[0], o2[1]]
    Lm = _local_disjoint(EV[e1], EV[e2], Minv[e1], offs[e1], Minv[e2], offs[e2],
                         dim, s, qp)
    return Lm, list(s1) + list(s2)


def assemble_pair_blocks(verts, simplices, dof_of_node, inside, n_core, n_dof,
                         dim, s, cns, level=1):
    """Element-pair part of the stiffness form, in block storage.

    Returns (core, cross, ann_blocks): the dense block over DOFs whose hats
    meet the closure of Omega, the dense coupling to the remaining annulus
    DOFs, and per-element (k+1)x(k+1) blocks holding annulus-x-annulus
    (mass-pattern) contributions.
    """
    qp = make_quad_params(dim, level)
    Ne = len(simplices)
    k = dim + 1
    EV = verts[simplices].astype(float)
    if dim == 1:
        J = np.abs(EV[:, 1, 0] - EV[:, 0, 0])
        Minv = (1.0 / (EV[:, 1, 0] - EV[:, 0, 0]))[:, None, None]
    else:
        e1 = EV[:, 1] - EV[:, 0]
        e2 = EV[:, 2] - EV[:, 0]
        det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
        J = np.abs(det)
        Minv = np.empty((Ne, 2, 2))
        Minv[:, 0, 0] = e2[:, 1] / det
        Minv[:, 0, 1] = -e2[:, 0] / det
        Minv[:, 1, 0] = -e1[:, 1] / det
        Minv[:, 1, 1] = e1[:, 0] / det
    offs = EV[:, 0]

    n_rest = n_dof - n_core
    core = np.zeros((n_core, n_core))
    cross = np.zeros((n_core, max(n_rest, 1)))
    ann_blocks = np.zeros((Ne, k, k))

    inner_list = np.flatnonzero(inside)
    annulus_list = np.flatnonzero(~inside)

    def scatter(Lm, gnodes, wfac, e2, s2nodes):
        m = len(gnodes)
        dofs = [int(dof_of_node[g]) for g in gnodes]
        t2loc = [s2nodes.index(g) if g in s2nodes else -1 for g in gnodes]
        for a in range(m):
            ia = dofs[a]
            if ia < 0:
                continue
            for b in range(m):
                ib = dofs[b]
                if ib < 0:
                    continue
                v = wfac * Lm[a, b]
                if ia < n_core:
                    if ib < n_core:
                        core[ia, ib] += v
                    else:
                        cross[ia, ib - n_core] += v
                elif ib >= n_core:
                    ann_blocks[e2, t2loc[a], t2loc[b]] += v

    args = (EV, simplices, Minv, offs, J, dim, s, qp)
    for ii, e1 in enumerate(inner_list):
        Lm, gnodes = _pair_local(int(e1), int(e1), *args)
        scatter(Lm, gnodes, 0.5 * cns, int(e1), [])
        for e2 in inner_list[ii + 1:]:
            Lm, gnodes = _pair_local(int(e1), int(e2), *args)
            scatter(Lm, gnodes, cns, int(e2), [])
    for e2 in annulus_list:
        s2nodes = [int(v) for v in simplices[e2]]
        for e1 in inner_list:
            Lm, gnodes = _pair_local(int(e1), int(e2), *args)
            scatter(Lm, gnodes, cns, int(e2), s2nodes)
    return core, cross[:, :n_rest], ann_blocks
