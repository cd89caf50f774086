# cython: boundscheck=False, wraparound=False, cdivision=True
# cython: language_level=3
"""Compiled element-pair assembly core.

Semantics mirror fracfem._corepy exactly (same quadrature tables via
make_quad_params, same cone reductions, same zoning of disjoint pairs); only
the loops are C.  Cross-backend agreement is enforced by tests at relative
1e-12, so any change here must be mirrored in the fallback.
"""
import numpy as np

cimport numpy as cnp
from libc.math cimport fabs, pow, sqrt

from ._corepy import make_quad_params

cnp.import_array()


ctypedef struct Tables:
    int dim
    int ntg          # gauss points on [0,1]
    int ntf          # duffy triangle-face points
    int nfar
    int nmid
    int max_depth
    double eta_far
    double eta_near
    double s
    double* tgx
    double* tgw
    double* tfp
    double* tfw
    double* farp
    double* farw
    double* midp
    double* midw


cdef double _HEXC[14]
# hexagon corners (closed: first repeated at the end)
_HEXC[0] = 1;  _HEXC[1] = 0
_HEXC[2] = 0;  _HEXC[3] = 1
_HEXC[4] = -1; _HEXC[5] = 1
_HEXC[6] = -1; _HEXC[7] = 0
_HEXC[8] = 0;  _HEXC[9] = -1
_HEXC[10] = 1; _HEXC[11] = -1
_HEXC[12] = 1; _HEXC[13] = 0


# -- local matrices -----------------------------------------------------------


cdef void _identical_1d(double ell, double s, double* L) noexcept nogil:
    cdef double f = 2.0 * pow(ell, 1.0 - 2.0 * s) / ((2.0 - 2.0 * s) * (3.0 - 2.0 * s))
    L[0] = f; L[1] = -f; L[2] = -f; L[3] = f


cdef void _adjacent_1d(double l1, double l2, double s, Tables* T, double* L) noexcept nogil:
    cdef int i, a, b
    cdef double bq, w, kw
    cdef double lv[3]
    for i in range(9):
        L[i] = 0.0
    for i in range(T.ntg):
        bq = T.tgx[i]; w = T.tgw[i]
        # face u = l1
        lv[0] = bq - 1.0; lv[1] = 1.0; lv[2] = -bq
        kw = w * pow(l1 + bq * l2, -1.0 - 2.0 * s)
        for a in range(3):
            for b in range(3):
                L[3 * a + b] += lv[a] * lv[b] * kw
        # face v = l2
        lv[0] = 1.0 - bq; lv[1] = bq; lv[2] = -1.0
        kw = w * pow(bq * l1 + l2, -1.0 - 2.0 * s)
        for a in range(3):
            for b in range(3):
                L[3 * a + b] += lv[a] * lv[b] * kw
    cdef double fac = l1 * l2 / (3.0 - 2.0 * s)
    for i in range(9):
        L[i] *= fac


cdef void _identical_2d(double* ev, double* minv, double J, double s,
                        Tables* T, double* L) noexcept nogil:
    cdef int k, i, a, b
    cdef double mu, w, c0, c1, mx, my, kw
    cdef double e00 = ev[2] - ev[0], e01 = ev[3] - ev[1]
    cdef double e10 = ev[4] - ev[0], e11 = ev[5] - ev[1]
    cdef double g[3][2]
    cdef double q[3]
    g[1][0] = minv[0]; g[1][1] = minv[1]
    g[2][0] = minv[2]; g[2][1] = minv[3]
    g[0][0] = -g[1][0] - g[2][0]
    g[0][1] = -g[1][1] - g[2][1]
    for i in range(9):
        L[i] = 0.0
    for k in range(6):
        for i in range(T.ntg):
            mu = T.tgx[i]; w = T.tgw[i]
            c0 = (1.0 - mu) * _HEXC[2 * k] + mu * _HEXC[2 * k + 2]
            c1 = (1.0 - mu) * _HEXC[2 * k + 1] + mu * _HEXC[2 * k + 3]
            mx = c0 * e00 + c1 * e10
            my = c0 * e01 + c1 * e11
            kw = w * pow(mx * mx + my * my, -(1.0 + s))
            for a in range(3):
                q[a] = g[a][0] * mx + g[a][1] * my
            for a in range(3):
                for b in range(3):
                    L[3 * a + b] += q[a] * q[b] * kw
    cdef double fac = J * J / ((2.0 - 2.0 * s) * (3.0 - 2.0 * s) * (4.0 - 2.0 * s))
    for i in range(9):
        L[i] *= fac


cdef inline void _edge_accum(double c0, double c1, double c2, double w,
                             double* E, double* p1, double* p2, double s,
                             double* L) noexcept nogil:
    cdef double mx = c0 * E[0] + c1 * p1[0] - c2 * p2[0]
    cdef double my = c0 * E[1] + c1 * p1[1] - c2 * p2[1]
    cdef double kw = w * pow(mx * mx + my * my, -(1.0 + s))
    cdef double lv[4]
    cdef int a, b
    lv[0] = -c0 - c1 + c2; lv[1] = c0; lv[2] = c1; lv[3] = -c2
    for a in range(4):
        for b in range(4):
            L[4 * a + b] += lv[a] * lv[b] * kw


cdef void _edge_2d(double* V0, double* V1, double* A1, double* A2, double s,
                   Tables* T, double* L) noexcept nogil:
    cdef double E[2]
    cdef double p1[2]
    cdef double p2[2]
    cdef int i, j, k
    cdef double a, b, w, al, be, ww
    E[0] = V1[0] - V0[0]; E[1] = V1[1] - V0[1]
    p1[0] = A1[0] - V0[0]; p1[1] = A1[1] - V0[1]
    p2[0] = A2[0] - V0[0]; p2[1] = A2[1] - V0[1]
    cdef double J1 = fabs(E[0] * p1[1] - E[1] * p1[0])
    cdef double J2 = fabs(E[0] * p2[1] - E[1] * p2[0])
    for i in range(16):
        L[i] = 0.0
    for k in range(T.ntf):
        a = T.tfp[2 * k]; b = T.tfp[2 * k + 1]; w = T.tfw[k]
        _edge_accum(-a, 1.0, b, w, E, p1, p2, s, L)      # u2 at its bound
        _edge_accum(a, b, 1.0, w, E, p1, p2, s, L)       # v2 at its bound
    for i in range(T.ntg):
        al = T.tgx[i]
        for j in range(T.ntg):
            be = T.tgx[j]
            ww = T.tgw[i] * T.tgw[j]
            _edge_accum(-be, al, 1.0 - be, ww, E, p1, p2, s, L)
            _edge_accum(be, 1.0 - be, al, ww, E, p1, p2, s, L)
    cdef double fac = J1 * J2 / ((3.0 - 2.0 * s) * (4.0 - 2.0 * s))
    for i in range(16):
        L[i] *= fac


cdef inline void _vertex_accum(double c0, double c1, double c2, double c3,
                               double w, double* a1, double* b1, double* a2,
                               double* b2, double s, double* L) noexcept nogil:
    cdef double mx = c0 * a1[0] + c1 * b1[0] - c2 * a2[0] - c3 * b2[0]
    cdef double my = c0 * a1[1] + c1 * b1[1] - c2 * a2[1] - c3 * b2[1]
    cdef double kw = w * pow(mx * mx + my * my, -(1.0 + s))
    cdef double lv[5]
    cdef int a, b
    lv[0] = -c0 - c1 + c2 + c3
    lv[1] = c0; lv[2] = c1; lv[3] = -c2; lv[4] = -c3
    for a in range(5):
        for b in range(5):
            L[5 * a + b] += lv[a] * lv[b] * kw


cdef void _vertex_2d(double* V, double* P1, double* Q1, double* P2, double* Q2,
                     double s, Tables* T, double* L) noexcept nogil:
    cdef double a1[2]
    cdef double b1[2]
    cdef double a2[2]
    cdef double b2[2]
    cdef int i, k
    cdef double al, u1, u2, w
    a1[0] = P1[0] - V[0]; a1[1] = P1[1] - V[1]
    b1[0] = Q1[0] - V[0]; b1[1] = Q1[1] - V[1]
    a2[0] = P2[0] - V[0]; a2[1] = P2[1] - V[1]
    b2[0] = Q2[0] - V[0]; b2[1] = Q2[1] - V[1]
    cdef double J1 = fabs(a1[0] * b1[1] - a1[1] * b1[0])
    cdef double J2 = fabs(a2[0] * b2[1] - a2[1] * b2[0])
    for i in range(25):
        L[i] = 0.0
    for i in range(T.ntg):
        al = T.tgx[i]
        for k in range(T.ntf):
            u1 = T.tfp[2 * k]; u2 = T.tfp[2 * k + 1]
            w = T.tgw[i] * T.tfw[k]
            _vertex_accum(1.0 - al, al, u1, u2, w, a1, b1, a2, b2, s, L)
            _vertex_accum(u1, u2, 1.0 - al, al, w, a1, b1, a2, b2, s, L)
    cdef double fac = J1 * J2 / (4.0 - 2.0 * s)
    for i in range(25):
        L[i] *= fac


# -- disjoint pairs -----------------------------------------------------------


cdef void _leaf_disjoint(double* ev1, double* ev2, double* inv1, double* off1,
                         double* inv2, double* off2, Tables* T,
                         double* rp, double* rw, int nr, double* L) noexcept nogil:
    """Accumulate (does NOT zero L): tensor rule on the two (child) simplices."""
    cdef int dim = T.dim, k = T.dim + 1, m = 2 * (T.dim + 1)
    cdef int p, q, a, b
    cdef double J1, J2, r2, wk, dx, dy
    cdef double x[64][2]
    cdef double y[64][2]
    cdef double ph1[64][3]
    cdef double ph2[64][3]
    cdef double l1, l2
    cdef double expo = 0.5 * dim + T.s
    if dim == 1:
        J1 = fabs(ev1[1] - ev1[0])
        J2 = fabs(ev2[1] - ev2[0])
        for p in range(nr):
            x[p][0] = ev1[0] + rp[p] * (ev1[1] - ev1[0])
            y[p][0] = ev2[0] + rp[p] * (ev2[1] - ev2[0])
            l1 = (x[p][0] - off1[0]) * inv1[0]
            ph1[p][0] = 1.0 - l1; ph1[p][1] = l1
            l2 = (y[p][0] - off2[0]) * inv2[0]
            ph2[p][0] = 1.0 - l2; ph2[p][1] = l2
    else:
        J1 = fabs((ev1[2] - ev1[0]) * (ev1[5] - ev1[1])
                  - (ev1[3] - ev1[1]) * (ev1[4] - ev1[0]))
        J2 = fabs((ev2[2] - ev2[0]) * (ev2[5] - ev2[1])
                  - (ev2[3] - ev2[1]) * (ev2[4] - ev2[0]))
        for p in range(nr):
            x[p][0] = ev1[0] + rp[2 * p] * (ev1[2] - ev1[0]) + rp[2 * p + 1] * (ev1[4] - ev1[0])
            x[p][1] = ev1[1] + rp[2 * p] * (ev1[3] - ev1[1]) + rp[2 * p + 1] * (ev1[5] - ev1[1])
            y[p][0] = ev2[0] + rp[2 * p] * (ev2[2] - ev2[0]) + rp[2 * p + 1] * (ev2[4] - ev2[0])
            y[p][1] = ev2[1] + rp[2 * p] * (ev2[3] - ev2[1]) + rp[2 * p + 1] * (ev2[5] - ev2[1])
            dx = x[p][0] - off1[0]; dy = x[p][1] - off1[1]
            l1 = inv1[0] * dx + inv1[1] * dy
            l2 = inv1[2] * dx + inv1[3] * dy
            ph1[p][0] = 1.0 - l1 - l2; ph1[p][1] = l1; ph1[p][2] = l2
            dx = y[p][0] - off2[0]; dy = y[p][1] - off2[1]
            l1 = inv2[0] * dx + inv2[1] * dy
            l2 = inv2[2] * dx + inv2[3] * dy
            ph2[p][0] = 1.0 - l1 - l2; ph2[p][1] = l1; ph2[p][2] = l2
    cdef double JJ = J1 * J2
    for p in range(nr):
        for q in range(nr):
            dx = x[p][0] - y[q][0]
            r2 = dx * dx
            if dim == 2:
                dy = x[p][1] - y[q][1]
                r2 += dy * dy
            wk = rw[p] * rw[q] * JJ * pow(r2, -expo)
            for a in range(k):
                for b in range(k):
                    L[m * a + b] += ph1[p][a] * ph1[p][b] * wk
                    L[m * (k + a) + (k + b)] += ph2[q][a] * ph2[q][b] * wk
                    L[m * a + (k + b)] -= ph1[p][a] * ph2[q][b] * wk
                    L[m * (k + a) + b] -= ph2[q][a] * ph1[p][b] * wk


cdef double _diam_c(double* ev, int dim) noexcept nogil:
    cdef double d, t, dx, dy
    if dim == 1:
        return fabs(ev[1] - ev[0])
    dx = ev[2] - ev[0]; dy = ev[3] - ev[1]
    d = sqrt(dx * dx + dy * dy)
    dx = ev[4] - ev[2]; dy = ev[5] - ev[3]
    t = sqrt(dx * dx + dy * dy)
    if t > d:
        d = t
    dx = ev[0] - ev[4]; dy = ev[1] - ev[5]
    t = sqrt(dx * dx + dy * dy)
    if t > d:
        d = t
    return d


cdef void _disjoint(double* ev1, double* ev2, double* inv1, double* off1,
                    double* inv2, double* off2, Tables* T, int depth,
                    double* L) noexcept nogil:
    """Accumulates into L (caller zeroes)."""
    cdef int dim = T.dim, k = T.dim + 1
    cdef double c1x = 0, c1y = 0, c2x = 0, c2y = 0
    cdef int i, j
    cdef double dx, dy, eta
    for i in range(k):
        c1x += ev1[dim * i]
        c2x += ev2[dim * i]
        if dim == 2:
            c1y += ev1[2 * i + 1]
            c2y += ev2[2 * i + 1]
    c1x /= k; c2x /= k; c1y /= k; c2y /= k
    dx = c1x - c2x; dy = c1y - c2y
    eta = sqrt(dx * dx + dy * dy) / (_diam_c(ev1, dim) + _diam_c(ev2, dim))
    if eta > T.eta_far:
        _leaf_disjoint(ev1, ev2, inv1, off1, inv2, off2, T, T.farp, T.farw, T.nfar, L)
        return
    if eta > T.eta_near or depth >= T.max_depth:
        _leaf_disjoint(ev1, ev2, inv1, off1, inv2, off2, T, T.midp, T.midw, T.nmid, L)
        return
    cdef double ch1[4][6]
    cdef double ch2[4][6]
    cdef int nch = 2 if dim == 1 else 4
    _split_c(ev1, dim, ch1)
    _split_c(ev2, dim, ch2)
    for i in range(nch):
        for j in range(nch):
            _disjoint(&ch1[i][0], &ch2[j][0], inv1, off1, inv2, off2, T, depth + 1, L)


cdef void _split_c(double* ev, int dim, double ch[4][6]) noexcept nogil:
    cdef double m01x, m01y, m12x, m12y, m02x, m02y
    if dim == 1:
        m01x = 0.5 * (ev[0] + ev[1])
        ch[0][0] = ev[0]; ch[0][1] = m01x
        ch[1][0] = m01x;  ch[1][1] = ev[1]
        return
    m01x = 0.5 * (ev[0] + ev[2]); m01y = 0.5 * (ev[1] + ev[3])
    m12x = 0.5 * (ev[2] + ev[4]); m12y = 0.5 * (ev[3] + ev[5])
    m02x = 0.5 * (ev[0] + ev[4]); m02y = 0.5 * (ev[1] + ev[5])
    ch[0][0] = ev[0]; ch[0][1] = ev[1]; ch[0][2] = m01x; ch[0][3] = m01y
    ch[0][4] = m02x; ch[0][5] = m02y
    ch[1][0] = m01x; ch[1][1] = m01y; ch[1][2] = ev[2]; ch[1][3] = ev[3]
    ch[1][4] = m12x; ch[1][5] = m12y
    ch[2][0] = m02x; ch[2][1] = m02y; ch[2][2] = m12x; ch[2][3] = m12y
    ch[2][4] = ev[4]; ch[2][5] = ev[5]
    ch[3][0] = m01x; ch[3][1] = m01y; ch[3][2] = m12x; ch[3][3] = m12y
    ch[3][4] = m02x; ch[3][5] = m02y


# -- dispatch and scatter -------------------------------------------------------


cdef void _scatter(double[:, ::1] core, double[:, ::1] cross,
                   double[:, :, ::1] annb, double* L, int m, int* dofs,
                   int* t2loc, int e2, double wfac, int n_core) noexcept nogil:
    cdef int a, b, ia, ib
    cdef double v
    for a in range(m):
        ia = dofs[a]
        if ia < 0:
            continue
        for b in range(m):
            ib = dofs[b]
            if ib < 0:
                continue
            v = wfac * L[m * a + b]
            if ia < n_core:
                if ib < n_core:
                    core[ia, ib] += v
                else:
                    cross[ia, ib - n_core] += v
            elif ib >= n_core:
                annb[e2, t2loc[a], t2loc[b]] += v


cdef int _pair_dispatch(int e1, int e2, double[:, :, ::1] EV,
                        cnp.int32_t[:, ::1] simp, double[:, :, ::1] Minv,
                        cnp.int32_t[::1] dof_of_node, Tables* T,
                        double* L, int* dofs, int* t2loc) noexcept nogil:
    """Compute the pair-local matrix; fill dofs/t2loc; return union size."""
    cdef int dim = T.dim, k = T.dim + 1
    cdef int i, j, m, nsh
    cdef int sh[2]
    cdef int o1[2]
    cdef int o2[2]
    cdef int sl1[2]
    cdef int sl2[2]
    cdef int no1, no2
    cdef double ev1[6]
    cdef double ev2[6]
    cdef double inv1[4]
    cdef double inv2[4]
    cdef double l1, l2
    cdef int gn[6]

    if e1 == e2:
        m = k
        for i in range(k):
            gn[i] = simp[e1, i]
            t2loc[i] = -1
        if dim == 1:
            _identical_1d(fabs(EV[e1, 1, 0] - EV[e1, 0, 0]), T.s, L)
        else:
            for i in range(3):
                ev1[2 * i] = EV[e1, i, 0]
                ev1[2 * i + 1] = EV[e1, i, 1]
            inv1[0] = Minv[e1, 0, 0]; inv1[1] = Minv[e1, 0, 1]
            inv1[2] = Minv[e1, 1, 0]; inv1[3] = Minv[e1, 1, 1]
            _identical_2d(ev1, inv1, fabs((ev1[2] - ev1[0]) * (ev1[5] - ev1[1])
                          - (ev1[3] - ev1[1]) * (ev1[4] - ev1[0])), T.s, T, L)
        for i in range(m):
            dofs[i] = dof_of_node[gn[i]]
        return m

    # shared vertices, in order of appearance in simplex e1
    nsh = 0
    no1 = 0
    for i in range(k):
        j = 0
        while j < k:
            if simp[e1, i] == simp[e2, j]:
                break
            j += 1
        if j < k:
            sh[nsh] = simp[e1, i]
            sl1[nsh] = i
            sl2[nsh] = j
            nsh += 1
        else:
            o1[no1] = i
            no1 += 1
    no2 = 0
    for j in range(k):
        i = 0
        while i < k:
            if simp[e2, j] == simp[e1, i]:
                break
            i += 1
        if i == k:
            o2[no2] = j
            no2 += 1

    if dim == 1 and nsh == 1:
        m = 3
        gn[0] = sh[0]; gn[1] = simp[e1, o1[0]]; gn[2] = simp[e2, o2[0]]
        l1 = fabs(EV[e1, o1[0], 0] - EV[e1, sl1[0], 0])
        l2 = fabs(EV[e2, o2[0], 0] - EV[e2, sl2[0], 0])
        _adjacent_1d(l1, l2, T.s, T, L)
        t2loc[0] = sl2[0]; t2loc[1] = -1; t2loc[2] = o2[0]
        for i in range(m):
            dofs[i] = dof_of_node[gn[i]]
        return m
    if dim == 2 and nsh == 2:
        m = 4
        gn[0] = sh[0]; gn[1] = sh[1]
        gn[2] = simp[e1, o1[0]]; gn[3] = simp[e2, o2[0]]
        ev1[0] = EV[e1, sl1[0], 0]; ev1[1] = EV[e1, sl1[0], 1]   # V0
        ev1[2] = EV[e1, sl1[1], 0]; ev1[3] = EV[e1, sl1[1], 1]   # V1
        ev1[4] = EV[e1, o1[0], 0]; ev1[5] = EV[e1, o1[0], 1]     # A1
        ev2[0] = EV[e2, o2[0], 0]; ev2[1] = EV[e2, o2[0], 1]     # A2
        _edge_2d(&ev1[0], &ev1[2], &ev1[4], &ev2[0], T.s, T, L)
        t2loc[0] = sl2[0]; t2loc[1] = sl2[1]; t2loc[2] = -1; t2loc[3] = o2[0]
        for i in range(m):
            dofs[i] = dof_of_node[gn[i]]
        return m
    if dim == 2 and nsh == 1:
        m = 5
        gn[0] = sh[0]
        gn[1] = simp[e1, o1[0]]; gn[2] = simp[e1, o1[1]]
        gn[3] = simp[e2, o2[0]]; gn[4] = simp[e2, o2[1]]
        ev1[0] = EV[e1, sl1[0], 0]; ev1[1] = EV[e1, sl1[0], 1]   # V
        ev1[2] = EV[e1, o1[0], 0]; ev1[3] = EV[e1, o1[0], 1]
        ev1[4] = EV[e1, o1[1], 0]; ev1[5] = EV[e1, o1[1], 1]
        ev2[0] = EV[e2, o2[0], 0]; ev2[1] = EV[e2, o2[0], 1]
        ev2[2] = EV[e2, o2[1], 0]; ev2[3] = EV[e2, o2[1], 1]
        _vertex_2d(&ev1[0], &ev1[2], &ev1[4], &ev2[0], &ev2[2], T.s, T, L)
        t2loc[0] = sl2[0]; t2loc[1] = -1; t2loc[2] = -1
        t2loc[3] = o2[0]; t2loc[4] = o2[1]
        for i in range(m):
            dofs[i] = dof_of_node[gn[i]]
        return m

    # disjoint
    m = 2 * k
    for i in range(k):
        gn[i] = simp[e1, i]
        gn[k + i] = simp[e2, i]
        t2loc[i] = -1
        t2loc[k + i] = i
        ev1[dim * i] = EV[e1, i, 0]
        ev2[dim * i] = EV[e2, i, 0]
        if dim == 2:
            ev1[2 * i + 1] = EV[e1, i, 1]
            ev2[2 * i + 1] = EV[e2, i, 1]
    if dim == 1:
        inv1[0] = Minv[e1, 0, 0]
        inv2[0] = Minv[e2, 0, 0]
    else:
        inv1[0] = Minv[e1, 0, 0]; inv1[1] = Minv[e1, 0, 1]
        inv1[2] = Minv[e1, 1, 0]; inv1[3] = Minv[e1, 1, 1]
        inv2[0] = Minv[e2, 0, 0]; inv2[1] = Minv[e2, 0, 1]
        inv2[2] = Minv[e2, 1, 0]; inv2[3] = Minv[e2, 1, 1]
    for i in range(m * m):
        L[i] = 0.0
    _disjoint(ev1, ev2, inv1, ev1, inv2, ev2, T, 0, L)
    for i in range(m):
        dofs[i] = dof_of_node[gn[i]]
    return m


def assemble_pair_blocks(verts, simplices, dof_of_node, inside, int n_core,
                         int n_dof, int dim, double s, double cns, int level=1):
    """Element-pair part of the stiffness form.  See fracfem._corepy."""
    qp = make_quad_params(dim, level)
    cdef cnp.ndarray[double, ndim=3] EV_arr = np.ascontiguousarray(
        np.asarray(verts, dtype=float)[np.asarray(simplices)], dtype=float)
    cdef cnp.ndarray[cnp.int32_t, ndim=2] simp_arr = np.ascontiguousarray(
        simplices, dtype=np.int32)
    cdef cnp.ndarray[cnp.int32_t, ndim=1] dof_arr = np.ascontiguousarray(
        dof_of_node, dtype=np.int32)
    cdef int Ne = simp_arr.shape[0]
    cdef int k = dim + 1

    # inverse affine maps (same formulas as the fallback)
    Minv_np = np.empty((Ne, 2, 2))
    EVf = np.asarray(EV_arr)
    if dim == 1:
        Minv_np[:, 0, 0] = 1.0 / (EVf[:, 1, 0] - EVf[:, 0, 0])
        Minv_np[:, 0, 1] = 0.0
        Minv_np[:, 1, 0] = 0.0
        Minv_np[:, 1, 1] = 1.0
    else:
        ed1 = EVf[:, 1] - EVf[:, 0]
        ed2 = EVf[:, 2] - EVf[:, 0]
        det = ed1[:, 0] * ed2[:, 1] - ed1[:, 1] * ed2[:, 0]
        Minv_np[:, 0, 0] = ed2[:, 1] / det
        Minv_np[:, 0, 1] = -ed2[:, 0] / det
        Minv_np[:, 1, 0] = -ed1[:, 1] / det
        Minv_np[:, 1, 1] = ed1[:, 0] / det
    cdef cnp.ndarray[double, ndim=3] Minv_arr = np.ascontiguousarray(Minv_np)

    # quadrature tables
    tgx_a = np.ascontiguousarray(qp.t_gauss[0]); tgw_a = np.ascontiguousarray(qp.t_gauss[1])
    tfp_a = np.ascontiguousarray(qp.tri_face[0].reshape(-1)); tfw_a = np.ascontiguousarray(qp.tri_face[1])
    farp_a = np.ascontiguousarray(qp.far[0].reshape(-1)); farw_a = np.ascontiguousarray(qp.far[1])
    midp_a = np.ascontiguousarray(qp.mid[0].reshape(-1)); midw_a = np.ascontiguousarray(qp.mid[1])
    cdef double[::1] tgx = tgx_a, tgw = tgw_a, tfp = tfp_a, tfw = tfw_a
    cdef double[::1] farp = farp_a, farw = farw_a, midp = midp_a, midw = midw_a

    cdef Tables T
    T.dim = dim
    T.ntg = tgx.shape[0]
    T.ntf = tfw.shape[0]
    T.nfar = farw.shape[0]
    T.nmid = midw.shape[0]
    T.max_depth = qp.max_depth
    T.eta_far = qp.eta_far
    T.eta_near = qp.eta_near
    T.s = s
    T.tgx = &tgx[0]; T.tgw = &tgw[0]
    T.tfp = &tfp[0]; T.tfw = &tfw[0]
    T.farp = &farp[0]; T.farw = &farw[0]
    T.midp = &midp[0]; T.midw = &midw[0]
    if T.nfar > 64 or T.nmid > 64:
        raise ValueError("disjoint leaf rule exceeds the compiled buffer")

    inside_arr = np.asarray(inside, dtype=bool)
    cdef cnp.ndarray[cnp.int32_t, ndim=1] inner = np.flatnonzero(inside_arr).astype(np.int32)
    cdef cnp.ndarray[cnp.int32_t, ndim=1] annl = np.flatnonzero(~inside_arr).astype(np.int32)
    cdef int n_rest = n_dof - n_core

    core_np = np.zeros((n_core, n_core))
    cross_np = np.zeros((n_core, max(n_rest, 1)))
    annb_np = np.zeros((Ne, k, k))
    cdef double[:, ::1] core = core_np
    cdef double[:, ::1] cross = cross_np
    cdef double[:, :, ::1] annb = annb_np
    cdef double[:, :, ::1] EV = EV_arr
    cdef double[:, :, ::1] Minv = Minv_arr
    cdef cnp.int32_t[:, ::1] simp = simp_arr
    cdef cnp.int32_t[::1] dofn = dof_arr
    cdef cnp.int32_t[::1] innerv = inner
    cdef cnp.int32_t[::1] annv = annl

    cdef double L[36]
    cdef int dofs[6]
    cdef int t2loc[6]
    cdef int ii, jj, e1, e2, m
    cdef int ni = innerv.shape[0], na = annv.shape[0]

    with nogil:
        for ii in range(ni):
            e1 = innerv[ii]
            m = _pair_dispatch(e1, e1, EV, simp, Minv, dofn, &T, L, dofs, t2loc)
            _scatter(core, cross, annb, L, m, dofs, t2loc, e1, 0.5 * cns, n_core)
            for jj in range(ii + 1, ni):
                e2 = innerv[jj]
                m = _pair_dispatch(e1, e2, EV, simp, Minv, dofn, &T, L, dofs, t2loc)
                _scatter(core, cross, annb, L, m, dofs, t2loc, e2, cns, n_core)
        for jj in range(na):
            e2 = annv[jj]
            for ii in range(ni):
                e1 = innerv[ii]
                m = _pair_dispatch(e1, e2, EV, simp, Minv, dofn, &T, L, dofs, t2loc)
                _scatter(core, cross, annb, L, m, dofs, t2loc, e2, cns, n_core)

    return core_np, cross_np[:, :n_rest], annb_np
