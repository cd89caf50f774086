"""System assembly: stiffness blocks, coupling mass matrix, and load vectors.

The stiffness form splits into element-pair double integrals (delegated to
the selected backend) plus, for each pair of inner-element points, the
single integral against the kernel tail outside the meshed ball B(0, R).
Unknowns are ordered [interior | interface ring | remaining exterior]; the
leading ``core`` block (hats meeting the closure of Omega) is genuinely
dense, the annulus-annulus remainder has the sparsity of a mass matrix and
is stored as such.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse

from . import core as backend
from .geometry import Mesh
from .kernel import normalization_constant, tail_weight_outside_ball
from .quadrules import simplex_rule

__all__ = ["AssembledSystem", "assemble_system", "quadrature_drift"]

_DENSE_LIMIT = 5000  # refuse to materialize A past this many unknowns


@dataclass
class AssembledSystem:
    """Blocks of the discrete problem on one mesh.

    A (n_dof x n_dof) is stored as ``core`` (dense), ``cross`` (dense
    coupling of core DOFs to the rest), and ``ann`` (sparse rest-rest part).
    B is the annulus mass coupling trial functions to multipliers; F and G
    are the volume and annulus data moments.
    """

    mesh: Mesh
    s: float
    level: int
    cns: float
    core: np.ndarray
    cross: np.ndarray
    ann: sparse.csr_matrix
    B: sparse.csr_matrix
    F: np.ndarray
    G: np.ndarray

    @property
    def n_dof(self) -> int:
        return self.mesh.n_dof

    @property
    def n_interior(self) -> int:
        return self.mesh.n_interior

    @property
    def n_core(self) -> int:
        return self.mesh.n_core

    @property
    def n_ext(self) -> int:
        return self.mesh.n_exterior

    def apply_A(self, u: np.ndarray) -> np.ndarray:
        """Matrix-vector product with the full stiffness matrix."""
        nc = self.n_core
        out = np.empty_like(u, dtype=float)
        out[:nc] = self.core @ u[:nc] + self.cross @ u[nc:]
        out[nc:] = self.cross.T @ u[:nc] + self.ann @ u[nc:]
        return out

    def dense_A(self) -> np.ndarray:
        if self.n_dof > _DENSE_LIMIT:
            raise MemoryError(
                f"dense stiffness matrix with {self.n_dof} unknowns exceeds "
                f"the materialization limit {_DENSE_LIMIT}")
        nc = self.n_core
        A = np.zeros((self.n_dof, self.n_dof))
        A[:nc, :nc] = self.core
        A[:nc, nc:] = self.cross
        A[nc:, :nc] = self.cross.T
        A[nc:, nc:] = self.ann.toarray()
        return A

    def dump_matrix(self, path) -> None:
        """Write the stiffness matrix as ``i j value`` triples (row-major)."""
        A = self.dense_A()
        with open(path, "w") as fh:
            for i in range(A.shape[0]):
                for j in range(A.shape[1]):
                    v = A[i, j]
                    if v != 0.0:
                        fh.write(f"{i} {j} {v:.16e}\n")


def _p1_mass_local(dim: int) -> np.ndarray:
    """Exact P1 mass matrix divided by the element volume."""
    if dim == 1:
        return np.array([[2.0, 1.0], [1.0, 2.0]]) / 6.0
    return np.array([[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]]) / 12.0


def _tail_rule(dim: int, level: int) -> tuple[np.ndarray, np.ndarray]:
    """Reference rule for the smooth tail factor; level 2 is strictly finer.

    In 2D the level-2 rule is the degree-8 rule composited over the four
    midpoint children (higher fixed degrees are not tabulated).
    """
    if level == 1:
        return simplex_rule(dim, 8)
    if dim == 1:
        return simplex_rule(1, 18)
    pts, w = simplex_rule(2, 8)
    corners = [np.array([0.0, 0.0]), np.array([1.0, 0.0]), np.array([0.0, 1.0])]
    mids = [0.5 * (corners[0] + corners[1]), 0.5 * (corners[1] + corners[2]),
            0.5 * (corners[0] + corners[2])]
    children = [(corners[0], mids[0], mids[2]), (mids[0], corners[1], mids[1]),
                (mids[2], mids[1], corners[2]), (mids[0], mids[1], mids[2])]
    all_p, all_w = [], []
    for (c0, c1, c2) in children:
        all_p.append(c0 + pts @ np.stack([c1 - c0, c2 - c0]))
        all_w.append(0.25 * w)
    return np.vstack(all_p), np.concatenate(all_w)


def _tail_into_core(mesh: Mesh, s: float, cns: float, core_blk: np.ndarray,
                    level: int) -> None:
    """Add C * int_T phi_a phi_b tail(x) dx over inner elements."""
    dim = mesh.dim
    pts, w = _tail_rule(dim, level)
    EV = mesh.element_vertices()
    dof = mesh.node_to_dof
    for e in np.flatnonzero(mesh.elem_inside):
        ev = EV[e]
        edges = ev[1:] - ev[0]
        if dim == 1:
            J = abs(edges[0, 0])
        else:
            J = abs(edges[0, 0] * edges[1, 1] - edges[0, 1] * edges[1, 0])
        x = ev[0] + pts @ edges
        tau = np.atleast_1d(tail_weight_outside_ball(x, mesh.R, dim=dim, s=s))
        phi = np.column_stack([1.0 - pts.sum(axis=1), pts])
        Lt = np.einsum("pa,pb,p->ab", phi, phi, w * tau) * (J * cns)
        gd = dof[mesh.simplices[e]]
        for a, ia in enumerate(gd):
            for b, ib in enumerate(gd):
                core_blk[ia, ib] += Lt[a, b]


def _annulus_blocks_to_sparse(mesh: Mesh, ann_blocks: np.ndarray) -> sparse.csr_matrix:
    n_rest = mesh.n_dof - mesh.n_core
    rows, cols, vals = [], [], []
    dof = mesh.node_to_dof
    for e in np.flatnonzero(~mesh.elem_inside):
        gd = dof[mesh.simplices[e]]
        for a, ia in enumerate(gd):
            if ia < mesh.n_core:
                continue
            for b, ib in enumerate(gd):
                if ib < mesh.n_core:
                    continue
                rows.append(ia - mesh.n_core)
                cols.append(ib - mesh.n_core)
                vals.append(ann_blocks[e, a, b])
    mat = sparse.coo_matrix((vals, (rows, cols)), shape=(n_rest, n_rest))
    return mat.tocsr()


def assemble_system(mesh: Mesh, s: float, *, f=None, g=None, level: int = 1) -> AssembledSystem:
    """Assemble all discrete blocks on a mesh.

    Parameters
    ----------
    mesh : Mesh
        Truncated two-domain mesh from `mesh_interval` or `mesh_disc`.
    s : float
        Fractional order in (0, 1).
    f : callable or None
        Volume source on Omega, mapping (m, dim) arrays to (m,) values;
        None means zero.
    g : callable or None
        Exterior datum on the annulus, same convention.
    level : int
        Quadrature level; 2 doubles every rule (used by the drift check).

    Returns
    -------
    AssembledSystem
    """
    if not 0.0 < s < 1.0:
        raise ValueError("fractional order s must lie in (0, 1)")
    dim = mesh.dim
    cns = normalization_constant(dim, s)
    core_blk, cross, ann_blocks = backend.assemble_pair_blocks(
        mesh.verts, mesh.simplices, mesh.node_to_dof, mesh.elem_inside,
        mesh.n_core, mesh.n_dof, dim, s, cns, level)
    _tail_into_core(mesh, s, cns, core_blk, level)
    ann = _annulus_blocks_to_sparse(mesh, ann_blocks)

    # coupling mass B and annulus datum moments G
    Mloc = _p1_mass_local(dim)
    vols = np.abs(mesh.volumes())
    EV = mesh.element_vertices()
    dof = mesh.node_to_dof
    n_int = mesh.n_interior
    rows, cols, vals = [], [], []
    G = np.zeros(mesh.n_exterior)
    gp, gw = simplex_rule(dim, 8)
    for e in np.flatnonzero(~mesh.elem_inside):
        gd = dof[mesh.simplices[e]]
        vol = vols[e]
        for a, ia in enumerate(gd):
            if ia < 0:
                continue
            for b, ib in enumerate(gd):
                if ib < n_int:
                    continue
                rows.append(ia)
                cols.append(ib - n_int)
                vals.append(vol * Mloc[a, b])
        if g is not None:
            ev = EV[e]
            x = ev[0] + gp @ (ev[1:] - ev[0])
            gv = np.asarray(g(x), dtype=float)
            phi = np.column_stack([1.0 - gp.sum(axis=1), gp])
            jac = 2.0 * vol if dim == 2 else vol
            mom = np.einsum("p,pa,p->a", gw, phi, gv) * jac
            for a, ia in enumerate(gd):
                if ia >= n_int:
                    G[ia - n_int] += mom[a]
    B = sparse.coo_matrix((vals, (rows, cols)),
                          shape=(mesh.n_dof, mesh.n_exterior)).tocsr()

    # volume load F
    F = np.zeros(mesh.n_dof)
    if f is not None:
        fp, fw = simplex_rule(dim, 8)
        for e in np.flatnonzero(mesh.elem_inside):
            ev = EV[e]
            x = ev[0] + fp @ (ev[1:] - ev[0])
            fv = np.asarray(f(x), dtype=float)
            phi = np.column_stack([1.0 - fp.sum(axis=1), fp])
            jac = 2.0 * vols[e] if dim == 2 else vols[e]
            mom = np.einsum("p,pa,p->a", fw, phi, fv) * jac
            for a, ia in enumerate(dof[mesh.simplices[e]]):
                F[ia] += mom[a]

    return AssembledSystem(mesh=mesh, s=s, level=level, cns=cns, core=core_blk,
                           cross=cross, ann=ann, B=B, F=F, G=G)


def quadrature_drift(mesh: Mesh, s: float) -> float:
    """Max relative change of any stiffness entry when all rules double.

    Relative means relative to the largest entry magnitude; entry-by-entry
    relative change is meaningless for the many entries that are tiny.
    """
    a1 = assemble_system(mesh, s, level=1)
    a2 = assemble_system(mesh, s, level=2)
    scale = max(np.abs(a1.core).max(), 1e-300)
    d = max(
        np.abs(a1.core - a2.core).max(),
        np.abs(a1.cross - a2.cross).max() if a1.cross.size else 0.0,
        np.abs((a1.ann - a2.ann).toarray()).max() if a1.ann.nnz else 0.0,
    )
    return float(d / scale)
