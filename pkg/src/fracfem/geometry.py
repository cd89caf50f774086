"""Truncated computational domains and their meshes.

The problem domain is a ball Omega = B(0, r); the Dirichlet datum lives on its
complement, so computations are truncated to an auxiliary ball B(0, R) with
R = r + H.  The auxiliary width H grows under mesh refinement according to
``truncation_height``, which balances the truncation error against the
interpolation error of the scheme.

Meshes are conforming P1 simplicial meshes of B(0, R) in which the interface
|x| = r is resolved exactly by construction (1D: grid point, 2D: polygonal
ring), so no simplex straddles the interface.  Node classes:

* INTERIOR        strictly inside Omega (these carry the primal unknowns),
* EXTERIOR        r <= |x| < R, including nodes exactly on the interface
                  (these carry the datum / the multiplier),
* BOUNDARY_OUTER  |x| = R, where all discrete functions vanish.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "NodeClass",
    "Mesh",
    "TruncationRule",
    "truncation_width",
    "mesh_interval",
    "mesh_disc",
    "write_mesh",
    "read_mesh",
]


class NodeClass(enum.IntEnum):
    INTERIOR = 0
    EXTERIOR = 1
    BOUNDARY_OUTER = 2


_CLASS_TOKENS = {c.name: c for c in NodeClass}


@dataclass(frozen=True)
class TruncationRule:
    """Calibration (H0, h0) of the auxiliary-domain growth law."""

    H0: float
    h0: float

    def __post_init__(self) -> None:
        if self.H0 <= 0 or self.h0 <= 0:
            raise ValueError("H0 and h0 must be positive")


def truncation_width(h: float, rule: TruncationRule, *, dim: int, s: float) -> float:
    """Auxiliary-domain width H(h) = H0 * (h0 / h)**(1 / (dim + 4 s)).

    Calibrated so that H(h0) = H0; refining h by a factor 2**(dim + 4 s)
    doubles H.  The exponent balances the Galerkin error in h against the
    H**(-(dim + 2 s) / 2)-type tail committed by truncating the datum.
    """
    if h <= 0:
        raise ValueError("h must be positive")
    if not 0.0 < s < 1.0:
        raise ValueError("s must lie in (0, 1)")
    return rule.H0 * (rule.h0 / h) ** (1.0 / (dim + 4.0 * s))


@dataclass
class Mesh:
    """Conforming P1 mesh of the truncated domain B(0, R).

    Attributes
    ----------
    dim : 1 or 2
    verts : (Nv, dim) float64
    simplices : (Ne, dim+1) int32, positively oriented in 2D
    node_class : (Nv,) uint8 with NodeClass values
    elem_inside : (Ne,) bool, True when the simplex lies in the closure of Omega
    on_interface : (Nv,) bool, True for nodes with |x| = r (a subset of EXTERIOR)
    h : realized mesh size (max simplex diameter)
    r, R : interface and outer radii actually realized
    """

    dim: int
    verts: np.ndarray
    simplices: np.ndarray
    node_class: np.ndarray
    elem_inside: np.ndarray
    on_interface: np.ndarray
    h: float
    r: float
    R: float

    # dof bookkeeping, filled in __post_init__
    dof_node_ids: np.ndarray = field(init=False)
    node_to_dof: np.ndarray = field(init=False)
    n_interior: int = field(init=False)
    n_exterior: int = field(init=False)
    n_core: int = field(init=False)

    def __post_init__(self) -> None:
        cls = self.node_class
        interior = np.flatnonzero(cls == NodeClass.INTERIOR)
        ext_iface = np.flatnonzero((cls == NodeClass.EXTERIOR) & self.on_interface)
        ext_rest = np.flatnonzero((cls == NodeClass.EXTERIOR) & ~self.on_interface)
        # Ordering [interior | interface ring | remaining exterior] keeps the
        # densely coupled unknowns (hats meeting the closure of Omega) in a
        # contiguous leading block.
        self.dof_node_ids = np.concatenate([interior, ext_iface, ext_rest]).astype(np.int32)
        self.node_to_dof = np.full(len(cls), -1, dtype=np.int32)
        self.node_to_dof[self.dof_node_ids] = np.arange(len(self.dof_node_ids), dtype=np.int32)
        self.n_interior = len(interior)
        self.n_exterior = len(ext_iface) + len(ext_rest)
        self.n_core = len(interior) + len(ext_iface)

    # -- derived quantities ------------------------------------------------

    @property
    def n_dof(self) -> int:
        return self.n_interior + self.n_exterior

    @property
    def interior_nodes(self) -> np.ndarray:
        return self.dof_node_ids[: self.n_interior]

    @property
    def exterior_nodes(self) -> np.ndarray:
        return self.dof_node_ids[self.n_interior:]

    def element_vertices(self) -> np.ndarray:
        """(Ne, dim+1, dim) coordinates of each simplex's vertices."""
        return self.verts[self.simplices]

    def diameters(self) -> np.ndarray:
        ev = self.element_vertices()
        if self.dim == 1:
            return np.abs(ev[:, 1, 0] - ev[:, 0, 0])
        d01 = np.linalg.norm(ev[:, 0] - ev[:, 1], axis=1)
        d12 = np.linalg.norm(ev[:, 1] - ev[:, 2], axis=1)
        d20 = np.linalg.norm(ev[:, 2] - ev[:, 0], axis=1)
        return np.maximum(np.maximum(d01, d12), d20)

    def volumes(self) -> np.ndarray:
        ev = self.element_vertices()
        if self.dim == 1:
            return np.abs(ev[:, 1, 0] - ev[:, 0, 0])
        e1 = ev[:, 1] - ev[:, 0]
        e2 = ev[:, 2] - ev[:, 0]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    def min_angle_deg(self) -> float:
        if self.dim == 1:
            return 60.0
        ev = self.element_vertices()
        angles = []
        for k in range(3):
            a = ev[:, (k + 1) % 3] - ev[:, k]
            b = ev[:, (k + 2) % 3] - ev[:, k]
            cosang = np.sum(a * b, axis=1) / (
                np.linalg.norm(a, axis=1) * np.linalg.norm(b, axis=1)
            )
            angles.append(np.degrees(np.arccos(np.clip(cosang, -1.0, 1.0))))
        return float(np.min(angles))

    def quality_report(self) -> dict:
        d = self.diameters()
        return {
            "h": float(d.max()),
            "diameter_ratio": float(d.max() / d.min()),
            "min_angle_deg": self.min_angle_deg(),
            "n_vertices": int(len(self.verts)),
            "n_simplices": int(len(self.simplices)),
        }


# -- 1D ---------------------------------------------------------------------


def mesh_interval(h_target: float, *, r: float, H_target: float) -> Mesh:
    """Uniform mesh of [-R, R] with grid points at +-r and R = r + m*h' >= r + H_target."""
    if h_target <= 0 or r <= 0 or H_target <= 0:
        raise ValueError("h_target, r and H_target must be positive")
    m_half = max(1, int(np.ceil(r / h_target - 1e-12)))
    h = r / m_half
    m_out = max(1, int(np.ceil(H_target / h - 1e-12)))
    R = r + m_out * h
    m_tot = m_half + m_out
    idx = np.arange(-m_tot, m_tot + 1)
    verts = (idx * h).reshape(-1, 1)
    node_class = np.full(len(idx), NodeClass.EXTERIOR, dtype=np.uint8)
    node_class[np.abs(idx) < m_half] = NodeClass.INTERIOR
    node_class[np.abs(idx) == m_tot] = NodeClass.BOUNDARY_OUTER
    on_interface = np.abs(idx) == m_half
    simplices = np.column_stack(
        [np.arange(2 * m_tot, dtype=np.int32), np.arange(1, 2 * m_tot + 1, dtype=np.int32)]
    )
    mids = np.abs(idx[simplices[:, 0]] + idx[simplices[:, 1]]) / 2.0
    elem_inside = mids < m_half
    return Mesh(
        dim=1,
        verts=verts,
        simplices=simplices.astype(np.int32),
        node_class=node_class,
        elem_inside=elem_inside,
        on_interface=on_interface,
        h=h,
        r=r,
        R=float(R),
    )


# -- 2D ---------------------------------------------------------------------


def _zipper_band(inner_ids, outer_ids) -> list[tuple[int, int, int]]:
    """Triangulate the band between two concentric rings of nodes.

    Nodes on each ring are assumed equally spaced by angle in index order.
    A two-pointer sweep by angle emits len(inner) + len(outer) triangles.
    """
    n1, n2 = len(inner_ids), len(outer_ids)
    tris = []
    if n1 == 1:  # innermost fan around the center node
        c = inner_ids[0]
        for k in range(n2):
            tris.append((c, outer_ids[k], outer_ids[(k + 1) % n2]))
        return tris
    i = o = 0
    while i < n1 or o < n2:
        ang_i_next = (i + 1) / n1
        ang_o_next = (o + 1) / n2
        if o < n2 and (ang_o_next <= ang_i_next + 1e-14 or i == n1):
            tris.append((inner_ids[i % n1], outer_ids[o % n2], outer_ids[(o + 1) % n2]))
            o += 1
        else:
            tris.append((inner_ids[i % n1], outer_ids[o % n2], inner_ids[(i + 1) % n1]))
            i += 1
    return tris


def _build_disc(delta: float, k_r: int, M: int) -> tuple[np.ndarray, list, list]:
    """Rings rho_j = j*delta with 6j nodes; returns verts, per-ring id lists, triangles."""
    ring_ids: list[np.ndarray] = []
    coords = [(0.0, 0.0)]
    ring_ids.append(np.array([0]))
    nxt = 1
    for j in range(1, M + 1):
        n_j = 6 * j
        theta = 2.0 * np.pi * np.arange(n_j) / n_j
        rho = j * delta
        for t in theta:
            coords.append((rho * np.cos(t), rho * np.sin(t)))
        ring_ids.append(np.arange(nxt, nxt + n_j))
        nxt += n_j
    tris: list[tuple[int, int, int]] = []
    for j in range(M):
        tris.extend(_zipper_band(ring_ids[j], ring_ids[j + 1]))
    return np.asarray(coords), ring_ids, tris


def mesh_disc(h_target: float, *, r: float, H_target: float) -> Mesh:
    """Polar mesh of the disc B(0, R): rings of 6j nodes zipped into triangle bands.

    The ring spacing delta divides r exactly, so the interface |x| = r is a
    polygonal ring of the mesh; R is grown to the next ring at or beyond
    r + H_target.  Shrinks delta until the realized max diameter is <= h_target,
    and asserts the quality contract (min angle >= 20 deg, diameter ratio <= 4).
    """
    if h_target <= 0 or r <= 0 or H_target <= 0:
        raise ValueError("h_target, r and H_target must be positive")
    k_r = max(1, int(np.ceil(r / h_target - 1e-12)))
    for _ in range(32):
        delta = r / k_r
        M = k_r + max(1, int(np.ceil(H_target / delta - 1e-12)))
        verts, ring_ids, tris = _build_disc(delta, k_r, M)
        simplices = np.asarray(tris, dtype=np.int32)
        # orient positively
        ev = verts[simplices]
        det = (ev[:, 1, 0] - ev[:, 0, 0]) * (ev[:, 2, 1] - ev[:, 0, 1]) - (
            ev[:, 1, 1] - ev[:, 0, 1]
        ) * (ev[:, 2, 0] - ev[:, 0, 0])
        flip = det < 0
        simplices[flip] = simplices[flip][:, [0, 2, 1]]

        ring_of_node = np.empty(len(verts), dtype=np.int64)
        for j, ids in enumerate(ring_ids):
            ring_of_node[ids] = j
        node_class = np.full(len(verts), NodeClass.EXTERIOR, dtype=np.uint8)
        node_class[ring_of_node < k_r] = NodeClass.INTERIOR
        node_class[ring_of_node == M] = NodeClass.BOUNDARY_OUTER
        on_interface = ring_of_node == k_r
        outer_ring = ring_of_node[simplices].max(axis=1)
        elem_inside = outer_ring <= k_r

        mesh = Mesh(
            dim=2,
            verts=verts,
            simplices=simplices,
            node_class=node_class,
            elem_inside=elem_inside,
            on_interface=on_interface,
            h=0.0,
            r=r,
            R=float(M * delta),
        )
        d = mesh.diameters()
        mesh.h = float(d.max())
        if mesh.h <= h_target * (1.0 + 1e-12):
            qa = mesh.quality_report()
            if qa["min_angle_deg"] < 20.0 or qa["diameter_ratio"] > 4.0:
                raise RuntimeError(f"mesh quality contract violated: {qa}")
            return mesh
        k_r += 1
    raise RuntimeError("disc mesher failed to reach the target diameter")


# -- text I/O -----------------------------------------------------------------


def write_mesh(mesh: Mesh, path) -> None:
    """Plain-text dump: header `n h r R`, then `id x [y] class`, then `id v0 v1 [v2]`."""
    with open(path, "w") as fh:
        fh.write(f"{mesh.dim} {mesh.h:.12e} {mesh.r:.12e} {mesh.R:.12e}\n")
        for i, v in enumerate(mesh.verts):
            coords = " ".join(f"{c:.12e}" for c in v)
            fh.write(f"{i} {coords} {NodeClass(mesh.node_class[i]).name}\n")
        for e, sim in enumerate(mesh.simplices):
            fh.write(f"{e} " + " ".join(str(int(v)) for v in sim) + "\n")


def read_mesh(path) -> Mesh:
    with open(path) as fh:
        lines = [ln.split() for ln in fh if ln.strip()]
    dim = int(lines[0][0])
    h, r, R = (float(t) for t in lines[0][1:4])
    verts, classes, sims = [], [], []
    for toks in lines[1:]:
        if toks[-1] in _CLASS_TOKENS:
            verts.append([float(t) for t in toks[1:-1]])
            classes.append(_CLASS_TOKENS[toks[-1]])
        else:
            sims.append([int(t) for t in toks[1:]])
    verts_arr = np.asarray(verts)
    node_class = np.asarray(classes, dtype=np.uint8)
    simplices = np.asarray(sims, dtype=np.int32)
    radii = np.linalg.norm(verts_arr, axis=1)
    on_interface = (node_class == NodeClass.EXTERIOR) & (np.abs(radii - r) <= 1e-9 * max(r, 1.0))
    centroid_r = np.linalg.norm(verts_arr[simplices].mean(axis=1), axis=1)
    elem_inside = centroid_r < r
    return Mesh(
        dim=dim,
        verts=verts_arr,
        simplices=simplices,
        node_class=node_class,
        elem_inside=elem_inside,
        on_interface=on_interface,
        h=h,
        r=r,
        R=R,
    )
