"""Direct solvers for the mixed saddle-point and the interpolated-datum systems.

The mixed system is [[A, -B], [B^T, 0]] [u; lambda] = [F; G].  Because trial
hats at interior nodes vanish on the annulus, B = [0; M] with M the annulus
mass matrix, and exact block elimination decouples the solve:

    M u_E = G,    A_II u_I = F_I - A_IE u_E,    M lambda = (A u)_E - F_E.

Small systems are additionally solvable monolithically (one pivoted LU on the
full block matrix); both paths satisfy the same residual gates and agree to
solver precision.  Factorization pivots below 1e-14 of the largest entry are
reported as solvability failures.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg, sparse
from scipy.sparse.linalg import splu

from .assembly import AssembledSystem
from .geometry import Mesh, NodeClass

__all__ = ["SolverError", "DiscreteSolution", "solve_mixed", "solve_direct",
           "evaluate_solution", "write_solution_csv"]

_PIVOT_REL = 1e-14
_RESIDUAL_REL = 1e-10
_MONOLITHIC_LIMIT = 2500  # total unknowns; beyond this use block elimination


class SolverError(ArithmeticError):
    """Factorization or residual failure of a discrete solve."""


@dataclass
class DiscreteSolution:
    """Coefficients of u_h (and lambda_h for the mixed method) on one mesh."""

    mesh: Mesh
    s: float
    method: str                      # "mixed" | "direct"
    u: np.ndarray                    # (n_dof,)
    lam: np.ndarray | None           # (n_ext,) or None
    diagnostics: dict = field(default_factory=dict)

    def nodal_values(self) -> np.ndarray:
        """Values at every mesh node (zero on the outer boundary)."""
        vals = np.zeros(len(self.mesh.verts))
        vals[self.mesh.dof_node_ids] = self.u
        return vals


def _check_dense_pivots(lu: np.ndarray, scale: float, what: str, diag: dict) -> None:
    d = np.abs(np.diag(lu))
    diag[f"pivot_min_{what}"] = float(d.min())
    diag[f"pivot_ratio_{what}"] = float(d.min() / max(d.max(), 1e-300))
    if d.min() < _PIVOT_REL * scale:
        raise SolverError(
            f"{what} factorization pivot {d.min():.3e} below "
            f"{_PIVOT_REL:.0e} x max|entry| = {_PIVOT_REL * scale:.3e}: "
            "system not solvable at working precision")


def _factor_mass(system: AssembledSystem, diag: dict):
    M = system.B.tocsr()[system.n_interior:, :].tocsc()
    scale = float(np.abs(M.data).max()) if M.nnz else 0.0
    fac = splu(M, permc_spec="NATURAL")
    d = np.abs(fac.U.diagonal())
    diag["pivot_min_mass"] = float(d.min())
    diag["pivot_ratio_mass"] = float(d.min() / max(d.max(), 1e-300))
    if d.min() < _PIVOT_REL * scale:
        raise SolverError("annulus mass factorization is numerically singular")
    return fac


def _residual_gate(system: AssembledSystem, u: np.ndarray,
                   lam: np.ndarray | None, diag: dict) -> None:
    tol = _RESIDUAL_REL * (1.0 + np.abs(system.F).max(initial=0.0)
                           + np.abs(system.G).max(initial=0.0))
    r1 = system.apply_A(u) - system.F
    if lam is not None:
        r1 -= system.B @ lam
        r2 = float(np.abs(system.B.T @ u - system.G).max(initial=0.0))
    else:
        # interpolated-datum method: only the interior equations are imposed
        r1 = r1[: system.n_interior]
        r2 = 0.0
    res1 = float(np.abs(r1).max(initial=0.0))
    diag["residual_momentum"] = res1
    diag["residual_constraint"] = r2
    diag["residual_tolerance"] = float(tol)
    if res1 > tol or r2 > tol:
        raise SolverError(
            f"solver residuals ({res1:.3e}, {r2:.3e}) exceed {tol:.3e}")


def _warn_half_order(s: float, diag: dict) -> None:
    if abs(s - 0.5) < 1e-12:
        warnings.warn(
            "s = 0.5: multiplier stability is outside the proven inf-sup "
            "range; factorization pivot diagnostics are recorded on the "
            "solution", RuntimeWarning, stacklevel=3)


def solve_mixed(system: AssembledSystem, *, strategy: str = "auto") -> DiscreteSolution:
    """Solve the mixed system for (u_h, lambda_h).

    Parameters
    ----------
    system : AssembledSystem
        Assembled blocks.
    strategy : str
        "auto" (default) picks "monolithic" (single pivoted LU over the full
        block matrix) for small systems and "elimination" (exact block
        factorization through the annulus mass) for large ones.

    Returns
    -------
    DiscreteSolution
        With multiplier coefficients and solver diagnostics attached.
    """
    mesh = system.mesh
    diag: dict = {}
    n, m = system.n_dof, system.n_ext
    if strategy == "auto":
        strategy = "monolithic" if n + m <= _MONOLITHIC_LIMIT else "elimination"
    diag["strategy"] = strategy
    _warn_half_order(system.s, diag)

    if strategy == "monolithic":
        K = np.zeros((n + m, n + m))
        K[:n, :n] = system.dense_A()
        Bd = system.B.toarray()
        K[:n, n:] = -Bd
        K[n:, :n] = Bd.T
        rhs = np.concatenate([system.F, system.G])
        lu, piv = linalg.lu_factor(K)
        _check_dense_pivots(lu, float(np.abs(K).max()), "saddle", diag)
        sol = linalg.lu_solve((lu, piv), rhs)
        u, lam = sol[:n], sol[n:]
    elif strategy == "elimination":
        mass = _factor_mass(system, diag)
        uE = mass.solve(system.G)
        nI = system.n_interior
        nIF = system.n_core - nI
        A_II = system.core[:nI, :nI]
        rhs_I = (system.F[:nI]
                 - system.core[:nI, nI:] @ uE[:nIF]
                 - system.cross[:nI] @ uE[nIF:])
        lu, piv = linalg.lu_factor(A_II)
        _check_dense_pivots(lu, float(np.abs(A_II).max()), "interior", diag)
        uI = linalg.lu_solve((lu, piv), rhs_I)
        u = np.concatenate([uI, uE])
        lam = mass.solve(system.apply_A(u)[nI:] - system.F[nI:])
    else:
        raise ValueError(f"unknown solve strategy {strategy!r}")

    _residual_gate(system, u, lam, diag)
    return DiscreteSolution(mesh=mesh, s=system.s, method="mixed", u=u,
                            lam=lam, diagnostics=diag)


def solve_direct(system: AssembledSystem, g) -> DiscreteSolution:
    """Solve with the exterior datum imposed by nodal interpolation.

    The exterior coefficients are g at the exterior nodes; only the interior
    block A_II u_I = F_I - A_IE g_E is solved.
    """
    mesh = system.mesh
    diag: dict = {"strategy": "interior-block"}
    _warn_half_order(system.s, diag)
    nI = system.n_interior
    nIF = system.n_core - nI
    if g is None:
        gE = np.zeros(system.n_ext)
    else:
        pts = mesh.verts[mesh.exterior_nodes]
        gE = np.asarray(g(pts), dtype=float)
        if gE.shape != (system.n_ext,):
            raise ValueError("datum evaluator returned a wrong-shaped array")
    A_II = system.core[:nI, :nI]
    rhs_I = (system.F[:nI]
             - system.core[:nI, nI:] @ gE[:nIF]
             - system.cross[:nI] @ gE[nIF:])
    lu, piv = linalg.lu_factor(A_II)
    _check_dense_pivots(lu, float(np.abs(A_II).max()), "interior", diag)
    uI = linalg.lu_solve((lu, piv), rhs_I)
    u = np.concatenate([uI, gE])
    _residual_gate(system, u, None, diag)
    return DiscreteSolution(mesh=mesh, s=system.s, method="direct", u=u,
                            lam=None, diagnostics=diag)


# -- point evaluation and dumps ------------------------------------------------


def evaluate_solution(sol: DiscreteSolution, x) -> float:
    """P1 interpolation of u_h at a point of the meshed region."""
    mesh = sol.mesh
    x = np.asarray(x, dtype=float).reshape(mesh.dim)
    if np.linalg.norm(x) > mesh.R + 1e-12:
        raise ValueError("point lies outside the meshed region")
    vals = sol.nodal_values()
    ev = mesh.element_vertices()
    tol = -1e-12
    if mesh.dim == 1:
        for e in range(len(ev)):
            a, b = ev[e, 0, 0], ev[e, 1, 0]
            lo, hi = min(a, b), max(a, b)
            if lo - 1e-12 <= x[0] <= hi + 1e-12:
                t = (x[0] - a) / (b - a)
                vv = vals[mesh.simplices[e]]
                return float(vv[0] * (1 - t) + vv[1] * t)
        raise ValueError("point not located in any element")
    for e in range(len(ev)):
        p0 = ev[e, 0]
        Mmat = np.stack([ev[e, 1] - p0, ev[e, 2] - p0], axis=1)
        try:
            lam = np.linalg.solve(Mmat, x - p0)
        except np.linalg.LinAlgError:
            continue
        if lam[0] >= tol and lam[1] >= tol and lam.sum() <= 1.0 - tol:
            vv = vals[mesh.simplices[e]]
            return float(vv[0] * (1 - lam.sum()) + vv[1] * lam[0] + vv[2] * lam[1])
    raise ValueError("point not located in any element")


def write_solution_csv(sol: DiscreteSolution, path) -> None:
    """Dump nodal values: node_id, coordinates, class, u, lambda.

    The lambda column is empty at nodes that carry no multiplier (interior
    and outer-boundary nodes, or everywhere for the direct method).
    """
    mesh = sol.mesh
    vals = sol.nodal_values()
    lam_of_node = {}
    if sol.lam is not None:
        for j, nid in enumerate(mesh.exterior_nodes):
            lam_of_node[int(nid)] = sol.lam[j]
    cols = "x,y" if mesh.dim == 2 else "x"
    with open(path, "w") as fh:
        fh.write(f"node_id,{cols},class,u,lambda\n")
        for nid in range(len(mesh.verts)):
            xy = ",".join(f"{c:.12e}" for c in mesh.verts[nid])
            cls = NodeClass(mesh.node_class[nid]).name
            lam_s = f"{lam_of_node[nid]:.12e}" if nid in lam_of_node else ""
            fh.write(f"{nid},{xy},{cls},{vals[nid]:.12e},{lam_s}\n")
