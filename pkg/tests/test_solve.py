import warnings

import numpy as np
import pytest

from fracfem.assembly import assemble_system
from fracfem.geometry import mesh_disc, mesh_interval
from fracfem.reference import getoor_solution
from fracfem.solve import (SolverError, evaluate_solution, solve_direct,
                           solve_mixed, write_solution_csv)

from conftest import ones


def _solve_mixed(system, **kw):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return solve_mixed(system, **kw)


def test_zero_data_gives_zero(system_1d_s05):
    import dataclasses

    sys0 = dataclasses.replace(system_1d_s05,
                               F=np.zeros_like(system_1d_s05.F),
                               G=np.zeros_like(system_1d_s05.G))
    sol = _solve_mixed(sys0)
    assert np.abs(sol.u).max() == 0.0
    assert np.abs(sol.lam).max() == 0.0


def test_residuals_recorded_and_small(system_1d_s05):
    sol = _solve_mixed(system_1d_s05)
    d = sol.diagnostics
    assert d["residual_momentum"] <= d["residual_tolerance"]
    assert d["residual_constraint"] <= d["residual_tolerance"]
    assert d["residual_tolerance"] <= 1e-10 * (1.0 + np.abs(system_1d_s05.F).max()
                                               + np.abs(system_1d_s05.G).max())


def test_solution_matches_reference(system_1d_s05):
    # the homogeneous problem with f == 1 is the closed-form profile
    sol = _solve_mixed(system_1d_s05)
    mesh = system_1d_s05.mesh
    nodal = sol.nodal_values()
    exact = getoor_solution(mesh.verts, dim=1, s=0.5, r=1.0)
    assert np.abs(nodal - exact).max() < 0.02


def test_mixed_and_direct_coincide_for_homogeneous_data(system_1d_s05):
    um = _solve_mixed(system_1d_s05).nodal_values()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        ud = solve_direct(system_1d_s05, g=None).nodal_values()
    assert np.abs(um - ud).max() <= 1e-8


def test_strategies_agree(system_1d_s05):
    u1 = _solve_mixed(system_1d_s05, strategy="monolithic").u
    u2 = _solve_mixed(system_1d_s05, strategy="elimination").u
    assert np.abs(u1 - u2).max() <= 1e-10 * (1 + np.abs(u1).max())
    with pytest.raises(ValueError):
        _solve_mixed(system_1d_s05, strategy="bogus")


def test_constraint_row_is_enforced(system_1d_s05):
    sol = _solve_mixed(system_1d_s05)
    res = system_1d_s05.B.T @ sol.u - system_1d_s05.G
    assert np.abs(res).max() <= 1e-12


def test_multiplier_negative_away_from_interface():
    # lambda_h approximates N_s u <= 0; the P1 projection of the dist^{-s}
    # blow-up at the interface overshoots in the first exterior layer, so
    # negativity is asserted outside a one-layer band (and off the outer rim)
    mesh = mesh_interval(1 / 32, r=1.0, H_target=1.0)
    for s in (0.25, 0.5, 0.75):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            sol = solve_mixed(assemble_system(mesh, s, f=ones))
        ext = mesh.dof_node_ids[mesh.n_interior:]
        xs = np.abs(mesh.verts[ext, 0])
        lam = sol.lam
        band = (xs > mesh.r + 1.5 * mesh.h) & (xs < mesh.R - mesh.h)
        assert (lam[band] < 0.0).all(), s
        # the overshoot is confined to the interface-adjacent layer
        bad = np.where(lam >= 0.0)[0]
        assert all(abs(xs[k] - (mesh.r + mesh.h)) < 1e-9 for k in bad), s


def test_exterior_datum_interpolated_by_direct_method(mesh_2d_small):
    g = lambda x: np.atleast_2d(x)[:, 0] + 2.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        sys_ = assemble_system(mesh_2d_small, 0.5, g=g)
        sol = solve_direct(sys_, g=g)
    mesh = mesh_2d_small
    nodal = sol.nodal_values()
    ext = mesh.dof_node_ids[mesh.n_interior:]
    np.testing.assert_allclose(nodal[ext], mesh.verts[ext, 0] + 2.0, rtol=1e-12)


def test_half_order_warns(system_1d_s05):
    with pytest.warns(RuntimeWarning, match="s = 0.5"):
        solve_mixed(system_1d_s05)


def test_evaluate_solution_interpolates(system_1d_s05):
    sol = _solve_mixed(system_1d_s05)
    mesh = system_1d_s05.mesh
    nodal = sol.nodal_values()
    # at nodes the interpolant reproduces nodal values
    for k in (5, 6, 7):
        assert evaluate_solution(sol, mesh.verts[k]) == pytest.approx(
            nodal[k], rel=1e-12, abs=1e-15)
    # at a midpoint it is the average of the endpoints (P1)
    xs = np.sort(mesh.verts[:, 0])
    vm = evaluate_solution(sol, [0.5 * (xs[3] + xs[4])])
    k3 = int(np.where(np.isclose(mesh.verts[:, 0], xs[3]))[0][0])
    k4 = int(np.where(np.isclose(mesh.verts[:, 0], xs[4]))[0][0])
    assert vm == pytest.approx(0.5 * (nodal[k3] + nodal[k4]), rel=1e-12)
    with pytest.raises(ValueError):
        evaluate_solution(sol, [3.5])


def test_write_solution_csv(tmp_path, system_1d_s05):
    sol = _solve_mixed(system_1d_s05)
    out = tmp_path / "sol.csv"
    write_solution_csv(sol, out)
    lines = out.read_text().strip().splitlines()
    header = lines[0].split(",")
    assert header == ["node_id", "x", "class", "u", "lambda"]
    assert len(lines) == 1 + len(system_1d_s05.mesh.verts)
    # interior rows carry no multiplier entry
    first_interior = next(l for l in lines[1:] if ",INTERIOR," in l)
    assert first_interior.endswith(",")


def test_deterministic_solve(system_1d_s05):
    a = _solve_mixed(system_1d_s05)
    b = _solve_mixed(system_1d_s05)
    assert np.array_equal(a.u, b.u)
    assert np.array_equal(a.lam, b.lam)
