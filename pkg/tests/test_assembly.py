import math
import warnings

import numpy as np
import pytest

from fracfem.assembly import assemble_system, quadrature_drift
from fracfem.geometry import Mesh, mesh_disc, mesh_interval
from fracfem.kernel import normalization_constant
from fracfem.oracles import dense_stiffness_oracle_1d, stiffness_max_rel_deviation


def ones(x):
    return np.ones(len(np.atleast_2d(x)))


def _assemble(mesh, s, **kw):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return assemble_system(mesh, s, **kw)


def test_stiffness_against_dense_oracle_smoke():
    # single-s smoke version of the full oracle gate (the acceptance suite
    # sweeps three orders); coarse mesh keeps the adaptive oracle quick
    mesh = mesh_interval(0.5, r=1.0, H_target=1.0)
    sys_ = _assemble(mesh, 0.5)
    oracle = dense_stiffness_oracle_1d(mesh, 0.5)
    dev = stiffness_max_rel_deviation(sys_.dense_A(), oracle)
    assert dev < 1e-5


def test_symmetry_1d(system_1d_s05):
    A = system_1d_s05.dense_A()
    assert np.abs(A - A.T).max() <= 1e-12 * np.abs(A).max()


def test_symmetry_2d(mesh_2d_small):
    A = _assemble(mesh_2d_small, 0.75).dense_A()
    assert np.abs(A - A.T).max() <= 1e-12 * np.abs(A).max()


def test_positive_definite_2d(mesh_2d_small):
    A = _assemble(mesh_2d_small, 0.4).dense_A()
    w = np.linalg.eigvalsh(A)
    assert w[0] > 0.0


def test_scaling_law():
    # stretching the whole geometry by t scales every entry by t^{n-2s}
    def scaled(m, t):
        return Mesh(m.dim, m.verts * t, m.simplices, m.node_class,
                    m.elem_inside, m.on_interface, m.h * t, m.r * t, m.R * t)

    m1 = mesh_interval(1 / 8, r=1.0, H_target=1.0)
    m2 = mesh_disc(0.3, r=0.5, H_target=0.5)
    for m, dim in ((m1, 1), (m2, 2)):
        for s in (0.25, 0.75):
            t = 2.0
            A0 = _assemble(m, s).dense_A()
            A1 = _assemble(scaled(m, t), s).dense_A()
            dev = np.abs(A1 - t ** (dim - 2 * s) * A0).max()
            assert dev <= 1e-12 * (t ** (dim - 2 * s) * np.abs(A0).max())


def test_rotation_invariance_2d(mesh_2d_small):
    # the kernel is radial, so rotating the mesh leaves the matrix unchanged
    m = mesh_2d_small
    th = 0.35
    Q = np.array([[math.cos(th), -math.sin(th)], [math.sin(th), math.cos(th)]])
    rot = Mesh(m.dim, m.verts @ Q.T, m.simplices, m.node_class,
               m.elem_inside, m.on_interface, m.h, m.r, m.R)
    A0 = _assemble(m, 0.6).dense_A()
    A1 = _assemble(rot, 0.6).dense_A()
    assert np.abs(A1 - A0).max() <= 1e-9 * np.abs(A0).max()


def test_far_field_entry_multipole():
    # a(phi_i, phi_j) for well-separated hats approaches
    # -C (int phi_i)(int phi_j) |x_i - x_j|^{-1-2s}
    mesh = mesh_interval(1 / 32, r=1.0, H_target=1.0)
    nodes = mesh.verts[mesh.dof_node_ids, 0]
    i = int(np.argmin(np.abs(nodes + 0.5)))
    j = int(np.argmin(np.abs(nodes - 0.5)))
    h = mesh.h
    for s in (0.25, 0.5, 0.75):
        A = _assemble(mesh, s).dense_A()
        C = normalization_constant(1, s)
        pred = -C * h * h * abs(nodes[i] - nodes[j]) ** (-1 - 2 * s)
        assert A[i, j] == pytest.approx(pred, rel=5e-3)


def test_quadrature_doubling_drift():
    # doubling every rule moves no entry by more than 1e-6 of the largest
    mesh1 = mesh_interval(1 / 16, r=1.0, H_target=1.0)
    assert quadrature_drift(mesh1, 0.5) < 1e-6
    mesh2 = mesh_disc(0.3, r=0.5, H_target=0.5)
    assert quadrature_drift(mesh2, 0.5) < 1e-6


def test_B_mass_entries_1d(system_1d_s05):
    # B couples dofs to annulus multiplier nodes with the P1 mass matrix:
    # diagonal 2h/3 (interior of the annulus), off-diagonal h/6
    mesh = system_1d_s05.mesh
    B = system_1d_s05.B.toarray()
    h = mesh.h
    ext = mesh.dof_node_ids[mesh.n_interior:]
    xs = mesh.verts[ext, 0]
    # a multiplier node strictly inside the annulus away from both edges
    k = int(np.argmin(np.abs(xs - 1.5)))
    col = B[:, k]
    nz = np.nonzero(col)[0]
    assert len(nz) == 3
    assert sorted(np.round(col[nz] / h, 10)) == pytest.approx([1 / 6, 1 / 6, 2 / 3])


def test_G_moments_match_datum(system_1d_s05):
    # G_k = int g phi_k over the annulus; for g = x^2 compare against exact
    # piecewise integrals on the uniform grid
    mesh = system_1d_s05.mesh
    g = lambda x: np.atleast_2d(x)[:, 0] ** 2
    sys_ = _assemble(mesh, 0.5, g=g)
    h = mesh.h
    ext = mesh.dof_node_ids[mesh.n_interior:]
    xs = mesh.verts[ext, 0]
    k = int(np.argmin(np.abs(xs - 1.5)))
    xk = xs[k]
    # int_{xk-h}^{xk+h} x^2 hat(x) dx = h (xk^2 + h^2/6)
    exact = h * (xk * xk + h * h / 6.0)
    assert sys_.G[k] == pytest.approx(exact, rel=1e-12)


def test_F_moments_match_source(system_1d_s05):
    # f == 1: F_k = int phi_k = h for interior hats
    mesh = system_1d_s05.mesh
    F = system_1d_s05.F
    inner = mesh.dof_node_ids[: mesh.n_interior]
    xs = mesh.verts[inner, 0]
    away = np.abs(np.abs(xs) - mesh.r) > 1.5 * mesh.h
    np.testing.assert_allclose(F[: mesh.n_interior][away], mesh.h, rtol=1e-12)
    # and no volume source lands on annulus rows
    assert np.abs(F[mesh.n_core:]).max() == 0.0


def test_subdivision_additivity():
    # halving the 1D mesh must reproduce the same bilinear form: compare
    # a(u, v) for fixed piecewise-linear u, v living on the coarse grid
    coarse = mesh_interval(1 / 8, r=1.0, H_target=1.0)
    fine = mesh_interval(1 / 16, r=1.0, H_target=1.0)
    rng = np.random.default_rng(3)
    vals_c = rng.standard_normal(len(coarse.verts))
    vals_c[coarse.node_class == 2] = 0.0
    # interpolate onto the fine grid (nodes nest)
    vals_f = np.interp(fine.verts[:, 0], coarse.verts[:, 0], vals_c)
    for s in (0.3, 0.7):
        Ac = _assemble(coarse, s).dense_A()
        Af = _assemble(fine, s).dense_A()
        uc = vals_c[coarse.dof_node_ids]
        uf = vals_f[fine.dof_node_ids]
        qc = uc @ Ac @ uc
        qf = uf @ Af @ uf
        assert qf == pytest.approx(qc, rel=2e-6)


def test_dump_matrix_format(tmp_path, system_1d_s05):
    path = tmp_path / "A.txt"
    system_1d_s05.dump_matrix(path)
    lines = path.read_text().strip().splitlines()
    i, j, v = lines[0].split()
    assert int(i) == 0 and int(j) >= 0
    float(v)
    # loading back reproduces dense_A
    A = system_1d_s05.dense_A()
    got = np.zeros_like(A)
    for line in lines:
        a, b, val = line.split()
        got[int(a), int(b)] = float(val)
    np.testing.assert_allclose(got, A, atol=0.0)


def test_apply_A_matches_dense(system_1d_s05):
    rng = np.random.default_rng(11)
    u = rng.standard_normal(system_1d_s05.n_dof)
    np.testing.assert_allclose(system_1d_s05.apply_A(u),
                               system_1d_s05.dense_A() @ u,
                               rtol=1e-12, atol=1e-12)


def test_assemble_rejects_bad_s(mesh_2d_small):
    for bad in (0.0, 1.0, -0.2):
        with pytest.raises(ValueError):
            assemble_system(mesh_2d_small, bad)
