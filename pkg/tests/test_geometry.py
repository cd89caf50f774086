import numpy as np
import pytest

from fracfem.geometry import (Mesh, NodeClass, TruncationRule, mesh_disc,
                              mesh_interval, read_mesh, truncation_width,
                              write_mesh)


def test_truncation_width_anchor_and_growth():
    rule = TruncationRule(H0=1.0, h0=0.1)
    assert truncation_width(0.1, rule, dim=2, s=0.5) == pytest.approx(1.0)
    # H ~ h^{-1/(dim+4s)}: halving h grows H by 2^{1/4} for dim=2, s=0.5
    grown = truncation_width(0.05, rule, dim=2, s=0.5)
    assert grown == pytest.approx(2.0 ** 0.25)
    # monotone in h and steeper for smaller s
    assert truncation_width(0.05, rule, dim=2, s=0.2) > grown


def test_truncation_rule_validation():
    with pytest.raises(ValueError):
        TruncationRule(H0=-1.0, h0=0.1)
    with pytest.raises(ValueError):
        TruncationRule(H0=1.0, h0=0.0)


def test_interval_mesh_structure():
    mesh = mesh_interval(1 / 16, r=1.0, H_target=1.0)
    assert mesh.dim == 1
    assert mesh.r == pytest.approx(1.0)
    assert mesh.R == pytest.approx(2.0)
    # nodes at +-r and +-R exist exactly
    xs = mesh.verts[:, 0]
    for target in (-2.0, -1.0, 1.0, 2.0):
        assert np.isclose(xs, target).any()
    # realized h below target, uniform spacing
    assert mesh.h <= 1 / 16 + 1e-12
    gaps = np.diff(np.sort(xs))
    assert gaps.max() - gaps.min() < 1e-12
    # interface nodes classed exterior, outer boundary excluded from dofs
    on_r = np.isclose(np.abs(xs), 1.0)
    assert (mesh.node_class[on_r] == NodeClass.EXTERIOR).all()
    assert (mesh.on_interface == on_r).all()
    boundary = np.isclose(np.abs(xs), 2.0)
    assert (mesh.node_class[boundary] == NodeClass.BOUNDARY_OUTER).all()
    assert len(mesh.dof_node_ids) == len(xs) - boundary.sum()


def test_interval_dof_ordering_interior_first():
    mesh = mesh_interval(1 / 8, r=1.0, H_target=1.0)
    cls = mesh.node_class[mesh.dof_node_ids]
    assert (cls[: mesh.n_interior] == NodeClass.INTERIOR).all()
    assert (cls[mesh.n_interior:] == NodeClass.EXTERIOR).all()
    # node_to_dof inverts dof_node_ids and flags boundary with -1
    for dof, node in enumerate(mesh.dof_node_ids):
        assert mesh.node_to_dof[node] == dof
    assert (mesh.node_to_dof[mesh.node_class == NodeClass.BOUNDARY_OUTER] == -1).all()


def test_disc_mesh_structure():
    mesh = mesh_disc(0.2, r=0.5, H_target=0.5)
    assert mesh.dim == 2
    rho = np.linalg.norm(mesh.verts, axis=1)
    assert rho.max() == pytest.approx(mesh.R)
    # interface ring is resolved exactly
    ring = np.isclose(rho, mesh.r, atol=1e-12)
    assert ring.sum() >= 8
    assert (mesh.on_interface == ring).all()
    # positive orientation everywhere, element flags match vertex radii
    assert (mesh.volumes() > 0).all()
    vv = mesh.verts[mesh.simplices]
    centroid_rho = np.linalg.norm(vv.mean(axis=1), axis=1)
    assert ((centroid_rho < mesh.r) == mesh.elem_inside).all()
    # every simplex is used and index ranges are valid
    assert mesh.simplices.min() >= 0
    assert mesh.simplices.max() == len(mesh.verts) - 1


def test_disc_mesh_quality():
    mesh = mesh_disc(0.2, r=0.5, H_target=0.75)
    q = mesh.quality_report()
    assert q["min_angle_deg"] > 20.0
    assert q["h"] <= 0.2 + 1e-12
    assert q["n_simplices"] == len(mesh.simplices)
    # quasi-uniform: diameters within a modest multiple of the smallest
    d = mesh.diameters()
    assert d.max() / d.min() < 3.0


def test_disc_interface_and_boundary_conformity():
    mesh = mesh_disc(0.25, r=0.5, H_target=0.5)
    rho = np.linalg.norm(mesh.verts, axis=1)
    # no vertex strictly straddles the interface circle inside an element that
    # claims to be inside Omega
    for e, inside in zip(mesh.simplices, mesh.elem_inside):
        vr = rho[e]
        if inside:
            assert (vr <= mesh.r + 1e-10).all()
        else:
            assert (vr >= mesh.r - 1e-10).all()


def test_mesh_io_roundtrip(tmp_path):
    mesh = mesh_disc(0.25, r=0.5, H_target=0.5)
    path = tmp_path / "disc.npz"
    write_mesh(mesh, path)
    back = read_mesh(path)
    assert isinstance(back, Mesh)
    assert back.dim == mesh.dim
    np.testing.assert_array_equal(back.simplices, mesh.simplices)
    np.testing.assert_allclose(back.verts, mesh.verts)
    assert back.r == mesh.r and back.R == mesh.R
    np.testing.assert_array_equal(back.node_class, mesh.node_class)


def test_mesh_rejects_bad_sizes():
    with pytest.raises(ValueError):
        mesh_interval(-0.1, r=1.0, H_target=1.0)
    with pytest.raises(ValueError):
        mesh_disc(0.2, r=0.5, H_target=0.0)
