import math

import pytest

import edgefem


def test_mesh_and_space():
    mesh = edgefem.Mesh.cube(2)
    assert mesh.n_tets == 48
    assert mesh.n_vertices == 27
    assert abs(mesh.volume - 1.0) < 1e-12
    assert mesh.euler_characteristic() == 1
    back = edgefem.Mesh.parse(mesh.to_text())
    assert back.tets() == mesh.tets()

    space = edgefem.FeSpace(mesh, "nedelec1", 1, "natural")
    assert space.n_dofs == mesh.n_edges
    assert len(space.local_dofs(0)) == 6
    assert edgefem.FeSpace(mesh, "nedelec1", 1).n_free < space.n_dofs


def test_solve_converges():
    errs = [edgefem.solve(edgefem.Mesh.cube(n), 3.0, p=1).errors.rel_hk_curl for n in (2, 4)]
    rate = math.log2(errs[0] / errs[1])
    assert 0.7 < rate < 1.5
    sol = edgefem.solve(edgefem.Mesh.cube(2), 3.0, p=2)
    assert sol.errors.rel_hk_curl < errs[0]
    assert all(isinstance(c, complex) for c in sol.coefficients())


def test_diagnostics():
    mesh = edgefem.Mesh.cube(1)
    assert edgefem.estimate_c_sol(mesh, 2.0, p=1) > 0.0
    value, dim_w = edgefem.gamma_dv(mesh, 5.0, p=1)
    assert value > 0.0 and dim_w > 0
    cert = edgefem.pml_certificate(math.pi / 4, 0.5, 0.8)
    assert cert["far_tensor_deviation"] < 1e-12
    assert cert["coercivity_mu_inv_far"] >= 0.5 - 1e-6


def test_study_and_errors():
    report = edgefem.run_study("convergence", ["mesh.n_list=[1,2]", "problem.k_list=[2.0]"])
    assert len(report) == 2
    assert report.to_csv().startswith("study,k,h,p,dofs")
    assert report.rows()[1]["rate_hkcurl"] is not None
    with pytest.raises(ValueError):
        edgefem.run_study("convergence", ["no.such_key=1"])
    with pytest.raises(ValueError):
        edgefem.FeSpace(edgefem.Mesh.cube(1), "nedelec1", 9)
