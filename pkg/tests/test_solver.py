"""Global linear algebra: assembly, rank / deficiency, inf-sup constants,
spurious modes, and the integer dimension identities."""

from math import factorial

import numpy as np
import pytest

from conftest import rigid_motion
from svstokes import poly, solver
from svstokes.classify import Tolerances, classify_mesh
from svstokes.fields import local_interpolant, w_field
from svstokes.mesh import (Triangulation, build_topology, crossed,
                           perturbed_grid, type1_diagonal)
from svstokes.solver import (P2_BASIS, P2_NODES, P3_BASIS, P3_NODES,
                             RankIndeterminateError, RankResult, SolverError,
                             assemble_divergence, assemble_norms,
                             checkerboard_signature, constrained_basis,
                             divergence_moments, divergence_rank,
                             export_matrix, infsup_constant, number_dofs,
                             nullity_crosscheck, pressure_constraints,
                             pressure_from_moments, spurious_modes,
                             strang_dimensions, velocity_coefficients)

TOL = Tolerances()


def _two_triangle_square():
    return Triangulation([[0, 0], [1, 0], [1, 1], [0, 1]],
                         [[0, 1, 2], [0, 2, 3]])


def _setup(mesh):
    topo = build_topology(mesh)
    reports, summary = classify_mesh(topo)
    dm = number_dofs(topo)
    B = assemble_divergence(topo, dm)
    return topo, reports, summary, dm, B


# ---------------------------------------------------------------------------
# reference bases and DOF counting

def test_lagrange_bases_are_kronecker():
    for basis, nodes, ev in ((P3_BASIS, P3_NODES, poly.eval3),
                             (P2_BASIS, P2_NODES, poly.eval2)):
        vals = np.stack([ev(c, np.array(nodes)) for c in basis])
        assert np.allclose(vals, np.eye(len(nodes)), atol=1e-12)


def test_p2_mass_matrix_against_factorial_formula():
    # independent oracle: expand basis-function products over monomial
    # pairs and integrate each with the exact factorial formula
    prod_int = np.zeros((6, 6))
    for i, (a1, b1, c1) in enumerate(poly.MONO2):
        for j, (a2, b2, c2) in enumerate(poly.MONO2):
            a, b, c = a1 + a2, b1 + b2, c1 + c2
            prod_int[i, j] = (2.0 * factorial(a) * factorial(b) * factorial(c)
                              / factorial(a + b + c + 2))
    expect = P2_BASIS @ prod_int @ P2_BASIS.T
    assert np.allclose(solver._MM2, expect, atol=1e-14)


def test_dof_counts():
    topo = build_topology(_two_triangle_square())
    assert number_dofs(topo).n_velocity == 8          # T=2, E0=1, V0=0
    topo = build_topology(crossed(1))
    assert number_dofs(topo).n_velocity == 26         # T=4, E0=4, V0=1
    topo = build_topology(Triangulation([[0, 0], [1, 0], [0, 1]],
                                        [[0, 1, 2]]))
    assert number_dofs(topo).n_velocity == 2          # only the cell node


def test_local_nodes_share_edge_dofs():
    topo = build_topology(_two_triangle_square())
    dm = number_dofs(topo)
    l0 = dm.local_nodes(topo, 0)
    l1 = dm.local_nodes(topo, 1)
    shared0 = {n for n in l0 if n is not None} - {dm.tri_node[0]}
    shared1 = {n for n in l1 if n is not None} - {dm.tri_node[1]}
    assert shared0 == shared1 and len(shared0) == 2   # the diagonal's 2 nodes


# ---------------------------------------------------------------------------
# assembly identities

def test_divergence_columns_have_zero_total_integral():
    topo, reports, summary, dm, B = _setup(crossed(2))
    # the Lagrange pressure basis is a partition of unity, so in the moment
    # layout the total-integral functional is the all-ones row; zero-trace
    # fields have divergence with zero integral over the domain
    assert np.abs(np.ones(B.shape[0]) @ B).max() < 1e-12 * max(
        np.abs(B).max(), 1.0)


def test_divergence_range_satisfies_constraints():
    # every column of B is the moment vector of an actual divergence; the
    # recovered pressure must be mean-zero and alternate-sum-zero at
    # singular vertices
    topo, reports, summary, dm, B = _setup(crossed(2))
    C = pressure_constraints(topo, reports)
    rng = np.random.default_rng(5)
    for _ in range(5):
        m = B @ rng.standard_normal(B.shape[1])
        pvals = pressure_from_moments(topo, m).reshape(-1)
        dev = np.abs(C @ pvals).max()
        assert dev < 1e-9 * max(np.abs(pvals).max(), 1.0)


def test_injection_oracle_field_to_matrix():
    # sampling a locally constructed field into the DOF vector and applying
    # B must reproduce the field's divergence moments exactly
    topo, reports, summary, dm, B = _setup(perturbed_grid(3, seed=4))
    rng = np.random.default_rng(8)
    interior = [r for r in reports if not r.boundary]
    for r in interior[:3]:
        from svstokes.mesh import enumerate_patch
        patch = enumerate_patch(topo, r.vertex)
        f = local_interpolant(patch, rng.standard_normal(patch.N), topo, TOL)
        u = velocity_coefficients(topo, dm, f)
        expect = divergence_moments(topo, f)
        assert np.abs(B @ u - expect).max() < 1e-10 * max(
            np.abs(expect).max(), 1.0)


def test_norm_matrices_scaling_laws():
    base = perturbed_grid(2, seed=6)
    topo0 = build_topology(base)
    dm0 = number_dofs(topo0)
    A0s, M0 = assemble_norms(topo0, dm0, seminorm=True)
    for lam in (0.5, 2.0):
        topo1 = build_topology(rigid_motion(base, scale=lam))
        dm1 = number_dofs(topo1)
        A1s, M1 = assemble_norms(topo1, dm1, seminorm=True)
        # H1 seminorm Gram is scale invariant in 2D; mass scales with area
        assert np.allclose(A1s, A0s, atol=1e-10 * np.abs(A0s).max())
        assert np.allclose(M1, lam ** 2 * M0, atol=1e-12 * np.abs(M0).max())


def test_export_matrix_matrixmarket_header():
    text = export_matrix(np.array([[0.0, 1.5], [0.0, 0.0]]), "demo")
    lines = text.strip().splitlines()
    assert lines[0].startswith("%%MatrixMarket")
    assert lines[2] == "2 2 1"
    assert lines[3].split()[:2] == ["1", "2"]


# ---------------------------------------------------------------------------
# rank, deficiency, inf-sup

def test_crossed_grid_is_stable():
    topo, reports, summary, dm, B = _setup(crossed(2))
    assert dm.n_velocity == 122
    rr = divergence_rank(B, topo, summary["sigma"], TOL)
    assert (rr.rank, rr.K) == (91, 0)
    assert rr.gap > 10.0
    A, M = assemble_norms(topo, dm)
    N = constrained_basis(topo, reports)
    beta, _ = infsup_constant(A, B, M, N)
    assert beta == pytest.approx(0.4115428141731681, rel=1e-8)
    assert spurious_modes(B, M, N, TOL) == []
    nullity_crosscheck(rr, topo, summary["sigma"])


def test_type1_grid_is_deficient_with_checkerboard():
    topo, reports, summary, dm, B = _setup(type1_diagonal(3))
    assert dm.n_velocity == 128
    rr = divergence_rank(B, topo, summary["sigma"], TOL)
    assert (rr.rank, rr.K) == (104, 1)
    A, M = assemble_norms(topo, dm)
    N = constrained_basis(topo, reports)
    beta, _ = infsup_constant(A, B, M, N)
    assert beta == pytest.approx(0.09099515790841745, rel=1e-8)
    modes = spurious_modes(B, M, N, TOL)
    assert len(modes) == 1
    assert checkerboard_signature(topo, modes[0])
    nullity_crosscheck(rr, topo, summary["sigma"])


def test_two_triangle_square_is_deficient():
    topo, reports, summary, dm, B = _setup(_two_triangle_square())
    rr = divergence_rank(B, topo, summary["sigma"], TOL)
    assert rr.K == 1
    sd = strang_dimensions(topo, summary["sigma"], summary["sigma_i"],
                           summary["sigma_b"], rr.K)
    assert sd.dim_s4 == 0 and sd.dim_s4_raw == 0
    assert not sd.hypothesis_ok
    assert sd.caveat is not None


def test_checkerboard_rejects_constant_mode():
    topo = build_topology(type1_diagonal(3))
    assert not checkerboard_signature(topo, np.ones(6 * topo.T))
    assert not checkerboard_signature(topo, np.zeros(6 * topo.T))


def test_seminorm_infsup_is_scale_invariant():
    base = crossed(2)
    betas = []
    for lam in (0.5, 1.0, 2.0):
        topo = build_topology(rigid_motion(base, scale=lam))
        reports, summary = classify_mesh(topo)
        dm = number_dofs(topo)
        B = assemble_divergence(topo, dm)
        A, M = assemble_norms(topo, dm, seminorm=True)
        N = constrained_basis(topo, reports)
        beta, _ = infsup_constant(A, B, M, N)
        betas.append(beta)
    assert betas[0] == pytest.approx(betas[1], rel=1e-9)
    assert betas[2] == pytest.approx(betas[1], rel=1e-9)


def test_rank_indeterminate_on_straddling_spectrum():
    topo = build_topology(_two_triangle_square())
    # singular values 1, 2e-9, 9e-10 straddle the 1e-9 relative threshold
    # with ratio 2.2 across it
    B = np.zeros((12, 8))
    B[0, 0], B[1, 1], B[2, 2] = 1.0, 2e-9, 9e-10
    with pytest.raises(RankIndeterminateError):
        divergence_rank(B, topo, sigma=0, tol=TOL)


def test_rank_exceeding_constrained_dimension_raises():
    topo = build_topology(_two_triangle_square())
    B = np.eye(12, 8)
    with pytest.raises(SolverError):
        # sigma chosen so the expected dimension is below the actual rank
        divergence_rank(B, topo, sigma=6 * topo.T - 1, tol=TOL)


def test_nullity_crosscheck_mismatch_raises():
    topo = build_topology(_two_triangle_square())
    bogus = RankResult(rank=5, nullity=99, K=0, expected_dim=5, gap=1e6,
                       singular_values=np.array([1.0]))
    with pytest.raises(SolverError):
        nullity_crosscheck(bogus, topo, sigma=0)


# ---------------------------------------------------------------------------
# integer dimension identities

def test_strang_identity_on_stable_meshes():
    for mesh in (crossed(1), crossed(2), perturbed_grid(3, seed=1)):
        topo, reports, summary, dm, B = _setup(mesh)
        rr = divergence_rank(B, topo, summary["sigma"], TOL)
        sd = strang_dimensions(topo, summary["sigma"], summary["sigma_i"],
                               summary["sigma_b"], rr.K)
        if rr.K == 0:
            assert sd.identity_ok is True
        nullity_crosscheck(rr, topo, summary["sigma"])


def test_crossed_two_spline_dimensions():
    topo, reports, summary, dm, B = _setup(crossed(2))
    rr = divergence_rank(B, topo, summary["sigma"], TOL)
    sd = strang_dimensions(topo, summary["sigma"], summary["sigma_i"],
                           summary["sigma_b"], rr.K)
    assert sd.dim_s4 == 31
    assert sd.strang_dimension == 79
    assert sd.hypothesis_ok and sd.identity_ok
