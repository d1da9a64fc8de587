"""Global linear-algebra certification.

Assembles the divergence pairing between the zero-trace cubic Lagrange
velocity space and the raw discontinuous quadratic pressure space,
computes its rank (hence the deficiency K of the constrained pressure
space), the inf-sup constant on the constrained space, spurious pressure
modes, and the integer spline-dimension identities.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import poly
from .classify import Tolerances
from .mesh import MeshError, MeshTopology, enumerate_patch


class SolverError(Exception):
    pass


class RankIndeterminateError(SolverError):
    """Singular-value spectrum has no clear gap at the rank threshold."""


# ---------------------------------------------------------------------------
# reference Lagrange bases on the unit triangle (barycentric coordinates)

def _lagrange_basis(monos, nodes):
    """Coefficient vectors (rows) of the Lagrange basis for the given
    barycentric monomial table and node set."""
    table = np.stack([
        [l0 ** a * l1 ** b * l2 ** c for a, b, c in monos]
        for (l0, l1, l2) in nodes
    ])
    return np.linalg.inv(table)  # column j = coeffs of basis fn j; transpose below


# Cubic scalar nodes: 3 vertices, 2 per edge, 1 center.  Edge nodes are
# listed per local edge (i, j) with the node closer to i first.
P3_EDGE_SLOTS = ((0, 1), (1, 2), (2, 0))
_P3_NODES = [
    (1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0),
]
for (i, j) in P3_EDGE_SLOTS:
    for frac in (2.0 / 3.0, 1.0 / 3.0):
        lam = [0.0, 0.0, 0.0]
        lam[i] = frac
        lam[j] = 1.0 - frac
        _P3_NODES.append(tuple(lam))
_P3_NODES.append((1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0))
P3_NODES = tuple(_P3_NODES)

# Quadratic pressure nodes: 3 vertices then midpoints of (0,1), (1,2), (2,0).
P2_NODES = (
    (1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0),
    (0.5, 0.5, 0.0), (0.0, 0.5, 0.5), (0.5, 0.0, 0.5),
)

P3_BASIS = _lagrange_basis(poly.MONO3, P3_NODES).T   # (10 nodes, 10 coeffs)
P2_BASIS = _lagrange_basis(poly.MONO2, P2_NODES).T   # (6 nodes, 6 coeffs)

# Quadrature tables on the reference triangle.
_QP, _QW = poly.TRI_QP, poly.TRI_QW
_P3_AT_QP = np.stack([poly.eval3(c, _QP) for c in P3_BASIS])        # (10, nq)
_P2_AT_QP = np.stack([poly.eval2(c, _QP) for c in P2_BASIS])        # (6, nq)
_DP3_AT_QP = np.stack([[poly.eval2(poly.DIFF[s] @ c, _QP)
                        for c in P3_BASIS] for s in range(3)])      # (3, 10, nq)

# Reference tensors: everything except the per-triangle hat gradients.
_PD = np.einsum("qn,san,n->qsa", _P2_AT_QP, _DP3_AT_QP, _QW)        # (6, 3, 10)
_GG = np.einsum("san,tbn,n->stab", _DP3_AT_QP, _DP3_AT_QP, _QW)     # (3,3,10,10)
_MM3 = np.einsum("an,bn,n->ab", _P3_AT_QP, _P3_AT_QP, _QW)          # (10, 10)
_MM2 = np.einsum("an,bn,n->ab", _P2_AT_QP, _P2_AT_QP, _QW)          # (6, 6)
_IV2 = _P2_AT_QP @ _QW                                              # (6,)


# ---------------------------------------------------------------------------
# DOF numbering

@dataclass(frozen=True)
class DofMap:
    """Scalar interior Lagrange nodes of the cubic space, shared by both
    velocity components: velocity DOF of node g, component c is 2g + c."""

    vertex_node: dict       # interior vertex -> node
    edge_node: dict         # (interior edge, k in {0,1}) -> node; k=0 is the
                            # node closer to the smaller-indexed endpoint
    tri_node: dict          # triangle -> node
    n_nodes: int
    n_pressure: int

    @property
    def n_velocity(self) -> int:
        return 2 * self.n_nodes

    def local_nodes(self, topology: MeshTopology, t: int):
        """Global node (or None, for boundary nodes) of each of the 10
        local cubic nodes of triangle t, in P3_NODES order."""
        tri = topology.mesh.triangles[t]
        out = [self.vertex_node.get(int(v)) for v in tri]
        for (i, j) in P3_EDGE_SLOTS:
            a, b = int(tri[i]), int(tri[j])
            e = topology.edge_index[(min(a, b), max(a, b))]
            for frac_near_i in (True, False):
                near = a if frac_near_i else b
                k = 0 if near == min(a, b) else 1
                out.append(self.edge_node.get((e, k)))
        out.append(self.tri_node[t])
        return out


def number_dofs(topology: MeshTopology) -> DofMap:
    """Deterministic numbering: interior vertices, interior edges, cells."""
    n = 0
    vertex_node = {}
    for v in range(topology.V):
        if not topology.boundary_vertex[v]:
            vertex_node[v] = n
            n += 1
    edge_node = {}
    for e in range(topology.E):
        if not topology.boundary_edge[e]:
            edge_node[(e, 0)] = n
            edge_node[(e, 1)] = n + 1
            n += 2
    tri_node = {t: n + t for t in range(topology.T)}
    n += topology.T
    dofmap = DofMap(vertex_node=vertex_node, edge_node=edge_node,
                    tri_node=tri_node, n_nodes=n, n_pressure=6 * topology.T)
    expect = topology.T + 2 * topology.E0 + topology.V0
    if n != expect:
        raise SolverError(f"node count {n} != T + 2 E0 + V0 = {expect}")
    return dofmap


def _tri_area(topology, t):
    p = topology.mesh.vertices[topology.mesh.triangles[t]]
    return abs(poly.signed_area(*p))


def _hat_grads(topology, t):
    p = topology.mesh.vertices[topology.mesh.triangles[t]]
    return poly.hat_gradients(*p)


# ---------------------------------------------------------------------------
# assembly

def assemble_divergence(topology: MeshTopology, dofmap: DofMap) -> np.ndarray:
    """B[q-dof, v-dof] = integral of (pressure basis q) * div(velocity
    basis v); pressure DOF of triangle t, local node q is 6t + q."""
    B = np.zeros((dofmap.n_pressure, dofmap.n_velocity))
    for t in range(topology.T):
        area = _tri_area(topology, t)
        g = _hat_grads(topology, t)                       # (3, 2)
        local = dofmap.local_nodes(topology, t)
        div_qa = np.einsum("sc,qsa->qca", g, _PD)          # (6, 2, 10)
        for a, node in enumerate(local):
            if node is None:
                continue
            for c in (0, 1):
                B[6 * t:6 * t + 6, 2 * node + c] += area * div_qa[:, c, a]
    return B


def assemble_norms(topology: MeshTopology, dofmap: DofMap,
                   seminorm: bool = False):
    """(A, M): velocity H1 Gram matrix (seminorm-only if requested) and
    the block-diagonal pressure mass matrix."""
    A = np.zeros((dofmap.n_velocity, dofmap.n_velocity))
    M = np.zeros((dofmap.n_pressure, dofmap.n_pressure))
    for t in range(topology.T):
        area = _tri_area(topology, t)
        g = _hat_grads(topology, t)
        local = dofmap.local_nodes(topology, t)
        K = np.einsum("sc,tc,stab->ab", g, g, _GG) * area  # (10, 10)
        if not seminorm:
            K = K + area * _MM3
        idx = [(a, node) for a, node in enumerate(local) if node is not None]
        for a, na in idx:
            for b, nb in idx:
                for c in (0, 1):
                    A[2 * na + c, 2 * nb + c] += K[a, b]
        M[6 * t:6 * t + 6, 6 * t:6 * t + 6] = area * _MM2
    return A, M


def pressure_constraints(topology: MeshTopology, reports) -> np.ndarray:
    """Rows of the constraint matrix cutting the raw 6T-dimensional
    pressure space down to the constrained space: global mean zero plus
    one alternating-sum condition per singular vertex."""
    mesh = topology.mesh
    rows = [np.concatenate([_tri_area(topology, t) * _IV2
                            for t in range(topology.T)])]
    for r in reports:
        if not r.singular:
            continue
        patch = enumerate_patch(topology, r.vertex)
        row = np.zeros(6 * topology.T)
        for j, t in enumerate(patch.tris):
            slot = int(np.where(mesh.triangles[t] == r.vertex)[0][0])
            row[6 * t + slot] = (-1.0) ** j
        rows.append(row)
    return np.vstack(rows)


def constrained_basis(topology: MeshTopology, reports) -> np.ndarray:
    """Orthonormal basis (columns) of the constrained pressure space."""
    C = pressure_constraints(topology, reports)
    N = scipy.linalg.null_space(C)
    expect = 6 * topology.T - C.shape[0]
    if N.shape[1] != expect:
        raise SolverError(
            f"constrained pressure dimension {N.shape[1]} != 6T - 1 - sigma "
            f"= {expect}; constraint rows are linearly dependent")
    return N


# ---------------------------------------------------------------------------
# rank / K / inf-sup

@dataclass(frozen=True)
class RankResult:
    rank: int
    nullity: int
    K: int
    expected_dim: int       # 6T - 1 - sigma
    gap: float              # smallest accepted / largest rejected s.v.
    singular_values: np.ndarray


def divergence_rank(B: np.ndarray, topology: MeshTopology, sigma: int,
                    tol: Tolerances = Tolerances()) -> RankResult:
    sv = scipy.linalg.svdvals(B)
    smax = sv[0] if len(sv) else 0.0
    thr = tol.rank * smax
    accepted = sv[sv > thr]
    rejected = sv[sv <= thr]
    gap = float("inf")
    if len(rejected) and rejected[0] > 0.0:
        gap = float(accepted[-1] / rejected[0]) if len(accepted) else 0.0
        if gap < 10.0:
            raise RankIndeterminateError(
                f"singular values {accepted[-1]:.3e} / {rejected[0]:.3e} "
                f"straddle the threshold {thr:.3e} with gap {gap:.2f} < 10")
    rank = int(len(accepted))
    expected = 6 * topology.T - 1 - sigma
    K = expected - rank
    if K < 0:
        raise SolverError(
            f"rank {rank} exceeds the constrained pressure dimension "
            f"{expected}; range inclusion violated")
    return RankResult(rank=rank, nullity=B.shape[1] - rank, K=K,
                      expected_dim=expected, gap=gap, singular_values=sv)


def infsup_constant(A: np.ndarray, B: np.ndarray, M: np.ndarray,
                    N: np.ndarray, zero_tol: float = 1e-10):
    """(beta, eigenvalues): beta is the square root of the smallest
    nonzero eigenvalue of the pressure Schur complement restricted to
    the constrained space, in the pressure mass inner product."""
    BtN = B.T @ N                      # pairing of constrained pressures
    try:
        X = scipy.linalg.solve(A, BtN, assume_a="pos")
    except scipy.linalg.LinAlgError as exc:
        raise SolverError(f"velocity Gram matrix is not SPD: {exc}") from exc
    S = BtN.T @ X
    G = N.T @ M @ N
    eig = scipy.linalg.eigh(S, G, eigvals_only=True)
    eig = np.clip(eig, 0.0, None)
    scale = eig[-1] if len(eig) and eig[-1] > 0 else 1.0
    nonzero = eig[eig > zero_tol * scale]
    beta = float(np.sqrt(nonzero[0])) if len(nonzero) else 0.0
    return beta, eig


def spurious_modes(B: np.ndarray, M: np.ndarray, N: np.ndarray,
                   tol: Tolerances = Tolerances()):
    """M-orthonormal basis of the constrained pressures with zero pairing
    against every velocity, returned as raw coefficient vectors."""
    BtN = B.T @ N
    if BtN.size == 0:
        null = np.eye(N.shape[1])
    else:
        sv = scipy.linalg.svdvals(BtN)
        smax = sv[0] if len(sv) else 0.0
        rank = int(np.sum(sv > tol.rank * max(smax, 1.0)))
        _, _, Vt = scipy.linalg.svd(BtN, full_matrices=True)
        null = Vt[rank:].T
    if null.shape[1] == 0:
        return []
    Q = N @ null                       # (6T, K)
    G = Q.T @ M @ Q                    # M-orthonormalize
    w, U = scipy.linalg.eigh(G)
    Q = Q @ U / np.sqrt(w)
    scale = float(np.abs(Q.T @ B).max()) if Q.size else 0.0
    bscale = max(float(np.abs(B).max()), 1.0)
    if scale > 1e-8 * bscale:
        raise SolverError(f"extracted modes pair with velocities at {scale:.3e}")
    return [Q[:, k] for k in range(Q.shape[1])]


def checkerboard_signature(topology: MeshTopology, mode,
                           rel_tol: float = 0.1) -> bool:
    """True when the mode's per-triangle vertex values alternate in sign
    around every interior vertex (near-zero patches are allowed)."""
    mode = np.asarray(mode)
    scale = float(np.abs(mode).max())
    if scale == 0.0:
        return False
    mesh = topology.mesh
    for z in range(topology.V):
        if topology.boundary_vertex[z]:
            continue
        patch = enumerate_patch(topology, z)
        vals = []
        for t in patch.tris:
            slot = int(np.where(mesh.triangles[t] == z)[0][0])
            vals.append(mode[6 * t + slot])
        vals = np.array(vals)
        local = np.abs(vals).max()
        if local < 1e-8 * scale:
            continue
        signs = {np.sign(v) * (-1.0) ** j for j, v in enumerate(vals)
                 if abs(v) >= rel_tol * local}
        if len(signs) > 1:
            return False
    return True


# ---------------------------------------------------------------------------
# spline dimension arithmetic

@dataclass(frozen=True)
class SplineDims:
    dim_s4: int             # clamped C1-quartic zero-BC spline dimension
    dim_s4_raw: int         # unclamped 2 E0 - E + 3 V0 + sigma + K
    strang_dimension: int   # E + 4V - V0 + sigma_i
    hypothesis_ok: bool     # E0 + 3 V0 + sigma >= E - E0
    identity_ok: bool | None
    caveat: str | None


def strang_dimensions(topology: MeshTopology, sigma: int, sigma_i: int,
                      sigma_b: int, K: int) -> SplineDims:
    E, E0, V, V0 = topology.E, topology.E0, topology.V, topology.V0
    if not topology.euler_ok:
        raise MeshError("mesh is not simply connected (Euler check failed)")
    raw = 2 * E0 - E + 3 * V0 + sigma + K
    strang = E + 4 * V - V0 + sigma_i
    hyp = (E0 + 3 * V0 + sigma) >= (E - E0)
    identity = None
    caveat = None
    if K == 0:
        identity = (raw + 6 * (E - E0) - sigma_b) == strang
        if not hyp:
            caveat = ("dimension-count hypothesis E0 + 3 V0 + sigma >= "
                      "E - E0 fails; identity reported for information only")
    elif not hyp:
        caveat = "dimension-count hypothesis fails"
    return SplineDims(dim_s4=max(0, raw), dim_s4_raw=raw,
                      strang_dimension=strang, hypothesis_ok=hyp,
                      identity_ok=identity, caveat=caveat)


def nullity_crosscheck(result: RankResult, topology: MeshTopology,
                       sigma: int) -> dict:
    """Integer identity between the divergence-free velocity dimension
    and the combinatorial formula; mismatch is a hard failure."""
    expect = max(0, 2 * topology.E0 - topology.E + 3 * topology.V0
                 + sigma + result.K)
    report = {"nullity": result.nullity, "expected": expect,
              "ok": result.nullity == expect}
    if not report["ok"]:
        raise SolverError(
            f"nullity(B) = {result.nullity} but the dimension formula "
            f"gives {expect}")
    return report


# ---------------------------------------------------------------------------
# helpers for cross-module oracles and export

def velocity_coefficients(topology: MeshTopology, dofmap: DofMap,
                          field) -> np.ndarray:
    """Nodal coefficient vector of a piecewise-cubic field that vanishes
    on the boundary (values sampled at the interior Lagrange nodes)."""
    out = np.zeros(dofmap.n_velocity)
    for t in range(topology.T):
        vals = field.eval(t, np.array(P3_NODES))          # (10, 2)
        for a, node in enumerate(dofmap.local_nodes(topology, t)):
            if node is None:
                continue
            out[2 * node] = vals[a, 0]
            out[2 * node + 1] = vals[a, 1]
    return out


def divergence_moments(topology: MeshTopology, field) -> np.ndarray:
    """Moment vector (pressure-DOF layout) of a field's divergence."""
    out = np.zeros(6 * topology.T)
    for t in field.support:
        area = _tri_area(topology, t)
        dc = field.div_coeffs(t)
        vals = poly.eval2(dc, _QP)
        out[6 * t:6 * t + 6] = area * (_P2_AT_QP * vals) @ _QW
    return out


def pressure_from_moments(topology: MeshTopology,
                          moments: np.ndarray) -> np.ndarray:
    """Recover per-triangle P2 nodal values from a moment vector."""
    out = np.zeros((topology.T, 6))
    for t in range(topology.T):
        area = _tri_area(topology, t)
        out[t] = scipy.linalg.solve(area * _MM2, moments[6 * t:6 * t + 6],
                                    assume_a="pos")
    return out


def export_matrix(mat: np.ndarray, name: str = "matrix") -> str:
    """MatrixMarket coordinate text for external verification."""
    buf = io.StringIO()
    buf.write("%%MatrixMarket matrix coordinate real general\n")
    buf.write(f"% {name}\n")
    rows, cols = np.nonzero(mat)
    buf.write(f"{mat.shape[0]} {mat.shape[1]} {len(rows)}\n")
    for r, c in zip(rows, cols):
        buf.write(f"{r + 1} {c + 1} {mat[r, c]:.17g}\n")
    return buf.getvalue()
