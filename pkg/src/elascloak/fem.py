"""Assembly and solution of the elastostatic boundary-value problems.

All bilinear forms act on full displacement gradients, never on the
symmetrized strain, so tensors without minor symmetry assemble
correctly. The energy convention pairs the test gradient slot (i, j)
with the trial gradient slot (k, l) through C[i, j, k, l]; gradient
vectors are flattened row-major as 2*i + j.

First-order coupling terms follow the sign convention of
transform.WillisPointTensors: the weak form is

    a(w, u) = int gradw : (c4 : gradu) + gradw : (d3 u)
              + w . (s3 : gradu) + w . (b2 u)

which is nonsymmetric and solved by sparse LU.

Hard inclusions constrain every node of the closed inclusion region to
the three-dimensional rigid-motion space through a Galerkin reduction,
so the discrete flux orthogonality on the inclusion rim holds by
construction. Pure-traction problems pin the nullspace with a bordered
system enforcing zero mean displacement and zero mean rotation.
"""

from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Sequence, Union

import numpy as np
from scipy import sparse
from scipy.sparse import linalg as sla

from .elements import (
    EDGE_POINTS,
    EDGE_WEIGHTS,
    TRI_POINTS,
    TRI_WEIGHTS,
    edge_trace,
    shape_gradients,
    shape_values,
)
from .materials import Tensor4
from .mesh import Mesh
from .transform import WillisPointTensors


class FemError(ValueError):
    """Assembly or solve failure."""


# ---------------------------------------------------------------------------
# function space
# ---------------------------------------------------------------------------

class FunctionSpace:
    """Vector-valued P1 or P2 space on a triangle mesh.

    Nodes are mesh vertices, plus unique edge midpoints for order 2.
    Degrees of freedom interleave components: dof = 2 * node + comp.
    """

    def __init__(self, mesh: Mesh, order: int):
        if order not in (1, 2):
            raise FemError("element order must be 1 or 2")
        self.mesh = mesh
        self.order = order
        t = mesh.triangles.astype(np.int64)
        if order == 1:
            self.nodes = mesh.vertices
            self.element_nodes = t
            self._edge_codes = None
            self._edge_mid = None
        else:
            e = np.vstack([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
            key = np.sort(e, axis=1)
            uniq, inv = np.unique(key, axis=0, return_inverse=True)
            inv = inv.reshape(3, -1)
            nv = mesh.n_vertices
            mids = 0.5 * (mesh.vertices[uniq[:, 0]] + mesh.vertices[uniq[:, 1]])
            self.nodes = np.vstack([mesh.vertices, mids])
            self.element_nodes = np.column_stack(
                [t, nv + inv[0], nv + inv[1], nv + inv[2]])
            self._edge_codes = uniq[:, 0] * np.int64(nv) + uniq[:, 1]
            self._edge_mid = nv + np.arange(len(uniq), dtype=np.int64)
        self.n_nodes = len(self.nodes)
        self.n_dofs = 2 * self.n_nodes
        self._geo = None

    def edge_midpoint_nodes(self, edges: np.ndarray) -> np.ndarray:
        """Midpoint node ids for (k, 2) vertex-id edges (order 2 only)."""
        if self.order == 1:
            raise FemError("P1 space has no midpoint nodes")
        key = np.sort(edges.astype(np.int64), axis=1)
        code = key[:, 0] * np.int64(self.mesh.n_vertices) + key[:, 1]
        pos = np.searchsorted(self._edge_codes, code)
        if np.any(pos >= len(self._edge_codes)) or np.any(
                self._edge_codes[pos] != code):
            raise FemError("boundary edge missing from the edge table")
        return self._edge_mid[pos]

    def boundary_nodes(self, tag: str) -> np.ndarray:
        edges = self.mesh.boundary[tag]
        ids = [np.unique(edges).astype(np.int64)]
        if self.order == 2:
            ids.append(self.edge_midpoint_nodes(edges))
        return np.unique(np.concatenate(ids))

    def geometry(self):
        """Per-element affine map data: (F, detF, Finv)."""
        if self._geo is None:
            p = self.mesh.vertices[self.mesh.triangles]
            F = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]], axis=2)
            det = F[:, 0, 0] * F[:, 1, 1] - F[:, 0, 1] * F[:, 1, 0]
            inv = np.empty_like(F)
            inv[:, 0, 0] = F[:, 1, 1]
            inv[:, 0, 1] = -F[:, 0, 1]
            inv[:, 1, 0] = -F[:, 1, 0]
            inv[:, 1, 1] = F[:, 0, 0]
            inv /= det[:, None, None]
            self._geo = (F, det, inv)
        return self._geo

    def quadrature_points(self) -> np.ndarray:
        """Physical coordinates of all element quadrature points (m, q, 2)."""
        F, _, _ = self.geometry()
        v0 = self.mesh.vertices[self.mesh.triangles[:, 0]]
        return v0[:, None, :] + np.einsum("nij,qj->nqi", F, TRI_POINTS)


@dataclass
class Field:
    """Nodal displacement field on a FunctionSpace."""

    space: FunctionSpace
    values: np.ndarray  # (n_dofs,)

    def nodal(self) -> np.ndarray:
        return self.values.reshape(-1, 2)

    def element_values(self) -> np.ndarray:
        """Per-element nodal values (m, n_shape, 2)."""
        return self.nodal()[self.space.element_nodes]


# ---------------------------------------------------------------------------
# coefficient fields
# ---------------------------------------------------------------------------

TensorSource = Union[Tensor4, WillisPointTensors, Callable]


class CoefficientField:
    """Maps every mesh region tag to a tensor source.

    A source is a constant Tensor4, a constant WillisPointTensors, or a
    callable taking an (n, 2) point array and returning either an
    (n, 2, 2, 2, 2) stiffness array or a tuple (c4, d3, s3, b2) of
    arrays with leading dimension n.
    """

    def __init__(self, sources: Mapping[str, TensorSource]):
        self.sources = dict(sources)

    def evaluate(self, region: str, pts: np.ndarray):
        """Return (c4, willis) with c4 (n,2,2,2,2); willis None or
        (d3, s3, b2) arrays with leading dimension n."""
        try:
            src = self.sources[region]
        except KeyError:
            raise FemError(f"no coefficient for region {region!r}") from None
        n = len(pts)
        if isinstance(src, Tensor4):
            return np.broadcast_to(src.c, (n, 2, 2, 2, 2)), None
        if isinstance(src, WillisPointTensors):
            return (np.broadcast_to(src.c4.c, (n, 2, 2, 2, 2)),
                    (np.broadcast_to(src.d3, (n, 2, 2, 2)),
                     np.broadcast_to(src.s3, (n, 2, 2, 2)),
                     np.broadcast_to(src.b2, (n, 2, 2))))
        out = src(pts)
        if isinstance(out, tuple):
            c4, d3, s3, b2 = (np.asarray(a, dtype=float) for a in out)
            willis = (d3, s3, b2)
        else:
            c4, willis = np.asarray(out, dtype=float), None
        if not np.all(np.isfinite(c4)):
            raise FemError(f"non-finite coefficient in region {region!r}")
        return c4, willis


def pointwise_source(fn: Callable, willis: bool = False) -> Callable:
    """Vectorize a single-point tensor evaluator into a batch source."""

    def batch(pts: np.ndarray):
        if not willis:
            return np.stack([np.asarray(fn(p).c if isinstance(fn(p), Tensor4)
                                        else fn(p), dtype=float)
                             for p in pts])
        c4, d3, s3, b2 = [], [], [], []
        for p in pts:
            w = fn(p)
            c4.append(w.c4.c)
            d3.append(w.d3)
            s3.append(w.s3)
            b2.append(w.b2)
        return (np.stack(c4), np.stack(d3), np.stack(s3), np.stack(b2))

    return batch


# ---------------------------------------------------------------------------
# assembly
# ---------------------------------------------------------------------------

@dataclass
class LinearSystem:
    matrix: sparse.csr_matrix
    rhs: np.ndarray
    symmetric: bool
    space: FunctionSpace


def _region_blocks(space: FunctionSpace, skip: Sequence[str]):
    mesh = space.mesh
    for name in mesh.region_names:
        if name in skip:
            continue
        idx = mesh.triangles_in(name)
        if len(idx):
            yield name, idx


def assemble(mesh: Mesh, coeff: CoefficientField, order: int = 2,
             skip_regions: Sequence[str] = ()) -> LinearSystem:
    """Stiffness of the (possibly first-order-coupled) elasticity form."""
    space = FunctionSpace(mesh, order)
    mat, symmetric = _assemble_stiffness(space, coeff, skip_regions,
                                         space.element_nodes, space.n_nodes)
    return LinearSystem(mat, np.zeros(space.n_dofs), symmetric, space)


def _assemble_stiffness(space: FunctionSpace, coeff: CoefficientField,
                        skip_regions: Sequence[str],
                        element_nodes: np.ndarray, n_nodes: int):
    """Scatter the element stiffness blocks onto an arbitrary dof layout;
    element geometry always comes from the mesh, so duplicated node ids
    (interface jump handling) share physical positions."""
    nsh = element_nodes.shape[1]
    F, det, Finv = space.geometry()
    dref = shape_gradients(space.order, TRI_POINTS)
    nref = shape_values(space.order, TRI_POINTS)
    xq = space.quadrature_points()

    rows, cols, vals = [], [], []
    symmetric = True
    for name, idx in _region_blocks(space, skip_regions):
        n = len(idx)
        pts = xq[idx].reshape(-1, 2)
        c4, willis = coeff.evaluate(name, pts)
        c4 = c4.reshape(n, len(TRI_POINTS), 2, 2, 2, 2)
        if willis is not None:
            symmetric = False
            d3 = willis[0].reshape(n, -1, 2, 2, 2)
            s3 = willis[1].reshape(n, -1, 2, 2, 2)
            b2 = willis[2].reshape(n, -1, 2, 2)
        fi = Finv[idx]
        ke = np.zeros((n, nsh, 2, nsh, 2))
        for q in range(len(TRI_POINTS)):
            dn = np.einsum("ar,nri->nai", dref[q], fi)
            w = TRI_WEIGHTS[q] * det[idx]
            ke += np.einsum("n,nai,nickd,nbk->nacbd", w, dn, c4[:, q], dn,
                            optimize=True)
            if willis is not None:
                nq = nref[q]
                ke += np.einsum("n,nai,nick,b->nacbk", w, dn, d3[:, q], nq,
                                optimize=True)
                ke += np.einsum("n,a,nckl,nbk->nacbl", w, nq, s3[:, q], dn,
                                optimize=True)
                ke += np.einsum("n,a,nck,b->nacbk", w, nq, b2[:, q], nq,
                                optimize=True)
        ke = ke.reshape(n, 2 * nsh, 2 * nsh)
        ldof = (2 * element_nodes[idx, :, None]
                + np.arange(2)).reshape(n, 2 * nsh)
        rows.append(np.repeat(ldof, 2 * nsh, axis=1).ravel())
        cols.append(np.tile(ldof, (1, 2 * nsh)).ravel())
        vals.append(ke.ravel())

    if not rows:
        raise FemError("assembly covered no region")
    mat = sparse.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(2 * n_nodes, 2 * n_nodes)).tocsr()
    return mat, symmetric


def assemble_mass(mesh: Mesh, density: Mapping[str, float], order: int = 2,
                  skip_regions: Sequence[str] = ()) -> sparse.csr_matrix:
    """Mass matrix with per-region constant density."""
    space = FunctionSpace(mesh, order)
    nsh = space.element_nodes.shape[1]
    _, det, _ = space.geometry()
    nref = shape_values(order, TRI_POINTS)
    eye = np.eye(2)

    rows, cols, vals = [], [], []
    for name, idx in _region_blocks(space, skip_regions):
        try:
            rho = float(density[name])
        except KeyError:
            raise FemError(f"no density for region {name!r}") from None
        n = len(idx)
        mab = np.zeros((n, nsh, nsh))
        for q in range(len(TRI_POINTS)):
            w = TRI_WEIGHTS[q] * det[idx] * rho
            mab += w[:, None, None] * np.outer(nref[q], nref[q])
        me = np.einsum("nab,cd->nacbd", mab, eye).reshape(n, 2 * nsh, 2 * nsh)
        ldof = (2 * space.element_nodes[idx, :, None]
                + np.arange(2)).reshape(n, 2 * nsh)
        rows.append(np.repeat(ldof, 2 * nsh, axis=1).ravel())
        cols.append(np.tile(ldof, (1, 2 * nsh)).ravel())
        vals.append(me.ravel())
    return sparse.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(space.n_dofs, space.n_dofs)).tocsr()


def volume_load(space: FunctionSpace, body_force: Callable,
                skip_regions: Sequence[str] = ()) -> np.ndarray:
    """Right-hand side from a body force callable (n, 2) -> (n, 2)."""
    _, det, _ = space.geometry()
    nref = shape_values(space.order, TRI_POINTS)
    xq = space.quadrature_points()
    rhs = np.zeros(space.n_dofs)
    for _, idx in _region_blocks(space, skip_regions):
        pts = xq[idx]
        fv = np.asarray(body_force(pts.reshape(-1, 2)), dtype=float)
        fv = fv.reshape(len(idx), -1, 2)
        contrib = np.einsum("q,n,nqc,qa->nac", TRI_WEIGHTS, det[idx], fv,
                            nref, optimize=True)
        ldof = (2 * space.element_nodes[idx, :, None] + np.arange(2))
        np.add.at(rhs, ldof.ravel(), contrib.ravel())
    return rhs


def traction_load(space: FunctionSpace, tag: str, g: Callable,
                  check_compatibility: bool = False) -> np.ndarray:
    """Right-hand side from a boundary traction on a tagged loop."""
    mesh = space.mesh
    edges = mesh.boundary[tag]
    va = mesh.vertices[edges[:, 0]]
    vb = mesh.vertices[edges[:, 1]]
    length = np.hypot(*(vb - va).T)
    pts = va[:, None, :] + EDGE_POINTS[None, :, None] * (vb - va)[:, None, :]
    gv = np.asarray(g(pts.reshape(-1, 2)), dtype=float).reshape(
        len(edges), -1, 2)

    if check_compatibility:
        w = EDGE_WEIGHTS[None, :, None] * length[:, None, None]
        force = (w * gv).sum(axis=(0, 1))
        moment = float((w[..., 0] * (pts[..., 0] * gv[..., 1]
                                     - pts[..., 1] * gv[..., 0])).sum())
        scale = float((w * np.abs(gv)).sum()) + 1e-300
        if max(np.abs(force).max(), abs(moment)) > 1e-10 * scale:
            raise FemError("incompatible traction: nonzero net force or "
                           "moment")

    trace = edge_trace(space.order, EDGE_POINTS)
    if space.order == 1:
        enodes = edges.astype(np.int64)
    else:
        enodes = np.column_stack(
            [edges.astype(np.int64), space.edge_midpoint_nodes(edges)])
    contrib = np.einsum("q,n,nqc,qa->nac", EDGE_WEIGHTS, length, gv, trace,
                        optimize=True)
    rhs = np.zeros(space.n_dofs)
    ldof = 2 * enodes[:, :, None] + np.arange(2)
    np.add.at(rhs, ldof.ravel(), contrib.ravel())
    return rhs


def rigid_motion_rows(space: FunctionSpace,
                      skip_regions: Sequence[str] = ()) -> np.ndarray:
    """Constraint rows enforcing zero mean displacement and rotation.

    Rows are the L2 pairings of the basis with (1,0), (0,1), and
    (-x2, x1) over the kept regions; (3, n_dofs), dense.
    """
    _, det, _ = space.geometry()
    nref = shape_values(space.order, TRI_POINTS)
    xq = space.quadrature_points()
    rows = np.zeros((3, space.n_dofs))
    for _, idx in _region_blocks(space, skip_regions):
        pts = xq[idx]
        for q in range(len(TRI_POINTS)):
            w = TRI_WEIGHTS[q] * det[idx]
            base = w[:, None] * nref[q][None, :]
            ldof = 2 * space.element_nodes[idx]
            np.add.at(rows[0], ldof.ravel(), base.ravel())
            np.add.at(rows[1], (ldof + 1).ravel(), base.ravel())
            np.add.at(rows[2], ldof.ravel(),
                      (-pts[:, q, 1][:, None] * base).ravel())
            np.add.at(rows[2], (ldof + 1).ravel(),
                      (pts[:, q, 0][:, None] * base).ravel())
    return rows


# ---------------------------------------------------------------------------
# solvers
# ---------------------------------------------------------------------------

def _sparse_solve(mat: sparse.csr_matrix, rhs: np.ndarray,
                  symmetric: bool) -> np.ndarray:
    del symmetric  # one direct route; flag kept for the call sites' intent
    out = sla.spsolve(mat.tocsc(), rhs)
    if not np.all(np.isfinite(out)):
        raise FemError("direct solve produced non-finite values; "
                       "system is singular or extremely ill-conditioned")
    return out


def _dirichlet_data(space: FunctionSpace, tag: str, g: Callable):
    nodes = space.boundary_nodes(tag)
    gv = np.asarray(g(space.nodes[nodes]), dtype=float)
    if gv.shape != (len(nodes), 2):
        raise FemError("Dirichlet data must evaluate to one 2-vector "
                       "per boundary node")
    dofs = np.concatenate([2 * nodes, 2 * nodes + 1])
    vals = np.concatenate([gv[:, 0], gv[:, 1]])
    return dofs, vals


def _solve_constrained(system: LinearSystem, rhs: np.ndarray,
                       con_dofs: np.ndarray, con_vals: np.ndarray,
                       active: Optional[np.ndarray] = None) -> np.ndarray:
    """Eliminate fixed dofs and solve on the remaining (active) ones."""
    space = system.space
    u = np.zeros(space.n_dofs)
    u[con_dofs] = con_vals
    mask = np.zeros(space.n_dofs, dtype=bool)
    mask[active if active is not None else slice(None)] = True
    mask[con_dofs] = False
    free = np.nonzero(mask)[0]
    k = system.matrix
    body = rhs[free] - k[free][:, con_dofs] @ con_vals
    u[free] = _sparse_solve(k[free][:, free], body, system.symmetric)
    return u


def solve_dirichlet(mesh: Mesh, coeff: CoefficientField, g: Callable,
                    order: int = 2, body_force: Optional[Callable] = None,
                    tag: str = "outer") -> Field:
    """Displacement solve with Dirichlet data on the tagged boundary."""
    system = assemble(mesh, coeff, order)
    rhs = system.rhs
    if body_force is not None:
        rhs = rhs + volume_load(system.space, body_force)
    con, vals = _dirichlet_data(system.space, tag, g)
    return Field(system.space, _solve_constrained(system, rhs, con, vals))


def solve_neumann(mesh: Mesh, coeff: CoefficientField, g: Callable,
                  order: int = 2, tag: str = "outer") -> Field:
    """Pure-traction solve, normalized to zero mean displacement and
    zero mean rotation via a bordered system."""
    system = assemble(mesh, coeff, order)
    rhs = traction_load(system.space, tag, g, check_compatibility=True)
    r = rigid_motion_rows(system.space)
    a = sparse.bmat([[system.matrix, sparse.csr_matrix(r.T)],
                     [sparse.csr_matrix(r), None]], format="csc")
    sol = _sparse_solve(a, np.concatenate([rhs, np.zeros(3)]),
                        symmetric=system.symmetric)
    return Field(system.space, sol[:system.space.n_dofs])


def solve_transmission(mesh: Mesh, coeff: CoefficientField, bc,
                       order: int = 2) -> Field:
    """Two-phase (or any tagged heterogeneous) solve; interface
    continuity is natural for the conforming space."""
    kind, data = bc
    if kind == "dirichlet":
        return solve_dirichlet(mesh, coeff, data, order)
    if kind == "neumann":
        return solve_neumann(mesh, coeff, data, order)
    raise FemError(f"unknown boundary condition kind {kind!r}")


def _void_active_dofs(space: FunctionSpace, void: Sequence[str]):
    keep = np.ones(space.mesh.n_triangles, dtype=bool)
    for name in void:
        keep[space.mesh.triangles_in(name)] = False
    nodes = np.unique(space.element_nodes[keep])
    return np.concatenate([2 * nodes, 2 * nodes + 1])


def solve_soft_limit(mesh: Mesh, coeff: CoefficientField, bc,
                     order: int = 2,
                     void: Sequence[str] = ("inclusion",),
                     omega: float = 0.0, density=None) -> Field:
    """Limit of vanishing inclusion stiffness: the void region is
    dropped from assembly, its rim becomes traction-free naturally.

    With omega > 0 the operator becomes K - omega^2 M; density maps
    region names to mass densities and may omit the void regions."""
    system = assemble(mesh, coeff, order, skip_regions=void)
    if omega != 0.0:
        if density is None:
            raise FemError("density required when omega > 0")
        m = assemble_mass(mesh, density, order, skip_regions=void)
        system = LinearSystem(system.matrix - omega ** 2 * m,
                              system.rhs, system.symmetric, system.space)
    active = _void_active_dofs(system.space, void)
    kind, data = bc
    if kind == "dirichlet":
        con, vals = _dirichlet_data(system.space, tag="outer", g=data)
        u = _solve_constrained(system, system.rhs, con, vals, active=active)
        return Field(system.space, u)
    if kind != "neumann":
        raise FemError(f"unknown boundary condition kind {kind!r}")
    rhs = traction_load(system.space, "outer", data, check_compatibility=True)
    r = rigid_motion_rows(system.space, skip_regions=void)
    k = system.matrix[active][:, active]
    ra = r[:, active]
    a = sparse.bmat([[k, sparse.csr_matrix(ra.T)],
                     [sparse.csr_matrix(ra), None]], format="csc")
    sol = _sparse_solve(a, np.concatenate([rhs[active], np.zeros(3)]),
                        symmetric=True)
    u = np.zeros(system.space.n_dofs)
    u[active] = sol[:len(active)]
    return Field(system.space, u)


def _rigid_reduction(space: FunctionSpace, rigid: Sequence[str]):
    """Sparse map from (free dofs + 3 rigid coefficients) to all dofs."""
    rigid_tris = np.concatenate(
        [space.mesh.triangles_in(name) for name in rigid])
    rnodes = np.unique(space.element_nodes[rigid_tris])
    rset = np.zeros(space.n_nodes, dtype=bool)
    rset[rnodes] = True
    free_nodes = np.nonzero(~rset)[0]
    free_dofs = np.sort(np.concatenate([2 * free_nodes, 2 * free_nodes + 1]))
    nf = len(free_dofs)

    rows = [free_dofs]
    cols = [np.arange(nf)]
    vals = [np.ones(nf)]
    x = space.nodes[rnodes]
    # translation columns
    rows.append(2 * rnodes)
    cols.append(np.full(len(rnodes), nf))
    vals.append(np.ones(len(rnodes)))
    rows.append(2 * rnodes + 1)
    cols.append(np.full(len(rnodes), nf + 1))
    vals.append(np.ones(len(rnodes)))
    # rotation column (-x2, x1)
    rows.append(2 * rnodes)
    cols.append(np.full(len(rnodes), nf + 2))
    vals.append(-x[:, 1])
    rows.append(2 * rnodes + 1)
    cols.append(np.full(len(rnodes), nf + 2))
    vals.append(x[:, 0])
    p = sparse.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(space.n_dofs, nf + 3)).tocsr()
    return p, free_dofs


def solve_hard_limit(mesh: Mesh, coeff: CoefficientField, bc,
                     order: int = 2,
                     rigid: Sequence[str] = ("inclusion",)):
    """Limit of diverging inclusion stiffness: the closed inclusion
    region moves rigidly; returns (Field, rigid coefficients)."""
    system = assemble(mesh, coeff, order, skip_regions=rigid)
    space = system.space
    p, free_dofs = _rigid_reduction(space, rigid)
    kind, data = bc
    if kind == "dirichlet":
        con, vals = _dirichlet_data(space, tag="outer", g=data)
        ucon = np.zeros(space.n_dofs)
        ucon[con] = vals
        rhs = -system.matrix @ ucon
        keep = np.ones(p.shape[1], dtype=bool)
        keep[np.searchsorted(free_dofs, con)] = False
        pk = p[:, keep]
        red = (pk.T @ system.matrix @ pk).tocsc()
        z = _sparse_solve(red, pk.T @ rhs, symmetric=True)
        u = ucon + pk @ z
        alpha = z[-3:]
        return Field(space, u), alpha
    if kind != "neumann":
        raise FemError(f"unknown boundary condition kind {kind!r}")
    rhs = traction_load(space, "outer", data, check_compatibility=True)
    r = rigid_motion_rows(space)
    red = (p.T @ system.matrix @ p).tocsc()
    rred = r @ p
    a = sparse.bmat([[red, sparse.csr_matrix(rred.T)],
                     [sparse.csr_matrix(rred), None]], format="csc")
    sol = _sparse_solve(a, np.concatenate([p.T @ rhs, np.zeros(3)]),
                        symmetric=True)
    z = sol[:p.shape[1]]
    return Field(space, p @ z), z[-3:]


def solve_elastodynamic(mesh: Mesh, coeff: CoefficientField,
                        density: Mapping[str, float], omega: float,
                        g: Callable, order: int = 2) -> Field:
    """Time-harmonic solve (stiffness minus omega^2 mass), Dirichlet
    data on the outer boundary. omega = 0 reduces to the static path."""
    if omega < 0.0:
        raise FemError("omega must be nonnegative")
    system = assemble(mesh, coeff, order)
    if omega > 0.0:
        m = assemble_mass(mesh, density, order)
        system = LinearSystem(system.matrix - omega ** 2 * m, system.rhs,
                              system.symmetric, system.space)
    con, vals = _dirichlet_data(system.space, "outer", g)
    return Field(system.space, _solve_constrained(system, system.rhs,
                                                  con, vals))


def _gauge_extension(space: FunctionSpace, gauges):
    """Duplicate interface nodes on the slave side of each gauged
    interface and build the expansion map full = T reduced, where the
    reduced vector holds master-side nodal values and each duplicated
    node carries v_slave = M v_master.

    gauges: sequence of (boundary_tag, slave_region, matrix_fn) with
    matrix_fn mapping an (n, 2) point array to (n, 2, 2) jump matrices.
    Returns (element_nodes, n_ext_nodes, T).
    """
    elem = space.element_nodes.copy()
    next_id = space.n_nodes
    t_rows, t_cols, t_vals = [], [], []
    for tag, slave_region, matrix_fn in gauges:
        master = space.boundary_nodes(tag)
        jump = np.asarray(matrix_fn(space.nodes[master]), dtype=float)
        if jump.shape != (len(master), 2, 2):
            raise FemError("gauge matrix_fn must return (n, 2, 2)")
        dup = next_id + np.arange(len(master), dtype=np.int64)
        next_id += len(master)
        idx = space.mesh.triangles_in(slave_region)
        if not len(idx):
            raise FemError(f"gauge slave region {slave_region!r} is empty")
        sub = elem[idx]
        pos = np.clip(np.searchsorted(master, sub), 0, len(master) - 1)
        hit = master[pos] == sub
        sub[hit] = dup[pos[hit]]
        elem[idx] = sub
        for c in range(2):
            t_rows.append(2 * dup)
            t_cols.append(2 * master + c)
            t_vals.append(jump[:, 0, c])
            t_rows.append(2 * dup + 1)
            t_cols.append(2 * master + c)
            t_vals.append(jump[:, 1, c])
    n_red = space.n_dofs
    t_rows.append(np.arange(n_red, dtype=np.int64))
    t_cols.append(np.arange(n_red, dtype=np.int64))
    t_vals.append(np.ones(n_red))
    t = sparse.coo_matrix(
        (np.concatenate(t_vals),
         (np.concatenate(t_rows), np.concatenate(t_cols))),
        shape=(2 * next_id, n_red)).tocsr()
    return elem, next_id, t


def solve_willis(mesh: Mesh, coeff: CoefficientField, bc,
                 order: int = 2, gauges=None) -> Field:
    """First-order-coupled solve.

    With gauges=None the displacement is globally continuous.  A gauge
    list (see _gauge_extension) instead prescribes linear jumps across
    interior interfaces, as required when the coupled coefficients come
    from a change of variables whose Jacobian is discontinuous there;
    the returned Field then holds the master-side nodal values.
    """
    if gauges is None:
        kind, data = bc
        if kind == "dirichlet":
            return solve_dirichlet(mesh, coeff, data, order)
        if kind == "neumann":
            return solve_neumann(mesh, coeff, data, order)
        raise FemError(f"unknown boundary condition kind {kind!r}")

    space = FunctionSpace(mesh, order)
    elem, n_ext, t = _gauge_extension(space, gauges)
    k_ext, symmetric = _assemble_stiffness(space, coeff, (), elem, n_ext)
    k_red = (t.T @ k_ext @ t).tocsr()
    system = LinearSystem(k_red, np.zeros(space.n_dofs), symmetric, space)
    kind, data = bc
    if kind == "dirichlet":
        con, vals = _dirichlet_data(space, "outer", data)
        return Field(space, _solve_constrained(system, system.rhs, con, vals))
    if kind == "neumann":
        rhs = traction_load(space, "outer", data, check_compatibility=True)
        r = rigid_motion_rows(space)
        a = sparse.bmat([[k_red, sparse.csr_matrix(r.T)],
                         [sparse.csr_matrix(r), None]], format="csc")
        sol = _sparse_solve(a, np.concatenate([rhs, np.zeros(3)]),
                            symmetric=False)
        return Field(space, sol[:space.n_dofs])
    raise FemError(f"unknown boundary condition kind {kind!r}")


# ---------------------------------------------------------------------------
# derived outputs
# ---------------------------------------------------------------------------

def field_gradients(u: Field) -> np.ndarray:
    """Displacement gradients at quadrature points (m, q, 2, 2), where
    entry [i, j] is the derivative of component j along direction i."""
    space = u.space
    _, _, finv = space.geometry()
    dref = shape_gradients(space.order, TRI_POINTS)
    ue = u.element_values()
    grads = np.empty((space.mesh.n_triangles, len(TRI_POINTS), 2, 2))
    for q in range(len(TRI_POINTS)):
        dn = np.einsum("ar,nri->nai", dref[q], finv)
        grads[:, q] = np.einsum("nai,naj->nij", dn, ue)
    return grads


def strain_outputs(u: Field):
    """Dilational and shear strain, per triangle (P1) or per quadrature
    point (P2)."""
    g = field_gradients(u)
    dil = 0.5 * (g[..., 0, 0] + g[..., 1, 1])
    shear = 0.5 * (g[..., 0, 1] + g[..., 1, 0])
    if u.space.order == 1:
        return dil[:, 0], shear[:, 0]
    return dil, shear


def energy(system: LinearSystem, u: Field) -> float:
    """Value of the assembled bilinear form at (u, u)."""
    return float(u.values @ (system.matrix @ u.values))


def boundary_pairing(u: Field, tag: str, g: Callable) -> float:
    """Boundary integral of u . g over a tagged loop."""
    space = u.space
    mesh = space.mesh
    edges = mesh.boundary[tag]
    va = mesh.vertices[edges[:, 0]]
    vb = mesh.vertices[edges[:, 1]]
    length = np.hypot(*(vb - va).T)
    pts = va[:, None, :] + EDGE_POINTS[None, :, None] * (vb - va)[:, None, :]
    gv = np.asarray(g(pts.reshape(-1, 2)), dtype=float).reshape(
        len(edges), -1, 2)
    trace = edge_trace(space.order, EDGE_POINTS)
    if space.order == 1:
        enodes = edges.astype(np.int64)
    else:
        enodes = np.column_stack(
            [edges.astype(np.int64), space.edge_midpoint_nodes(edges)])
    uv = np.einsum("qa,nac->nqc", trace, u.nodal()[enodes])
    return float(np.einsum("q,n,nqc,nqc->", EDGE_WEIGHTS, length, uv, gv))
