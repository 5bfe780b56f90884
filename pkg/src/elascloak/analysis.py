"""Distance norms, log-log slope fits, and sweep runners.

The runners cover the four numerical experiments of the toolkit:
stiffness-contrast sweeps against the soft/hard limit fields, defect
shrinkage at fixed contrast, near-cloaking quality versus the
regularization width, and layered-versus-smooth cloak agreement.
"""

import os
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dataclass_field

import numpy as np

from . import output
from .elements import (EDGE_POINTS, EDGE_WEIGHTS, TRI_POINTS, TRI_WEIGHTS,
                       edge_trace, shape_values)
from .fem import (CoefficientField, FemError, field_gradients,
                  pointwise_source, solve_dirichlet, solve_elastodynamic,
                  solve_hard_limit, solve_neumann, solve_soft_limit,
                  solve_transmission, solve_willis)
from .layered import build_layered_cloak, symmetrized_tensor_at
from .materials import IsotropicMaterial, isotropic_tensor
from .mesh import Disk, Ellipse, GeometrySpec, Rectangle, build_mesh, refine
from .transform import (cloak_gauge_constraints, cosserat_tensor_at,
                        willis_tensors_at, WillisPointTensors)

STEEL = IsotropicMaterial(1.5e11, 7.5e10)
ALUMINIUM = IsotropicMaterial(5.1e10, 2.6e10)
STEEL_DENSITY = 7850.0
ALUMINIUM_DENSITY = 2700.0

# target size giving roughly 3e4 triangles on the radius-10 disk
DESK_H = 0.145

SOFT_ETAS = (1e-2, 1e-3, 1e-4, 1e-5)
HARD_ETAS = (1e2, 1e3, 1e4, 1e5)

# pre-asymptotic contrasts never enter a slope fit
FIT_EXCLUDED_ETAS = (1e-1, 1.0, 1e1)


class AnalysisError(ValueError):
    """Raised for invalid sweep configurations or violated assertions."""


# ---------------------------------------------------------------------------
# distance norms
# ---------------------------------------------------------------------------


def _check_shared_mesh(f1, f2):
    if f1.space.mesh is not f2.space.mesh or f1.space.order != f2.space.order:
        raise AnalysisError("fields must share one mesh and element order")


def norm_l2_region(f1, f2, regions):
    """L2 norm of f1 - f2 over the named mesh regions."""
    _check_shared_mesh(f1, f2)
    space = f1.space
    mesh = space.mesh
    idx = np.concatenate([mesh.triangles_in(name) for name in regions])
    if len(idx) == 0:
        raise AnalysisError(f"regions {regions!r} contain no triangles")
    diff = f1.nodal() - f2.nodal()
    vals = diff[space.element_nodes[idx]]
    shapes = shape_values(space.order, TRI_POINTS)
    dq = np.einsum("qa,nac->nqc", shapes, vals)
    _, det, _ = space.geometry()
    sq = np.einsum("n,q,nqc,nqc->", det[idx], TRI_WEIGHTS, dq, dq)
    return float(np.sqrt(sq))


def norm_l2_boundary(f1, f2, tag="outer"):
    """L2 norm of f1 - f2 along a tagged boundary loop."""
    _check_shared_mesh(f1, f2)
    space = f1.space
    mesh = space.mesh
    edges = mesh.boundary[tag]
    lengths = np.linalg.norm(mesh.vertices[edges[:, 1]]
                             - mesh.vertices[edges[:, 0]], axis=1)
    diff = f1.nodal() - f2.nodal()
    vals = np.stack([diff[edges[:, 0]], diff[edges[:, 1]]], axis=1)
    if space.order == 2:
        mid = diff[space.edge_midpoint_nodes(edges)]
        vals = np.concatenate([vals, mid[:, None, :]], axis=1)
    shapes = edge_trace(space.order, EDGE_POINTS)
    dq = np.einsum("qa,nac->nqc", shapes, vals)
    sq = np.einsum("n,q,nqc,nqc->", lengths, EDGE_WEIGHTS, dq, dq)
    return float(np.sqrt(sq))


# ---------------------------------------------------------------------------
# slope fitting
# ---------------------------------------------------------------------------


def _loglog_fit(points):
    pts = [(float(p), float(d)) for p, d in points]
    if len(pts) < 3:
        raise AnalysisError("slope fit needs at least 3 points, got %d"
                            % len(pts))
    arr = np.array(pts)
    if np.any(arr <= 0.0):
        raise AnalysisError("slope fit needs positive parameters and "
                            "distances")
    lx, ly = np.log(arr[:, 0]), np.log(arr[:, 1])
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - float(np.sum(resid ** 2)) / ss_tot
    return float(slope), float(intercept), r2


def fit_loglog_slope(points):
    """Least-squares line through (log parameter, log distance).

    Returns (slope, r_squared). Requires at least three strictly
    positive points.
    """
    slope, _, r2 = _loglog_fit(points)
    return slope, r2


# ---------------------------------------------------------------------------
# sweep results
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SweepResult:
    """Outcome of one experiment sweep.

    pairs are (parameter, distance) tuples sorted by ascending
    parameter; converged marks the points whose distance moved by less
    than 5% under one mesh refinement (all True when the check was
    skipped). Only converged points enter the slope fit.
    """

    experiment: str
    pairs: tuple
    slope: float
    intercept: float
    r_squared: float
    mesh_info: dict
    runtime: float
    converged: tuple
    extras: dict = dataclass_field(default_factory=dict)

    def __post_init__(self):
        params = [p for p, _ in self.pairs]
        dists = [d for _, d in self.pairs]
        if len(self.converged) != len(self.pairs):
            raise AnalysisError("converged flags must match pairs")
        if any(d < 0.0 for d in dists):
            raise AnalysisError("distances must be nonnegative")
        diffs = np.diff(params)
        if len(diffs) and not (np.all(diffs > 0.0) or np.all(diffs < 0.0)):
            raise AnalysisError("parameters must be strictly monotone")

    @property
    def prefactor(self):
        """Fitted amplitude exp(intercept) of the power law."""
        return float(np.exp(self.intercept))

    def distance_at(self, param, rtol=1e-9):
        for p, d in self.pairs:
            if abs(p - param) <= rtol * max(abs(p), abs(param)):
                return d
        raise KeyError(f"no sweep point at parameter {param!r}")

    def to_summary(self):
        return _jsonable({
            "experiment": self.experiment,
            "pairs": [[p, d] for p, d in self.pairs],
            "converged": list(self.converged),
            "slope": self.slope,
            "intercept": self.intercept,
            "prefactor": self.prefactor,
            "r_squared": self.r_squared,
            "mesh": self.mesh_info,
            "runtime_seconds": self.runtime,
            "extras": self.extras,
        })


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        obj = obj.item()
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, float) and np.isnan(obj):
        return None
    return obj


def _emit(result, out_dir, param_column):
    output.ensure_dir(out_dir)
    rows = [(p, d, int(c))
            for (p, d), c in zip(result.pairs, result.converged)]
    base = os.path.join(out_dir, result.experiment)
    output.write_csv(base + ".csv",
                     [param_column, "distance [m]", "converged [-]"], rows)
    output.write_json(base + "_summary.json", result.to_summary())


def _finish(experiment, pairs, converged, fit_pairs, mesh_info, t0, extras,
            out_dir, param_column, strict_fit=True):
    order = np.argsort([p for p, _ in pairs], kind="stable")
    pairs = tuple(pairs[i] for i in order)
    converged = tuple(converged[i] for i in order)
    try:
        slope, intercept, r2 = _loglog_fit(fit_pairs)
    except AnalysisError:
        if strict_fit:
            raise
        slope = intercept = r2 = float("nan")
    result = SweepResult(experiment, pairs, slope, intercept, r2, mesh_info,
                         time.perf_counter() - t0, converged, extras)
    if out_dir is not None:
        _emit(result, out_dir, param_column)
    return result


# ---------------------------------------------------------------------------
# geometry and field helpers
# ---------------------------------------------------------------------------


def inclusion_shape(shape, a, b=None):
    """Unit-area-by-default inclusion: ellipse semi-axes (a, 1/a) or
    rectangle sides (a, pi/a), both of area pi when b is omitted."""
    if shape == "ellipse":
        if b is None:
            b = 1.0 / a
        if a == b:
            return Disk(a)
        return Ellipse(a, b)
    if shape == "rectangle":
        if b is None:
            b = np.pi / a
        return Rectangle(a, b)
    raise AnalysisError(f"unknown shape {shape!r}")


def _identity_datum(pts):
    return np.asarray(pts, dtype=float)


def radial_traction(magnitude):
    """Outward normal traction of constant magnitude on a circle."""

    def g(pts):
        pts = np.asarray(pts, dtype=float)
        return magnitude * pts / np.linalg.norm(pts, axis=1, keepdims=True)

    return g


def _mesh_info(mesh, order):
    return {"h": mesh.spec.h, "order": order,
            "triangles": int(mesh.n_triangles),
            "vertices": int(mesh.n_vertices)}


def _run_points(jobs, workers):
    """Evaluate (param, thunk) jobs, optionally on a thread pool."""
    if workers <= 1:
        return [(p, thunk()) for p, thunk in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [(p, pool.submit(thunk)) for p, thunk in jobs]
        return [(p, f.result()) for p, f in futures]


# ---------------------------------------------------------------------------
# contrast sweep
# ---------------------------------------------------------------------------


def run_contrast_sweep(direction="soft", shape="ellipse", a=1.0, b=None,
                       eta_list=None, h=DESK_H, order=2,
                       background=STEEL, inclusion_base=ALUMINIUM,
                       omega=0.0, densities=None, refine_check=True,
                       refine_factor=2.0 ** 0.5, out_dir=None, workers=1,
                       min_segments=64):
    """Distance of the two-phase solve to its vanishing- or
    rigid-contrast limit, over a list of stiffness scalings.

    The inclusion carries inclusion_base scaled by eta; the distance is
    the L2 norm over the exterior region against the limit field on the
    same mesh. With refine_check, each point is re-solved once on a
    refined mesh and flagged converged when the distance moves by less
    than 5%; only converged points outside the pre-asymptotic contrasts
    enter the slope fit. omega > 0 switches to the time-harmonic
    operator (soft direction only) with per-region densities.
    """
    if direction not in ("soft", "hard"):
        raise AnalysisError(f"unknown sweep direction {direction!r}")
    if eta_list is None:
        eta_list = SOFT_ETAS if direction == "soft" else HARD_ETAS
    eta_list = tuple(float(e) for e in eta_list)
    if not eta_list:
        raise AnalysisError("eta list must be nonempty")
    if omega != 0.0:
        if direction != "soft":
            raise AnalysisError("time-harmonic sweep supports the soft "
                                "direction only")
        if densities is None:
            densities = {"background": STEEL_DENSITY,
                         "inclusion": ALUMINIUM_DENSITY}

    t0 = time.perf_counter()
    spec = GeometrySpec(outer_radius=10.0,
                        inclusion=inclusion_shape(shape, a, b), h=h,
                        min_segments=min_segments)
    mesh = build_mesh(spec)
    bc = ("dirichlet", _identity_datum)
    c_bg = isotropic_tensor(background)

    def distances_on(m):
        limit_coeff = CoefficientField({"background": c_bg})
        if direction == "soft":
            if omega != 0.0:
                u_lim = solve_soft_limit(m, limit_coeff, bc, order,
                                         omega=omega, density=densities)
            else:
                u_lim = solve_soft_limit(m, limit_coeff, bc, order)
        else:
            u_lim, _ = solve_hard_limit(m, limit_coeff, bc, order)

        def one(eta):
            coeff = CoefficientField({
                "background": c_bg,
                "inclusion": isotropic_tensor(inclusion_base.scaled(eta))})
            start = time.perf_counter()
            if omega != 0.0:
                u = solve_elastodynamic(m, coeff, densities, omega,
                                        _identity_datum, order)
            else:
                u = solve_transmission(m, coeff, bc, order)
            d = norm_l2_region(u, u_lim, ("background",))
            return d, time.perf_counter() - start

        jobs = [(eta, lambda eta=eta: one(eta)) for eta in eta_list]
        return _run_points(jobs, workers)

    coarse = distances_on(mesh)
    point_times = {p: t for p, (_, t) in coarse}
    dist = {p: d for p, (d, _) in coarse}
    if refine_check:
        fine_mesh = refine(mesh, refine_factor)
        fine = {p: d for p, (d, _) in distances_on(fine_mesh)}
        conv = {p: abs(fine[p] - dist[p]) <= 0.05 * abs(dist[p])
                for p in eta_list}
        refined_info = _mesh_info(fine_mesh, order)
    else:
        conv = {p: True for p in eta_list}
        refined_info = None

    pairs = [(p, dist[p]) for p in eta_list]
    converged = [conv[p] for p in eta_list]
    fit_pairs = [(p, d) for p, d in pairs
                 if conv[p] and not any(np.isclose(p, x)
                                        for x in FIT_EXCLUDED_ETAS)]
    if len(fit_pairs) < 3:
        raise AnalysisError("fewer than 3 converged asymptotic points; "
                            "refine the mesh or extend the eta list")

    name = f"contrast-{direction}-{shape}-a{a:g}"
    if omega != 0.0:
        name += f"-omega{omega:g}"
    info = _mesh_info(mesh, order)
    if refined_info is not None:
        info["refined"] = refined_info
    extras = {"direction": direction, "shape": shape, "a": a,
              "slope_target": 1.0 if direction == "soft" else -1.0,
              "omega": omega,
              "point_seconds": {repr(p): point_times[p] for p in eta_list}}
    result = _finish(name, pairs, converged, fit_pairs, info, t0, extras,
                     None, "eta [-]")
    result.extras["slope_ok"] = bool(
        abs(result.slope - result.extras["slope_target"]) <= 0.1)
    if out_dir is not None:
        _emit(result, out_dir, "eta [-]")
    return result


# ---------------------------------------------------------------------------
# defect size sweep
# ---------------------------------------------------------------------------


def run_defect_size_sweep(radii=(1.0, 1e-1, 1e-2), contrast=(1e2, 1e2),
                          h=DESK_H, order=2, background=STEEL,
                          refine_check=False, refine_factor=2.0 ** 0.5,
                          out_dir=None, workers=1, min_segments=64):
    """Distance between the homogeneous and the two-phase solve as the
    defect shrinks at fixed contrast.

    The inclusion material scales the background Lame parameters by the
    contrast pair. Each radius gets its own mesh whose annulus ring
    (1, 2) makes the fixed norm region, the exterior of the unit disk,
    an exact union of mesh regions. A radius whose rim is resolved by
    fewer than 16 boundary segments is skipped with a warning.
    """
    radii = tuple(float(r) for r in radii)
    if not radii:
        raise AnalysisError("radius list must be nonempty")
    mat1 = IsotropicMaterial(contrast[0] * background.lam,
                             contrast[1] * background.mu)
    c_bg = isotropic_tensor(background)
    c_in = isotropic_tensor(mat1)
    bc = ("dirichlet", _identity_datum)

    t0 = time.perf_counter()
    pairs, converged, per_mesh = [], [], {}

    def one(radius):
        spec = GeometrySpec(outer_radius=10.0, inclusion=Disk(radius),
                            cloak=(1.0, 2.0), h=h,
                            min_segments=min_segments)
        mesh = build_mesh(spec)
        if len(mesh.boundary["inclusion"]) < 16:
            return None
        region_names = [n for n in mesh.region_names if n != "inclusion"]

        def distance_on(m):
            assignments = {name: c_bg for name in region_names}
            hom = CoefficientField(dict(assignments, inclusion=c_bg))
            two = CoefficientField(dict(assignments, inclusion=c_in))
            u_hom = solve_transmission(m, hom, bc, order)
            u_tr = solve_transmission(m, two, bc, order)
            return norm_l2_region(u_hom, u_tr, ("cloak", "background"))

        d = distance_on(mesh)
        if refine_check:
            fine = distance_on(refine(mesh, refine_factor))
            ok = abs(fine - d) <= 0.05 * abs(d)
        else:
            ok = True
        return d, ok, _mesh_info(mesh, order)

    jobs = [(r, lambda r=r: one(r)) for r in radii]
    for radius, out in _run_points(jobs, workers):
        if out is None:
            warnings.warn("defect radius %g unresolved (fewer than 16 "
                          "boundary segments); point skipped" % radius)
            continue
        d, ok, info = out
        pairs.append((radius, d))
        converged.append(ok)
        per_mesh[repr(radius)] = info

    fit_pairs = [(p, d) for (p, d), ok in zip(pairs, converged) if ok]
    if len(fit_pairs) < 3:
        raise AnalysisError("fewer than 3 usable radii for the slope fit")
    extras = {"contrast": list(contrast), "slope_target": 1.0,
              "skipped": [r for r in radii
                          if r not in [p for p, _ in pairs]]}
    info = {"order": order, "per_radius": per_mesh}
    result = _finish("defect-size", pairs, converged, fit_pairs, info, t0,
                     extras, None, "radius [m]")
    result.extras["slope_ok"] = bool(abs(result.slope - 1.0) <= 0.15)
    if out_dir is not None:
        _emit(result, out_dir, "radius [m]")
    return result


# ---------------------------------------------------------------------------
# near-cloak sweep
# ---------------------------------------------------------------------------

CLOAK_FAMILIES = ("cosserat", "symmetrized", "layered", "willis")


def _cloak_sources(family, epsilon, background, layers_n):
    """Coefficient sources for the annulus regions of the physical
    cloak (inner radius 2, outer radius 4), plus gauge constraints."""
    scale = 2.0

    if family == "cosserat":
        def fn(p):
            return cosserat_tensor_at(epsilon, background, p / scale)
        return {"cloak": pointwise_source(fn)}, None
    if family == "symmetrized":
        def fn(p):
            return symmetrized_tensor_at(epsilon, background, p / scale)
        return {"cloak": pointwise_source(fn)}, None
    if family == "willis":
        def fn(p):
            w = willis_tensors_at(epsilon, background, p / scale)
            return WillisPointTensors(w.c4, w.d3 / scale, w.s3 / scale,
                                      w.b2 / scale ** 2)
        return ({"cloak": pointwise_source(fn, willis=True)},
                cloak_gauge_constraints(epsilon))
    if family == "layered":
        cloak = build_layered_cloak(layers_n, epsilon, background)
        sources = {f"layer_{j}": isotropic_tensor(ring.material)
                   for j, ring in enumerate(cloak.layers)}
        return sources, None
    raise AnalysisError(f"unknown cloak family {family!r}")


def _layer_radii(layers_n, scale=2.0):
    edges = np.linspace(1.0, 2.0, layers_n + 1)[1:-1]
    return tuple(scale * r for r in edges)


def run_nearcloak_sweep(family="cosserat", epsilons=(0.4, 0.3, 0.2, 0.1),
                        background=STEEL, inclusion=None, h=DESK_H, order=2,
                        layers_n=20, out_dir=None, assert_monotone=True,
                        workers=1):
    """Boundary-trace distance between the cloaked solve and the
    homogeneous solve, for shrinking regularization width.

    The physical geometry is a radius-2 inclusion wrapped in the
    annulus (2, 4) inside the radius-10 disk, loaded by a constant
    outward normal traction 2(lam0 + mu0)/10 so the homogeneous
    displacement is r/10 radially. The cloak coefficient is the unit
    construction evaluated at half the physical point; first-order
    couplings pick up the corresponding length scaling. The bare-defect
    distance (no cloak) is recorded for reference. Distances must
    decrease strictly with epsilon; a violation raises after emission.
    """
    if family not in CLOAK_FAMILIES:
        raise AnalysisError(f"unknown cloak family {family!r}")
    epsilons = tuple(float(e) for e in epsilons)
    if not epsilons:
        raise AnalysisError("epsilon list must be nonempty")
    if inclusion is None:
        inclusion = background.scaled(1e5)

    t0 = time.perf_counter()
    layer_radii = _layer_radii(layers_n) if family == "layered" else None
    spec = GeometrySpec(outer_radius=10.0, inclusion=Disk(2.0),
                        cloak=(2.0, 4.0), layer_radii=layer_radii, h=h)
    mesh = build_mesh(spec)
    traction = radial_traction(2.0 * (background.lam + background.mu) / 10.0)
    c_bg = isotropic_tensor(background)
    c_in = isotropic_tensor(inclusion)
    annulus = ([f"layer_{j}" for j in range(layers_n)]
               if family == "layered" else ["cloak"])

    hom_sources = {"inclusion": c_bg, "background": c_bg}
    hom_sources.update({name: c_bg for name in annulus})
    u_hom = solve_neumann(mesh, CoefficientField(hom_sources), traction,
                          order)

    def one(eps):
        start = time.perf_counter()
        cloak_sources, gauges = _cloak_sources(family, eps, background,
                                               layers_n)
        sources = {"inclusion": c_in, "background": c_bg}
        sources.update(cloak_sources)
        coeff = CoefficientField(sources)
        bc = ("neumann", traction)
        if gauges is not None:
            u = solve_willis(mesh, coeff, bc, order, gauges=gauges)
        else:
            u = solve_transmission(mesh, coeff, bc, order)
        d = norm_l2_boundary(u, u_hom, "outer")
        return d, time.perf_counter() - start

    jobs = [(e, lambda e=e: one(e)) for e in epsilons]
    results = _run_points(jobs, workers)
    dist = {e: d for e, (d, _) in results}
    point_times = {e: t for e, (_, t) in results}

    bare_spec = GeometrySpec(outer_radius=10.0, inclusion=Disk(2.0), h=h)
    bare_mesh = build_mesh(bare_spec)
    hom_bare = solve_neumann(
        bare_mesh, CoefficientField({"inclusion": c_bg,
                                     "background": c_bg}), traction, order)
    u_bare = solve_neumann(
        bare_mesh, CoefficientField({"inclusion": c_in,
                                     "background": c_bg}), traction, order)
    bare_distance = norm_l2_boundary(u_bare, hom_bare, "outer")

    pairs = [(e, dist[e]) for e in epsilons]
    converged = [True] * len(pairs)
    by_eps = sorted(pairs)
    monotone = all(d1 < d2 for (_, d1), (_, d2) in zip(by_eps, by_eps[1:]))
    extras = {"family": family, "bare_distance": bare_distance,
              "monotone": monotone,
              "suppression": {repr(e): bare_distance / dist[e]
                              for e in epsilons},
              "point_seconds": {repr(e): point_times[e] for e in epsilons}}
    if family == "layered":
        extras["layers_n"] = layers_n
    info = _mesh_info(mesh, order)
    result = _finish(f"nearcloak-{family}", pairs, converged, pairs, info,
                     t0, extras, out_dir, "epsilon [-]", strict_fit=False)
    if assert_monotone and not monotone:
        raise AnalysisError("cloaking distance failed to decrease with "
                            "epsilon: %r" % (result.pairs,))
    return result


# ---------------------------------------------------------------------------
# layered-vs-symmetrized comparison
# ---------------------------------------------------------------------------


def run_layered_comparison(n_list=(10, 20, 40), epsilon=0.2,
                           background=STEEL, inclusion=None, h=DESK_H,
                           order=2, out_dir=None, assert_monotone=True):
    """Boundary distance between the layered cloak and the smooth
    symmetrized cloak it approximates, for increasing layer count.

    Both solves share one mesh per layer count; the symmetrized
    coefficient is evaluated pointwise across the layer rings. The
    distance must decrease strictly with the number of layers; a
    violation raises after emission.
    """
    n_list = tuple(int(n) for n in n_list)
    if not n_list:
        raise AnalysisError("layer-count list must be nonempty")
    if inclusion is None:
        inclusion = background.scaled(1e5)

    t0 = time.perf_counter()
    traction = radial_traction(2.0 * (background.lam + background.mu) / 10.0)
    c_bg = isotropic_tensor(background)
    c_in = isotropic_tensor(inclusion)

    def sym_fn(p):
        return symmetrized_tensor_at(epsilon, background, p / 2.0)

    pairs, per_mesh = [], {}
    worst_residual = 0.0
    for n in n_list:
        cloak = build_layered_cloak(n, epsilon, background)
        worst_residual = max(worst_residual, max(cloak.pair_residuals))
        spec = GeometrySpec(outer_radius=10.0, inclusion=Disk(2.0),
                            cloak=(2.0, 4.0), layer_radii=_layer_radii(n),
                            h=h)
        mesh = build_mesh(spec)
        ring_names = [f"layer_{j}" for j in range(n)]
        base = {"inclusion": c_in, "background": c_bg}
        lay = dict(base)
        lay.update({name: isotropic_tensor(ring.material)
                    for name, ring in zip(ring_names, cloak.layers)})
        sym = dict(base)
        sym.update({name: pointwise_source(sym_fn) for name in ring_names})
        bc = ("neumann", traction)
        u_lay = solve_transmission(mesh, CoefficientField(lay), bc, order)
        u_sym = solve_transmission(mesh, CoefficientField(sym), bc, order)
        pairs.append((float(n), norm_l2_boundary(u_lay, u_sym, "outer")))
        per_mesh[str(n)] = _mesh_info(mesh, order)

    converged = [True] * len(pairs)
    by_n = sorted(pairs)
    monotone = all(d1 > d2 for (_, d1), (_, d2) in zip(by_n, by_n[1:]))
    extras = {"epsilon": epsilon, "monotone": monotone,
              "max_pair_residual": worst_residual}
    info = {"order": order, "per_n": per_mesh}
    result = _finish("layered-compare", pairs, converged, pairs, info, t0,
                     extras, out_dir, "layers [-]", strict_fit=False)
    if assert_monotone and not monotone:
        raise AnalysisError("layered-to-symmetrized distance failed to "
                            "decrease with layer count: %r" % (result.pairs,))
    return result


# ---------------------------------------------------------------------------
# manufactured convergence study
# ---------------------------------------------------------------------------


def _manufactured_exact(pts):
    return np.stack([np.sin(pts[:, 0]) * np.sin(pts[:, 1]),
                     np.cos(pts[:, 0]) * np.cos(pts[:, 1])], axis=1)


def _manufactured_grad(pts):
    g = np.empty((len(pts), 2, 2))
    g[:, 0, 0] = np.cos(pts[:, 0]) * np.sin(pts[:, 1])
    g[:, 1, 0] = np.sin(pts[:, 0]) * np.cos(pts[:, 1])
    g[:, 0, 1] = -np.sin(pts[:, 0]) * np.cos(pts[:, 1])
    g[:, 1, 1] = -np.cos(pts[:, 0]) * np.sin(pts[:, 1])
    return g


def run_convergence_study(hs=(1.0, 0.5, 0.25), orders=(1, 2), out_dir=None):
    """Error ladder for a smooth manufactured displacement on the disk.

    The pure-shear material (lam = 0, mu = 1) makes the body force of
    the trigonometric field proportional to the field itself. Returns
    per-order L2/H1 errors and fitted rates; the expected rates are
    p + 1 and p for elements of order p.
    """
    hs = tuple(float(h) for h in hs)
    if len(hs) < 2:
        raise AnalysisError("rate fit needs at least two mesh sizes")
    coeff = CoefficientField(
        {"background": isotropic_tensor(IsotropicMaterial(0.0, 1.0))})

    def body(pts):
        return 2.0 * _manufactured_exact(pts)

    report, rows = {}, []
    for order in orders:
        l2, h1 = [], []
        for h in hs:
            mesh = build_mesh(GeometrySpec(h=h))
            u = solve_dirichlet(mesh, coeff, _manufactured_exact, order=order,
                                body_force=body)
            space = u.space
            _, det, _ = space.geometry()
            xq = space.quadrature_points().reshape(-1, 2)
            shapes = shape_values(order, TRI_POINTS)
            uq = np.einsum("qa,nac->nqc", shapes, u.element_values())
            diff = uq - _manufactured_exact(xq).reshape(uq.shape)
            wq = TRI_WEIGHTS[None, :] * det[:, None]
            l2.append(float(np.sqrt((wq[..., None] * diff ** 2).sum())))
            gdiff = field_gradients(u) - _manufactured_grad(xq).reshape(
                len(det), -1, 2, 2)
            h1.append(float(np.sqrt(
                (wq[..., None, None] * gdiff ** 2).sum())))
        lrate = float(np.polyfit(np.log(hs), np.log(l2), 1)[0])
        hrate = float(np.polyfit(np.log(hs), np.log(h1), 1)[0])
        report[order] = {"h": list(hs), "l2": l2, "h1": h1,
                         "l2_rate": lrate, "h1_rate": hrate}
        rows.extend((order, h, e2, e1)
                    for h, e2, e1 in zip(hs, l2, h1))
    if out_dir is not None:
        output.ensure_dir(out_dir)
        output.write_csv(os.path.join(out_dir, "convergence.csv"),
                         ["order [-]", "h [m]", "l2_error [m]",
                          "h1_error [-]"], rows)
        output.write_json(os.path.join(out_dir, "convergence_summary.json"),
                          {"orders": {str(k): v for k, v in report.items()}})
    return report
