"""Conforming triangulations of a disk with nested inclusions and rings.

Every boundary handled here is a closed convex curve centered at the
origin: the outer circle, an optional inclusion boundary (disk, ellipse,
or rectangle), optional cloak annulus circles, and optional layer
circles subdividing the annulus. The mesh is built band by band from
the center outward. Each pair of consecutive interfaces is filled with
intermediate closed curves that morph between the two shapes, resampled
to a graded spacing target, and consecutive curves are stitched by an
angular merge into positively oriented triangles. Region tags are
assigned per band during construction, and interface polygon edges
appear verbatim in the triangulation, so conformity holds by
construction rather than by edge recovery. No randomness anywhere:
identical specs produce bitwise-identical meshes.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from types import MappingProxyType

import numpy as np

TWO_PI = 2.0 * np.pi

# dense angular samples for curve tables; resolves the sharpest supported
# feature (high-aspect ellipse tips) with several samples per arc step
_DENSE = 4096
_THETA = np.linspace(0.0, TWO_PI, _DENSE, endpoint=False)

# spacing growth per unit distance away from a fine interface
_GROWTH = 0.8


class MeshError(ValueError):
    """Geometry validation or mesh construction failure."""


# ---------------------------------------------------------------------------
# inclusion shapes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Disk:
    radius: float


@dataclass(frozen=True)
class Ellipse:
    """Axis-aligned ellipse with semi-axes a (along x) and b (along y)."""

    a: float
    b: float


@dataclass(frozen=True)
class Rectangle:
    """Axis-aligned rectangle with full side lengths width by height."""

    width: float
    height: float


def shape_max_radius(shape) -> float:
    if isinstance(shape, Disk):
        return shape.radius
    if isinstance(shape, Ellipse):
        return max(shape.a, shape.b)
    if isinstance(shape, Rectangle):
        return 0.5 * np.hypot(shape.width, shape.height)
    raise MeshError(f"unknown inclusion shape {shape!r}")


def shape_area(shape) -> float:
    if isinstance(shape, Disk):
        return np.pi * shape.radius ** 2
    if isinstance(shape, Ellipse):
        return np.pi * shape.a * shape.b
    if isinstance(shape, Rectangle):
        return shape.width * shape.height
    raise MeshError(f"unknown inclusion shape {shape!r}")


def shape_contains(shape, points: np.ndarray) -> np.ndarray:
    """Strict interior test, vectorized over rows of points."""
    p = np.atleast_2d(np.asarray(points, dtype=float))
    if isinstance(shape, Disk):
        return np.hypot(p[:, 0], p[:, 1]) < shape.radius
    if isinstance(shape, Ellipse):
        return (p[:, 0] / shape.a) ** 2 + (p[:, 1] / shape.b) ** 2 < 1.0
    if isinstance(shape, Rectangle):
        return (np.abs(p[:, 0]) < 0.5 * shape.width) \
            & (np.abs(p[:, 1]) < 0.5 * shape.height)
    raise MeshError(f"unknown inclusion shape {shape!r}")


# ---------------------------------------------------------------------------
# geometry spec
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GeometrySpec:
    """Disk domain with optional nested inclusion, cloak annulus, layers.

    outer_radius: domain radius in meters.
    inclusion: centered Disk, Ellipse, Rectangle, or None.
    cloak: (r_in, r_out) annulus radii, or None.
    layer_radii: strictly increasing radii inside (r_in, r_out) that
        subdivide the annulus into layer rings; requires cloak.
    h: target mesh size in meters.
    min_segments: minimum polygonization count per interface curve.

    A disk inclusion may share its radius with r_in exactly; the merged
    circle then carries both boundary tags. Any other contact between
    interfaces is rejected.
    """

    outer_radius: float = 10.0
    inclusion: Disk | Ellipse | Rectangle | None = None
    cloak: tuple[float, float] | None = None
    layer_radii: tuple[float, ...] | None = None
    h: float = 0.25
    min_segments: int = 64

    def validate(self) -> None:
        if not (self.outer_radius > 0.0):
            raise MeshError("outer_radius must be positive")
        if not (0.0 < self.h <= self.outer_radius):
            raise MeshError("h must lie in (0, outer_radius]")
        if self.min_segments < 8:
            raise MeshError("min_segments must be at least 8")
        if self.layer_radii is not None and self.cloak is None:
            raise MeshError("layer_radii requires a cloak annulus")
        if self.inclusion is not None:
            dims = _shape_dims(self.inclusion)
            if any(not (d > 0.0) for d in dims):
                raise MeshError("inclusion dimensions must be positive")
        inc_rmax = (shape_max_radius(self.inclusion)
                    if self.inclusion is not None else 0.0)
        if self.cloak is not None:
            r_in, r_out = self.cloak
            if not (0.0 < r_in < r_out < self.outer_radius):
                raise MeshError("cloak radii must satisfy "
                                "0 < r_in < r_out < outer_radius")
            coincident = (isinstance(self.inclusion, Disk)
                          and self.inclusion.radius == r_in)
            if self.inclusion is not None and not coincident \
                    and not (inc_rmax < r_in):
                raise MeshError("inclusion must fit strictly inside the "
                                "cloak annulus")
            if self.layer_radii is not None:
                rl = np.asarray(self.layer_radii, dtype=float)
                if rl.size and (np.any(np.diff(rl) <= 0.0)
                                or rl[0] <= r_in or rl[-1] >= r_out):
                    raise MeshError("layer_radii must increase strictly "
                                    "inside (r_in, r_out)")
        elif self.inclusion is not None \
                and not (inc_rmax < self.outer_radius):
            raise MeshError("inclusion must fit strictly inside the domain")


def _shape_dims(shape):
    if isinstance(shape, Disk):
        return (shape.radius,)
    if isinstance(shape, Ellipse):
        return (shape.a, shape.b)
    if isinstance(shape, Rectangle):
        return (shape.width, shape.height)
    raise MeshError(f"unknown inclusion shape {shape!r}")


# ---------------------------------------------------------------------------
# curve tables (radius as a function of angle on the shared dense grid)
# ---------------------------------------------------------------------------

def _rho_circle(r: float) -> np.ndarray:
    return np.full(_DENSE, float(r))


def _rho_of_shape(shape) -> np.ndarray:
    if isinstance(shape, Disk):
        return _rho_circle(shape.radius)
    if isinstance(shape, Ellipse):
        c, s = np.cos(_THETA), np.sin(_THETA)
        return 1.0 / np.sqrt((c / shape.a) ** 2 + (s / shape.b) ** 2)
    if isinstance(shape, Rectangle):
        c, s = np.abs(np.cos(_THETA)), np.abs(np.sin(_THETA))
        with np.errstate(divide="ignore"):
            rx = np.where(c > 0.0, 0.5 * shape.width / c, np.inf)
            ry = np.where(s > 0.0, 0.5 * shape.height / s, np.inf)
        return np.minimum(rx, ry)
    raise MeshError(f"unknown inclusion shape {shape!r}")


def _geo_cap_of_shape(shape) -> np.ndarray | None:
    """Curvature-based spacing cap along the curve, or None when unneeded."""
    if isinstance(shape, Ellipse):
        a, b = shape.a, shape.b
        # parameter of the boundary point lying in direction theta
        t = np.arctan2(a * np.sin(_THETA), b * np.cos(_THETA))
        r_curv = (a * a * np.sin(t) ** 2
                  + b * b * np.cos(t) ** 2) ** 1.5 / (a * b)
        return 0.5 * r_curv
    return None


@dataclass
class _Interface:
    rho: np.ndarray
    names: list[str]
    shape: object | None      # Disk/Ellipse/Rectangle for the inclusion
    circle_r: float | None    # radius when the curve is a circle
    geo_cap: np.ndarray | None
    spacing: float = 0.0      # assigned scalar spacing target
    polygon: np.ndarray | None = None
    s_table: np.ndarray | None = None
    offset: int = -1          # global vertex offset of the polygon


# ---------------------------------------------------------------------------
# resampling and stitching
# ---------------------------------------------------------------------------

def _dense_polyline(rho: np.ndarray) -> np.ndarray:
    return np.column_stack([rho * np.cos(_THETA), rho * np.sin(_THETA)])


def _walk_closed(pts: np.ndarray, s_dense: np.ndarray,
                 phase_frac: float, n_min: int = 6) -> np.ndarray:
    """Resample a closed dense polyline with a variable spacing target.

    Integrates the point density 1/s along the curve and places vertices
    at equal increments of the cumulative density, so narrow stretches of
    small spacing are always resolved and the loop closes exactly.
    phase_frac shifts the start by a fraction of one increment,
    staggering consecutive rings.
    """
    d = np.diff(np.vstack([pts, pts[:1]]), axis=0)
    seg = np.hypot(d[:, 0], d[:, 1])
    arc = np.concatenate([[0.0], np.cumsum(seg)])
    inv = 1.0 / np.append(s_dense, s_dense[0])
    u = np.concatenate([[0.0], np.cumsum(0.5 * (inv[1:] + inv[:-1]) * seg)])
    big_u = float(u[-1])
    count = max(n_min, int(round(big_u)))
    targets = (phase_frac + np.arange(count)) * (big_u / count)
    pos = np.interp(targets % big_u, u, arc)
    x = np.interp(pos, arc, np.append(pts[:, 0], pts[0, 0]))
    y = np.interp(pos, arc, np.append(pts[:, 1], pts[0, 1]))
    return _normalize_start(np.column_stack([x, y]))


def _normalize_start(pts: np.ndarray) -> np.ndarray:
    """Roll a CCW point loop so it starts at the smallest angle."""
    th = np.arctan2(pts[:, 1], pts[:, 0]) % TWO_PI
    return np.roll(pts, -int(np.argmin(th)), axis=0)


def _stitch(inner: np.ndarray, off_i: int,
            outer: np.ndarray, off_o: int) -> np.ndarray:
    """Triangulate the band between two nested CCW loops by angular merge."""
    n, m = len(inner), len(outer)
    th_i = np.arctan2(inner[:, 1], inner[:, 0]) % TWO_PI
    th_o = np.arctan2(outer[:, 1], outer[:, 0]) % TWO_PI
    ev = np.concatenate([np.append(th_i[1:], th_i[0] + TWO_PI),
                         np.append(th_o[1:], th_o[0] + TWO_PI)])
    is_outer = np.concatenate([np.zeros(n, bool), np.ones(m, bool)])
    order = np.argsort(ev, kind="stable")
    src = is_outer[order]
    adv_i = (~src).astype(np.int64)
    adv_o = src.astype(np.int64)
    i_cnt = np.cumsum(adv_i) - adv_i
    j_cnt = np.cumsum(adv_o) - adv_o
    tri_inner = np.column_stack([off_i + i_cnt,
                                 off_o + j_cnt % m,
                                 off_i + (i_cnt + 1) % n])
    tri_outer = np.column_stack([off_i + i_cnt % n,
                                 off_o + j_cnt % m,
                                 off_o + (j_cnt + 1) % m])
    return np.where(src[:, None], tri_outer, tri_inner)


def _fan(center: int, off: int, count: int) -> np.ndarray:
    k = np.arange(count)
    return np.column_stack([np.full(count, center), off + k,
                            off + (k + 1) % count])


def _band_curves(rho_in, s_in, rho_out, s_out, h_band):
    """Intermediate morph curves between two polygonized interfaces."""
    g = rho_out - rho_in
    big_g = float(g.max())
    s_lo = min(float(s_in.min()), h_band)
    s_hi = min(float(s_out.min()), h_band)
    dth = TWO_PI / _DENSE

    # obliquity of the inner interface: where the curve runs nearly
    # radial (flat ellipse flanks) the normal clearance of a morph row
    # is much smaller than its radial offset, so the first row stands
    # off far enough that normal clearance stays a decent fraction of
    # the local interface spacing
    rp_in = (np.roll(rho_in, -1) - np.roll(rho_in, 1)) / (2.0 * dth)
    cosb_in = rho_in / np.hypot(rho_in, rp_in)
    phi_min = float(np.max(s_in * big_g / (3.0 * g * cosb_in)))
    phi_min = min(phi_min, 0.35 * big_g)

    phi = np.linspace(0.0, big_g, 1025)
    sig = np.minimum(h_band, np.minimum(s_lo + _GROWTH * phi,
                                        s_hi + _GROWTH * (big_g - phi)))
    dens = 1.0 / sig
    dens[phi < phi_min] = 0.0
    cum = np.concatenate([[0.0], np.cumsum(
        0.5 * (dens[1:] + dens[:-1]) * np.diff(phi))])
    count = int(np.ceil(cum[-1]))
    if count <= 1:
        return []
    targets = cum[-1] * np.arange(1, count) / count
    phis = np.interp(targets, cum, phi)
    ws = phis / big_g
    w_all = np.concatenate([[0.0], ws, [1.0]])
    curves = []
    for j, w in enumerate(ws):
        rho_w = (1.0 - w) * rho_in + w * rho_out
        s_w = np.minimum(h_band,
                         np.minimum(s_in + _GROWTH * w * g,
                                    s_out + _GROWTH * (1.0 - w) * g))
        # normal clearance to the nearest neighbor row drives two caps:
        # a chord-sag cap so a row polyline cannot dip across its tight
        # neighbor near high-curvature stretches, and a quality cap
        # keeping sliver circumradii of order h_band
        dw = min(w_all[j + 1] - w_all[j], w_all[j + 2] - w_all[j + 1])
        rp = (np.roll(rho_w, -1) - np.roll(rho_w, 1)) / (2.0 * dth)
        rpp = (np.roll(rho_w, -1) - 2.0 * rho_w
               + np.roll(rho_w, 1)) / dth ** 2
        kap = np.maximum((rho_w ** 2 + 2.0 * rp ** 2 - rho_w * rpp)
                         / (rho_w ** 2 + rp ** 2) ** 1.5, 1e-12)
        d_n = dw * g * rho_w / np.hypot(rho_w, rp)
        s_w = np.minimum(s_w, 1.8 * np.sqrt(d_n / kap))
        s_w = np.minimum(s_w, np.sqrt(8.0 * h_band * d_n))
        curves.append(_walk_closed(_dense_polyline(rho_w), s_w,
                                   0.5 * (j % 2)))
    return curves


def _interior_curves(iface: _Interface, h: float) -> list[np.ndarray]:
    """Curves filling the interior of a polygonized interface, innermost
    first. Circles get freshly walked staggered rings; other shapes get
    exact scaled copies of the boundary polygon, whose radial ladders are
    positively oriented for any star-shaped polygon."""
    if iface.circle_r is not None:
        rho, s_table = iface.rho, iface.s_table
        r = iface.circle_r
        s_bnd = float(s_table.min())
        ts = []
        t = 1.0
        while True:
            s_t = min(h, s_bnd + _GROWTH * (1.0 - t) * r)
            t_next = t - s_t / r
            if t_next * r < 1.7 * s_t:
                break
            ts.append(t_next)
            t = t_next
        curves = []
        for j, tj in enumerate(reversed(ts)):
            s_t = min(h, s_bnd + _GROWTH * (1.0 - tj) * r)
            curves.append(_walk_closed(_dense_polyline(tj * rho),
                                       np.full(_DENSE, s_t), 0.5 * (j % 2)))
        return curves
    r_max = float(iface.rho.max())
    t0 = min(0.6, 2.0 * h / r_max)
    n_lev = max(1, int(np.round((1.0 - t0) * r_max / h)))
    levels = np.linspace(t0, 1.0, n_lev + 1)[:-1]
    return [t * iface.polygon for t in levels]


def _flip_to_delaunay(verts: np.ndarray, tris: np.ndarray,
                      regions: np.ndarray, protected: np.ndarray,
                      max_sweeps: int = 60) -> np.ndarray:
    """Lawson edge flips toward a constrained Delaunay triangulation.

    Only edges interior to a region are flipped; tagged interface and
    boundary edges stay put. Deterministic: candidates are processed in
    edge-table order. Mutates and returns tris.
    """
    n_verts = len(verts)
    prot = np.sort(protected, axis=1)
    prot_enc = np.unique(prot[:, 0].astype(np.int64) * n_verts
                         + prot[:, 1])
    m = len(tris)
    for _ in range(max_sweeps):
        e = np.concatenate([tris[:, [0, 1]], tris[:, [1, 2]],
                            tris[:, [2, 0]]])
        tid = np.tile(np.arange(m), 3)
        slot = np.repeat(np.arange(3), m)
        key = np.sort(e, axis=1)
        order = np.lexsort((key[:, 1], key[:, 0]))
        ks = key[order]
        same = np.all(ks[1:] == ks[:-1], axis=1)
        first = np.nonzero(same)[0]
        r1, r2 = order[first], order[first + 1]
        ta, tb = tid[r1], tid[r2]
        enc = ks[first, 0].astype(np.int64) * n_verts + ks[first, 1]
        cand = (regions[ta] == regions[tb]) \
            & ~np.isin(enc, prot_enc, assume_unique=False)
        pa = tris[ta, (slot[r1] + 2) % 3]
        qb = tris[tb, (slot[r2] + 2) % 3]
        u = verts[e[r1, 0]]
        v = verts[e[r1, 1]]
        p = verts[pa]
        q = verts[qb]
        au, av, ap = u - q, v - q, p - q
        det = (au[:, 0] * (av[:, 1] * (ap ** 2).sum(1)
                           - ap[:, 1] * (av ** 2).sum(1))
               - au[:, 1] * (av[:, 0] * (ap ** 2).sum(1)
                             - ap[:, 0] * (av ** 2).sum(1))
               + (au ** 2).sum(1) * (av[:, 0] * ap[:, 1]
                                     - av[:, 1] * ap[:, 0]))
        msl = ((au ** 2).sum(1) + (av ** 2).sum(1) + (ap ** 2).sum(1)) / 3.0
        cand &= det > 1e-12 * msl ** 2
        idxs = np.nonzero(cand)[0]
        if idxs.size == 0:
            break
        used = np.zeros(m, dtype=bool)
        flipped = False
        for i in idxs:
            a, b = ta[i], tb[i]
            if used[a] or used[b]:
                continue
            used[a] = used[b] = True
            uu, vv = e[r1[i]]
            tris[a] = (uu, qb[i], pa[i])
            tris[b] = (qb[i], vv, pa[i])
            flipped = True
        if not flipped:
            break
    return tris


# ---------------------------------------------------------------------------
# interface polygonization
# ---------------------------------------------------------------------------

def _polygonize(iface: _Interface, min_seg: int) -> None:
    s = iface.spacing
    if iface.circle_r is not None:
        r = iface.circle_r
        n = max(min_seg, int(np.ceil(TWO_PI * r / s)))
        th = TWO_PI * np.arange(n) / n
        iface.polygon = np.column_stack([r * np.cos(th), r * np.sin(th)])
        iface.s_table = np.full(_DENSE, TWO_PI * r / n)
    elif isinstance(iface.shape, Rectangle):
        iface.polygon = _polygon_rectangle(iface.shape, s, min_seg)
        seg = np.diff(np.vstack([iface.polygon, iface.polygon[:1]]), axis=0)
        iface.s_table = _spacing_table(iface.polygon, seg)
    else:
        s_tab = np.full(_DENSE, s)
        if iface.geo_cap is not None:
            s_tab = np.minimum(s_tab, iface.geo_cap)
        pts = _walk_closed(_dense_polyline(iface.rho), s_tab, 0.0,
                           n_min=min_seg)
        iface.polygon = pts
        seg = np.diff(np.vstack([pts, pts[:1]]), axis=0)
        iface.s_table = _spacing_table(pts, seg)


def _spacing_table(pts: np.ndarray, seg: np.ndarray) -> np.ndarray:
    """Local polygon edge length as a dense function of angle."""
    mid = 0.5 * (pts + np.vstack([pts[1:], pts[:1]]))
    th_mid = np.arctan2(mid[:, 1], mid[:, 0]) % TWO_PI
    lengths = np.hypot(seg[:, 0], seg[:, 1])
    order = np.argsort(th_mid, kind="stable")
    return np.interp(_THETA, th_mid[order], lengths[order], period=TWO_PI)


def _polygon_rectangle(shape: Rectangle, s: float,
                       min_seg: int) -> np.ndarray:
    w, hh = shape.width, shape.height
    corners = np.array([[0.5 * w, -0.5 * hh], [0.5 * w, 0.5 * hh],
                        [-0.5 * w, 0.5 * hh], [-0.5 * w, -0.5 * hh]])
    sides = [hh, w, hh, w]
    counts = [max(1, int(np.ceil(side / s))) for side in sides]
    if sum(counts) < min_seg:
        f = min_seg / sum(counts)
        counts = [max(1, int(np.ceil(c * f))) for c in counts]
    pts = []
    for k in range(4):
        a, b = corners[k], corners[(k + 1) % 4]
        frac = np.arange(counts[k]) / counts[k]
        pts.append(a + frac[:, None] * (b - a))
    return _normalize_start(np.vstack(pts))


# ---------------------------------------------------------------------------
# mesh container
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Mesh:
    """Immutable conforming triangle mesh with region and boundary tags.

    vertices: (n, 2) float64 coordinates.
    triangles: (m, 3) int32 vertex ids, positively oriented.
    regions: (m,) int32 codes indexing region_names.
    region_names: tuple of region tag strings.
    boundary: mapping of tag name to (k, 2) int32 edge list, each loop
        ordered counterclockwise (domain on the left of each edge for
        the outer boundary).
    spec: the originating GeometrySpec, or None for imported meshes.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    regions: np.ndarray
    region_names: tuple[str, ...]
    boundary: MappingProxyType
    spec: GeometrySpec | None = None

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    def region_code(self, name: str) -> int:
        try:
            return self.region_names.index(name)
        except ValueError:
            raise MeshError(f"unknown region {name!r}") from None

    def triangles_in(self, name: str) -> np.ndarray:
        return np.nonzero(self.regions == self.region_code(name))[0]

    def areas(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        u = p[:, 1] - p[:, 0]
        v = p[:, 2] - p[:, 0]
        return 0.5 * (u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0])

    def circumradii(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        a = np.linalg.norm(p[:, 1] - p[:, 0], axis=1)
        b = np.linalg.norm(p[:, 2] - p[:, 1], axis=1)
        c = np.linalg.norm(p[:, 0] - p[:, 2], axis=1)
        return a * b * c / (4.0 * np.abs(self.areas()))


def _freeze(mesh: Mesh) -> Mesh:
    mesh.vertices.flags.writeable = False
    mesh.triangles.flags.writeable = False
    mesh.regions.flags.writeable = False
    for edges in mesh.boundary.values():
        edges.flags.writeable = False
    return mesh


# ---------------------------------------------------------------------------
# build
# ---------------------------------------------------------------------------

def build_mesh(spec: GeometrySpec) -> Mesh:
    """Triangulate the domain described by spec. Deterministic."""
    spec.validate()
    ifaces, gap_regions, center_region = _plan_interfaces(spec)
    _assign_spacings(ifaces, spec.h)
    for iface in ifaces:
        _polygonize(iface, spec.min_segments)

    verts: list[np.ndarray] = [np.zeros((1, 2))]
    tris: list[np.ndarray] = []
    codes: list[np.ndarray] = []
    region_names: list[str] = []
    n_total = 1

    def add_points(p: np.ndarray) -> int:
        nonlocal n_total
        verts.append(p)
        off = n_total
        n_total += len(p)
        return off

    def code_of(name: str) -> int:
        if name not in region_names:
            region_names.append(name)
        return region_names.index(name)

    def add_tris(t: np.ndarray, region: str) -> None:
        tris.append(t)
        codes.append(np.full(len(t), code_of(region), dtype=np.int32))

    # interior of the innermost interface: shrunken copies plus center fan
    inner0 = ifaces[0]
    copies = _interior_curves(inner0, spec.h)
    prev_pts, prev_off = None, -1
    for c in copies:
        off = add_points(c)
        if prev_pts is None:
            add_tris(_fan(0, off, len(c)), center_region)
        else:
            add_tris(_stitch(prev_pts, prev_off, c, off), center_region)
        prev_pts, prev_off = c, off
    off0 = add_points(inner0.polygon)
    inner0.offset = off0
    if prev_pts is None:
        add_tris(_fan(0, off0, len(inner0.polygon)), center_region)
    else:
        add_tris(_stitch(prev_pts, prev_off, inner0.polygon, off0),
                 center_region)

    # bands between consecutive interfaces
    for k in range(len(ifaces) - 1):
        lo, hi = ifaces[k], ifaces[k + 1]
        region = gap_regions[k]
        h_band = min(spec.h, 2.5 * float((hi.rho - lo.rho).max()))
        mids = _band_curves(lo.rho, lo.s_table, hi.rho, hi.s_table, h_band)
        prev_pts, prev_off = lo.polygon, lo.offset
        for c in mids:
            off = add_points(c)
            add_tris(_stitch(prev_pts, prev_off, c, off), region)
            prev_pts, prev_off = c, off
        off = add_points(hi.polygon)
        hi.offset = off
        add_tris(_stitch(prev_pts, prev_off, hi.polygon, off), region)

    boundary = {}
    for iface in ifaces:
        n = len(iface.polygon)
        k = np.arange(n)
        edges = np.column_stack([iface.offset + k,
                                 iface.offset + (k + 1) % n]).astype(np.int32)
        for name in iface.names:
            boundary[name] = edges

    vertices = np.ascontiguousarray(np.vstack(verts))
    triangles = np.ascontiguousarray(np.vstack(tris).astype(np.int32))
    region_codes = np.concatenate(codes)
    protected = np.vstack([e for e in boundary.values()])
    triangles = _flip_to_delaunay(vertices, triangles, region_codes,
                                  protected)
    mesh = Mesh(vertices=vertices, triangles=triangles,
                regions=region_codes,
                region_names=tuple(region_names),
                boundary=MappingProxyType(boundary),
                spec=spec)
    validate_mesh(mesh)
    return _freeze(mesh)


def _plan_interfaces(spec: GeometrySpec):
    """Interfaces inside-out, the region between each pair, center region."""
    ifaces: list[_Interface] = []
    gap_regions: list[str] = []

    coincident = (spec.inclusion is not None and spec.cloak is not None
                  and isinstance(spec.inclusion, Disk)
                  and spec.inclusion.radius == spec.cloak[0])

    if spec.inclusion is not None:
        circ = spec.inclusion.radius if isinstance(spec.inclusion, Disk) \
            else None
        names = ["inclusion", "cloak_inner"] if coincident else ["inclusion"]
        ifaces.append(_Interface(rho=_rho_of_shape(spec.inclusion),
                                 names=names, shape=spec.inclusion,
                                 circle_r=circ,
                                 geo_cap=_geo_cap_of_shape(spec.inclusion)))
        center_region = "inclusion"
    else:
        center_region = "interior" if spec.cloak is not None else "background"

    if spec.cloak is not None:
        r_in, r_out = spec.cloak
        if not coincident:
            if spec.inclusion is not None:
                gap_regions.append("interior")
            ifaces.append(_Interface(rho=_rho_circle(r_in),
                                     names=["cloak_inner"], shape=None,
                                     circle_r=r_in, geo_cap=None))
        radii = list(spec.layer_radii or ())
        ring_names = ([f"layer_{j}" for j in range(len(radii) + 1)]
                      if radii else ["cloak"])
        for j, r in enumerate(radii):
            gap_regions.append(ring_names[j])
            ifaces.append(_Interface(rho=_rho_circle(r),
                                     names=[f"layer_interface_{j + 1}"],
                                     shape=None, circle_r=r, geo_cap=None))
        gap_regions.append(ring_names[-1])
        ifaces.append(_Interface(rho=_rho_circle(r_out),
                                 names=["cloak_outer"], shape=None,
                                 circle_r=r_out, geo_cap=None))
        gap_regions.append("background")
    elif spec.inclusion is not None:
        gap_regions.append("background")

    ifaces.append(_Interface(rho=_rho_circle(spec.outer_radius),
                             names=["outer"], shape=None,
                             circle_r=spec.outer_radius, geo_cap=None))
    return ifaces, gap_regions, center_region


def _assign_spacings(ifaces: list[_Interface], h: float) -> None:
    """Scalar spacing target per interface from the adjacent band gaps."""
    caps = []
    for k in range(len(ifaces) - 1):
        gap = float((ifaces[k + 1].rho - ifaces[k].rho).max())
        if gap <= 0.0:
            raise MeshError("interfaces are not strictly nested")
        caps.append(min(h, 2.5 * gap))
    for k, iface in enumerate(ifaces):
        s = h
        if k > 0:
            s = min(s, caps[k - 1])
        if k < len(caps):
            s = min(s, caps[k])
        iface.spacing = s


# ---------------------------------------------------------------------------
# validation and refinement
# ---------------------------------------------------------------------------

def validate_mesh(mesh: Mesh) -> None:
    """Check orientation, degeneracy, and tag conformity. Raises MeshError."""
    areas = mesh.areas()
    if np.any(areas <= 0.0):
        raise MeshError("mesh contains non-positively oriented triangles")
    h_ref = mesh.spec.h if mesh.spec is not None else float(np.sqrt(
        2.0 * np.median(areas)))
    if areas.min() <= 1e-14 * h_ref ** 2:
        raise MeshError("mesh contains a degenerate triangle")

    edges = np.vstack([mesh.triangles[:, [0, 1]],
                       mesh.triangles[:, [1, 2]],
                       mesh.triangles[:, [2, 0]]])
    tri_ids = np.tile(np.arange(mesh.n_triangles), 3)
    key = np.sort(edges, axis=1)
    uniq, inv, counts = np.unique(key, axis=0, return_inverse=True,
                                  return_counts=True)
    inv = inv.reshape(-1)
    if counts.max() > 2:
        raise MeshError("mesh is not conforming: an edge appears in more "
                        "than two triangles")

    hull = np.sort(mesh.boundary["outer"], axis=1)
    hull_set = {tuple(e) for e in hull}
    once = {tuple(e) for e in uniq[counts == 1]}
    if once != hull_set:
        raise MeshError("outer boundary edges do not match the mesh hull")

    for name, tagged in mesh.boundary.items():
        if name == "outer":
            continue
        want = {tuple(e) for e in np.sort(tagged, axis=1)}
        rows = {tuple(e) for e in uniq[counts == 2]}
        if not want <= rows:
            raise MeshError(f"interface {name!r} has a non-interior edge")
    # interface edges must separate two distinct regions
    order = np.argsort(inv, kind="stable")
    starts = np.searchsorted(inv[order], np.arange(len(uniq)))
    interior_names = [n for n in mesh.boundary if n != "outer"]
    if interior_names:
        lookup = {tuple(e): i for i, e in enumerate(map(tuple, uniq))}
        for name in interior_names:
            for e in np.sort(mesh.boundary[name], axis=1):
                i = lookup[tuple(e)]
                t = tri_ids[order[starts[i]:starts[i] + counts[i]]]
                if mesh.regions[t[0]] == mesh.regions[t[1]]:
                    raise MeshError(
                        f"interface {name!r} does not separate regions")


def refine(mesh: Mesh, factor: float) -> Mesh:
    """Rebuild the mesh with target size h / factor."""
    if not (factor > 1.0):
        raise MeshError("refinement factor must exceed 1")
    if mesh.spec is None:
        raise MeshError("mesh has no geometry spec to rebuild from")
    return build_mesh(replace(mesh.spec, h=mesh.spec.h / factor))


# ---------------------------------------------------------------------------
# plain-text serialization
# ---------------------------------------------------------------------------

_TEXT_MAGIC = "elascloak-mesh 1"


def mesh_to_text(mesh: Mesh) -> str:
    """Serialize to the documented plain-text format (round-trips exactly)."""
    out = [_TEXT_MAGIC]
    out.append(f"vertices {mesh.n_vertices}")
    for x, y in mesh.vertices:
        out.append(f"{float(x)!r} {float(y)!r}")
    out.append(f"region_names {len(mesh.region_names)}")
    out.extend(mesh.region_names)
    out.append(f"triangles {mesh.n_triangles}")
    for (a, b, c), g in zip(mesh.triangles, mesh.regions):
        out.append(f"{a} {b} {c} {g}")
    out.append(f"boundary {len(mesh.boundary)}")
    for name, edges in mesh.boundary.items():
        out.append(f"{name} {len(edges)}")
        for a, b in edges:
            out.append(f"{a} {b}")
    return "\n".join(out) + "\n"


def mesh_from_text(text: str) -> Mesh:
    lines = text.splitlines()
    if not lines or lines[0] != _TEXT_MAGIC:
        raise MeshError("not a mesh text file")
    pos = 1

    def take() -> str:
        nonlocal pos
        pos += 1
        return lines[pos - 1]

    kind, n = take().split()
    assert kind == "vertices"
    n = int(n)
    vertices = np.array([[float(v) for v in take().split()]
                         for _ in range(n)])
    kind, k = take().split()
    assert kind == "region_names"
    region_names = tuple(take() for _ in range(int(k)))
    kind, m = take().split()
    assert kind == "triangles"
    rows = np.array([[int(v) for v in take().split()]
                     for _ in range(int(m))], dtype=np.int32)
    kind, nb = take().split()
    assert kind == "boundary"
    boundary = {}
    for _ in range(int(nb)):
        name, ne = take().rsplit(" ", 1)
        boundary[name] = np.array([[int(v) for v in take().split()]
                                   for _ in range(int(ne))], dtype=np.int32)
    mesh = Mesh(vertices=vertices, triangles=rows[:, :3],
                regions=rows[:, 3].astype(np.int32),
                region_names=region_names,
                boundary=MappingProxyType(boundary), spec=None)
    return _freeze(mesh)
