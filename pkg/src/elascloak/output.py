"""File emission: CSV tables with unit headers, JSON summaries, legacy
VTK fields, and boundary-trace exports."""

import csv
import json
import os

import numpy as np

from .elements import EDGE_POINTS, edge_trace
from .fem import strain_outputs


def write_csv(path, columns, rows):
    """CSV with a single header row; column names carry units."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _fmt(value):
    if isinstance(value, float):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return value


def write_json(path, payload):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_field_csv(path, field):
    """Vertex table (node id, position, displacement)."""
    mesh = field.space.mesh
    u = field.nodal()[:mesh.n_vertices]
    rows = [(i, mesh.vertices[i, 0], mesh.vertices[i, 1], u[i, 0], u[i, 1])
            for i in range(mesh.n_vertices)]
    write_csv(path, ["node [-]", "x [m]", "y [m]", "u1 [m]", "u2 [m]"], rows)


def write_vtk(path, field, title="displacement field"):
    """Legacy ASCII export: point displacement vectors plus per-cell
    mean-normal and shear strain scalars."""
    mesh = field.space.mesh
    u = field.nodal()[:mesh.n_vertices]
    dil, shear = strain_outputs(field)
    if dil.ndim == 2:
        dil = dil.mean(axis=1)
        shear = shear.mean(axis=1)
    lines = ["# vtk DataFile Version 3.0", title, "ASCII",
             "DATASET UNSTRUCTURED_GRID",
             f"POINTS {mesh.n_vertices} float"]
    for x, y in mesh.vertices:
        lines.append(f"{float(x)!r} {float(y)!r} 0.0")
    lines.append(f"CELLS {mesh.n_triangles} {4 * mesh.n_triangles}")
    for a, b, c in mesh.triangles:
        lines.append(f"3 {a} {b} {c}")
    lines.append(f"CELL_TYPES {mesh.n_triangles}")
    lines.extend(["5"] * mesh.n_triangles)
    lines.append(f"POINT_DATA {mesh.n_vertices}")
    lines.append("VECTORS displacement float")
    for ux, uy in u:
        lines.append(f"{float(ux)!r} {float(uy)!r} 0.0")
    lines.append(f"CELL_DATA {mesh.n_triangles}")
    lines.append("SCALARS mean_normal_strain float 1")
    lines.append("LOOKUP_TABLE default")
    lines.extend(repr(float(v)) for v in dil)
    lines.append("SCALARS shear_strain float 1")
    lines.append("LOOKUP_TABLE default")
    lines.extend(repr(float(v)) for v in shear)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def write_boundary_trace(path, field, tag="outer"):
    """CSV of (angle, displacement) at boundary quadrature points."""
    space = field.space
    mesh = space.mesh
    edges = mesh.boundary[tag]
    va = mesh.vertices[edges[:, 0]]
    vb = mesh.vertices[edges[:, 1]]
    pts = va[:, None, :] + EDGE_POINTS[None, :, None] * (vb - va)[:, None, :]
    nodal = field.nodal()
    vals = np.stack([nodal[edges[:, 0]], nodal[edges[:, 1]]], axis=1)
    if space.order == 2:
        mid = nodal[space.edge_midpoint_nodes(edges)]
        vals = np.concatenate([vals, mid[:, None, :]], axis=1)
    shapes = edge_trace(space.order, EDGE_POINTS)
    uq = np.einsum("qa,nac->nqc", shapes, vals).reshape(-1, 2)
    theta = np.arctan2(pts.reshape(-1, 2)[:, 1], pts.reshape(-1, 2)[:, 0])
    order = np.argsort(theta, kind="stable")
    rows = [(theta[i], uq[i, 0], uq[i, 1]) for i in order]
    write_csv(path, ["theta [rad]", "u1 [m]", "u2 [m]"], rows)


def ensure_dir(path):
    os.makedirs(path, exist_ok=True)
    return path
