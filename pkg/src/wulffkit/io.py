"""File formats: JSON specs and reports, grid-values files and OBJ meshes.

Grid-values file (plain text)::

    # any number of comment lines
    n 48
    charts +x -x +y -y +z -z
    <6 * n lines of n values>

Values are listed chart by chart in the order of the ``charts`` line, each
chart row-major (first index along the chart's ``e1`` axis).
"""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .anisotropy import AnisotropyDensity
from .errors import ConfigurationError
from .sphere import FACE_NAMES, ScalarField, build_grid, support_points

SCHEMA_VERSION = "1.0"
WELD_RADIUS = 1e-9


# ---------------------------------------------------------------------------
# JSON


def load_json_arg(value):
    """Parse an inline JSON string or read a JSON file."""
    text = value.strip()
    if text.startswith("{") or text.startswith("["):
        try:
            return json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"invalid inline JSON: {exc}") from exc
    path = Path(value)
    if not path.is_file():
        raise ConfigurationError(f"file not found: {value}")
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{value}: invalid JSON: {exc}") from exc


def load_density(value):
    return AnisotropyDensity.from_spec(load_json_arg(value))


def load_surface(value, gamma, grid):
    """Support function from ``wulff:R``, a grid-values file or a JSON spec.

    JSON specs read ``{"support": <density spec>, "scale": r, "translate": [a, b, c]}``
    and describe ``q = r * f + a . nu`` for the density-style function ``f``.
    """
    if value.startswith("wulff:"):
        try:
            r = float(value.split(":", 1)[1])
        except ValueError as exc:
            raise ConfigurationError(f"bad Wulff radius in {value!r}") from exc
        if r <= 0:
            raise ConfigurationError("Wulff radius must be positive")
        return gamma.field(grid) * r
    path = Path(value)
    if path.is_file() and not path.read_text()[:1].strip().startswith("{"):
        q = read_grid_values(path)
        if q.grid.n != grid.n:
            raise ConfigurationError(f"grid-values file has n={q.grid.n}, expected {grid.n}")
        return ScalarField(grid, q.values)
    spec = load_json_arg(value)
    if "support" not in spec:
        raise ConfigurationError("surface spec needs a 'support' entry")
    f = AnisotropyDensity.from_spec(spec["support"])
    q = f.field(grid) * float(spec.get("scale", 1.0))
    if "translate" in spec:
        q = q + ScalarField.linear(grid, np.asarray(spec["translate"], dtype=float))
    return q


def dumps_report(doc):
    """Canonical serialization: sorted keys, shortest round-trip floats."""
    return json.dumps(doc, sort_keys=True, indent=2, allow_nan=False) + "\n"


def loads_report(text):
    return json.loads(text)


def report_schema():
    return json.loads(resources.files("wulffkit").joinpath("schemas/report.schema.json").read_text())


def validate_report(doc):
    jsonschema.validate(doc, report_schema())


def make_report(command, inputs, payload, seconds):
    return {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "inputs": inputs,
        "payload": payload,
        "timing": {"seconds": float(seconds)},
    }


def write_report(path, doc):
    Path(path).write_text(dumps_report(doc))


# ---------------------------------------------------------------------------
# grid-values files


def write_grid_values(path, field):
    grid = field.grid
    lines = ["# wulffkit grid values", f"n {grid.n}", "charts " + " ".join(FACE_NAMES)]
    for face in field.values:
        for row in face:
            lines.append(" ".join(repr(float(v)) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def read_grid_values(path):
    n = charts = None
    rows = []
    for raw in Path(path).read_text().splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("n "):
            n = int(line.split()[1])
        elif line.startswith("charts"):
            charts = line.split()[1:]
        else:
            rows.append([float(v) for v in line.split()])
    if n is None or charts is None:
        raise ConfigurationError(f"{path}: missing 'n' or 'charts' header")
    if sorted(charts) != sorted(FACE_NAMES):
        raise ConfigurationError(f"{path}: charts must be a permutation of {FACE_NAMES}")
    values = np.asarray(rows, dtype=float)
    if values.shape != (6 * n, n):
        raise ConfigurationError(f"{path}: expected {6 * n} rows of {n} values, got {values.shape}")
    values = values.reshape(6, n, n)
    order = [charts.index(name) for name in FACE_NAMES]
    return ScalarField(build_grid(n), values[order])


# ---------------------------------------------------------------------------
# meshes


def corner_directions(grid):
    """Directions of the cell-corner lattice of every chart, (6, n+1, n+1, 3)."""
    y = -1.0 + np.arange(grid.n + 1) * grid.h
    Y1, Y2 = np.meshgrid(y, y, indexing="ij")
    return np.stack([c.to_sphere(Y1, Y2) for c in grid.charts])


def sphere_mesh(grid):
    """Welded triangulation of the cube-face lattices: (directions, triangles)."""
    dirs = corner_directions(grid)
    m = grid.n + 1
    flat = dirs.reshape(-1, 3)
    pairs = cKDTree(flat).query_pairs(WELD_RADIUS, output_type="ndarray")
    graph = sp.coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(flat.shape[0],) * 2)
    _, index = connected_components(graph, directed=False)
    keep = np.unique(index, return_index=True)[1]
    idx = index.reshape(6, m, m)
    a = idx[:, :-1, :-1]
    b = idx[:, 1:, :-1]
    c = idx[:, 1:, 1:]
    d = idx[:, :-1, 1:]
    tris = np.concatenate([np.stack([a, b, c], -1).reshape(-1, 3), np.stack([a, c, d], -1).reshape(-1, 3)])
    return flat[keep], tris


def surface_vertices(q, directions):
    """Support points ``X = Dq + q nu`` at arbitrary directions."""
    if isinstance(q, AnisotropyDensity):
        return q.wulff_point(directions)
    if q.analytic is not None:
        return q.analytic.gradient(directions)
    X = support_points(q, exact=False)
    return q.grid.interpolate(X, directions)


def write_obj(path, vertices, triangles, comment=None):
    lines = []
    if comment:
        lines.append(f"# {comment}")
    lines += [f"v {x!r} {y!r} {z!r}" for x, y, z in np.asarray(vertices, dtype=float).tolist()]
    lines += [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in np.asarray(triangles).tolist()]
    Path(path).write_text("\n".join(lines) + "\n")


def read_obj(path):
    verts, tris = [], []
    for line in Path(path).read_text().splitlines():
        if line.startswith("v "):
            verts.append([float(v) for v in line.split()[1:4]])
        elif line.startswith("f "):
            tris.append([int(v.split("/")[0]) - 1 for v in line.split()[1:4]])
    return np.asarray(verts), np.asarray(tris, dtype=int)


def edge_counts(triangles):
    """Multiplicity of every undirected edge."""
    t = np.asarray(triangles)
    e = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
    e.sort(axis=1)
    _, counts = np.unique(e, axis=0, return_counts=True)
    return counts


def export_surface(path, q, grid, comment=None):
    dirs, tris = sphere_mesh(grid)
    write_obj(path, surface_vertices(q, dirs), tris, comment)
    return dirs.shape[0], tris.shape[0]
