import json

import jsonschema
import numpy as np
import pytest

from wulffkit.anisotropy import AnisotropyDensity
from wulffkit.errors import ConfigurationError
from wulffkit.io import (
    dumps_report,
    edge_counts,
    export_surface,
    load_json_arg,
    load_surface,
    loads_report,
    make_report,
    read_grid_values,
    read_obj,
    sphere_mesh,
    validate_report,
    write_grid_values,
)
from wulffkit.sphere import FACE_NAMES, ScalarField

ONE = AnisotropyDensity.constant()


def test_load_json_inline_and_file(tmp_path):
    assert load_json_arg('{"kind": "constant"}') == {"kind": "constant"}
    p = tmp_path / "g.json"
    p.write_text('{"kind": "pnorm", "p": 4}')
    assert load_json_arg(str(p))["p"] == 4


@pytest.mark.parametrize("value", ["{not json", "missing.json"])
def test_load_json_errors(value, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    with pytest.raises(ConfigurationError):
        load_json_arg(value)


def test_grid_values_round_trip(tmp_path, grid16, rng):
    q = ScalarField(grid16, rng.normal(size=grid16.shape))
    p = tmp_path / "q.grid"
    write_grid_values(p, q)
    back = read_grid_values(p)
    assert back.grid.n == 16
    assert np.array_equal(back.values, q.values)


def test_grid_values_chart_order(tmp_path, grid16, rng):
    q = ScalarField(grid16, rng.normal(size=grid16.shape))
    order = [5, 0, 3, 1, 4, 2]
    lines = ["n 16", "charts " + " ".join(FACE_NAMES[k] for k in order)]
    for k in order:
        lines += [" ".join(repr(float(v)) for v in row) for row in q.values[k]]
    p = tmp_path / "q.grid"
    p.write_text("\n".join(lines))
    assert np.array_equal(read_grid_values(p).values, q.values)


@pytest.mark.parametrize("text", [
    "charts +x -x +y -y +z -z\n1 2",
    "n 8\ncharts +x +x +y -y +z -z\n",
    "n 8\ncharts +x -x +y -y +z -z\n1 2 3",
])
def test_grid_values_errors(text, tmp_path):
    p = tmp_path / "bad.grid"
    p.write_text(text)
    with pytest.raises(ConfigurationError):
        read_grid_values(p)


def test_load_surface_variants(tmp_path, grid16, ellipsoidal):
    q = load_surface("wulff:2", ellipsoidal, grid16)
    assert np.allclose(q.values, 2 * ellipsoidal.value(grid16.directions))
    spec = '{"support": {"kind": "constant", "value": 1.5}, "scale": 2, "translate": [0.1, 0, 0]}'
    q = load_surface(spec, ellipsoidal, grid16)
    assert np.allclose(q.values, 3.0 + 0.1 * grid16.directions[..., 0])
    p = tmp_path / "s.grid"
    write_grid_values(p, q)
    assert np.array_equal(load_surface(str(p), ellipsoidal, grid16).values, q.values)
    for bad in ("wulff:-1", "wulff:x", '{"scale": 2}'):
        with pytest.raises(ConfigurationError):
            load_surface(bad, ellipsoidal, grid16)


def test_mesh_is_watertight_closed_sphere(grid16):
    dirs, tris = sphere_mesh(grid16)
    assert np.all(edge_counts(tris) == 2)
    V, E, F = dirs.shape[0], len(edge_counts(tris)), tris.shape[0]
    assert V - E + F == 2
    assert V == 6 * 16**2 + 2


def test_mesh_is_outward_oriented(grid16):
    dirs, tris = sphere_mesh(grid16)
    a, b, c = dirs[tris[:, 0]], dirs[tris[:, 1]], dirs[tris[:, 2]]
    normal = np.cross(b - a, c - a)
    assert np.all(np.einsum("ij,ij->i", normal, (a + b + c) / 3) > 0)


def test_obj_unit_sphere(tmp_path, grid16):
    p = tmp_path / "w.obj"
    export_surface(p, ONE, grid16)
    V, T = read_obj(p)
    assert np.max(np.abs(np.linalg.norm(V, axis=1) - 1)) < 1e-9
    assert np.all(edge_counts(T) == 2)


def test_obj_ellipsoid(tmp_path, grid16, ellipsoidal):
    p = tmp_path / "w.obj"
    export_surface(p, ellipsoidal, grid16)
    V, _ = read_obj(p)
    assert np.max(np.abs(np.linalg.norm(V * [1, 1, 0.5], axis=1) - 1)) < 1e-8


def test_obj_grid_surface_is_close(tmp_path, grid32, ellipsoidal):
    p = tmp_path / "s.obj"
    export_surface(p, ellipsoidal.field(grid32).on_grid(), grid32)
    V, _ = read_obj(p)
    assert np.max(np.abs(np.linalg.norm(V * [1, 1, 0.5], axis=1) - 1)) < 1e-3


def _report():
    return make_report("wulff", {"gamma": "{}"}, {
        "min_eigenvalue": 1.0, "worst_direction": [0.0, 0.0, 1.0],
        "K_W": {"min": 0.1, "max": 1 / 3}, "energy": 4 * np.pi, "volume": 4.18879,
        "mesh": {"path": "wulff.obj", "vertices": 10, "triangles": 16},
    }, 0.25)


def test_report_round_trip_is_bit_identical():
    doc = _report()
    text = dumps_report(doc)
    assert loads_report(text) == doc
    assert dumps_report(loads_report(text)) == text


def test_report_schema():
    validate_report(_report())
    bad = _report()
    del bad["payload"]["energy"]
    with pytest.raises(jsonschema.ValidationError):
        validate_report(bad)
    bad = _report()
    bad["schema_version"] = "0.9"
    with pytest.raises(jsonschema.ValidationError):
        validate_report(bad)


def test_report_rejects_nan():
    doc = _report()
    doc["payload"]["energy"] = float("nan")
    with pytest.raises(ValueError):
        dumps_report(doc)


def test_schema_file_is_valid_json_schema():
    from wulffkit.io import report_schema

    jsonschema.Draft202012Validator.check_schema(report_schema())
    assert json.dumps(report_schema())
