import json

import numpy as np
import pytest

from dispersion_unmix import fileio
from dispersion_unmix.experiments import build_demo_library
from dispersion_unmix.fitting import make_tolerance_box
from dispersion_unmix.fixtures import load_fixture_params
from dispersion_unmix.model import render
from dispersion_unmix.types import (
    Spectrum,
    WavenumberGrid,
    flatten_params,
    single_axis_params,
)


def test_spectrum_round_trip_minimal(tmp_path):
    g = WavenumberGrid(np.array([100.0, 200.0]))
    s = Spectrum(g, np.array([0.25, 0.75]))
    path = tmp_path / "two.csv"
    fileio.write_spectrum(s, path)
    back = fileio.read_spectrum(path)
    assert len(back.grid) == 2
    assert np.array_equal(back.emissivity, s.emissivity)


def test_spectrum_round_trip_is_bit_exact(tmp_path):
    hem = load_fixture_params("hematite")
    grid = WavenumberGrid(np.linspace(200.0, 1400.0, 173))
    s = render(hem, grid)
    p1 = tmp_path / "a.csv"
    p2 = tmp_path / "b.csv"
    fileio.write_spectrum(s, p1)
    back = fileio.read_spectrum(p1)
    assert np.array_equal(back.emissivity, s.emissivity)
    assert np.array_equal(back.grid.values, grid.values)
    fileio.write_spectrum(back, p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_spectrum_rejects_descending_grid(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("wavenumber,emissivity\n300,0.5\n200,0.6\n")
    with pytest.raises(fileio.FileFormatError, match="ascending"):
        fileio.read_spectrum(path)


def test_spectrum_malformed_row_reports_line(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("wavenumber,emissivity\n300,0.5\n400,oops\n")
    with pytest.raises(fileio.FileFormatError, match=":3"):
        fileio.read_spectrum(path)
    path.write_text("wavenumber,emissivity\n300,0.5,9\n")
    with pytest.raises(fileio.FileFormatError, match="2 fields"):
        fileio.read_spectrum(path)
    path.write_text("wrong,header\n300,0.5\n")
    with pytest.raises(fileio.FileFormatError, match="header"):
        fileio.read_spectrum(path)


def test_params_json_round_trip(tmp_path):
    p = single_axis_params([700.0, 1000.0], [0.06, 0.08], [0.4, 0.3], 1.9)
    path = tmp_path / "params.json"
    fileio.write_params(p, path)
    q = fileio.read_params(path)
    assert np.array_equal(flatten_params(p), flatten_params(q))


def test_params_json_schema_shape(tmp_path):
    p = single_axis_params([700.0], [0.06], [0.4], 1.9)
    d = fileio.params_to_dict(p)
    assert set(d) == {"axes", "alpha"}
    assert set(d["axes"][0]) == {"eps_r", "bands"}
    assert set(d["axes"][0]["bands"][0]) == {"omega0", "gamma", "rho"}


def test_params_unknown_field_named(tmp_path):
    obj = {"axes": [{"eps_r": 2.0, "bands": [], "extra": 1}], "alpha": [1.0]}
    with pytest.raises(fileio.FileFormatError, match="'extra'"):
        fileio.params_from_dict(obj)
    obj = {"axes": [{"eps_r": 2.0, "bands": []}], "alpha": [1.0], "oops": {}}
    with pytest.raises(fileio.FileFormatError, match="'oops'"):
        fileio.params_from_dict(obj)


def test_box_round_trip():
    p = single_axis_params([700.0], [0.06], [0.4], 1.9)
    box = make_tolerance_box(p)
    d = fileio.box_to_dict(box)
    back = fileio.box_from_dict(d)
    assert np.array_equal(back.lower, box.lower)
    assert np.array_equal(back.upper, box.upper)


def test_library_round_trip(tmp_path):
    lib = build_demo_library()
    path = tmp_path / "lib.json"
    fileio.write_library(lib, path)
    back = fileio.read_library(path)
    assert back.names == lib.names
    assert back.grid == lib.grid
    for a, b in zip(lib.entries, back.entries):
        assert np.array_equal(flatten_params(a.params), flatten_params(b.params))
        assert np.array_equal(a.box.lower, b.box.lower)


def test_library_unknown_field_rejected(tmp_path):
    lib = build_demo_library()
    obj = fileio.library_to_dict(lib)
    obj["surprise"] = True
    path = tmp_path / "lib.json"
    path.write_text(json.dumps(obj))
    with pytest.raises(fileio.FileFormatError, match="'surprise'"):
        fileio.read_library(path)
    del obj["surprise"]
    obj["entries"][0]["params"]["axes"][0]["bands"][0]["width"] = 1
    path.write_text(json.dumps(obj))
    with pytest.raises(fileio.FileFormatError, match="'width'"):
        fileio.read_library(path)


def test_library_schema_version_checked(tmp_path):
    lib = build_demo_library()
    obj = fileio.library_to_dict(lib)
    obj["schema_version"] = "99"
    path = tmp_path / "lib.json"
    path.write_text(json.dumps(obj))
    with pytest.raises(fileio.FileFormatError, match="schema_version"):
        fileio.read_library(path)


def test_manifest_round_trip(tmp_path):
    m = fileio.RunManifest(
        command=["render", "--out", "x.csv"],
        config={"grid": "200:400:10"},
        seed=7,
        version="0.1.0",
        inputs={"in.json": "ab" * 32},
        outputs={"x.csv": "cd" * 32},
    )
    path = tmp_path / "m.json"
    fileio.write_manifest(m, path)
    back = fileio.read_manifest(path)
    assert back == m
    assert "timestamp" not in path.read_text()
