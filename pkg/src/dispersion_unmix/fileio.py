"""File formats: spectrum CSV, parameter/library JSON, run manifests.

All writers format floats with 17 significant digits so a write/read
round trip is exact, and none of them embed timestamps: a rerun of the
same command with the same seed must be byte-identical.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .types import (
    DispersionParams,
    ParamBox,
    ParamStructure,
    Spectrum,
    WavenumberGrid,
    flatten_params,
    unflatten_params,
)
from .unmix import EndmemberLibrary, LibraryEntry, MixedSpectrum

SCHEMA_VERSION = "1"


class FileFormatError(ValueError):
    pass


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


# ---------------------------------------------------------------- spectra

def write_spectrum(spectrum: Spectrum | MixedSpectrum, path) -> None:
    values = (
        spectrum.emissivity if isinstance(spectrum, Spectrum) else spectrum.values
    )
    with open(path, "w") as f:
        f.write("wavenumber,emissivity\n")
        for w, e in zip(spectrum.grid.values, values):
            f.write(f"{_fmt(w)},{_fmt(e)}\n")


def read_spectrum(path, measured: bool = True) -> Spectrum:
    """Parse a `wavenumber,emissivity` CSV; reports the offending line."""
    path = Path(path)
    rows = []
    with open(path) as f:
        header = f.readline().strip()
        if header != "wavenumber,emissivity":
            raise FileFormatError(
                f"{path}: expected header 'wavenumber,emissivity', got {header!r}"
            )
        for lineno, line in enumerate(f, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 2:
                raise FileFormatError(f"{path}:{lineno}: expected 2 fields")
            try:
                rows.append((float(parts[0]), float(parts[1])))
            except ValueError:
                raise FileFormatError(
                    f"{path}:{lineno}: malformed number in {line!r}"
                ) from None
    if len(rows) < 2:
        raise FileFormatError(f"{path}: need at least 2 samples")
    w = np.array([r[0] for r in rows])
    e = np.array([r[1] for r in rows])
    if np.any(np.diff(w) <= 0.0):
        bad = int(np.argmax(np.diff(w) <= 0.0)) + 3  # header + 1-based + next row
        raise FileFormatError(f"{path}:{bad}: wavenumbers must be ascending")
    try:
        return Spectrum(WavenumberGrid(w), e, measured=measured)
    except ValueError as exc:
        raise FileFormatError(f"{path}: {exc}") from None


def read_mixture(path) -> MixedSpectrum:
    s = read_spectrum(path, measured=True)
    return MixedSpectrum(s.grid, s.emissivity)


# ------------------------------------------------------------- parameters

def params_to_dict(params: DispersionParams) -> dict:
    return {
        "axes": [
            {
                "eps_r": ax.eps_r,
                "bands": [
                    {"omega0": w0, "gamma": g, "rho": r}
                    for w0, g, r in zip(ax.bank.omega0, ax.bank.gamma, ax.bank.rho)
                ],
            }
            for ax in params.axes
        ],
        "alpha": list(map(float, params.alpha)),
    }


def _reject_unknown(obj: dict, allowed: set[str], where: str) -> None:
    for key in obj:
        if key not in allowed:
            raise FileFormatError(f"{where}: unknown field {key!r}")


def _bounds_vector(obj: dict, where: str) -> tuple[ParamStructure, np.ndarray]:
    """Parse a params-shaped dict into (structure, flat vector)."""
    if not isinstance(obj, dict):
        raise FileFormatError(f"{where}: expected an object")
    _reject_unknown(obj, {"axes", "alpha"}, where)
    try:
        axes = obj["axes"]
        alpha = obj["alpha"]
    except KeyError as exc:
        raise FileFormatError(f"{where}: missing field {exc.args[0]!r}") from None
    chunks = []
    counts = []
    try:
        for i, ax in enumerate(axes):
            _reject_unknown(ax, {"eps_r", "bands"}, f"{where}.axes[{i}]")
            bands = ax.get("bands", [])
            counts.append(len(bands))
            for j, band in enumerate(bands):
                _reject_unknown(
                    band, {"omega0", "gamma", "rho"}, f"{where}.axes[{i}].bands[{j}]"
                )
            for field_name in ("omega0", "gamma", "rho"):
                chunks += [float(band[field_name]) for band in bands]
            chunks.append(float(ax["eps_r"]))
        chunks += [float(a) for a in alpha]
    except KeyError as exc:
        raise FileFormatError(
            f"{where}: missing field {exc.args[0]!r}"
        ) from None
    except (TypeError, ValueError) as exc:
        raise FileFormatError(f"{where}: {exc}") from None
    structure = ParamStructure(tuple(counts))
    vec = np.asarray(chunks, dtype=float)
    if vec.shape != (structure.size,):
        raise FileFormatError(f"{where}: inconsistent shapes")
    return structure, vec


def params_from_dict(obj: dict, where: str = "params") -> DispersionParams:
    structure, vec = _bounds_vector(obj, where)
    try:
        return unflatten_params(structure, vec)
    except ValueError as exc:
        raise FileFormatError(f"{where}: {exc}") from None


def write_params(params: DispersionParams, path) -> None:
    Path(path).write_text(json.dumps(params_to_dict(params), indent=2) + "\n")


def read_params(path) -> DispersionParams:
    try:
        obj = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise FileFormatError(f"{path}: invalid JSON ({exc})") from None
    return params_from_dict(obj, where=str(path))


def _vector_to_params_shape(structure: ParamStructure, vec: np.ndarray) -> dict:
    out = {"axes": [], "alpha": [float(a) for a in vec[structure.alpha_slice]]}
    for m in range(structure.n_axes):
        w0 = vec[structure.omega0_slice(m)]
        g = vec[structure.gamma_slice(m)]
        r = vec[structure.rho_slice(m)]
        out["axes"].append(
            {
                "eps_r": float(vec[structure.eps_r_index(m)]),
                "bands": [
                    {"omega0": float(a), "gamma": float(b), "rho": float(c)}
                    for a, b, c in zip(w0, g, r)
                ],
            }
        )
    return out


def box_to_dict(box: ParamBox) -> dict:
    return {
        "lower": _vector_to_params_shape(box.structure, box.lower),
        "upper": _vector_to_params_shape(box.structure, box.upper),
    }


def box_from_dict(obj: dict, where: str = "box") -> ParamBox:
    _reject_unknown(obj, {"lower", "upper"}, where)
    try:
        s_lo, lo = _bounds_vector(obj["lower"], f"{where}.lower")
        s_hi, hi = _bounds_vector(obj["upper"], f"{where}.upper")
    except KeyError as exc:
        raise FileFormatError(f"{where}: missing field {exc.args[0]!r}") from None
    if s_lo != s_hi:
        raise FileFormatError(f"{where}: lower/upper shapes differ")
    try:
        return ParamBox(s_lo, lo, hi)
    except ValueError as exc:
        raise FileFormatError(f"{where}: {exc}") from None


# ---------------------------------------------------------------- library

def library_to_dict(library: EndmemberLibrary) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "grid": [float(w) for w in library.grid.values],
        "entries": [
            {
                "name": e.name,
                "params": params_to_dict(e.params),
                "box": box_to_dict(e.box),
            }
            for e in library.entries
        ],
    }


def write_library(library: EndmemberLibrary, path) -> None:
    Path(path).write_text(json.dumps(library_to_dict(library), indent=2) + "\n")


def read_library(path) -> EndmemberLibrary:
    path = Path(path)
    try:
        obj = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise FileFormatError(f"{path}: invalid JSON ({exc})") from None
    where = str(path)
    if not isinstance(obj, dict):
        raise FileFormatError(f"{where}: expected a JSON object")
    _reject_unknown(obj, {"schema_version", "grid", "entries"}, where)
    try:
        version = obj["schema_version"]
        grid_values = obj["grid"]
        entries_obj = obj["entries"]
    except KeyError as exc:
        raise FileFormatError(f"{where}: missing field {exc.args[0]!r}") from None
    if version != SCHEMA_VERSION:
        raise FileFormatError(f"{where}: unsupported schema_version {version!r}")
    try:
        grid = WavenumberGrid(np.asarray(grid_values, dtype=float))
    except ValueError as exc:
        raise FileFormatError(f"{where}: grid: {exc}") from None
    entries = []
    for i, entry in enumerate(entries_obj):
        ctx = f"{where}.entries[{i}]"
        _reject_unknown(entry, {"name", "params", "box"}, ctx)
        try:
            name = entry["name"]
            params = params_from_dict(entry["params"], f"{ctx}.params")
            box = box_from_dict(entry["box"], f"{ctx}.box")
        except KeyError as exc:
            raise FileFormatError(f"{ctx}: missing field {exc.args[0]!r}") from None
        try:
            entries.append(LibraryEntry(name, params, box))
        except ValueError as exc:
            raise FileFormatError(f"{ctx}: {exc}") from None
    try:
        return EndmemberLibrary(tuple(entries), grid)
    except ValueError as exc:
        raise FileFormatError(f"{where}: {exc}") from None


# --------------------------------------------------------------- manifest

def sha256_of(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass(frozen=True)
class RunManifest:
    """Everything needed to replay a CLI run bit-exactly."""

    command: list[str]
    config: dict
    seed: int | None
    version: str
    inputs: dict[str, str]
    outputs: dict[str, str]

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "config": self.config,
            "seed": self.seed,
            "version": self.version,
            "inputs": self.inputs,
            "outputs": self.outputs,
        }


def write_manifest(manifest: RunManifest, path) -> None:
    Path(path).write_text(
        json.dumps(manifest.to_dict(), indent=2, sort_keys=True) + "\n"
    )


def read_manifest(path) -> RunManifest:
    obj = json.loads(Path(path).read_text())
    return RunManifest(
        command=list(obj["command"]),
        config=dict(obj["config"]),
        seed=obj["seed"],
        version=str(obj["version"]),
        inputs=dict(obj["inputs"]),
        outputs=dict(obj["outputs"]),
    )
