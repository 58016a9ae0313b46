"""Command-line surface: render, fit, unmix, synth, diagnose.

Every run writes a manifest next to its outputs with the exact command,
configuration echo, seeds and content digests, so a run can be replayed
and checked bit-for-bit. Exit codes: 0 success, 1 usage or input error,
2 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__, fileio
from .diagnostics import condition_sweep, sweep_csv_rows
from .fitting import FitConfig, fit_endmember, select_axis_count
from .fixtures import FIXTURE_NAMES, load_fixture_params
from .optim import AdamConfig, NumericalFailure, write_trace_csv
from .synth import NoiseSpec, PerturbSpec, sample_abundances, synthesize_mixture
from .types import Spectrum, WavenumberGrid
from .unmix import UnmixConfig, analysis_by_synthesis, unmix_batch, unmix_fixed


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors exit 1, not argparse's 2
        raise _UsageError(message)


def _parse_grid(text: str) -> WavenumberGrid:
    try:
        start, stop, step = (float(p) for p in text.split(":"))
    except ValueError:
        raise _UsageError(
            f"bad grid {text!r}, expected start:stop:step in cm^-1"
        ) from None
    if step <= 0.0 or stop < start:
        raise _UsageError(f"bad grid {text!r}: need step > 0 and stop >= start")
    count = int(np.floor((stop - start) / step + 1e-9)) + 1
    return WavenumberGrid(start + step * np.arange(count))


def _load_params_arg(value: str):
    path = Path(value)
    if path.exists():
        return fileio.read_params(path), {str(path): fileio.sha256_of(path)}
    if value in FIXTURE_NAMES:
        return load_fixture_params(value), {}
    raise FileNotFoundError(
        f"no such file {value!r} (and not a bundled fixture; "
        f"fixtures: {', '.join(FIXTURE_NAMES)})"
    )


def _read_perturb_spec(path, seed: int) -> PerturbSpec:
    obj = json.loads(Path(path).read_text())
    allowed = {"omega0_shift", "gamma_scale", "rho_scale", "eps_scale"}
    for key in obj:
        if key not in allowed:
            raise fileio.FileFormatError(f"{path}: unknown field {key!r}")

    def pair(name, default):
        v = obj.get(name, default)
        if not (isinstance(v, (list, tuple)) and len(v) == 2):
            raise fileio.FileFormatError(f"{path}: {name} must be [lo, hi]")
        return float(v[0]), float(v[1])

    return PerturbSpec(
        omega0_shift=pair("omega0_shift", (0.0, 0.0)),
        gamma_scale=pair("gamma_scale", (1.0, 1.0)),
        rho_scale=pair("rho_scale", (1.0, 1.0)),
        eps_scale=pair("eps_scale", (1.0, 1.0)),
        seed=seed,
    )


def _child_seed(*key) -> int:
    return int(np.random.SeedSequence(key).generate_state(1)[0])


def _manifest_for(args, out_paths, in_digests, seed):
    config = {
        k: (list(v) if isinstance(v, tuple) else v)
        for k, v in sorted(vars(args).items())
        if k != "func" and not callable(v)
    }
    return fileio.RunManifest(
        command=list(args._argv),
        config={k: _jsonable(v) for k, v in config.items()},
        seed=seed,
        version=__version__,
        inputs=in_digests,
        outputs={str(p): fileio.sha256_of(p) for p in out_paths},
    )


def _jsonable(v):
    if isinstance(v, Path):
        return str(v)
    return v


def _write_manifest_beside(args, out: Path, out_paths, in_digests, seed=None):
    manifest = _manifest_for(args, out_paths, in_digests, seed)
    if out.is_dir():
        target = out / "run_manifest.json"
    else:
        target = out.with_name(out.name + ".manifest.json")
    fileio.write_manifest(manifest, target)


# ------------------------------------------------------------ subcommands

def _cmd_render(args) -> int:
    params, digests = _load_params_arg(args.params)
    grid = _parse_grid(args.grid)
    from .model import render

    spectrum = render(params, grid)
    out = Path(args.out)
    fileio.write_spectrum(spectrum, out)
    _write_manifest_beside(args, out, [out], digests)
    return 0


def _cmd_fit(args) -> int:
    in_path = Path(args.input)
    target = fileio.read_spectrum(in_path)
    digests = {str(in_path): fileio.sha256_of(in_path)}
    config = FitConfig(
        k_init=args.k_init,
        lambda_rho=args.lambda_rho,
        restarts=args.restarts,
        seed=args.seed,
        optimizer=AdamConfig(learning_rate=0.02, steps=args.steps),
    )
    if args.axes == "auto":
        result = select_axis_count(target, config)
    else:
        result = fit_endmember(target, config, n_axes=int(args.axes))
    out = Path(args.out)
    trace_path = out.with_name(out.stem + "_trace.csv")
    write_trace_csv(result.loss_trace, trace_path)
    payload = {
        "params": fileio.params_to_dict(result.params),
        "mse": result.mse,
        "k_final": result.k_final,
        "axis_count": result.axis_count,
        "trace": str(trace_path),
    }
    out.write_text(json.dumps(payload, indent=2) + "\n")
    _write_manifest_beside(args, out, [out, trace_path], digests, args.seed)
    return 0


def _unmix_one(library, mixture, args):
    cfg = UnmixConfig(
        p=args.p, lambda_p=args.lambda_p, outer_iters=args.outer_iters
    )
    if args.method == "abs":
        res = analysis_by_synthesis(library, mixture, cfg)
        return {
            "method": args.method,
            "names": library.names,
            "abundances": [float(x) for x in res.abundances.values],
            "residual_rms": res.residual_rms,
            "refined": [fileio.params_to_dict(p) for p in res.refined],
        }
    res = unmix_fixed(library, mixture, args.method, cfg)
    return {
        "method": args.method,
        "names": library.names,
        "abundances": [float(x) for x in res.abundances.values],
        "residual_rms": res.residual_rms,
    }


def _cmd_unmix(args) -> int:
    lib_path = Path(args.library)
    library = fileio.read_library(lib_path)
    digests = {str(lib_path): fileio.sha256_of(lib_path)}
    if (args.input is None) == (args.batch is None):
        raise _UsageError("provide exactly one of --input or --batch")
    if args.input:
        in_path = Path(args.input)
        mixture = fileio.read_mixture(in_path)
        digests[str(in_path)] = fileio.sha256_of(in_path)
        payload = _unmix_one(library, mixture, args)
        out = Path(args.out)
        out.write_text(json.dumps(payload, indent=2) + "\n")
        _write_manifest_beside(args, out, [out], digests, args.seed)
        return 0

    batch_dir = Path(args.batch)
    if not batch_dir.is_dir():
        raise FileNotFoundError(f"no such directory {batch_dir}")
    inputs = sorted(batch_dir.glob("*.csv"))
    if not inputs:
        raise FileNotFoundError(f"no .csv inputs under {batch_dir}")
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    mixtures = []
    for p in inputs:
        mixtures.append(fileio.read_mixture(p))
        digests[str(p)] = fileio.sha256_of(p)
    if args.method == "abs":
        cfg = UnmixConfig(
            p=args.p, lambda_p=args.lambda_p, outer_iters=args.outer_iters
        )
        results = unmix_batch(library, mixtures, cfg)
        payloads = [
            {
                "method": args.method,
                "names": library.names,
                "abundances": [float(x) for x in r.abundances.values],
                "residual_rms": r.residual_rms,
                "refined": [fileio.params_to_dict(p) for p in r.refined],
            }
            for r in results
        ]
    else:
        payloads = [_unmix_one(library, m, args) for m in mixtures]
    out_paths = []
    summary = ["name," + ",".join(
        f"abundance_{j + 1}" for j in range(len(library))
    ) + ",residual_rms"]
    for src, payload in zip(inputs, payloads):
        dest = out_dir / (src.stem + ".result.json")
        dest.write_text(json.dumps(payload, indent=2) + "\n")
        out_paths.append(dest)
        row = ",".join(format(x, ".17g") for x in payload["abundances"])
        summary.append(f"{src.stem},{row},{payload['residual_rms']:.17g}")
    summary_path = out_dir / "summary.csv"
    summary_path.write_text("\n".join(summary) + "\n")
    out_paths.append(summary_path)
    _write_manifest_beside(args, out_dir, out_paths, digests, args.seed)
    return 0


def _cmd_synth(args) -> int:
    lib_path = Path(args.library)
    library = fileio.read_library(lib_path)
    digests = {str(lib_path): fileio.sha256_of(lib_path)}
    if args.perturb:
        base_perturb = _read_perturb_spec(args.perturb, args.seed)
        digests[str(args.perturb)] = fileio.sha256_of(args.perturb)
    else:
        base_perturb = PerturbSpec(seed=args.seed)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    out_paths = []
    records = []
    for i in range(args.count):
        perturb = PerturbSpec(
            omega0_shift=base_perturb.omega0_shift,
            gamma_scale=base_perturb.gamma_scale,
            rho_scale=base_perturb.rho_scale,
            eps_scale=base_perturb.eps_scale,
            seed=_child_seed(args.seed, i, 0),
        )
        noise = NoiseSpec(
            sigma_radiance=args.noise_sigma,
            temperature=args.temperature,
            seed=_child_seed(args.seed, i, 1),
        )
        rng = np.random.default_rng((args.seed, i, 2))
        abundances = sample_abundances(len(library), rng, args.active)
        mixed, record = synthesize_mixture(library, abundances, perturb, noise)
        name = f"mixture_{i:05d}.csv"
        fileio.write_spectrum(mixed, out_dir / name)
        out_paths.append(out_dir / name)
        records.append(
            {
                "file": name,
                "abundances": [float(x) for x in record.abundances.values],
                "perturb_seed": record.perturb_seed,
                "noise_seed": record.noise.seed,
                "perturbed": [fileio.params_to_dict(p) for p in record.perturbed],
            }
        )
    truth = {
        "seed": args.seed,
        "count": args.count,
        "names": library.names,
        "noise_sigma": args.noise_sigma,
        "temperature": args.temperature,
        "mixtures": records,
    }
    truth_path = out_dir / "manifest.json"
    truth_path.write_text(json.dumps(truth, indent=2) + "\n")
    out_paths.append(truth_path)
    _write_manifest_beside(args, out_dir, out_paths, digests, args.seed)
    return 0


def _cmd_diagnose(args) -> int:
    lib_path = Path(args.library)
    library = fileio.read_library(lib_path)
    digests = {str(lib_path): fileio.sha256_of(lib_path)}
    if args.perturb:
        perturb = _read_perturb_spec(args.perturb, args.seed)
        digests[str(args.perturb)] = fileio.sha256_of(args.perturb)
    else:
        perturb = PerturbSpec(seed=args.seed)
    reports = condition_sweep(library, perturb, args.runs, args.seed)
    out = Path(args.out)
    out.write_text("\n".join(sweep_csv_rows(reports)) + "\n")
    _write_manifest_beside(args, out, [out], digests, args.seed)
    return 0


# ----------------------------------------------------------------- parser

def build_parser() -> _Parser:
    ap = _Parser(
        prog="dispersion-unmix",
        description="Dispersion-model spectral rendering, fitting and unmixing.",
    )
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("render", help="render a parameter set to a spectrum CSV")
    p.add_argument("--params", required=True,
                   help="params JSON path or bundled fixture name")
    p.add_argument("--grid", required=True, help="start:stop:step in cm^-1")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_render)

    p = sub.add_parser("fit", help="fit dispersion parameters to a spectrum")
    p.add_argument("--input", required=True, help="spectrum CSV")
    p.add_argument("--k-init", type=int, default=50, dest="k_init")
    p.add_argument("--lambda-rho", type=float, default=0.01, dest="lambda_rho")
    p.add_argument("--restarts", type=int, default=4)
    p.add_argument("--steps", type=int, default=500, help="Adam steps per stage")
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--axes", choices=("auto", "1", "2"), default="auto")
    p.add_argument("--out", required=True, help="FitResult JSON path")
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("unmix", help="estimate abundances for mixed spectra")
    p.add_argument("--library", required=True, help="library JSON")
    p.add_argument("--input", help="one mixed-spectrum CSV")
    p.add_argument("--batch", help="directory of mixed-spectrum CSVs")
    p.add_argument("--method", choices=("fcls", "lp", "abs"), default="abs")
    p.add_argument("--p", type=float, default=0.95)
    p.add_argument("--lambda-p", type=float, default=1e-4, dest="lambda_p")
    p.add_argument("--outer-iters", type=int, default=100, dest="outer_iters")
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--out", required=True, help="result JSON (or directory for --batch)")
    p.set_defaults(func=_cmd_unmix)

    p = sub.add_parser("synth", help="generate synthetic mixtures")
    p.add_argument("--library", required=True)
    p.add_argument("--count", type=int, default=1000)
    p.add_argument("--perturb", help="perturbation-spec JSON")
    p.add_argument("--noise-sigma", type=float, default=1e-4, dest="noise_sigma")
    p.add_argument("--temperature", type=float, default=330.0)
    p.add_argument("--active", type=int, default=0,
                   help="sparsity mode: keep this many nonzero abundances")
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("diagnose", help="rank/condition report of the mixing matrix")
    p.add_argument("--library", required=True)
    p.add_argument("--perturb", help="perturbation-spec JSON")
    p.add_argument("--runs", type=int, default=1)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--out", required=True, help="report CSV")
    p.set_defaults(func=_cmd_diagnose)
    return ap


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        args._argv = argv
        return args.func(args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (FileNotFoundError, fileio.FileFormatError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
