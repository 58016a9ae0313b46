import math

import numpy as np
import pytest

from dispersion_unmix.diagnostics import (
    analyze_mixing_matrix,
    condition_sweep,
    sweep_csv_rows,
)
from dispersion_unmix.experiments import build_demo_library
from dispersion_unmix.fixtures import load_fixture_params
from dispersion_unmix.model import render
from dispersion_unmix.synth import PerturbSpec
from dispersion_unmix.types import WavenumberGrid
from dispersion_unmix.unmix import build_mixing_matrix


def test_identity_matrix_report():
    r = analyze_mixing_matrix(np.eye(3))
    assert (r.rows, r.cols, r.rank) == (3, 3, 3)
    assert r.condition_number == 1.0
    assert np.allclose(r.singular_values, 1.0)
    assert np.allclose(r.eig_normal, 1.0)


def test_duplicate_columns_rank_deficient_with_inf_condition():
    col = np.linspace(1.0, 2.0, 6)
    r = analyze_mixing_matrix(np.column_stack([col, col]))
    assert r.rank == 1
    assert math.isinf(r.condition_number)


def test_fixture_library_full_rank_finite_condition():
    grid = WavenumberGrid(np.linspace(200.0, 1400.0, 200))
    a = np.column_stack(
        [
            render(load_fixture_params(name), grid).emissivity
            for name in ("olivine_fo10", "biotite", "hematite")
        ]
    )
    r = analyze_mixing_matrix(a)
    assert r.rank == 3
    assert math.isfinite(r.condition_number)
    assert r.condition_number >= 1.0
    # independent reconstruction check of the decomposition
    u, s, vt = np.linalg.svd(a, full_matrices=False)
    rec = np.linalg.norm(a - u @ np.diag(s) @ vt) / np.linalg.norm(a)
    assert rec < 1e-10
    assert np.allclose(r.singular_values, s, rtol=1e-12)


def test_rank_invariant_under_row_permutation_and_sign_flips():
    rng = np.random.default_rng(17)
    a = rng.uniform(0.1, 1.0, (40, 3))
    base = analyze_mixing_matrix(a)
    perm = rng.permutation(40)
    flipped = a[perm] * np.array([1.0, -1.0, 1.0])
    other = analyze_mixing_matrix(flipped)
    assert other.rank == base.rank
    assert np.allclose(other.singular_values, base.singular_values, rtol=1e-10)


def test_eig_normal_equals_squared_singular_values():
    rng = np.random.default_rng(23)
    a = rng.uniform(0.0, 1.0, (30, 4))
    r = analyze_mixing_matrix(a)
    assert np.allclose(r.eig_normal, r.singular_values**2, rtol=1e-9)
    # against an independent eigensolve of the normal matrix
    eigs = np.sort(np.linalg.eigvalsh(a.T @ a))[::-1]
    assert np.allclose(r.eig_normal, eigs, rtol=1e-8, atol=1e-10)


def test_zero_perturbation_sweep_is_constant():
    lib = build_demo_library()
    reports = condition_sweep(lib, PerturbSpec(seed=0), runs=4, seed=9)
    conds = {r.condition_number for r in reports}
    assert len(conds) == 1
    base = analyze_mixing_matrix(build_mixing_matrix(lib))
    assert reports[0].condition_number == base.condition_number


def test_sweep_keeps_full_rank_for_distinct_endmembers():
    lib = build_demo_library()
    perturb = PerturbSpec((-2.0, 2.0), (0.95, 1.05), (0.9, 1.1), (0.999, 1.001), seed=0)
    reports = condition_sweep(lib, perturb, runs=20, seed=1)
    assert all(r.rank == len(lib) for r in reports)
    assert all(math.isfinite(r.condition_number) for r in reports)


def test_sweep_csv_shape():
    lib = build_demo_library()
    rows = sweep_csv_rows(condition_sweep(lib, PerturbSpec(seed=0), runs=3, seed=2))
    assert rows[0] == "run,rank,condition,eig_min,eig_max"
    assert len(rows) == 4
    run, rank, cond, emin, emax = rows[1].split(",")
    assert (int(run), int(rank)) == (0, 3)
    assert float(emax) >= float(emin) > 0.0


def test_analyze_rejects_bad_input():
    with pytest.raises(ValueError):
        analyze_mixing_matrix(np.zeros((0, 3)))
    with pytest.raises(ValueError):
        analyze_mixing_matrix(np.array([[np.nan, 1.0]]))


def test_sweep_validation():
    lib = build_demo_library()
    with pytest.raises(ValueError):
        condition_sweep(lib, PerturbSpec(seed=0), runs=0)
