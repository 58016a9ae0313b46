import numpy as np
import pytest

from dispersion_unmix.experiments import build_demo_library, in_box_mixture
from dispersion_unmix.fitting import BoxTolerances, make_tolerance_box
from dispersion_unmix.model import render, render_flat
from dispersion_unmix.optim import NumericalFailure
from dispersion_unmix.types import (
    Spectrum,
    WavenumberGrid,
    bare_dielectric,
    flatten_params,
    single_axis_params,
)
from dispersion_unmix.unmix import (
    EndmemberLibrary,
    LibraryEntry,
    MixedSpectrum,
    UnmixConfig,
    analysis_by_synthesis,
    build_mixing_matrix,
    fcls,
    solve_abundances,
    unmix_fixed,
)

from _oracles import grid_min_objective

GRID = WavenumberGrid(np.linspace(300.0, 1300.0, 120))


def entry(name, params, tol=None):
    return LibraryEntry(name, params, make_tolerance_box(params, tol))


def three_member_library(seed=11):
    rng = np.random.default_rng(seed)
    entries = []
    for i, centers in enumerate(([450.0, 900.0], [600.0, 1050.0], [750.0, 1200.0])):
        c = np.asarray(centers)
        p = single_axis_params(
            np.sort(c + rng.uniform(-25, 25, c.size)),
            rng.uniform(0.05, 0.12, c.size),
            rng.uniform(0.35, 0.7, c.size),
            float(rng.uniform(1.4, 2.4)),
        )
        entries.append(entry(f"em{i}", p))
    return EndmemberLibrary(tuple(entries), GRID)


# ---------------------------------------------------------------- library

def test_library_rejects_duplicate_names():
    p = single_axis_params([500.0], [0.1], [0.3], 2.0)
    e = entry("same", p)
    with pytest.raises(ValueError):
        EndmemberLibrary((e, e), GRID)


def test_library_entry_requires_params_inside_box():
    p = single_axis_params([500.0], [0.1], [0.3], 2.0)
    q = single_axis_params([600.0], [0.1], [0.3], 2.0)
    with pytest.raises(ValueError):
        LibraryEntry("bad", q, make_tolerance_box(p))


# ---------------------------------------------------------- mixing matrix

def test_build_matrix_constant_dielectric_column():
    lib = EndmemberLibrary((entry("flat", bare_dielectric(4.0)),), GRID)
    a = build_mixing_matrix(lib)
    assert a.shape == (len(GRID), 1)
    assert np.allclose(a[:, 0], 8.0 / 9.0)


def test_build_matrix_columns_are_renders():
    lib = three_member_library()
    a = build_mixing_matrix(lib)
    assert a.shape == (len(GRID), 3)
    assert np.all((a > 0.0) & (a <= 1.0))
    for j, e in enumerate(lib.entries):
        assert np.array_equal(a[:, j], render(e.params, GRID).emissivity)


def test_build_matrix_duplicate_entry_rank_deficiency():
    from dispersion_unmix.diagnostics import analyze_mixing_matrix

    p = single_axis_params([700.0], [0.08], [0.4], 2.0)
    lib = EndmemberLibrary((entry("a", p), entry("b", p)), GRID)
    a = build_mixing_matrix(lib)
    assert np.array_equal(a[:, 0], a[:, 1])
    report = analyze_mixing_matrix(a)
    assert report.rank == 1
    assert report.condition_number == np.inf


# ---------------------------------------------------------------- solving

def test_pure_pixel_recovers_vertex():
    lib = three_member_library()
    a = build_mixing_matrix(lib)
    b = MixedSpectrum(GRID, a[:, 0])
    x = solve_abundances(a, b, lambda_p=0.0)
    assert np.max(np.abs(x.values - [1.0, 0.0, 0.0])) < 1e-4


def test_single_endmember_forced_to_one():
    lib = EndmemberLibrary((entry("only", bare_dielectric(3.0)),), GRID)
    a = build_mixing_matrix(lib)
    b = MixedSpectrum(GRID, np.full(len(GRID), 0.1))
    assert fcls(a, b).values[0] == 1.0


def test_seeded_mixture_beats_grid_oracle():
    lib = three_member_library()
    a = build_mixing_matrix(lib)
    x_true = np.array([0.2, 0.3, 0.5])
    b = MixedSpectrum(GRID, a @ x_true)
    x = solve_abundances(a, b, lambda_p=0.0)
    assert np.max(np.abs(x.values - x_true)) < 1e-3
    obj = float(np.sum((b.values - a @ x.values) ** 2))
    assert obj <= grid_min_objective(a, b.values, step=1e-3) + 1e-6


def test_solver_shape_mismatch():
    lib = three_member_library()
    a = build_mixing_matrix(lib)
    with pytest.raises(ValueError):
        solve_abundances(a[:-1], MixedSpectrum(GRID, a[:, 0]))


def test_sparsity_penalty_prunes_noisy_pure_pixel():
    """Aggregate over 50 seeded trials: the L_p penalty never densifies."""
    lib = three_member_library()
    a = build_mixing_matrix(lib)
    dense_count = {0.0: 0, 1e-3: 0}
    for t in range(50):
        rng = np.random.default_rng((77, t))
        b = MixedSpectrum(GRID, a[:, 0] + rng.normal(0.0, 1e-3, a.shape[0]))
        for lam in dense_count:
            x = solve_abundances(a, b, p=0.95, lambda_p=lam)
            dense_count[lam] += int(np.sum(x.values > 0.01))
    assert dense_count[1e-3] <= dense_count[0.0]


# ---------------------------------------------------- analysis-by-synthesis

def test_abs_exact_library_recovers_abundances():
    lib = three_member_library()
    a = build_mixing_matrix(lib)
    x_true = np.array([0.2, 0.3, 0.5])
    b = MixedSpectrum(GRID, a @ x_true)
    res = analysis_by_synthesis(lib, b, UnmixConfig(outer_iters=10))
    assert float(np.mean((res.abundances.values - x_true) ** 2)) < 1e-4
    for e, refined in zip(lib.entries, res.refined):
        assert e.box.contains(flatten_params(refined))


def test_abs_perturbed_library_beats_fcls():
    lib = three_member_library()
    a0 = build_mixing_matrix(lib)
    x_true = np.array([0.5, 0.25, 0.25])
    rng = np.random.default_rng((31, 4))
    cols = []
    for e in lib.entries:
        u = rng.uniform(0.0, 1.0, e.box.lower.size)
        cols.append(
            render_flat(
                e.params.structure, e.box.lower + u * e.box.width, GRID.values
            )
        )
    b = MixedSpectrum(GRID, np.column_stack(cols) @ x_true)
    res = analysis_by_synthesis(lib, b)
    x_fcls = fcls(a0, b).values
    abs_mse = float(np.mean((res.abundances.values - x_true) ** 2))
    assert abs_mse < 0.01
    fcls_rms = float(np.sqrt(np.mean((b.values - a0 @ x_fcls) ** 2)))
    assert res.residual_rms < fcls_rms
    for e, refined in zip(lib.entries, res.refined):
        assert e.box.contains(flatten_params(refined))


def test_abs_best_objective_non_increasing_running_min():
    lib = three_member_library()
    rng = np.random.default_rng((5, 1))
    mixed, _ = in_box_mixture(lib, rng)
    res = analysis_by_synthesis(lib, mixed, UnmixConfig(outer_iters=30))
    running = np.minimum.accumulate(res.loss_trace)
    assert np.all(np.diff(running) <= 1e-15)


def test_abs_zero_width_boxes_degenerate_to_fixed_solver():
    lib = three_member_library()
    zero = BoxTolerances(0.0, 0.0, 0.0, 0.0)
    frozen = EndmemberLibrary(
        tuple(entry(e.name, e.params, zero) for e in lib.entries), GRID
    )
    a = build_mixing_matrix(lib)
    b = MixedSpectrum(GRID, a @ np.array([0.6, 0.1, 0.3]) + 5e-4)
    cfg = UnmixConfig(outer_iters=8)
    res = analysis_by_synthesis(frozen, b, cfg)
    direct = solve_abundances(a, b, cfg.p, cfg.lambda_p, cfg.x_solver, cfg.p_epsilon)
    assert np.max(np.abs(res.abundances.values - direct.values)) < 1e-6
    for e, refined in zip(frozen.entries, res.refined):
        assert np.array_equal(flatten_params(refined), flatten_params(e.params))


def test_abs_bit_identical_reruns():
    lib = three_member_library()
    rng = np.random.default_rng((13, 2))
    mixed, _ = in_box_mixture(lib, rng)
    cfg = UnmixConfig(outer_iters=12)
    r1 = analysis_by_synthesis(lib, mixed, cfg)
    r2 = analysis_by_synthesis(lib, mixed, cfg)
    assert np.array_equal(r1.abundances.values, r2.abundances.values)
    assert np.array_equal(r1.loss_trace, r2.loss_trace)
    assert r1.residual_rms == r2.residual_rms
    for p1, p2 in zip(r1.refined, r2.refined):
        assert np.array_equal(flatten_params(p1), flatten_params(p2))


def test_abs_grid_mismatch_rejected():
    lib = three_member_library()
    other = WavenumberGrid(np.linspace(300.0, 1300.0, 60))
    with pytest.raises(ValueError):
        analysis_by_synthesis(lib, MixedSpectrum(other, np.full(60, 0.5)))


def test_unmix_fixed_methods():
    lib = three_member_library()
    a = build_mixing_matrix(lib)
    b = MixedSpectrum(GRID, a[:, 1])
    for method in ("fcls", "lp"):
        out = unmix_fixed(lib, b, method)
        assert out.abundances.values[1] > 0.99
    with pytest.raises(ValueError):
        unmix_fixed(lib, b, "nope")


def test_unmix_config_validation():
    with pytest.raises(ValueError):
        UnmixConfig(p=0.0)
    with pytest.raises(ValueError):
        UnmixConfig(p=1.2)
    with pytest.raises(ValueError):
        UnmixConfig(lambda_p=-1e-3)
    with pytest.raises(ValueError):
        UnmixConfig(outer_iters=0)
