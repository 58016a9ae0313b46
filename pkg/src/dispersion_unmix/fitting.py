"""Fit dispersion parameters to a measured spectrum.

Sparse box-constrained regression: start with a generous bank of bands,
descend on squared error plus an L1 penalty on band strengths, prune the
bands the penalty starved, then refit the survivors without the penalty.
Axis-count selection simply fits both one- and two-axis models.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import _parallel
from .model import render_flat, render_flat_with_jacobian
from .optim import (
    AdamConfig,
    MinimizeResult,
    NumericalFailure,
    minimize_projected_ladder,
    project_simplex_raw,
)
from .types import (
    EPS_R_MIN,
    GAMMA_MIN,
    OMEGA0_MIN,
    RHO_MIN,
    DispersionParams,
    ParamBox,
    ParamStructure,
    Spectrum,
    WavenumberGrid,
    flatten_params,
    unflatten_params,
)


@dataclass(frozen=True)
class FitBounds:
    """Rule building the wide search box for fitting.

    Fitting explores the physically valid region; the tight per-endmember
    tolerance boxes are an unmixing-time concept (`make_tolerance_box`).
    """

    omega0_margin: float = 0.10  # widen the grid span by this fraction per side
    gamma_range: tuple[float, float] = (1e-4, 1.0)
    rho_max: float = 2.0
    eps_r_range: tuple[float, float] = (1.0, 10.0)

    def build(self, structure: ParamStructure, grid: WavenumberGrid) -> ParamBox:
        lo = np.empty(structure.size)
        hi = np.empty(structure.size)
        span = grid.values[-1] - grid.values[0]
        w_lo = max(grid.values[0] - self.omega0_margin * span, OMEGA0_MIN)
        w_hi = grid.values[-1] + self.omega0_margin * span
        for fam, (flo, fhi) in (
            ("omega0", (w_lo, w_hi)),
            ("gamma", self.gamma_range),
            ("rho", (RHO_MIN, self.rho_max)),
            ("eps_r", self.eps_r_range),
            ("alpha", (0.0, 1.0)),
        ):
            idx = structure.family_indices(fam)
            lo[idx] = flo
            hi[idx] = fhi
        return ParamBox(structure, lo, hi)


@dataclass(frozen=True)
class BoxTolerances:
    """Relative half-widths per parameter family for tolerance boxes."""

    rho: float = 0.05
    gamma: float = 0.005
    eps_r: float = 0.001
    omega0: float = 1e-4


@dataclass(frozen=True)
class FitConfig:
    k_init: int = 50
    lambda_rho: float = 0.01
    prune_threshold: float = 1e-3
    restarts: int = 4
    seed: int = 0
    bounds: FitBounds = field(default_factory=FitBounds)
    optimizer: AdamConfig = field(
        default_factory=lambda: AdamConfig(learning_rate=0.02, steps=500)
    )
    # Decreasing per-stage rates, as fractions of the box width per step.
    lr_ladder: tuple[float, ...] = (0.03, 0.01, 0.004, 0.0015, 0.0006, 0.00025)

    def __post_init__(self):
        if self.k_init < 1:
            raise ValueError("k_init must be >= 1")
        if self.lambda_rho < 0.0 or self.prune_threshold < 0.0:
            raise ValueError("lambda_rho and prune_threshold must be >= 0")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")


@dataclass(frozen=True)
class FitResult:
    params: DispersionParams
    mse: float
    k_final: int
    axis_count: int
    loss_trace: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.mse < 0.0:
            raise ValueError("mse must be non-negative")


def make_tolerance_box(
    fitted: DispersionParams, tolerances: BoxTolerances | None = None
) -> ParamBox:
    """Per-parameter box `fitted -+ tol*|fitted|`, clipped to validity.

    Axis weights get a zero-width box: they stay fixed during refinement.
    """
    tol = tolerances or BoxTolerances()
    s = fitted.structure
    vec = flatten_params(fitted)
    lo = vec.copy()
    hi = vec.copy()
    for fam, t, floor in (
        ("rho", tol.rho, RHO_MIN),
        ("gamma", tol.gamma, GAMMA_MIN),
        ("eps_r", tol.eps_r, EPS_R_MIN),
        ("omega0", tol.omega0, OMEGA0_MIN),
    ):
        idx = s.family_indices(fam)
        half = t * np.abs(vec[idx])
        lo[idx] = np.maximum(vec[idx] - half, floor)
        hi[idx] = vec[idx] + half
    return ParamBox(s, lo, hi)


def _random_init(structure, box, grid, rng) -> np.ndarray:
    """Random start per the published parameter-table ranges."""
    vec = np.empty(structure.size)
    for m in range(structure.n_axes):
        k = structure.bands_per_axis[m]
        vec[structure.omega0_slice(m)] = rng.uniform(
            grid.values[0], grid.values[-1], k
        )
        vec[structure.gamma_slice(m)] = rng.uniform(0.01, 0.2, k)
        vec[structure.rho_slice(m)] = rng.uniform(0.0, 0.1, k)
        vec[structure.eps_r_index(m)] = rng.uniform(1.0, 3.0)
    vec[structure.alpha_slice] = 1.0 / structure.n_axes
    return np.clip(vec, box.lower, box.upper)


def _boxed_objective(structure, box, omega, target, lambda_rho):
    """Objective over box-normalized coordinates z in [0,1]^P.

    Normalizing by box width gives every parameter a comparable step size
    under Adam regardless of its physical scale.
    """
    lo = box.lower
    width = box.width
    rho_idx = structure.family_indices("rho")

    def objective(z):
        vec = lo + z * width
        eps, jac = render_flat_with_jacobian(structure, vec, omega)
        r = eps - target
        loss = float(r @ r)
        grad = 2.0 * (jac.T @ r)
        if lambda_rho > 0.0:
            loss += lambda_rho * float(vec[rho_idx].sum())
            grad[rho_idx] += lambda_rho  # rho is non-negative inside the box
        return loss, grad * width

    return objective


def _box_simplex_projection(structure):
    a = structure.alpha_slice

    def projection(z):
        z = np.clip(z, 0.0, 1.0)
        z[a] = project_simplex_raw(z[a])
        return z

    return projection


def _to_normalized(vec, box):
    width = np.where(box.width > 0.0, box.width, 1.0)
    return np.clip((vec - box.lower) / width, 0.0, 1.0)


def _prune(structure, vec, threshold):
    """Drop bands whose strength fell below the threshold."""
    keep_counts = []
    chunks = []
    for m in range(structure.n_axes):
        rho = vec[structure.rho_slice(m)]
        keep = rho >= threshold
        keep_counts.append(int(keep.sum()))
        chunks += [
            vec[structure.omega0_slice(m)][keep],
            vec[structure.gamma_slice(m)][keep],
            vec[structure.rho_slice(m)][keep],
            [vec[structure.eps_r_index(m)]],
        ]
    chunks.append(vec[structure.alpha_slice])
    pruned = ParamStructure(tuple(keep_counts))
    return pruned, np.concatenate([np.asarray(c, dtype=float) for c in chunks])


def _restart_job(args):
    target, config, n_axes, restart = args
    try:
        return _fit_one_restart(target, config, n_axes, restart)
    except NumericalFailure:
        return None  # tolerated unless every restart diverges


@dataclass(frozen=True)
class _RestartOutcome:
    mse: float
    structure: ParamStructure
    vec: np.ndarray
    trace: np.ndarray
    pre_prune_mse: float
    pruned_rho_mass: float


def _fit_one_restart(
    target: Spectrum, config: FitConfig, n_axes: int, restart: int
) -> _RestartOutcome:
    grid = target.grid
    omega = grid.values
    y = target.emissivity
    structure = ParamStructure((config.k_init,) * n_axes)
    box = config.bounds.build(structure, grid)
    rng = np.random.default_rng(np.random.SeedSequence((config.seed, restart)))
    z0 = _to_normalized(_random_init(structure, box, grid, rng), box)

    sparse = minimize_projected_ladder(
        _boxed_objective(structure, box, omega, y, config.lambda_rho),
        z0,
        _box_simplex_projection(structure),
        config.optimizer,
        config.lr_ladder,
    )
    vec = box.lower + sparse.params * box.width
    resid = render_flat(structure, vec, omega) - y
    pre_prune_mse = float(resid @ resid) / omega.size

    pruned_structure, pruned_vec = _prune(structure, vec, config.prune_threshold)
    pruned_mass = float(
        vec[structure.family_indices("rho")].sum()
        - pruned_vec[pruned_structure.family_indices("rho")].sum()
    )
    pruned_box = config.bounds.build(pruned_structure, grid)
    polish = minimize_projected_ladder(
        _boxed_objective(pruned_structure, pruned_box, omega, y, 0.0),
        _to_normalized(pruned_vec, pruned_box),
        _box_simplex_projection(pruned_structure),
        config.optimizer,
        config.lr_ladder,
    )
    final_vec = pruned_box.lower + polish.params * pruned_box.width
    resid = render_flat(pruned_structure, final_vec, omega) - y
    mse = float(resid @ resid) / omega.size
    trace = np.concatenate([sparse.trace, polish.trace])
    return _RestartOutcome(
        mse, pruned_structure, final_vec, trace, pre_prune_mse, pruned_mass
    )


def fit_endmember(target: Spectrum, config: FitConfig, n_axes: int = 1) -> FitResult:
    """Best fit over seeded random restarts.

    Parameter recovery is not promised (the model is not identifiable);
    the contract is on the rendered spectrum matching the target.
    """
    jobs = [(target, config, n_axes, r) for r in range(config.restarts)]
    outcomes = _parallel.pmap(_restart_job, jobs)
    finite = [
        (o, i)
        for i, o in enumerate(outcomes)
        if o is not None and np.isfinite(o.mse)
    ]
    if not finite:
        raise NumericalFailure("all restarts diverged")
    best, _ = min(finite, key=lambda t: (t[0].mse, t[1]))
    return FitResult(
        params=unflatten_params(best.structure, best.vec),
        mse=best.mse,
        k_final=sum(best.structure.bands_per_axis),
        axis_count=best.structure.n_axes,
        loss_trace=best.trace,
    )


# Prefer the simpler model unless the richer one wins by a real margin.
_AXIS_TIE_TOL = 1e-9


def select_axis_count(target: Spectrum, config: FitConfig) -> FitResult:
    """Fit one- and two-axis models; return the lower-error fit.

    Ties (and near-ties) break toward the single-axis model.
    """
    results = []
    errors = []
    for n_axes in (1, 2):
        try:
            results.append(fit_endmember(target, config, n_axes))
        except NumericalFailure as exc:
            errors.append(exc)
    if not results:
        raise NumericalFailure(f"both axis counts failed: {errors}")
    if len(results) == 1:
        return results[0]
    one, two = results
    if two.mse < one.mse - _AXIS_TIE_TOL:
        return two
    return one
