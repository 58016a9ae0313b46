"""Abundance estimation against a library of fitted endmembers.

Three entry points, in increasing order of model richness:

  * `fcls`            simplex-constrained least squares on a fixed matrix
  * `solve_abundances` the same plus an L_p sparsity penalty
  * `analysis_by_synthesis` alternates abundance solves with projected
    Adam refinement of the dispersion parameters inside their tolerance
    boxes, so the library can explain within-material variability.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _parallel
from .model import render, render_flat, render_flat_with_jacobian
from .optim import (
    AdamConfig,
    AdamState,
    NumericalFailure,
    SimplexVector,
    adam_step,
    minimize_projected_gradient,
    project_simplex_raw,
)
from .types import (
    DispersionParams,
    ParamBox,
    Spectrum,
    WavenumberGrid,
    flatten_params,
    unflatten_params,
)

P_EPSILON = 1e-8


@dataclass(frozen=True)
class LibraryEntry:
    name: str
    params: DispersionParams
    box: ParamBox

    def __post_init__(self):
        if self.box.structure != self.params.structure:
            raise ValueError(f"box shape mismatch for endmember {self.name!r}")
        if not self.box.contains(flatten_params(self.params)):
            raise ValueError(f"params outside box for endmember {self.name!r}")


@dataclass(frozen=True)
class EndmemberLibrary:
    entries: tuple[LibraryEntry, ...]
    grid: WavenumberGrid

    def __post_init__(self):
        entries = tuple(self.entries)
        if not entries:
            raise ValueError("library needs at least one endmember")
        names = [e.name for e in entries]
        if len(set(names)) != len(names):
            raise ValueError("endmember names must be unique")
        object.__setattr__(self, "entries", entries)

    @property
    def names(self) -> list[str]:
        return [e.name for e in self.entries]

    def __len__(self):
        return len(self.entries)


@dataclass(frozen=True)
class MixedSpectrum:
    """An observed mixture; values may leave [0, 1] through noise."""

    grid: WavenumberGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        v.flags.writeable = False
        if v.shape != (len(self.grid),):
            raise ValueError("values length must match grid length")
        if not np.all(np.isfinite(v)):
            raise ValueError("mixture values must be finite")
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class XSolverConfig:
    """Budget for the accelerated projected-gradient abundance solver."""

    steps: int = 3000
    grad_tol: float = 1e-14

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError("steps must be >= 1")


@dataclass(frozen=True)
class UnmixConfig:
    p: float = 0.95
    lambda_p: float = 1e-4
    outer_iters: int = 100
    x_solver: XSolverConfig = field(default_factory=XSolverConfig)
    lambda_step: AdamConfig = field(
        default_factory=lambda: AdamConfig(learning_rate=0.01, steps=1)
    )
    p_epsilon: float = P_EPSILON

    def __post_init__(self):
        if not 0.0 < self.p <= 1.0:
            raise ValueError("p must lie in (0, 1]")
        if self.lambda_p < 0.0:
            raise ValueError("lambda_p must be >= 0")
        if self.outer_iters < 1:
            raise ValueError("outer_iters must be >= 1")


@dataclass(frozen=True)
class UnmixResult:
    abundances: SimplexVector
    refined: tuple[DispersionParams, ...]
    residual_rms: float
    loss_trace: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.residual_rms < 0.0:
            raise ValueError("residual_rms must be non-negative")


def build_mixing_matrix(library: EndmemberLibrary) -> np.ndarray:
    """Render every endmember into a column of the mixing matrix."""
    cols = [render(e.params, library.grid).emissivity for e in library.entries]
    return np.column_stack(cols)


def _sparsity_penalty(x, p, lam, eps):
    """Smoothed L_p mass `lam * sum((x_j + eps)^p)`.

    Extended linearly (C1) below zero so momentum-extrapolated iterates
    outside the simplex still evaluate; feasible points are unaffected.
    """
    pos = np.maximum(x, 0.0)
    vals = (pos + eps) ** p + p * eps ** (p - 1.0) * np.minimum(x, 0.0)
    return lam * float(vals.sum())


def _sparsity_gradient(x, p, lam, eps):
    return lam * p * (np.maximum(x, 0.0) + eps) ** (p - 1.0)


def _check_shapes(a: np.ndarray, b: MixedSpectrum):
    if a.ndim != 2 or a.shape[0] != len(b.grid):
        raise ValueError("matrix rows must match the observed grid")


def solve_abundances(
    a: np.ndarray,
    b: MixedSpectrum,
    p: float = 0.95,
    lambda_p: float = 0.0,
    solver: XSolverConfig | None = None,
    p_epsilon: float = P_EPSILON,
) -> SimplexVector:
    """Simplex-constrained least squares with an optional L_p penalty.

    Accelerated projected gradient with the exact quadratic step size
    1/(2*lambda_max of the Gram matrix). `lambda_p = 0` recovers plain
    sum-to-one non-negative least squares. Deterministic: starts from the
    uniform simplex point, no randomness.
    """
    _check_shapes(a, b)
    cfg = solver or XSolverConfig()
    n = a.shape[1]
    gram = a.T @ a
    corr = a.T @ b.values
    offset = float(b.values @ b.values)
    lipschitz = 2.0 * float(np.linalg.eigvalsh(gram)[-1])
    if lipschitz <= 0.0:
        raise NumericalFailure("degenerate mixing matrix (zero columns)")

    def objective(x):
        quad = float(x @ gram @ x - 2.0 * (corr @ x)) + offset
        grad = 2.0 * (gram @ x - corr)
        if lambda_p > 0.0:
            quad += _sparsity_penalty(x, p, lambda_p, p_epsilon)
            grad += _sparsity_gradient(x, p, lambda_p, p_epsilon)
        return quad, grad

    init = np.full(n, 1.0 / n)
    result = minimize_projected_gradient(
        objective,
        init,
        project_simplex_raw,
        1.0 / lipschitz,
        cfg.steps,
        grad_tol=cfg.grad_tol,
    )
    return SimplexVector(project_simplex_raw(result.params))


def fcls(
    a: np.ndarray, b: MixedSpectrum, solver: XSolverConfig | None = None
) -> SimplexVector:
    """Fully constrained least squares: sum-to-one and non-negativity."""
    return solve_abundances(a, b, lambda_p=0.0, solver=solver)


def _objective_value(a, x, b_values, p, lambda_p, p_eps):
    r = b_values - a @ x
    return float(r @ r) + (_sparsity_penalty(x, p, lambda_p, p_eps) if lambda_p > 0 else 0.0)


def analysis_by_synthesis(
    library: EndmemberLibrary, b: MixedSpectrum, config: UnmixConfig | None = None
) -> UnmixResult:
    """Alternate abundance solves with box-projected parameter refinement.

    Parameters start at the fitted library values; abundances re-solve from
    scratch each outer iteration while one persistent Adam state walks the
    dispersion parameters (in box-normalized coordinates) down the current
    reconstruction error. Returns the best-objective iterate seen.
    """
    cfg = config or UnmixConfig()
    if b.grid != library.grid:
        raise ValueError("mixture grid must match library grid")
    omega = library.grid.values
    y = b.values
    entries = library.entries
    structures = [e.params.structure for e in entries]
    lowers = [e.box.lower for e in entries]
    widths = [e.box.width for e in entries]
    sizes = [s.size for s in structures]
    offsets = np.cumsum([0] + sizes)

    # one concatenated normalized vector drives all endmembers
    z = np.concatenate(
        [
            _normalized(flatten_params(e.params), e.box)
            for e in entries
        ]
    )
    lam_state = AdamState.init(z, cfg.lambda_step)

    def vec_of(zfull, j):
        zj = zfull[offsets[j]:offsets[j + 1]]
        return lowers[j] + zj * widths[j]

    def columns(zfull):
        return np.column_stack(
            [
                render_flat(structures[j], vec_of(zfull, j), omega)
                for j in range(len(entries))
            ]
        )

    best = None  # (objective, x, z)
    trace = []
    x = np.full(len(entries), 1.0 / len(entries))
    for it in range(cfg.outer_iters):
        a = columns(lam_state.params)
        try:
            x = solve_abundances(
                a, b, cfg.p, cfg.lambda_p, cfg.x_solver, cfg.p_epsilon
            ).values
        except NumericalFailure as exc:
            raise NumericalFailure(
                f"abundance solve failed at outer iteration {it}"
            ) from exc
        obj = _objective_value(a, x, y, cfg.p, cfg.lambda_p, cfg.p_epsilon)
        trace.append(obj)
        if best is None or obj < best[0]:
            best = (obj, x.copy(), lam_state.params.copy())

        for _ in range(cfg.lambda_step.steps):
            grad = np.empty_like(lam_state.params)
            resid = y - columns(lam_state.params) @ x
            for j in range(len(entries)):
                _, jac = render_flat_with_jacobian(
                    structures[j], vec_of(lam_state.params, j), omega
                )
                grad[offsets[j]:offsets[j + 1]] = (
                    -2.0 * x[j] * (jac.T @ resid) * widths[j]
                )
            lam_state = adam_step(
                lam_state, grad, lambda zz: np.clip(zz, 0.0, 1.0)
            )
        a_post = columns(lam_state.params)
        obj_post = _objective_value(a_post, x, y, cfg.p, cfg.lambda_p, cfg.p_epsilon)
        if obj_post < best[0]:
            best = (obj_post, x.copy(), lam_state.params.copy())

    obj_best, x_best, z_best = best
    refined = tuple(
        unflatten_params(structures[j], vec_of(z_best, j))
        for j in range(len(entries))
    )
    a_best = columns(z_best)
    resid = y - a_best @ x_best
    return UnmixResult(
        abundances=SimplexVector(x_best),
        refined=refined,
        residual_rms=float(np.sqrt(np.mean(resid**2))),
        loss_trace=np.asarray(trace),
    )


def _normalized(vec: np.ndarray, box: ParamBox) -> np.ndarray:
    width = np.where(box.width > 0.0, box.width, 1.0)
    return np.clip((vec - box.lower) / width, 0.0, 1.0)


@dataclass(frozen=True)
class FixedLibraryResult:
    """Unmixing outcome on a fixed matrix (no parameter refinement)."""

    abundances: SimplexVector
    residual_rms: float


def unmix_fixed(
    library: EndmemberLibrary,
    b: MixedSpectrum,
    method: str,
    config: UnmixConfig | None = None,
) -> FixedLibraryResult:
    """FCLS or L_p unmixing against the library's rendered matrix."""
    cfg = config or UnmixConfig()
    a = build_mixing_matrix(library)
    if method == "fcls":
        x = fcls(a, b, cfg.x_solver)
    elif method == "lp":
        x = solve_abundances(
            a, b, cfg.p, cfg.lambda_p, cfg.x_solver, cfg.p_epsilon
        )
    else:
        raise ValueError(f"unknown fixed-library method {method!r}")
    resid = b.values - a @ x.values
    return FixedLibraryResult(x, float(np.sqrt(np.mean(resid**2))))


def _batch_job(args):
    library, b, config = args
    return analysis_by_synthesis(library, b, config)


def unmix_batch(
    library: EndmemberLibrary,
    mixtures: list[MixedSpectrum],
    config: UnmixConfig | None = None,
) -> list[UnmixResult]:
    """Unmix many pixels; each owns a private copy of the library state."""
    return _parallel.pmap(_batch_job, [(library, b, config) for b in mixtures])
