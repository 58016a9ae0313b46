"""Projected first-order optimizers.

One engine serves both constrained problems in the pipeline: Adam with a
projection applied after every step. Box-constrained parameter refinement
projects by clamping; abundance estimation projects onto the probability
simplex.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .types import ParamBox


class NumericalFailure(RuntimeError):
    """Optimization hit a non-finite loss or gradient."""

    def __init__(self, message: str, step: int | None = None):
        super().__init__(message if step is None else f"{message} (step {step})")
        self.step = step


@dataclass(frozen=True)
class AdamConfig:
    learning_rate: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    weight_decay: float = 0.0
    steps: int = 500

    def __post_init__(self):
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise ValueError("betas must lie in [0, 1)")
        if self.learning_rate <= 0.0 or self.epsilon <= 0.0:
            raise ValueError("learning_rate and epsilon must be positive")
        if self.steps < 1:
            raise ValueError("steps must be a positive integer")


@dataclass(frozen=True)
class SimplexVector:
    """Non-negative weights summing to one."""

    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        v.flags.writeable = False
        if v.ndim != 1 or v.size == 0:
            raise ValueError("simplex vector must be non-empty and 1-d")
        if v.min() < 0.0:
            raise ValueError("simplex vector must be non-negative")
        if abs(v.sum() - 1.0) > 1e-10:
            raise ValueError("simplex vector must sum to 1")
        object.__setattr__(self, "values", v)

    def __len__(self):
        return self.values.size


def project_simplex_raw(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex.

    Sort-based threshold algorithm: find the largest support whose shifted
    values stay positive, then clip.
    """
    v = np.asarray(v, dtype=float)
    if v.size == 0 or not np.all(np.isfinite(v)):
        raise ValueError("input must be non-empty and finite")
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    j = np.arange(1, v.size + 1)
    support = u - (css - 1.0) / j > 0.0
    rho = int(np.nonzero(support)[0][-1])
    tau = (css[rho] - 1.0) / (rho + 1.0)
    return np.maximum(v - tau, 0.0)


def project_simplex(v) -> SimplexVector:
    return SimplexVector(project_simplex_raw(v))


def project_box(p: np.ndarray, box: ParamBox) -> np.ndarray:
    """Elementwise clamp onto [lower, upper]."""
    return np.clip(np.asarray(p, dtype=float), box.lower, box.upper)


Projection = Callable[[np.ndarray], np.ndarray]
Objective = Callable[[np.ndarray], tuple[float, np.ndarray]]


@dataclass(frozen=True)
class AdamState:
    """Value-style optimizer state; each step returns a fresh state."""

    params: np.ndarray
    m: np.ndarray
    v: np.ndarray
    step: int
    config: AdamConfig

    @staticmethod
    def init(params: np.ndarray, config: AdamConfig) -> "AdamState":
        p = np.asarray(params, dtype=float).copy()
        return AdamState(p, np.zeros_like(p), np.zeros_like(p), 0, config)


def adam_step(
    state: AdamState, gradient: np.ndarray, projection: Projection | None = None
) -> AdamState:
    """One bias-corrected Adam update, then an optional projection."""
    g = np.asarray(gradient, dtype=float)
    if g.shape != state.params.shape:
        raise ValueError("gradient shape must match parameters")
    if not np.all(np.isfinite(g)):
        raise NumericalFailure("non-finite gradient", state.step + 1)
    cfg = state.config
    if cfg.weight_decay != 0.0:
        g = g + cfg.weight_decay * state.params
    t = state.step + 1
    m = cfg.beta1 * state.m + (1.0 - cfg.beta1) * g
    v = cfg.beta2 * state.v + (1.0 - cfg.beta2) * (g * g)
    m_hat = m / (1.0 - cfg.beta1**t)
    v_hat = v / (1.0 - cfg.beta2**t)
    params = state.params - cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.epsilon)
    if projection is not None:
        params = projection(params)
    return AdamState(params, m, v, t, cfg)


@dataclass(frozen=True)
class MinimizeResult:
    params: np.ndarray
    loss: float
    trace: np.ndarray = field(repr=False)

    @property
    def running_best(self) -> np.ndarray:
        return np.minimum.accumulate(self.trace)


def minimize_projected(
    objective: Objective,
    init: np.ndarray,
    projection: Projection | None,
    config: AdamConfig,
    *,
    min_improvement: float = 1e-10,
    patience: int | None = 100,
) -> MinimizeResult:
    """Run projected Adam and keep the best feasible iterate seen.

    The loss trace holds one entry per evaluated iterate (the projected
    initial point first). Iteration stops early once the best loss has not
    improved by `min_improvement` for `patience` consecutive steps;
    `patience=None` always runs the full budget. The default patience is
    generous because Adam plateaus for tens of steps mid-run while its
    momentum turns a corner.
    """
    params = np.asarray(init, dtype=float)
    if projection is not None:
        params = projection(params)
    state = AdamState.init(params, config)
    loss, grad = objective(state.params)
    if not np.isfinite(loss):
        raise NumericalFailure("non-finite loss at initial point", 0)
    trace = [float(loss)]
    best_loss, best_params = float(loss), state.params.copy()
    stall = 0
    for step in range(1, config.steps + 1):
        state = adam_step(state, grad, projection)
        loss, grad = objective(state.params)
        if not np.isfinite(loss):
            raise NumericalFailure("non-finite loss", step)
        trace.append(float(loss))
        if loss < best_loss - min_improvement:
            best_loss, best_params = float(loss), state.params.copy()
            stall = 0
        else:
            if loss < best_loss:
                best_loss, best_params = float(loss), state.params.copy()
            stall += 1
            if patience is not None and stall >= patience:
                break
    return MinimizeResult(best_params, best_loss, np.asarray(trace))


def minimize_projected_gradient(
    objective: Objective,
    init: np.ndarray,
    projection: Projection,
    step_size: float,
    steps: int,
    *,
    accelerate: bool = True,
    grad_tol: float = 1e-14,
) -> MinimizeResult:
    """Projected gradient descent with optional Nesterov acceleration.

    The workhorse for simplex-constrained problems: unlike Adam, whose
    per-coordinate normalization collapses to a uniform step the simplex
    projection then cancels, plain gradient steps preserve the relative
    component magnitudes the projection needs. Acceleration restarts
    whenever the objective rises (classic adaptive-restart scheme).
    """
    if step_size <= 0.0:
        raise ValueError("step_size must be positive")
    x = projection(np.asarray(init, dtype=float))
    loss, grad = objective(x)
    if not np.isfinite(loss):
        raise NumericalFailure("non-finite loss at initial point", 0)
    trace = [float(loss)]
    best_loss, best_x = float(loss), x.copy()
    y = x.copy()
    t_momentum = 1.0
    prev_loss = loss
    for step in range(1, steps + 1):
        _, grad_y = objective(y) if accelerate else (None, grad)
        x_new = projection(y - step_size * grad_y)
        loss, grad = objective(x_new)
        if not np.isfinite(loss):
            raise NumericalFailure("non-finite loss", step)
        trace.append(float(loss))
        if loss < best_loss:
            best_loss, best_x = float(loss), x_new.copy()
        if accelerate:
            if loss > prev_loss:  # restart momentum
                t_next = 1.0
                y = x_new.copy()
            else:
                t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t_momentum**2))
                y = x_new + ((t_momentum - 1.0) / t_next) * (x_new - x)
            t_momentum = t_next
        else:
            y = x_new
        if np.max(np.abs(x_new - x)) < grad_tol * step_size:
            x = x_new
            break
        x = x_new
        prev_loss = loss
    return MinimizeResult(best_x, best_loss, np.asarray(trace))


def minimize_projected_ladder(
    objective: Objective,
    init: np.ndarray,
    projection: Projection | None,
    config: AdamConfig,
    lr_ladder: Sequence[float],
    *,
    min_improvement: float = 1e-10,
    patience: int | None = 100,
) -> MinimizeResult:
    """Restart `minimize_projected` over a decreasing learning-rate ladder.

    Each stage warm-starts from the best iterate so far; constant-rate Adam
    orbits its optimum at a step-size-scale distance, so annealing the rate
    is what buys the final digits.
    """
    params = np.asarray(init, dtype=float)
    best: MinimizeResult | None = None
    traces = []
    for lr in lr_ladder:
        stage = minimize_projected(
            objective,
            params,
            projection,
            replace(config, learning_rate=float(lr)),
            min_improvement=min_improvement,
            patience=patience,
        )
        traces.append(stage.trace)
        if best is None or stage.loss < best.loss:
            best = stage
        params = best.params
    assert best is not None
    return MinimizeResult(best.params, best.loss, np.concatenate(traces))


def write_trace_csv(trace: np.ndarray, path) -> None:
    """Persist a loss trace as `step,loss` rows."""
    with open(path, "w") as f:
        f.write("step,loss\n")
        for i, loss in enumerate(np.asarray(trace)):
            f.write(f"{i},{loss:.17g}\n")
