"""Numerical characterization of the mixing matrix.

The abundance subproblem's conditioning governs how fast the alternating
optimization converges, so the toolkit reports rank, condition number and
the normal-matrix eigenvalues, and can sweep them across random library
perturbations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .synth import PerturbSpec, perturb_params
from .unmix import EndmemberLibrary, build_mixing_matrix


@dataclass(frozen=True)
class MatrixReport:
    rows: int
    cols: int
    rank: int
    condition_number: float
    singular_values: np.ndarray
    eig_normal: np.ndarray

    def __post_init__(self):
        if self.rank > min(self.rows, self.cols):
            raise ValueError("rank exceeds matrix dimensions")
        if self.condition_number < 1.0:
            raise ValueError("condition number must be >= 1")
        sv = np.asarray(self.singular_values, dtype=float)
        if sv.size and (sv.min() < 0.0 or np.any(np.diff(sv) > 0.0)):
            raise ValueError("singular values must be non-negative descending")


def analyze_mixing_matrix(
    a: np.ndarray, rank_tolerance: float | None = None
) -> MatrixReport:
    """Singular-value report of a matrix.

    Works on the matrix itself, not its normal form: condition numbers in
    the thousands square into territory where a normal-matrix eigensolve
    loses digits. The normal-matrix eigenvalues are reported as the
    squared singular values. Rank counts singular values above
    `rank_tolerance * sigma_max` (default: max(rows, cols) * machine eps,
    the standard numerical-rank convention). Rank-deficient matrices get
    an infinite condition number.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.size == 0 or not np.all(np.isfinite(a)):
        raise ValueError("matrix must be 2-d, non-empty and finite")
    sv = np.linalg.svd(a, compute_uv=False)
    sigma_max = sv[0]
    if rank_tolerance is None:
        rank_tolerance = max(a.shape) * np.finfo(float).eps
    rank = int(np.sum(sv > rank_tolerance * sigma_max)) if sigma_max > 0 else 0
    full = rank == min(a.shape)
    condition = float(sigma_max / sv[-1]) if full and sv[-1] > 0 else math.inf
    return MatrixReport(
        rows=a.shape[0],
        cols=a.shape[1],
        rank=rank,
        condition_number=condition,
        singular_values=sv,
        eig_normal=sv**2,
    )


def condition_sweep(
    library: EndmemberLibrary,
    perturb: PerturbSpec,
    runs: int,
    seed: int = 0,
    rank_tolerance: float | None = None,
) -> list[MatrixReport]:
    """Rebuild and analyze the matrix across seeded library perturbations."""
    if runs < 1:
        raise ValueError("runs must be >= 1")
    from .model import render

    reports = []
    for run in range(runs):
        rng = np.random.default_rng(np.random.SeedSequence((seed, run)))
        cols = np.column_stack(
            [
                render(perturb_params(e.params, perturb, rng), library.grid).emissivity
                for e in library.entries
            ]
        )
        reports.append(analyze_mixing_matrix(cols, rank_tolerance))
    return reports


def sweep_csv_rows(reports: list[MatrixReport]) -> list[str]:
    """`run,rank,condition,eig_min,eig_max` rows for plotting."""
    rows = ["run,rank,condition,eig_min,eig_max"]
    for i, r in enumerate(reports):
        rows.append(
            f"{i},{r.rank},{r.condition_number:.17g},"
            f"{r.eig_normal[-1]:.17g},{r.eig_normal[0]:.17g}"
        )
    return rows
