"""Synthetic data generation.

Perturbs dispersion parameters inside physical bounds, mixes endmembers
linearly, and adds radiance-shaped Gaussian noise: measured emissivity is
radiance divided by a blackbody curve, so flat radiance noise becomes
emissivity noise scaled by 1/B(omega, T). Also hosts the k-means exemplar
extraction used to distill coarse-material spectra into fit-ready targets.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import render, render_flat
from .optim import SimplexVector
from .types import (
    EPS_R_MIN,
    GAMMA_MIN,
    OMEGA0_MIN,
    DispersionParams,
    Spectrum,
    WavenumberGrid,
    flatten_params,
    unflatten_params,
)
from .unmix import EndmemberLibrary, MixedSpectrum

# Second radiation constant, cm*K.
C2_CM_K = 1.4387768775


@dataclass(frozen=True)
class PerturbSpec:
    """Ranges for random per-band parameter perturbation.

    Resonances shift additively (cm^-1); damping, strength and the
    dielectric baseline scale multiplicatively. Zero-width ranges make the
    perturbation deterministic.
    """

    omega0_shift: tuple[float, float] = (0.0, 0.0)
    gamma_scale: tuple[float, float] = (1.0, 1.0)
    rho_scale: tuple[float, float] = (1.0, 1.0)
    eps_scale: tuple[float, float] = (1.0, 1.0)
    seed: int = 0

    def __post_init__(self):
        for name in ("gamma_scale", "rho_scale", "eps_scale"):
            lo, hi = getattr(self, name)
            if lo <= 0.0 or hi < lo:
                raise ValueError(f"{name} must be a positive range")
        lo, hi = self.omega0_shift
        if hi < lo:
            raise ValueError("omega0_shift range is inverted")


@dataclass(frozen=True)
class NoiseSpec:
    """Radiance-domain Gaussian noise, expressed against peak radiance."""

    sigma_radiance: float = 0.0
    temperature: float = 330.0
    seed: int = 0

    def __post_init__(self):
        if self.sigma_radiance < 0.0:
            raise ValueError("sigma_radiance must be >= 0")
        if self.temperature <= 0.0:
            raise ValueError("temperature must be positive")


def perturb_params(
    params: DispersionParams,
    spec: PerturbSpec,
    rng: np.random.Generator | None = None,
) -> DispersionParams:
    """Randomly move every band inside the spec's ranges.

    Draws come from `spec.seed` unless an explicit generator is handed in
    (batch generation derives one stream per mixture). Outputs are clamped
    to the hard validity bounds.
    """
    rng = rng or np.random.default_rng(spec.seed)
    s = params.structure
    vec = flatten_params(params)
    out = vec.copy()
    for m in range(s.n_axes):
        k = s.bands_per_axis[m]
        sl = s.omega0_slice(m)
        out[sl] = np.maximum(
            vec[sl] + rng.uniform(*spec.omega0_shift, k), OMEGA0_MIN
        )
        sl = s.gamma_slice(m)
        out[sl] = np.maximum(vec[sl] * rng.uniform(*spec.gamma_scale, k), GAMMA_MIN)
        sl = s.rho_slice(m)
        out[sl] = np.maximum(vec[sl] * rng.uniform(*spec.rho_scale, k), 0.0)
        i = s.eps_r_index(m)
        out[i] = max(vec[i] * rng.uniform(*spec.eps_scale), EPS_R_MIN)
    return unflatten_params(s, out)


def planck(omega, temperature: float):
    """Relative blackbody spectral radiance over wavenumber.

    Proportional form `omega^3 / expm1(c2*omega/T)`; absolute radiometric
    constants never enter the pipeline, callers normalize per grid.
    """
    omega = np.asarray(omega, dtype=float)
    if np.any(omega <= 0.0) or temperature <= 0.0:
        raise ValueError("omega and temperature must be positive")
    return omega**3 / np.expm1(C2_CM_K * omega / temperature)


def planck_normalized(grid: WavenumberGrid, temperature: float) -> np.ndarray:
    """Planck curve scaled to peak 1 over the evaluation grid."""
    b = planck(grid.values, temperature)
    return b / b.max()


def noise_sigma_profile(grid: WavenumberGrid, noise: NoiseSpec) -> np.ndarray:
    """Per-sample emissivity noise standard deviation sigma(omega)."""
    return noise.sigma_radiance / np.sqrt(planck_normalized(grid, noise.temperature))


def add_emissivity_noise(
    spectrum: Spectrum,
    noise: NoiseSpec,
    rng: np.random.Generator | None = None,
) -> Spectrum:
    """Add independent Gaussian noise with variance sigma_r^2 / B_norm."""
    if noise.sigma_radiance == 0.0:
        return Spectrum(spectrum.grid, spectrum.emissivity, measured=True)
    rng = rng or np.random.default_rng(noise.seed)
    sigma = noise_sigma_profile(spectrum.grid, noise)
    noisy = spectrum.emissivity + rng.standard_normal(len(spectrum.grid)) * sigma
    return Spectrum(spectrum.grid, noisy, measured=True)


@dataclass(frozen=True)
class MixtureRecord:
    """Ground truth for one synthetic mixture; replays bit-exactly."""

    abundances: SimplexVector
    perturbed: tuple[DispersionParams, ...]
    noise: NoiseSpec
    perturb_seed: int

    def replay_noiseless(self, grid: WavenumberGrid) -> np.ndarray:
        cols = [render(p, grid).emissivity for p in self.perturbed]
        return np.column_stack(cols) @ self.abundances.values


def synthesize_mixture(
    library: EndmemberLibrary,
    abundances: SimplexVector,
    perturb: PerturbSpec,
    noise: NoiseSpec,
) -> tuple[MixedSpectrum, MixtureRecord]:
    """One synthetic mixed spectrum plus its ground-truth record."""
    if len(abundances) != len(library):
        raise ValueError("abundance length must match library size")
    prng = np.random.default_rng(perturb.seed)
    perturbed = tuple(
        perturb_params(e.params, perturb, prng) for e in library.entries
    )
    cols = np.column_stack([render(p, library.grid).emissivity for p in perturbed])
    clean = cols @ abundances.values  # convex mix of [0,1] columns stays in [0,1]
    noisy = add_emissivity_noise(Spectrum(library.grid, clean), noise)
    mixed = MixedSpectrum(library.grid, noisy.emissivity)
    record = MixtureRecord(abundances, perturbed, noise, perturb.seed)
    return mixed, record


def sample_abundances(
    n: int, rng: np.random.Generator, active: int = 0
) -> SimplexVector:
    """Uniform simplex draw; `active > 0` zeroes all but that many entries."""
    x = rng.dirichlet(np.ones(n))
    if 0 < active < n:
        keep = rng.choice(n, size=active, replace=False)
        mask = np.zeros(n)
        mask[keep] = x[keep]
        x = mask / mask.sum()
    return SimplexVector(x)


def kmeans_exemplars(
    spectra: list[Spectrum], k: int, seed: int = 0
) -> list[Spectrum]:
    """Lloyd's algorithm with k-means++ seeding, to assignment fixpoint.

    Centroids come back as spectra ready for dispersion-model fitting.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if len(spectra) < k:
        raise ValueError(f"need at least {k} spectra, got {len(spectra)}")
    grid = spectra[0].grid
    if any(s.grid != grid for s in spectra):
        raise ValueError("all spectra must share one grid")
    X = np.stack([s.emissivity for s in spectra])
    rng = np.random.default_rng(seed)
    centers = _kmeans_pp_init(X, k, rng)
    labels = None
    for _ in range(300):
        d2 = ((X[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new_labels = d2.argmin(axis=1)
        if labels is not None and np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for j in range(k):
            members = X[labels == j]
            if members.size:
                centers[j] = members.mean(axis=0)
            else:  # re-seed an empty cluster at the farthest point
                centers[j] = X[d2.min(axis=1).argmax()]
    measured = any(s.measured for s in spectra)
    return [Spectrum(grid, c, measured=measured) for c in centers]


def kmeans_inertia(spectra: list[Spectrum], centers: list[Spectrum]) -> float:
    """Within-cluster sum of squares for a given centroid set."""
    X = np.stack([s.emissivity for s in spectra])
    C = np.stack([c.emissivity for c in centers])
    d2 = ((X[:, None, :] - C[None, :, :]) ** 2).sum(axis=2)
    return float(d2.min(axis=1).sum())


def _kmeans_pp_init(X, k, rng):
    n = X.shape[0]
    centers = np.empty((k, X.shape[1]))
    centers[0] = X[rng.integers(n)]
    d2 = ((X - centers[0]) ** 2).sum(axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total <= 0.0:
            centers[j:] = centers[0]
            break
        probs = d2 / total
        centers[j] = X[rng.choice(n, p=probs)]
        d2 = np.minimum(d2, ((X - centers[j]) ** 2).sum(axis=1))
    return centers
