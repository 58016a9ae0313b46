"""Lorentz-oscillator dispersion model: parameters to emissivity spectra.

The pipeline per optical axis is

    permittivity parts -> complex refractive index (n, k)
    -> normal-incidence reflectance -> emissivity = 1 - R

and a full model mixes axis emissivities with convex weights. Every stage
is written generically over floats, numpy arrays and `Dual` values, so the
exact Jacobian falls out of one forward pass per free parameter.
"""

from __future__ import annotations

import math

import numpy as np

from .dual import Dual, clip_min, sqrt, value
from .types import (
    AxisParams,
    ComplexIndexCurve,
    DispersionParams,
    ParamStructure,
    Spectrum,
    WavenumberGrid,
)

# Floor on n, keeping k = cross/n finite at the (measure-zero) configuration
# where the real permittivity is negative and the cross term vanishes.
N_FLOOR = 1e-8

_FOUR_PI = 4.0 * math.pi
_TWO_PI = 2.0 * math.pi


def _band_terms(omega_sq, omega, w0, g, rho):
    """One band's additive contribution to (real permittivity, n*k).

    `omega_sq`/`omega` are plain arrays; the band parameters may be Dual.
    """
    w0sq = w0 * w0
    diff = w0sq - omega_sq
    gw = g * w0
    denom = diff * diff + gw * gw * omega_sq
    scale = rho * w0sq / denom
    return scale * _FOUR_PI * diff, scale * _TWO_PI * gw * omega


def _nk_from_parts(re, cross):
    """Half-angle inversion of the complex permittivity to (n, k)."""
    mod = sqrt(re * re + 4.0 * (cross * cross))
    nsq = clip_min((re + mod) * 0.5, N_FLOOR * N_FLOOR)
    n = sqrt(nsq)
    return n, cross / n


def _emissivity_from_nk(n, k):
    num = (n - 1.0) * (n - 1.0) + k * k
    den = (n + 1.0) * (n + 1.0) + k * k
    return 1.0 - num / den


def _axis_terms(omega, omega0, gamma, rho, eps_r):
    """Primal per-band terms, all bands at once.

    Returns (t_re, t_cross) of shape (K, N) and the axis totals.
    """
    if omega0.size == 0:
        zero = np.zeros((0, omega.size))
        return zero, zero, np.full(omega.size, eps_r), np.zeros(omega.size)
    osq = omega * omega
    w0 = omega0[:, None]
    w0sq = w0 * w0
    diff = w0sq - osq[None, :]
    gw = gamma[:, None] * w0
    denom = diff * diff + gw * gw * osq[None, :]
    scale = rho[:, None] * w0sq / denom
    t_re = _FOUR_PI * scale * diff
    t_cross = _TWO_PI * scale * gw * omega[None, :]
    return t_re, t_cross, eps_r + t_re.sum(axis=0), t_cross.sum(axis=0)


def permittivity_parts(axis: AxisParams, omega):
    """Real permittivity and the n*k cross term at one or many wavenumbers.

    The cross term is half the (sign-flipped) imaginary permittivity; it is
    non-negative whenever every band strength is non-negative.
    """
    omega = np.asarray(omega, dtype=float)
    osq = omega * omega
    re = axis.eps_r + 0.0 * omega
    cross = 0.0 * omega
    b = axis.bank
    for i in range(b.n_bands):
        t_re, t_cr = _band_terms(osq, omega, b.omega0[i], b.gamma[i], b.rho[i])
        re = re + t_re
        cross = cross + t_cr
    return re, cross


def refractive_index(axis: AxisParams, grid: WavenumberGrid) -> ComplexIndexCurve:
    """Complex refractive index curve for a single axis."""
    re, cross = permittivity_parts(axis, grid.values)
    raw = (re + np.sqrt(re * re + 4.0 * cross * cross)) * 0.5
    floored = raw <= N_FLOOR * N_FLOOR
    n, k = _nk_from_parts(re, cross)
    return ComplexIndexCurve(grid, n, k, floored)


def emissivity_single_axis(axis: AxisParams, grid: WavenumberGrid) -> Spectrum:
    """Emissivity of one axis via normal-incidence reflectance."""
    n, k = _nk_from_parts(*permittivity_parts(axis, grid.values))
    return Spectrum(grid, _emissivity_from_nk(n, k))


def render(params: DispersionParams, grid: WavenumberGrid) -> Spectrum:
    """Model emissivity: convex mixture of the axis spectra."""
    return Spectrum(grid, render_flat(params.structure, _flat(params), grid.values))


def _flat(params: DispersionParams) -> np.ndarray:
    from .types import flatten_params

    return flatten_params(params)


def _axis_view(structure: ParamStructure, vec: np.ndarray, m: int):
    return (
        vec[structure.omega0_slice(m)],
        vec[structure.gamma_slice(m)],
        vec[structure.rho_slice(m)],
        vec[structure.eps_r_index(m)],
    )


def render_flat(
    structure: ParamStructure, vec: np.ndarray, omega: np.ndarray
) -> np.ndarray:
    """Emissivity from a flat parameter vector, without type validation.

    This is the unconstrained mathematical extension of `render`; the
    optimizers and the finite-difference checks evaluate it directly.
    """
    vec = np.asarray(vec, dtype=float)
    omega = np.asarray(omega, dtype=float)
    alpha = vec[structure.alpha_slice]
    out = np.zeros_like(omega)
    for m in range(structure.n_axes):
        w0, g, rho, er = _axis_view(structure, vec, m)
        _, _, re, cross = _axis_terms(omega, w0, g, rho, er)
        n, k = _nk_from_parts(re, cross)
        out += alpha[m] * _emissivity_from_nk(n, k)
    return out


def render_flat_with_jacobian(
    structure: ParamStructure, vec: np.ndarray, omega: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Emissivity and its exact Jacobian over the flat parameter vector.

    One dual pass per free scalar; only the owning band's term is
    re-evaluated because the permittivity is additive across bands.
    Column order matches the canonical flat layout.
    """
    vec = np.asarray(vec, dtype=float)
    omega = np.asarray(omega, dtype=float)
    osq = omega * omega
    alpha = vec[structure.alpha_slice]
    n_samples = omega.size
    jac = np.zeros((n_samples, structure.size))
    eps_total = np.zeros(n_samples)

    for m in range(structure.n_axes):
        w0, g, rho, er = _axis_view(structure, vec, m)
        _, _, re, cross = _axis_terms(omega, w0, g, rho, er)
        n, k = _nk_from_parts(re, cross)
        eps_axis = _emissivity_from_nk(n, k)
        eps_total += alpha[m] * eps_axis

        def column(d_re, d_cross):
            nd, kd = _nk_from_parts(Dual(re, d_re), Dual(cross, d_cross))
            return _emissivity_from_nk(nd, kd).dot

        w0_cols = structure.omega0_slice(m).start
        g_cols = structure.gamma_slice(m).start
        r_cols = structure.rho_slice(m).start
        for i in range(w0.size):
            base = (osq, omega)
            t_re, t_cr = _band_terms(*base, Dual(w0[i], 1.0), g[i], rho[i])
            jac[:, w0_cols + i] = alpha[m] * column(t_re.dot, t_cr.dot)
            t_re, t_cr = _band_terms(*base, w0[i], Dual(g[i], 1.0), rho[i])
            jac[:, g_cols + i] = alpha[m] * column(t_re.dot, t_cr.dot)
            t_re, t_cr = _band_terms(*base, w0[i], g[i], Dual(rho[i], 1.0))
            jac[:, r_cols + i] = alpha[m] * column(t_re.dot, t_cr.dot)
        jac[:, structure.eps_r_index(m)] = alpha[m] * column(
            np.ones(n_samples), np.zeros(n_samples)
        )
        jac[:, structure.alpha_slice.start + m] = eps_axis

    return eps_total, jac


def render_with_gradient(
    params: DispersionParams, grid: WavenumberGrid
) -> tuple[Spectrum, np.ndarray]:
    """Rendered spectrum plus the Jacobian over every free scalar parameter.

    Rows follow grid samples; columns follow the canonical flat layout
    (see `ParamStructure.labels`).
    """
    eps, jac = render_flat_with_jacobian(
        params.structure, _flat(params), grid.values
    )
    return Spectrum(grid, eps), jac
