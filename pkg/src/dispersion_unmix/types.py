"""Core value types: wavenumber grids, spectra, and dispersion parameters.

Everything here is immutable after construction (arrays are marked
read-only) so values can be shared freely across threads and processes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

# Hard validity floors for dispersion parameters. Boxes, perturbations and
# random initializers all clamp against these.
OMEGA0_MIN = 1e-6
GAMMA_MIN = 1e-9
RHO_MIN = 0.0
EPS_R_MIN = 1.0

ALPHA_SUM_TOL = 1e-12


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class WavenumberGrid:
    """Strictly increasing wavenumber samples in cm^-1."""

    values: np.ndarray

    def __post_init__(self):
        v = _freeze(np.atleast_1d(self.values))
        if v.ndim != 1 or v.size < 2:
            raise ValueError("grid needs at least 2 samples")
        if not np.all(np.isfinite(v)):
            raise ValueError("grid values must be finite")
        if v[0] <= 0.0:
            raise ValueError("grid values must be positive")
        if not np.all(np.diff(v) > 0.0):
            raise ValueError("grid values must be strictly increasing")
        object.__setattr__(self, "values", v)

    def __len__(self):
        return self.values.size

    def __eq__(self, other):
        return isinstance(other, WavenumberGrid) and np.array_equal(
            self.values, other.values
        )


@dataclass(frozen=True)
class Spectrum:
    """Emissivity samples on a grid.

    Rendered spectra must lie in [0, 1]; measured spectra may exceed the
    bounds through noise, so `measured=True` relaxes the range check.
    """

    grid: WavenumberGrid
    emissivity: np.ndarray
    measured: bool = False

    def __post_init__(self):
        e = _freeze(np.atleast_1d(self.emissivity))
        if e.shape != (len(self.grid),):
            raise ValueError("emissivity length must match grid length")
        if not np.all(np.isfinite(e)):
            raise ValueError("emissivity must be finite")
        if not self.measured and (e.min() < 0.0 or e.max() > 1.0):
            raise ValueError("rendered emissivity must lie in [0, 1]")
        object.__setattr__(self, "emissivity", e)


@dataclass(frozen=True)
class ComplexIndexCurve:
    """Real and imaginary refractive index per grid sample.

    `floored` marks samples where the small-n floor replaced the raw value
    (a near-singular parameter configuration the optimizer may visit).
    """

    grid: WavenumberGrid
    n: np.ndarray
    k: np.ndarray
    floored: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        n = _freeze(self.n)
        k = _freeze(self.k)
        fl = self.floored
        if fl is None:
            fl = np.zeros(len(self.grid), dtype=bool)
        fl = np.array(fl, dtype=bool)
        fl.flags.writeable = False
        if n.shape != (len(self.grid),) or k.shape != (len(self.grid),):
            raise ValueError("n and k must match grid length")
        if n.min() <= 0.0:
            raise ValueError("refractive index n must be positive")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "floored", fl)

    @property
    def floor_count(self) -> int:
        return int(self.floored.sum())


@dataclass(frozen=True)
class OscillatorBank:
    """Per-band oscillator parameters: resonance, damping, strength."""

    omega0: np.ndarray
    gamma: np.ndarray
    rho: np.ndarray

    def __post_init__(self):
        w0 = _freeze(np.atleast_1d(self.omega0))
        g = _freeze(np.atleast_1d(self.gamma))
        r = _freeze(np.atleast_1d(self.rho))
        if not (w0.shape == g.shape == r.shape) or w0.ndim != 1:
            raise ValueError("omega0, gamma, rho must be 1-d of equal length")
        for name, a in (("omega0", w0), ("gamma", g), ("rho", r)):
            if not np.all(np.isfinite(a)):
                raise ValueError(f"{name} must be finite")
        if w0.size:
            if w0.min() <= 0.0:
                raise ValueError("omega0 must be positive")
            if g.min() <= 0.0:
                raise ValueError("gamma must be positive")
            if r.min() < 0.0:
                raise ValueError("rho must be non-negative")
        object.__setattr__(self, "omega0", w0)
        object.__setattr__(self, "gamma", g)
        object.__setattr__(self, "rho", r)

    @property
    def n_bands(self) -> int:
        return self.omega0.size

    @staticmethod
    def empty() -> "OscillatorBank":
        z = np.zeros(0)
        return OscillatorBank(z, z, z)


@dataclass(frozen=True)
class AxisParams:
    """One optical axis: an oscillator bank plus its dielectric baseline."""

    bank: OscillatorBank
    eps_r: float

    def __post_init__(self):
        er = float(self.eps_r)
        if not np.isfinite(er) or er < EPS_R_MIN:
            raise ValueError("eps_r must be finite and >= 1")
        object.__setattr__(self, "eps_r", er)


@dataclass(frozen=True)
class DispersionParams:
    """Full oscillator model: one or two axes mixed by convex weights."""

    axes: tuple[AxisParams, ...]
    alpha: np.ndarray

    def __post_init__(self):
        axes = tuple(self.axes)
        if not 1 <= len(axes) <= 2:
            raise ValueError("model supports one or two optical axes")
        a = _freeze(np.atleast_1d(self.alpha))
        if a.shape != (len(axes),):
            raise ValueError("alpha length must match the number of axes")
        if a.min() < 0.0:
            raise ValueError("alpha weights must be non-negative")
        if abs(a.sum() - 1.0) > ALPHA_SUM_TOL:
            raise ValueError("alpha weights must sum to 1")
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "alpha", a)

    @property
    def n_axes(self) -> int:
        return len(self.axes)

    @property
    def n_bands(self) -> int:
        return sum(ax.bank.n_bands for ax in self.axes)

    @property
    def structure(self) -> "ParamStructure":
        return ParamStructure(tuple(ax.bank.n_bands for ax in self.axes))


@dataclass(frozen=True)
class ParamStructure:
    """Shape of a parameter set: how many bands each axis carries.

    Defines the canonical flat ordering used for optimization and for
    Jacobian columns: per axis `omega0 | gamma | rho | eps_r`, then the
    axis weights.
    """

    bands_per_axis: tuple[int, ...]

    def __post_init__(self):
        bpa = tuple(int(k) for k in self.bands_per_axis)
        if not 1 <= len(bpa) <= 2 or any(k < 0 for k in bpa):
            raise ValueError("invalid band layout")
        object.__setattr__(self, "bands_per_axis", bpa)

    @property
    def n_axes(self) -> int:
        return len(self.bands_per_axis)

    @property
    def size(self) -> int:
        return sum(3 * k + 1 for k in self.bands_per_axis) + self.n_axes

    def axis_offset(self, m: int) -> int:
        return sum(3 * k + 1 for k in self.bands_per_axis[:m])

    def omega0_slice(self, m: int) -> slice:
        o = self.axis_offset(m)
        return slice(o, o + self.bands_per_axis[m])

    def gamma_slice(self, m: int) -> slice:
        o = self.axis_offset(m) + self.bands_per_axis[m]
        return slice(o, o + self.bands_per_axis[m])

    def rho_slice(self, m: int) -> slice:
        o = self.axis_offset(m) + 2 * self.bands_per_axis[m]
        return slice(o, o + self.bands_per_axis[m])

    def eps_r_index(self, m: int) -> int:
        return self.axis_offset(m) + 3 * self.bands_per_axis[m]

    @property
    def alpha_slice(self) -> slice:
        o = self.axis_offset(self.n_axes)
        return slice(o, o + self.n_axes)

    def family_indices(self, family: str) -> np.ndarray:
        """Flat indices of one parameter family across all axes."""
        idx: list[int] = []
        for m in range(self.n_axes):
            if family == "omega0":
                s = self.omega0_slice(m)
            elif family == "gamma":
                s = self.gamma_slice(m)
            elif family == "rho":
                s = self.rho_slice(m)
            elif family == "eps_r":
                idx.append(self.eps_r_index(m))
                continue
            elif family == "alpha":
                s = self.alpha_slice
                return np.arange(s.start, s.stop)
            else:
                raise ValueError(f"unknown family {family!r}")
            idx.extend(range(s.start, s.stop))
        return np.asarray(idx, dtype=int)

    def labels(self) -> list[str]:
        out = []
        for m, k in enumerate(self.bands_per_axis):
            out += [f"axis{m}.omega0[{i}]" for i in range(k)]
            out += [f"axis{m}.gamma[{i}]" for i in range(k)]
            out += [f"axis{m}.rho[{i}]" for i in range(k)]
            out.append(f"axis{m}.eps_r")
        out += [f"alpha[{m}]" for m in range(self.n_axes)]
        return out


def flatten_params(params: DispersionParams) -> np.ndarray:
    """Canonical flat vector of every free scalar parameter."""
    chunks = []
    for ax in params.axes:
        chunks += [ax.bank.omega0, ax.bank.gamma, ax.bank.rho, [ax.eps_r]]
    chunks.append(params.alpha)
    return np.concatenate([np.asarray(c, dtype=float) for c in chunks])


def unflatten_params(structure: ParamStructure, vec: np.ndarray) -> DispersionParams:
    """Rebuild a validated parameter set from its canonical flat vector."""
    vec = np.asarray(vec, dtype=float)
    if vec.shape != (structure.size,):
        raise ValueError("flat vector does not match structure")
    axes = []
    for m in range(structure.n_axes):
        bank = OscillatorBank(
            vec[structure.omega0_slice(m)],
            vec[structure.gamma_slice(m)],
            vec[structure.rho_slice(m)],
        )
        axes.append(AxisParams(bank, vec[structure.eps_r_index(m)]))
    return DispersionParams(tuple(axes), vec[structure.alpha_slice])


@dataclass(frozen=True)
class ParamBox:
    """Elementwise bounds on a flat parameter vector.

    Bounds share the canonical layout of the boxed parameters. The hard
    validity floors must hold at both bounds; the alpha block may be any
    sub-interval of [0, 1] (it is not required to sum to one, the simplex
    constraint is enforced separately).
    """

    structure: ParamStructure
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = _freeze(self.lower)
        hi = _freeze(self.upper)
        n = self.structure.size
        if lo.shape != (n,) or hi.shape != (n,):
            raise ValueError("bounds must match structure size")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise ValueError("bounds must be finite")
        if np.any(lo > hi):
            raise ValueError("lower bound exceeds upper bound")
        s = self.structure
        checks = [
            ("omega0", OMEGA0_MIN), ("gamma", GAMMA_MIN),
            ("rho", RHO_MIN), ("eps_r", EPS_R_MIN),
        ]
        for family, floor in checks:
            idx = s.family_indices(family)
            if idx.size and lo[idx].min() < floor:
                raise ValueError(f"{family} lower bound violates validity floor")
        ai = s.family_indices("alpha")
        if lo[ai].min() < 0.0 or hi[ai].max() > 1.0:
            raise ValueError("alpha bounds must lie in [0, 1]")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    def contains(self, vec: np.ndarray, atol: float = 1e-12) -> bool:
        vec = np.asarray(vec, dtype=float)
        return bool(
            np.all(vec >= self.lower - atol) and np.all(vec <= self.upper + atol)
        )

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower


def single_axis_params(
    omega0: Sequence[float],
    gamma: Sequence[float],
    rho: Sequence[float],
    eps_r: float,
) -> DispersionParams:
    """Convenience constructor for a one-axis model."""
    bank = OscillatorBank(np.asarray(omega0), np.asarray(gamma), np.asarray(rho))
    return DispersionParams((AxisParams(bank, eps_r),), np.array([1.0]))


def bare_dielectric(eps_r: float, n_axes: int = 1) -> DispersionParams:
    """A K=0 model: constant dielectric with no oscillators."""
    axes = tuple(AxisParams(OscillatorBank.empty(), eps_r) for _ in range(n_axes))
    return DispersionParams(axes, np.full(n_axes, 1.0 / n_axes))
