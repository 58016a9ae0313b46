"""Dispersion-model spectral rendering, endmember fitting, and unmixing."""

__version__ = "0.1.0"

from .fitting import (
    BoxTolerances,
    FitConfig,
    FitResult,
    fit_endmember,
    make_tolerance_box,
    select_axis_count,
)
from .fixtures import FIXTURE_NAMES, load_fixture_params
from .model import (
    emissivity_single_axis,
    permittivity_parts,
    refractive_index,
    render,
    render_with_gradient,
)
from .optim import AdamConfig, NumericalFailure, SimplexVector, project_simplex
from .synth import (
    NoiseSpec,
    PerturbSpec,
    add_emissivity_noise,
    kmeans_exemplars,
    perturb_params,
    planck,
    synthesize_mixture,
)
from .types import (
    AxisParams,
    ComplexIndexCurve,
    DispersionParams,
    OscillatorBank,
    ParamBox,
    Spectrum,
    WavenumberGrid,
)
from .unmix import (
    EndmemberLibrary,
    LibraryEntry,
    MixedSpectrum,
    UnmixConfig,
    UnmixResult,
    analysis_by_synthesis,
    build_mixing_matrix,
    fcls,
    solve_abundances,
)

__all__ = [name for name in dir() if not name.startswith("_")]
