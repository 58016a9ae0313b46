import numpy as np
import pytest

from dispersion_unmix.types import WavenumberGrid, single_axis_params


@pytest.fixture
def grid():
    return WavenumberGrid(np.linspace(200.0, 2000.0, 241))


@pytest.fixture
def quartz_like_band():
    """The single-band reference model used across the suite."""
    return single_axis_params([1161.0], [0.1], [0.67], 2.356)


def random_params(rng, max_bands=5, n_axes=None):
    """Valid random parameter set, band strengths kept off the FD kink at 0."""
    from dispersion_unmix.types import AxisParams, DispersionParams, OscillatorBank

    m = n_axes or int(rng.integers(1, 3))
    axes = []
    for _ in range(m):
        k = int(rng.integers(0, max_bands + 1))
        axes.append(
            AxisParams(
                OscillatorBank(
                    np.sort(rng.uniform(250.0, 1350.0, k)),
                    rng.uniform(0.01, 0.2, k),
                    rng.uniform(0.01, 0.6, k),
                ),
                float(rng.uniform(1.0, 4.0)),
            )
        )
    if m == 1:
        alpha = np.array([1.0])
    else:
        raw = rng.uniform(0.2, 0.8, m)
        alpha = raw / raw.sum()
    return DispersionParams(tuple(axes), alpha)
