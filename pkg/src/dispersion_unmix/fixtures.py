"""Bundled mineral dispersion parameters.

Fitted oscillator tables for three reference minerals, each with two
optical axes. Rows are (omega0, gamma, rho); the dielectric baseline is
one scalar per axis. The source tables do not assign axis weights, so
fixtures default to a uniform split (override via JSON if needed).
"""

from __future__ import annotations

import numpy as np

from .types import AxisParams, DispersionParams, OscillatorBank

_OLIVINE_FO10 = (
    # axis 0: eps_r = 1.07
    (1.07, (
        (258.45, 0.018, 0.022),
        (272.71, 0.038, 0.070),
        (285.33, 0.027, 0.035),
        (340.81, 0.021, 0.015),
        (361.06, 0.067, 0.187),
        (467.03, 0.060, 0.091),
        (589.36, 0.032, 0.043),
        (826.60, 0.011, 0.015),
        (863.05, 0.030, 0.083),
        (934.94, 0.018, 0.038),
        (1068.56, 0.009, 0.001),
        (1349.50, 0.043, 0.009),
        (1400.46, 0.057, 0.026),
        (1452.82, 0.064, 0.020),
        (1518.96, 0.079, 0.025),
        (1597.62, 0.018, 0.001),
        (1694.56, 0.043, 0.007),
        (1794.69, 0.032, 0.002),
        (1837.96, 0.009, 0.001),
        (1934.50, 0.056, 0.020),
    )),
    # axis 1: eps_r = 1.99
    (1.99, (
        (293.77, 0.042, 0.240),
        (303.28, 0.058, 0.263),
        (317.16, 0.137, 0.356),
        (473.47, 0.006, 0.002),
        (496.39, 0.029, 0.030),
        (504.45, 0.062, 0.302),
        (562.92, 0.055, 0.057),
        (577.32, 0.027, 0.008),
        (891.85, 0.023, 0.189),
        (990.28, 0.047, 0.086),
        (1108.25, 0.023, 0.006),
    )),
)

_BIOTITE = (
    # axis 0: eps_r = 1.31
    (1.31, (
        (235.91, 0.066, 0.2343),
        (432.39, 0.056, 0.4040),
        (439.80, 0.039, 0.4131),
        (446.34, 0.014, 0.0385),
        (451.92, 0.042, 0.4797),
        (594.57, 0.073, 0.0147),
        (954.50, 0.036, 0.2510),
        (1008.94, 0.014, 0.0578),
        (1013.39, 0.017, 0.0184),
        (1041.20, 0.048, 0.0178),
        (1075.68, 0.025, 0.0198),
        (1116.66, 0.007, 0.0003),
        (1152.61, 0.019, 0.0012),
        (1390.98, 0.044, 0.0177),
        (1460.91, 0.061, 0.0280),
        (1524.44, 0.065, 0.0676),
        (1629.72, 0.025, 0.0271),
        (1661.44, 0.007, 0.0034),
        (1687.84, 0.068, 0.0723),
        (1772.30, 0.074, 0.0877),
        (1813.27, 0.006, 0.0009),
        (1865.48, 0.064, 0.0731),
        (1964.44, 0.055, 0.0131),
    )),
    # axis 1: eps_r = 2.61
    (2.61, (
        (268.77, 0.073, 0.4634),
        (294.51, 0.045, 0.1965),
        (313.92, 0.064, 0.3242),
        (337.12, 0.093, 0.4930),
        (362.24, 0.062, 0.1954),
        (400.00, 0.209, 0.5174),
        (462.66, 0.065, 0.4399),
        (492.95, 0.080, 0.3498),
        (510.47, 0.061, 0.0664),
        (653.21, 0.078, 0.0611),
        (718.49, 0.040, 0.0331),
        (873.68, 0.115, 0.3343),
        (928.32, 0.048, 0.0488),
        (991.97, 0.015, 0.3550),
        (1588.86, 0.040, 0.0607),
        (1963.15, 0.004, 0.0023),
        (1989.53, 0.001, 0.0002),
    )),
)

_HEMATITE = (
    # axis 0: eps_r = 1.27
    (1.27, (
        (258.29, 0.11, 0.110),
        (279.35, 0.13, 0.141),
        (294.73, 0.11, 0.149),
        (335.86, 0.08, 0.130),
        (471.32, 0.07, 0.098),
        (526.58, 0.05, 0.029),
        (543.94, 0.07, 0.062),
        (563.14, 0.08, 0.067),
        (609.37, 0.04, 0.041),
        (619.61, 0.04, 0.041),
        (632.43, 0.07, 0.067),
        (654.46, 0.09, 0.054),
        (686.74, 0.12, 0.038),
        (798.98, 0.04, 0.011),
        (890.21, 0.03, 0.009),
        (916.82, 0.02, 0.005),
        (958.26, 0.04, 0.014),
        (1002.55, 0.04, 0.010),
        (1100.72, 0.03, 0.022),
        (1167.07, 0.02, 0.010),
        (1238.37, 0.01, 0.005),
        (1282.36, 0.03, 0.019),
    )),
    # axis 1: eps_r = 1.25
    (1.25, (
        (234.31, 0.02, 0.007),
        (238.56, 0.06, 0.031),
        (312.13, 0.09, 0.255),
        (356.47, 0.04, 0.032),
        (430.53, 0.09, 0.085),
        (444.75, 0.06, 0.032),
        (457.95, 0.04, 0.011),
        (486.07, 0.03, 0.019),
        (577.56, 0.08, 0.160),
        (727.69, 0.06, 0.049),
        (748.13, 0.07, 0.040),
        (773.90, 0.06, 0.013),
        (1049.92, 0.10, 0.058),
        (1069.60, 0.01, 0.003),
        (1140.36, 0.02, 0.012),
        (1197.28, 0.04, 0.022),
        (1256.54, 0.02, 0.010),
    )),
)


_TABLES = {
    "olivine_fo10": _OLIVINE_FO10,
    "biotite": _BIOTITE,
    "hematite": _HEMATITE,
}

FIXTURE_NAMES = tuple(sorted(_TABLES))


def load_fixture_params(name: str) -> DispersionParams:
    """One of the bundled mineral parameter sets, uniform axis weights."""
    try:
        table = _TABLES[name]
    except KeyError:
        raise KeyError(
            f"unknown fixture {name!r}; available: {', '.join(FIXTURE_NAMES)}"
        ) from None
    axes = []
    for eps_r, bands in table:
        arr = np.asarray(bands, dtype=float)
        axes.append(
            AxisParams(OscillatorBank(arr[:, 0], arr[:, 1], arr[:, 2]), eps_r)
        )
    return DispersionParams(tuple(axes), np.full(len(axes), 1.0 / len(axes)))


def fixture_rows(name: str) -> list[tuple[int, int, float, float, float, float]]:
    """(axis, index, omega0, gamma, rho, eps_r) rows, for golden checks."""
    rows = []
    for m, (eps_r, bands) in enumerate(_TABLES[name]):
        for i, (w0, g, r) in enumerate(bands):
            rows.append((m, i, w0, g, r, eps_r))
    return rows
