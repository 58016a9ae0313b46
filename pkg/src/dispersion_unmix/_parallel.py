"""Process-pool helper shared by restarts, batch unmixing and sweeps.

Worker count comes from DISPERSION_UNMIX_THREADS (0 or unset = auto).
Mapped functions must be module-level so they pickle; children run serial
to avoid nested pools. Results keep input order, so parallel and serial
execution are bit-identical.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor

_ENV_VAR = "DISPERSION_UNMIX_THREADS"


def worker_count(n_items: int) -> int:
    raw = os.environ.get(_ENV_VAR, "0").strip() or "0"
    try:
        requested = int(raw)
    except ValueError:
        raise ValueError(f"{_ENV_VAR} must be an integer, got {raw!r}")
    if requested < 0:
        raise ValueError(f"{_ENV_VAR} must be >= 0")
    if requested == 0:
        requested = os.cpu_count() or 1
    return max(1, min(requested, n_items))


def _serial_child():
    os.environ[_ENV_VAR] = "1"


def pmap(fn, items):
    items = list(items)
    workers = worker_count(len(items))
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(workers, initializer=_serial_child) as pool:
        return list(pool.map(fn, items))
