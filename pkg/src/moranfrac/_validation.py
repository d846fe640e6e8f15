"""Input checks shared by the estimator classes."""
from __future__ import annotations

import numpy as np
from sklearn.utils import check_array

from .catalog import resolve_spec
from .errors import SequenceError
from .sequences import SequenceSpec, validate


def check_spec(spec, probe_depth: int = 256) -> SequenceSpec:
    """Resolve ``spec`` and raise on the first violated invariant."""
    spec = resolve_spec(spec)
    validate(spec, probe_depth).raise_if_failed()
    return spec


def check_thetas(thetas) -> np.ndarray:
    """1-D float array of spectrum parameters, each strictly inside (0, 1)."""
    arr = check_array(np.atleast_1d(np.asarray(thetas, dtype=float)), ensure_2d=False,
                      ensure_min_samples=0)
    if arr.ndim == 2 and arr.shape[1] == 1:
        arr = arr[:, 0]
    if arr.ndim != 1:
        raise ValueError(f"thetas must be 1-D, got shape {arr.shape}")
    if arr.size and ((arr <= 0).any() or (arr >= 1).any()):
        raise SequenceError("theta values must lie strictly between 0 and 1")
    return arr


def check_depth(depth, name="depth", minimum=1) -> int:
    if isinstance(depth, bool) or not isinstance(depth, (int, np.integer)) or depth < minimum:
        raise ValueError(f"{name} must be an integer >= {minimum}, got {depth!r}")
    return int(depth)
