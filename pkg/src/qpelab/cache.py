"""On-disk cache of optimized phase factors."""
from __future__ import annotations

import hashlib
import json
import os
from pathlib import Path

from .qsp import CONVENTION, PhaseFit, SignFunctionSpec, load_phases, optimize_phases, save_phases

ENV_VAR = "QPELAB_CACHE_DIR"


def cache_dir(override: str | Path | None = None) -> Path:
    if override is not None:
        return Path(override)
    env = os.environ.get(ENV_VAR)
    if env:
        return Path(env)
    return Path.home() / ".cache" / "qpelab"


def cache_key(spec: SignFunctionSpec, grid_size: int, seed: int, restarts: int) -> str:
    blob = json.dumps({"delta": repr(spec.delta), "kappa": repr(spec.kappa), "degree": spec.degree,
                       "grid": grid_size, "seed": seed, "restarts": restarts,
                       "convention": CONVENTION}, sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def cached_phases(spec: SignFunctionSpec, grid_size: int = 2000, seed: int = 0, restarts: int = 3,
                  directory: str | Path | None = None) -> PhaseFit:
    """Return fitted phases for ``spec``, optimizing only on a cache miss."""
    root = cache_dir(directory)
    path = root / f"phases_d{spec.degree}_{cache_key(spec, grid_size, seed, restarts)}.csv"
    if path.exists():
        fit = load_phases(path)
        if fit.spec == spec:
            return fit
    fit = optimize_phases(spec, grid_size, seed=seed, restarts=restarts)
    root.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(".tmp")
    save_phases(fit, tmp)
    tmp.replace(path)
    return fit
