"""Experiment configuration, per-realization random streams and the worker pool."""

from __future__ import annotations

import contextlib
import dataclasses
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .basis import DENSE_GUARD, ChainGeometry, ConfigError, ResourceError, sector_dim
from .gates import FAMILIES

EXPERIMENTS = ("levelstats", "transport", "entanglement", "sample-gate", "calibrate")

# defaults sized for a workstation; raise n_realizations for production runs
DEFAULT_REALIZATIONS = {"levelstats": 1000, "transport": 100, "entanglement": 100,
                        "calibrate": 200, "sample-gate": 1}


@dataclass
class ExperimentConfig:
    experiment: str = "levelstats"
    L: int = 8
    q: int = 1
    r: int = 2
    T: int = 1
    family: str = "haar"
    parameter: float | None = None
    random_in_time: bool = False
    n_realizations: int | None = None
    seed: int = 0
    first_realization: int = 0
    n_up: int | None = None
    initial_state: str = "domain_wall"
    t_max: int = 100
    schedule: str = "log"
    times: list | None = None
    bin_width: float = 0.02
    u1_samples: int = 1000
    calibration: dict = field(default_factory=lambda: {
        "poisson_dim": 500, "poisson_realizations": 10_000,
        "cue_dim": 200, "cue_realizations": 200})
    out: str | None = None
    threads: int = 1

    def __post_init__(self):
        if self.n_realizations is None:
            self.n_realizations = DEFAULT_REALIZATIONS.get(self.experiment, 100)

    @property
    def geometry(self) -> ChainGeometry:
        return ChainGeometry(self.L, self.r, self.T, self.q)

    @property
    def sector_n_up(self) -> int:
        """n_up used by the experiment: explicit, else half filling (rounded down)."""
        return self.L // 2 if self.n_up is None else self.n_up

    def validate(self) -> "ExperimentConfig":
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}; choose from {EXPERIMENTS}")
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown family {self.family!r}; choose from {FAMILIES}")
        if self.family in ("perturbed_anderson", "perturbed_diagonal") and self.parameter is None:
            raise ConfigError(f"family {self.family!r} needs a 'parameter'")
        if self.family == "perturbed_diagonal" and self.parameter < 0:
            raise ConfigError("perturbed_diagonal needs parameter R >= 0")
        if self.family != "haar" and (self.r, self.q) != (2, 1):
            raise ConfigError(f"family {self.family!r} requires r=2, q=1")
        if self.n_realizations < 1:
            raise ConfigError("n_realizations must be >= 1")
        if self.first_realization < 0:
            raise ConfigError("first_realization must be >= 0")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        if self.experiment in ("sample-gate", "calibrate"):
            return self
        self.geometry  # noqa: B018 - raises ConfigError on bad geometry
        if not 0 <= self.sector_n_up <= self.L:
            raise ConfigError(f"n_up={self.n_up} outside [0, {self.L}]")
        if self.experiment == "levelstats":
            if self.random_in_time:
                raise ConfigError("level statistics need a Floquet (not random-in-time) circuit")
            dim = sector_dim(self.L, self.q, self.sector_n_up)
            if dim > DENSE_GUARD:
                raise ResourceError(f"sector dimension {dim} exceeds dense guard {DENSE_GUARD}")
            if dim < 3:
                raise ConfigError("sector too small for level statistics")
        if self.experiment in ("transport", "entanglement"):
            if self.t_max < 0:
                raise ConfigError("t_max must be >= 0")
            if self.initial_state not in ("domain_wall", "antiferromagnetic"):
                raise ConfigError(f"unknown initial_state {self.initial_state!r}")
        if self.experiment == "entanglement" and self.L % 2:
            raise ConfigError("half-chain entropy needs even L")
        return self

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @property
    def realization_indices(self) -> range:
        return range(self.first_realization, self.first_realization + self.n_realizations)

    def snapshot_times(self) -> np.ndarray:
        from .circuit import snapshot_times

        if self.times is not None:
            return np.array(sorted(set(int(t) for t in self.times)), dtype=int)
        return snapshot_times(self.t_max, self.schedule)


def load_config(path, **overrides) -> ExperimentConfig:
    """Read a YAML config; keyword overrides (e.g. from CLI flags) win."""
    data = yaml.safe_load(Path(path).read_text()) or {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a mapping at top level")
    geometry = data.pop("geometry", {}) or {}
    data.update(geometry)
    data.update({k: v for k, v in overrides.items() if v is not None})
    known = {f.name for f in dataclasses.fields(ExperimentConfig)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    return ExperimentConfig(**data)


# -- random streams ---------------------------------------------------------------

REALIZATION_STREAM = 0
REFERENCE_STREAM = 1


def realization_rng(seed: int, k: int, stream: int = REALIZATION_STREAM) -> np.random.Generator:
    """Generator for realization k, a pure function of (seed, stream, k)."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(stream, k)))


def _init_worker():
    # one BLAS thread per worker process; also keeps results independent of
    # the pool size
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ[var] = "1"
    _single_blas_thread()


def _single_blas_thread():
    try:
        from threadpoolctl import threadpool_limits
    except ImportError:  # pragma: no cover
        return contextlib.nullcontext()
    return threadpool_limits(1)


def map_realizations(func, indices, threads: int = 1, on_result=None):
    """Evaluate ``func(k)`` for each k, returning results in index order.

    ``on_result(k, value)`` is called as results arrive (in order), so callers
    can persist partial output.  A KeyboardInterrupt is turned into
    :class:`Interrupted` carrying the completed prefix.
    """
    indices = list(indices)
    results = []
    try:
        if threads <= 1:
            with _single_blas_thread():
                for k in indices:
                    value = func(k)
                    results.append(value)
                    if on_result:
                        on_result(k, value)
        else:
            with ProcessPoolExecutor(threads, initializer=_init_worker) as pool:
                for k, value in zip(indices, pool.map(func, indices, chunksize=1)):
                    results.append(value)
                    if on_result:
                        on_result(k, value)
    except KeyboardInterrupt as exc:
        raise Interrupted(results) from exc
    return results


class Interrupted(Exception):
    """Raised when a run is interrupted; carries the completed results."""

    def __init__(self, partial):
        super().__init__(f"interrupted after {len(partial)} realizations")
        self.partial = partial
