"""Spin autocorrelation and half-chain entanglement dynamics."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache, partial

import numpy as np
from scipy import stats

from .basis import ChargeSector, ConfigError, encode, enumerate_sector, full_space
from .circuit import build_circuit, evolve
from .config import REFERENCE_STREAM, map_realizations, realization_rng


class FitError(ValueError):
    pass


# -- initial states -------------------------------------------------------------------

@dataclass
class InitialState:
    """A z-basis product state living in a single charge sector."""

    kind: str
    sector: ChargeSector
    index: int
    z_pattern: np.ndarray

    @property
    def n_up(self) -> int:
        return int((self.z_pattern > 0).sum())

    @property
    def vector(self) -> np.ndarray:
        psi = np.zeros(self.sector.dim, dtype=complex)
        psi[self.sector.index_of(self.index)] = 1.0
        return psi

    def flipped(self) -> "InitialState":
        """Global spin flip of the product state (qudits untouched)."""
        L, q = self.sector.L, self.sector.q
        spins = [int(z < 0) for z in self.z_pattern]
        sector = enumerate_sector(L, q, sum(spins))
        return InitialState(self.kind + "_flipped", sector, encode(spins, q=q), -self.z_pattern)


def product_state(spins, q: int = 1, kind: str = "product") -> InitialState:
    spins = [int(s) for s in spins]
    L = len(spins)
    sector = enumerate_sector(L, q, sum(spins))
    z = np.where(np.array(spins) == 1, 1.0, -1.0)
    return InitialState(kind, sector, encode(spins, q=q), z)


def make_domain_wall(L: int, n_up: int, q: int = 1) -> InitialState:
    """|up ... up down ... down> with the first n_up sites up."""
    if not 0 <= n_up <= L:
        raise ConfigError(f"domain wall needs 0 <= n_up <= L, got n_up={n_up}, L={L}")
    return product_state([1] * n_up + [0] * (L - n_up), q, "domain_wall")


def make_antiferromagnetic(L: int, q: int = 1) -> InitialState:
    """|up down up down ...>."""
    return product_state([(s + 1) % 2 for s in range(L)], q, "antiferromagnetic")


def make_initial_state(kind: str, L: int, q: int = 1, n_up: int | None = None) -> InitialState:
    if kind == "domain_wall":
        return make_domain_wall(L, L // 2 if n_up is None else n_up, q)
    if kind == "antiferromagnetic":
        return make_antiferromagnetic(L, q)
    raise ConfigError(f"unknown initial state {kind!r}")


# -- observables ---------------------------------------------------------------------

def magnetization_profile(psi: np.ndarray, sector: ChargeSector) -> np.ndarray:
    """<Z_j> for every site."""
    return (np.abs(psi) ** 2) @ sector.z_values


def sector_weights(psi: np.ndarray, sector: ChargeSector) -> np.ndarray:
    """Norm carried by each total-charge sector (useful in full-space mode)."""
    charges = sector.up.sum(axis=1)
    return np.bincount(charges, weights=np.abs(psi) ** 2, minlength=sector.L + 1)


def autocorrelation_realization(circuit, initial: InitialState, times) -> np.ndarray:
    """C(t) = (1/L) sum_i z_i <psi(t)| Z_i |psi(t)> for one circuit."""
    if not isinstance(initial, InitialState):
        raise TypeError("autocorrelation needs a z-basis product InitialState")
    z = initial.z_pattern
    L = len(z)
    obs = lambda v: float(magnetization_profile(v, initial.sector) @ z) / L  # noqa: E731
    return np.array(evolve(initial.vector, initial.sector, circuit, times, observe=obs))


@dataclass
class Series:
    """Per-realization time series and their circuit average."""

    times: np.ndarray
    values: np.ndarray  # (n_realizations, n_times)
    meta: dict = field(default_factory=dict)

    @property
    def mean(self) -> np.ndarray:
        return self.values.mean(axis=0)

    @property
    def stderr(self) -> np.ndarray:
        n = len(self.values)
        if n < 2:
            return np.full(len(self.times), np.nan)
        return self.values.std(axis=0, ddof=1) / np.sqrt(n)

    def at(self, t: int):
        """(mean, stderr) at snapshot time t."""
        k = int(np.flatnonzero(self.times == t)[0])
        return float(self.mean[k]), float(self.stderr[k])


AutocorrelationSeries = Series


@dataclass
class EntropySeries(Series):
    s_page: float = float("nan")
    s_u1: float = float("nan")
    s_u1_stderr: float = float("nan")

    @property
    def deficit(self) -> np.ndarray:
        return self.s_u1 - self.mean


def fit_power_law(times, values, window):
    """Least-squares slope of log C against log t on ``window = (t_lo, t_hi)``.

    Returns (exponent, stderr).
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    sel = (times >= window[0]) & (times <= window[1])
    if sel.sum() < 2:
        raise FitError("fewer than two points in the fit window")
    if np.any(values[sel] <= 0):
        raise FitError("non-positive values in the fit window")
    x, y = np.log(times[sel]), np.log(values[sel])
    if sel.sum() == 2:
        return float((y[1] - y[0]) / (x[1] - x[0])), 0.0
    res = stats.linregress(x, y)
    return float(res.slope), float(res.stderr)


# -- entanglement ------------------------------------------------------------------------

class BipartitionMap:
    """Scatter of sector amplitudes into per-charge Schmidt matrices.

    Subsystem A is sites [0, cut); B the rest.  Inside a charge sector each
    block collects the states with a given number of up spins in A; a
    full-space state can mix sectors, so there a single block is used.
    """

    def __init__(self, sector: ChargeSector, cut: int):
        L, q = sector.L, sector.q
        spin_a = sector.spin_words & ((1 << cut) - 1)
        spin_b = sector.spin_words >> cut
        qa = q**cut
        a = spin_a * qa + sector.qudit_words % qa
        b = spin_b * q ** (L - cut) + sector.qudit_words // qa
        charge_a = np.bitwise_count(spin_a) if sector.n_up is not None else np.zeros_like(a)
        self.blocks = []
        for n in np.unique(charge_a):
            members = np.flatnonzero(charge_a == n)
            rows, ri = np.unique(a[members], return_inverse=True)
            cols, ci = np.unique(b[members], return_inverse=True)
            self.blocks.append((members, ri, ci, (len(rows), len(cols))))

    def schmidt_values(self, psi: np.ndarray) -> np.ndarray:
        """Squared Schmidt coefficients (eigenvalues of rho_A)."""
        out = []
        for members, ri, ci, shape in self.blocks:
            m = np.zeros(shape, dtype=complex)
            m[ri, ci] = psi[members]
            out.append(np.linalg.svd(m, compute_uv=False) ** 2)
        return np.concatenate(out)

    def transposed_values(self, psi: np.ndarray) -> np.ndarray:
        """Same spectrum obtained from rho_B, for A <-> B consistency checks."""
        out = []
        for members, ri, ci, shape in self.blocks:
            m = np.zeros(shape[::-1], dtype=complex)
            m[ci, ri] = psi[members]
            rho_b = m @ m.conj().T
            out.append(np.clip(np.linalg.eigvalsh(rho_b), 0, None))
        return np.concatenate(out)


@lru_cache(maxsize=16)
def _bipartition(L: int, q: int, n_up, cut: int) -> BipartitionMap:
    sector = full_space(L, q) if n_up is None else enumerate_sector(L, q, n_up)
    return BipartitionMap(sector, cut)


def bipartition_map(sector: ChargeSector, cut: int | None = None) -> BipartitionMap:
    cut = sector.L // 2 if cut is None else cut
    return _bipartition(sector.L, sector.q, sector.n_up, cut)


def entropy_of(lams) -> float:
    lams = np.asarray(lams)
    lams = lams[lams > 1e-300]
    return float(-(lams * np.log(lams)).sum())


def von_neumann_entropy(psi: np.ndarray, sector: ChargeSector, cut: int | None = None) -> float:
    """Entanglement entropy (natural log) across the bond at ``cut`` (default L/2)."""
    norm = np.linalg.norm(psi)
    if abs(norm - 1) > 1e-8:
        raise ValueError(f"state is not normalized (|psi| = {norm:.12f})")
    return entropy_of(bipartition_map(sector, cut).schmidt_values(psi))


def page_value(dA: int, dB: int) -> float:
    """Page's estimate ln dA - dA / (2 dB) for dA <= dB (arguments are swapped if not).

    The estimate is asymptotic; a trivial factor dA = 1 returns exactly 0.
    """
    if dA > dB:
        dA, dB = dB, dA
    if dA == 1:
        return 0.0  # a one-dimensional factor is never entangled
    return float(np.log(dA) - dA / (2 * dB))


def haar_state(dim: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return v / np.linalg.norm(v)


def u1_saturation_value(L: int, q: int, n_up: int, n_samples: int = 1000,
                        rng: np.random.Generator | None = None, cut: int | None = None):
    """Monte-Carlo mean half-chain entropy of Haar states inside a charge sector.

    Returns (mean, stderr).
    """
    rng = rng if rng is not None else np.random.default_rng()
    sector = enumerate_sector(L, q, n_up)
    bmap = bipartition_map(sector, cut)
    s = np.array([entropy_of(bmap.schmidt_values(haar_state(sector.dim, rng)))
                  for _ in range(n_samples)])
    return float(s.mean()), float(s.std(ddof=1) / np.sqrt(n_samples))


def entropy_realization(circuit, initial: InitialState, times, cut: int | None = None) -> np.ndarray:
    bmap = bipartition_map(initial.sector, cut)
    obs = lambda v: entropy_of(bmap.schmidt_values(v))  # noqa: E731
    return np.array(evolve(initial.vector, initial.sector, circuit, times, observe=obs))


# -- experiments -------------------------------------------------------------------------

def _circuit_for(config, k):
    rng = realization_rng(config.seed, k)
    return build_circuit(config.geometry, config.family, rng, config.parameter,
                         random_in_time=config.random_in_time)


def _initial_for(config) -> InitialState:
    return make_initial_state(config.initial_state, config.L, config.q, config.n_up)


def transport_realization(config, k: int) -> np.ndarray:
    return autocorrelation_realization(_circuit_for(config, k), _initial_for(config),
                                       config.snapshot_times())


def entanglement_realization(config, k: int) -> np.ndarray:
    return entropy_realization(_circuit_for(config, k), _initial_for(config),
                               config.snapshot_times())


def autocorrelation(config, on_result=None) -> Series:
    """Circuit-averaged C(t) for the configured product initial state."""
    config.validate()
    initial = _initial_for(config)
    values = map_realizations(partial(transport_realization, config),
                              config.realization_indices, config.threads, on_result)
    return Series(config.snapshot_times(), np.array(values),
                  {"n_up": initial.n_up, "sector_dim": initial.sector.dim})


def entanglement_experiment(config, on_result=None) -> EntropySeries:
    """Circuit-averaged S_{L/2}(t) with Page and fixed-charge Haar references."""
    config.validate()
    initial = _initial_for(config)
    values = map_realizations(partial(entanglement_realization, config),
                              config.realization_indices, config.threads, on_result)
    half = config.L // 2
    d_half = (2 * config.q) ** half
    s_u1, s_u1_err = u1_saturation_value(
        config.L, config.q, initial.n_up, config.u1_samples,
        realization_rng(config.seed, 0, REFERENCE_STREAM))
    return EntropySeries(config.snapshot_times(), np.array(values),
                         {"n_up": initial.n_up, "sector_dim": initial.sector.dim},
                         s_page=page_value(d_half, d_half), s_u1=s_u1, s_u1_stderr=s_u1_err)
