"""Quasienergy spectra and level-spacing ratio statistics."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import lru_cache, partial

import numpy as np
import scipy.linalg
from scipy import integrate

from .basis import enumerate_sector
from .circuit import build_circuit, floquet_unitary
from .config import map_realizations, realization_rng
from .gates import sample_haar_unitary

TWO_PI = 2 * np.pi
POISSON_MEAN_R = 2 * np.log(2) - 1


class NumericalError(RuntimeError):
    """Eigen-solver or unitarity failure."""


@dataclass
class QuasienergySpectrum:
    thetas: np.ndarray
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.thetas)


def _cayley_phases(u: np.ndarray, shift: float) -> np.ndarray:
    # V = e^{-i shift} U has eigenvalues away from -1; H = i(1-V)(1+V)^-1 is
    # Hermitian with eigenvalues tan(theta/2).
    n = len(u)
    v = np.exp(-1j * shift) * u
    eye = np.eye(n)
    h = scipy.linalg.solve((eye + v).T, (1j * (eye - v)).T, check_finite=False).T
    h = (h + h.conj().T) / 2
    lam = scipy.linalg.eigvalsh(h, driver="evd", check_finite=False)
    return 2 * np.arctan(lam) + shift


def _near_branch_cut(thetas, shift) -> bool:
    rel = np.mod(thetas - shift, TWO_PI)
    return bool(np.min(np.abs(rel - np.pi)) < 1e-5)


def _cayley_robust(u: np.ndarray) -> np.ndarray:
    if len(u) == 1:
        return np.angle(np.diagonal(u))
    for shift in (0.0, 1.0):
        try:
            # a singular I + V is expected here; the finiteness check below handles it
            with warnings.catch_warnings(), np.errstate(all="ignore"):
                warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
                thetas = _cayley_phases(u, shift)
        except (np.linalg.LinAlgError, scipy.linalg.LinAlgError, ValueError):
            continue
        if not np.all(np.isfinite(thetas)):
            continue
        if not _near_branch_cut(thetas, shift):
            return thetas
        s = np.sort(np.mod(thetas, TWO_PI))
        gaps = np.diff(np.append(s, s[0] + TWO_PI))
        k = np.argmax(gaps)
        # rotate so the middle of the widest gap sits at -1
        return _cayley_phases(u, s[k] + gaps[k] / 2 - np.pi)
    raise NumericalError("Cayley transform failed for every trial shift")


def quasienergies(u: np.ndarray, method: str = "cayley", check: bool = True,
                  tol: float = 1e-8) -> QuasienergySpectrum:
    """Eigenphases of a unitary, mapped to [0, 2pi) and sorted.

    ``method='eig'`` uses a general dense eigensolver.  The default 'cayley'
    route maps U to a Hermitian matrix and calls a symmetric solver, which is
    several times faster; phase errors grow like eps/delta for a phase at
    distance delta from pi, so when one lands within 1e-5 of pi the matrix is rotated to
    put the largest spectral gap at -1 and solved again.
    """
    u = np.asarray(u, dtype=complex)
    if check:
        err = np.abs(u.conj().T @ u - np.eye(len(u))).max()
        if err > tol:
            raise NumericalError(f"matrix is not unitary (max deviation {err:.2e})")
    meta = {"dim": len(u), "method": method}
    try:
        if method == "eig":
            w = scipy.linalg.eigvals(u, check_finite=False)
            if check and np.abs(np.abs(w) - 1).max() > tol:
                raise NumericalError("eigenvalues are off the unit circle")
            thetas = np.angle(w)
        elif method == "cayley":
            thetas = _cayley_robust(u)
        else:
            raise ValueError(f"unknown method {method!r}")
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
        raise NumericalError(str(exc)) from exc
    return QuasienergySpectrum(np.sort(np.mod(thetas, TWO_PI)), meta)


def _as_thetas(spectrum) -> np.ndarray:
    thetas = spectrum.thetas if isinstance(spectrum, QuasienergySpectrum) else spectrum
    return np.sort(np.mod(np.asarray(thetas, dtype=float), TWO_PI))


def circular_gaps(spectrum) -> np.ndarray:
    """Spacings on the circle, including the wrap-around gap."""
    th = _as_thetas(spectrum)
    return np.diff(np.append(th, th[0] + TWO_PI))


def r_ratios(spectrum) -> np.ndarray:
    """min(s_n, s_{n-1}) / max(s_n, s_{n-1}) for every level on the circle.

    A pair of zero gaps gives 0/0, which is set to 0; use
    :func:`count_degeneracies` to report such levels.
    """
    s = circular_gaps(spectrum)
    if len(s) < 3:
        raise ValueError("need at least 3 levels")
    prev = np.roll(s, 1)
    hi = np.maximum(s, prev)
    lo = np.minimum(s, prev)
    with np.errstate(invalid="ignore", divide="ignore"):
        r = np.where(hi > 0, lo / hi, 0.0)
    return r


def count_degeneracies(spectrum, tol: float = 1e-10) -> int:
    return int(np.count_nonzero(circular_gaps(spectrum) < tol))


# -- reference densities ----------------------------------------------------------

def _gue_shape(r):
    return (r + r**2) ** 2 / (1 + r + r**2) ** 4


def _poisson_shape(r):
    return 2.0 / (1 + r) ** 2


_SHAPES = {"GUE": _gue_shape, "Poisson": _poisson_shape}


@lru_cache(maxsize=None)
def _norm(ensemble: str) -> float:
    return integrate.quad(_SHAPES[ensemble], 0.0, 1.0, epsabs=1e-13, epsrel=1e-12)[0]


def reference_pdf(ensemble: str, r):
    """Ratio density on [0, 1] for 'GUE' (beta=2 surmise) or 'Poisson'."""
    if ensemble not in _SHAPES:
        raise ValueError(f"unknown ensemble {ensemble!r}")
    r = np.asarray(r, dtype=float)
    return _SHAPES[ensemble](r) / _norm(ensemble)


@lru_cache(maxsize=None)
def reference_mean(ensemble: str) -> float:
    return integrate.quad(lambda r: r * reference_pdf(ensemble, r), 0.0, 1.0,
                          epsabs=1e-13, epsrel=1e-12)[0]


# -- aggregation ---------------------------------------------------------------------

@dataclass
class RatioStatistics:
    """r-values per realization, reduced in realization order."""

    ratios: list
    degeneracies: list = field(default_factory=list)
    bin_width: float = 0.02

    @property
    def n_realizations(self) -> int:
        return len(self.ratios)

    @property
    def realization_means(self) -> np.ndarray:
        return np.array([r.mean() for r in self.ratios])

    @property
    def mean_r(self) -> float:
        return float(self.realization_means.mean())

    @property
    def stderr_r(self) -> float:
        m = self.realization_means
        if len(m) < 2:
            return float("nan")
        return float(m.std(ddof=1) / np.sqrt(len(m)))

    @property
    def n_degenerate(self) -> int:
        return int(sum(self.degeneracies))

    def histogram(self, bin_width: float | None = None):
        """(bin_edges, density) of the pooled ratios."""
        w = bin_width or self.bin_width
        edges = np.linspace(0.0, 1.0, int(round(1 / w)) + 1)
        dens, _ = np.histogram(np.concatenate(self.ratios), bins=edges, density=True)
        return edges, dens


def sample_cue_ratios(N: int, rng: np.random.Generator) -> np.ndarray:
    """r-values of one Haar-random U(N) matrix."""
    return r_ratios(quasienergies(sample_haar_unitary(N, rng), method="eig", check=False))


def sample_poisson_ratios(N: int, rng: np.random.Generator) -> np.ndarray:
    """r-values of N independent uniform phases."""
    return r_ratios(rng.uniform(0.0, TWO_PI, N))


def chi2_per_dof(stats: RatioStatistics, ensemble: str = "GUE", bin_width: float | None = None) -> float:
    """Pearson chi-square of the pooled histogram against a reference density."""
    w = bin_width or stats.bin_width
    edges = np.linspace(0.0, 1.0, int(round(1 / w)) + 1)
    pooled = np.concatenate(stats.ratios)
    counts, _ = np.histogram(pooled, bins=edges)
    probs = np.array([integrate.quad(lambda r: reference_pdf(ensemble, r), a, b)[0]
                      for a, b in zip(edges[:-1], edges[1:])])
    expected = probs * len(pooled)
    keep = expected > 5
    chi2 = ((counts[keep] - expected[keep]) ** 2 / expected[keep]).sum()
    return float(chi2 / (keep.sum() - 1))


# -- experiment ------------------------------------------------------------------------

def levelstats_realization(config, k: int):
    """(r-values, degeneracy count) of the k-th circuit realization."""
    rng = realization_rng(config.seed, k)
    circuit = build_circuit(config.geometry, config.family, rng, config.parameter)
    sector = enumerate_sector(config.L, config.q, config.sector_n_up)
    # U_F is unitary by construction; skipping the O(dim^3) check saves ~20%
    spectrum = quasienergies(floquet_unitary(circuit, sector), check=False)
    return r_ratios(spectrum), count_degeneracies(spectrum)


def level_statistics_experiment(config, on_result=None) -> RatioStatistics:
    """Pooled ratio statistics of U_F over independent circuit realizations."""
    config.validate()
    results = map_realizations(partial(levelstats_realization, config),
                               config.realization_indices, config.threads, on_result)
    return RatioStatistics([r for r, _ in results], [d for _, d in results], config.bin_width)
