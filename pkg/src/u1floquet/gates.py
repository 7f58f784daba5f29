"""Charge-conserving gates: block-Haar sampling and two-site parameterizations."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .basis import ConfigError, block_sizes, local_blocks

TWO_PI = 2 * np.pi

# Effective Paulis of the central {ud, du} block in the local order (ud, du).
# (XX+YY)/2 -> X, (XY-YX)/2 -> -Y, (Z_1-Z_0)/2 -> -Z.
_PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
_PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)


@dataclass(frozen=True, eq=False)
class BlockGate:
    """Range-r gate stored as its r+1 charge blocks (block n has n up spins)."""

    r: int
    q: int
    blocks: tuple

    def __post_init__(self):
        sizes = block_sizes(self.r, self.q)
        if len(self.blocks) != self.r + 1:
            raise ValueError(f"expected {self.r + 1} blocks, got {len(self.blocks)}")
        for n, (b, d) in enumerate(zip(self.blocks, sizes)):
            if b.shape != (d, d):
                raise ValueError(f"block {n} has shape {b.shape}, expected {(d, d)}")

    @property
    def block_basis(self) -> tuple[np.ndarray, ...]:
        return local_blocks(self.r, self.q)

    def dense(self) -> np.ndarray:
        """Assemble the (2q)^r matrix in the local product basis."""
        d = (2 * self.q) ** self.r
        m = np.zeros((d, d), dtype=complex)
        for idx, b in zip(self.block_basis, self.blocks):
            m[np.ix_(idx, idx)] = b
        return m

    def unitarity_error(self) -> float:
        return max(np.abs(b.conj().T @ b - np.eye(len(b))).max() for b in self.blocks)

    @property
    def central(self) -> np.ndarray:
        """The 2x2 {ud, du} block of an r=2, q=1 gate."""
        if (self.r, self.q) != (2, 1):
            raise ValueError("central block is defined for r=2, q=1 gates only")
        return self.blocks[1]


def identity_gate(r: int = 2, q: int = 1) -> BlockGate:
    return BlockGate(r, q, tuple(np.eye(d, dtype=complex) for d in block_sizes(r, q)))


def sample_haar_unitary(N: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random N x N unitary via QR of a complex Ginibre matrix."""
    if N <= 0:
        raise ValueError(f"N must be positive, got {N}")
    z = (rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))) / np.sqrt(2)
    qmat, rmat = np.linalg.qr(z)
    diag = np.diagonal(rmat)
    return qmat * (diag / np.abs(diag))


def sample_block_gate(r: int, q: int, rng: np.random.Generator) -> BlockGate:
    """Independent Haar unitaries on every charge block."""
    if r < 2 or q < 1:
        raise ConfigError(f"invalid gate shape r={r}, q={q}")
    return BlockGate(r, q, tuple(sample_haar_unitary(d, rng) for d in block_sizes(r, q)))


# -- two-site parameterizations --------------------------------------------------

@dataclass(frozen=True)
class TwoSiteParams:
    alpha: float = 0.0
    beta: float = 0.0
    gamma: float = 0.0
    psi: float = 0.0
    eta: float = 0.0
    chi: float = 0.0


@dataclass(frozen=True)
class CouplingVector:
    """Coefficients of {II, (Z+Z)/2, ZZ, (XX+YY)/2, (XY-YX)/2, (Z_1-Z_0)/2}."""

    c: tuple = field(default=(0.0,) * 6)

    def __post_init__(self):
        if len(self.c) != 6:
            raise ValueError("a coupling vector has six entries")

    @classmethod
    def of(cls, c0=0.0, c1=0.0, c2=0.0, c3=0.0, c4=0.0, c5=0.0):
        return cls((c0, c1, c2, c3, c4, c5))

    def __getitem__(self, i):
        return self.c[i]


def gate_from_two_site_params(p: TwoSiteParams) -> BlockGate:
    c, s = np.cos(p.psi), np.sin(p.psi)
    central = np.exp(1j * p.beta) * np.array(
        [[c * np.exp(1j * p.eta), s * np.exp(1j * p.chi)],
         [-s * np.exp(-1j * p.chi), c * np.exp(-1j * p.eta)]])
    return BlockGate(2, 1, (
        np.array([[np.exp(1j * p.gamma)]]),
        central,
        np.array([[np.exp(1j * p.alpha)]]),
    ))


def su2_exp(x: float, y: float, z: float) -> np.ndarray:
    """exp(i(xX + yY + zZ)) in closed form."""
    R = np.sqrt(x * x + y * y + z * z)
    if R == 0.0:
        return np.eye(2, dtype=complex)
    n_sigma = (x * _PAULI_X + y * _PAULI_Y + z * _PAULI_Z) / R
    return np.cos(R) * np.eye(2) + 1j * np.sin(R) * n_sigma


def gate_from_couplings(c: CouplingVector) -> BlockGate:
    """exp(i sum_a c_a H^a), with the commuting part applied as phases."""
    c0, c1, c2, c3, c4, c5 = (float(v) for v in c.c)
    # in the local (ud, du) order the non-commuting generators are X, -Y, -Z
    central = np.exp(1j * (c0 - c2)) * su2_exp(c3, -c4, -c5)
    return BlockGate(2, 1, (
        np.array([[np.exp(1j * (c0 - c1 + c2))]]),
        central,
        np.array([[np.exp(1j * (c0 + c1 + c2))]]),
    ))


def two_site_params_of(gate: BlockGate) -> TwoSiteParams:
    """Recover (alpha, beta, gamma, psi, eta, chi) from an r=2, q=1 gate.

    psi is taken in [0, pi/2]; beta is fixed by half the determinant phase,
    so any leftover sign of the SU(2) part is absorbed into eta and chi.
    Phases are returned in [0, 2pi).
    """
    m = gate.central
    alpha = np.angle(gate.blocks[2][0, 0])
    gamma = np.angle(gate.blocks[0][0, 0])
    beta = np.angle(np.linalg.det(m)) / 2
    s = np.exp(-1j * beta) * m
    a, b = s[0, 0], s[0, 1]
    psi = np.arctan2(abs(b), abs(a))
    eta = np.angle(a) if abs(a) > 0 else 0.0
    chi = np.angle(b) if abs(b) > 0 else 0.0
    wrap = lambda v: float(np.mod(v, TWO_PI))  # noqa: E731
    return TwoSiteParams(wrap(alpha), wrap(beta), wrap(gamma), float(psi), wrap(eta), wrap(chi))


# -- SU(2) Haar measure in Lie-algebra coordinates -------------------------------

def lie_volume_cdf(R):
    """Integral of sin^2 over [0, R]: (R - sin R cos R) / 2."""
    R = np.asarray(R, dtype=float)
    return (R - np.sin(R) * np.cos(R)) / 2


LIE_VOLUME_TOTAL = np.pi / 2  # lie_volume_cdf(pi)


def invert_lie_volume_cdf(target, n_iter: int = 64):
    """Solve (R - sin R cos R)/2 = target for R in [0, pi] by bisection.

    The function is monotone, so bisection always converges; 64 halvings of
    [0, pi] leave an interval far below double precision.
    """
    target = np.asarray(target, dtype=float)
    if np.any((target < 0) | (target > LIE_VOLUME_TOTAL)):
        raise ValueError("target outside [0, pi/2]")
    lo = np.zeros_like(target)
    hi = np.full_like(target, np.pi)
    for _ in range(n_iter):
        mid = 0.5 * (lo + hi)
        below = lie_volume_cdf(mid) < target
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    R = 0.5 * (lo + hi)
    # exact roots at both ends of the range
    R = np.where(target == 0.0, 0.0, np.where(target == LIE_VOLUME_TOTAL, np.pi, R))
    if np.any(np.abs(lie_volume_cdf(R) - target) >= 1e-12):
        raise RuntimeError("bisection failed to reach |f(R) - target| < 1e-12")
    return R if R.ndim else float(R)


def sample_su2_lie_haar(rng: np.random.Generator, size=None):
    """Haar-distributed (c3, c4, c5) for exp(i(c3 X + c4 Y + c5 Z)).

    Radius from the sin^2(R) volume element, direction uniform on the sphere.
    Returns a tuple of floats, or an (size, 3) array when ``size`` is given.
    """
    f = rng.uniform(0.0, LIE_VOLUME_TOTAL, size)
    t = rng.uniform(-1.0, 1.0, size)
    phi = rng.uniform(0.0, TWO_PI, size)
    R = invert_lie_volume_cdf(f)
    theta = np.arccos(t)
    out = np.stack([R * np.sin(theta) * np.cos(phi),
                    R * np.sin(theta) * np.sin(phi),
                    R * np.cos(theta)], axis=-1)
    return tuple(float(v) for v in out) if size is None else out


# -- gate families -----------------------------------------------------------------

def sample_haar_u1_two_site(rng: np.random.Generator) -> BlockGate:
    alpha, beta, gamma, eta, chi = rng.uniform(0.0, TWO_PI, 5)
    psi = np.arcsin(np.sqrt(rng.uniform()))
    return gate_from_two_site_params(TwoSiteParams(alpha, beta, gamma, psi, eta, chi))


def sample_perturbed_anderson(c2: float, rng: np.random.Generator) -> BlockGate:
    """Random gate with fixed density-density coupling c2; c2=0 is free fermions."""
    c0, c1 = rng.uniform(0.0, TWO_PI, 2)
    c3, c4, c5 = sample_su2_lie_haar(rng)
    return gate_from_couplings(CouplingVector.of(c0, c1, c2, c3, c4, c5))


def sample_perturbed_diagonal(R: float, rng: np.random.Generator) -> BlockGate:
    """Random diagonal gate plus hopping of fixed magnitude R and uniform phase."""
    if R < 0:
        raise ConfigError(f"hopping magnitude must be >= 0, got R={R}")
    c0, c1, c2 = rng.uniform(0.0, TWO_PI, 3)
    phi = rng.uniform(0.0, TWO_PI)
    return gate_from_couplings(CouplingVector.of(c0, c1, c2, R * np.cos(phi), R * np.sin(phi), 0.0))


FAMILIES = ("haar", "haar_params", "perturbed_anderson", "perturbed_diagonal")


def gate_sampler(family: str, r: int = 2, q: int = 1, parameter: float | None = None):
    """Return ``rng -> BlockGate`` for a named family."""
    if family == "haar":
        return lambda rng: sample_block_gate(r, q, rng)
    if (r, q) != (2, 1):
        raise ConfigError(f"family {family!r} is only defined for r=2, q=1")
    if family == "haar_params":
        return sample_haar_u1_two_site
    if parameter is None:
        raise ConfigError(f"family {family!r} needs a parameter")
    if family == "perturbed_anderson":
        return lambda rng: sample_perturbed_anderson(parameter, rng)
    if family == "perturbed_diagonal":
        if parameter < 0:
            raise ConfigError(f"hopping magnitude must be >= 0, got R={parameter}")
        return lambda rng: sample_perturbed_diagonal(parameter, rng)
    raise ConfigError(f"unknown gate family {family!r}; choose from {FAMILIES}")


def gate_to_json(gate: BlockGate) -> dict:
    return {
        "r": gate.r,
        "q": gate.q,
        "block_basis": [idx.tolist() for idx in gate.block_basis],
        "blocks": [[[[z.real, z.imag] for z in row] for row in b] for b in gate.blocks],
    }
