"""Bit-encoded Hilbert space of a periodic chain of (qubit x qudit) sites.

A basis state is stored as a single integer

    index = spin_word * q**L + qudit_word

where bit ``s`` of ``spin_word`` is 1 when site ``s`` is up, and
``qudit_word = sum_s a_s * q**s`` holds the qudit digits.  For ``q == 1`` the
index is just the spin word.

Inside an r-site gate window the local product basis is ordered
lexicographically over the window sites (first site most significant), with
the per-site value ``v = (0 if up else 1) * q + digit``.  For r=2, q=1 that
gives the familiar order {uu, ud, du, dd}.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache
from itertools import combinations
from math import comb

import numpy as np

DENSE_GUARD = 20_000


class ConfigError(ValueError):
    """Invalid chain geometry or experiment parameters."""


class ResourceError(RuntimeError):
    """A requested dense object exceeds the memory guard."""


@dataclass(frozen=True)
class SiteSpace:
    q: int = 1

    def __post_init__(self):
        if self.q < 1:
            raise ConfigError(f"qudit dimension must be >= 1, got q={self.q}")

    @property
    def local_dim(self) -> int:
        return 2 * self.q


@dataclass(frozen=True)
class ChainGeometry:
    """Periodic chain of L sites driven by range-r gates with Floquet period T."""

    L: int
    r: int = 2
    T: int = 1
    q: int = 1

    def __post_init__(self):
        if self.r < 2:
            raise ConfigError(f"gate range must be >= 2, got r={self.r}")
        if self.T < 1:
            raise ConfigError(f"Floquet period must be >= 1, got T={self.T}")
        if self.q < 1:
            raise ConfigError(f"qudit dimension must be >= 1, got q={self.q}")
        if self.L < 2 * self.r:
            raise ConfigError(f"need L >= 2r, got L={self.L}, r={self.r}")
        if self.L % self.r:
            raise ConfigError(
                f"L={self.L} is not a multiple of r={self.r}; the staggered "
                "sub-layers only tile a periodic chain when L mod r == 0")

    @property
    def gates_per_sublayer(self) -> int:
        return self.L // self.r

    def window(self, alpha: int, j: int) -> tuple[int, ...]:
        """Sites touched by gate slot j of sub-layer alpha."""
        start = self.r * j + alpha
        return tuple((start + k) % self.L for k in range(self.r))


# -- single-state helpers ----------------------------------------------------

def encode(spin_bits, qudit_digits=None, q: int = 1) -> int:
    """Encode per-site spins (1 = up) and qudit digits into a global index."""
    spins = list(spin_bits)
    L = len(spins)
    word = sum(int(b) << s for s, b in enumerate(spins))
    if q == 1:
        return word
    digits = [0] * L if qudit_digits is None else list(qudit_digits)
    if len(digits) != L or any(not 0 <= a < q for a in digits):
        raise ValueError("qudit digits must be L values in [0, q)")
    qword = sum(a * q**s for s, a in enumerate(digits))
    return word * q**L + qword


def decode(index: int, L: int, q: int = 1) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Inverse of :func:`encode`; returns (spin_bits, qudit_digits)."""
    if not 0 <= index < (2 * q) ** L:
        raise ValueError(f"index {index} outside [0, {(2 * q) ** L})")
    word, qword = divmod(index, q**L)
    spins = tuple((word >> s) & 1 for s in range(L))
    digits = tuple((qword // q**s) % q for s in range(L)) if q > 1 else ()
    return spins, digits


def total_charge(index: int, L: int, q: int = 1) -> int:
    """Number of up spins, i.e. (sum_j Z_j + L) / 2."""
    return int(index // q**L).bit_count()


def local_charge(index: int, window, L: int, q: int = 1) -> int:
    """Number of up spins on the given (possibly wrapping) window of sites."""
    word = index // q**L
    return sum((word >> s) & 1 for s in window)


# -- local gate basis ----------------------------------------------------------

@lru_cache(maxsize=None)
def local_blocks(r: int, q: int) -> tuple[np.ndarray, ...]:
    """Local product-basis indices of each charge block, block n = n up spins.

    Within a block the indices are ascending, which is the lexicographic
    site-configuration order.
    """
    d = 2 * q
    vals = np.arange(d**r)
    n_up = np.zeros(d**r, dtype=int)
    for k in range(r):
        v = (vals // d ** (r - 1 - k)) % d
        n_up += v < q
    return tuple(np.flatnonzero(n_up == n) for n in range(r + 1))


def block_sizes(r: int, q: int) -> tuple[int, ...]:
    return tuple(comb(r, n) * q**r for n in range(r + 1))


# -- sectors -----------------------------------------------------------------

class ChargeSector:
    """Fixed-charge subspace (or the full space when ``n_up`` is None).

    ``states`` holds the member global indices in ascending order; position in
    that array is the sector coordinate.
    """

    def __init__(self, L: int, q: int, n_up: int | None, states: np.ndarray):
        self.L = L
        self.q = q
        self.n_up = n_up
        self.states = states
        self.states.setflags(write=False)

    def __repr__(self):
        return f"ChargeSector(L={self.L}, q={self.q}, n_up={self.n_up}, dim={self.dim})"

    def __len__(self):
        return self.dim

    @property
    def dim(self) -> int:
        return len(self.states)

    def index_of(self, index):
        """Sector position of global index(es); raises KeyError for non-members."""
        index = np.asarray(index)
        pos = np.searchsorted(self.states, index)
        pos_c = np.minimum(pos, self.dim - 1)
        if np.any(self.states[pos_c] != index):
            raise KeyError("state not in sector")
        return int(pos) if pos.ndim == 0 else pos

    @cached_property
    def spin_words(self) -> np.ndarray:
        return self.states // self.q**self.L

    @cached_property
    def qudit_words(self) -> np.ndarray:
        return self.states % self.q**self.L

    @cached_property
    def up(self) -> np.ndarray:
        """(dim, L) boolean occupation of up spins."""
        s = np.arange(self.L)
        return ((self.spin_words[:, None] >> s) & 1).astype(bool)

    @cached_property
    def z_values(self) -> np.ndarray:
        """(dim, L) float array of Z_j eigenvalues (+1 up, -1 down)."""
        return np.where(self.up, 1.0, -1.0)

    def digits(self, site: int) -> np.ndarray:
        return (self.qudit_words // self.q**site) % self.q

    def window_table(self, window) -> tuple[np.ndarray, ...]:
        """Scatter tables routing sector amplitudes to the blocks of a gate.

        Entry n has shape (groups, block_dim): each row lists the sector
        positions sharing one configuration outside the window, ordered like
        the block's local basis.
        """
        window = tuple(window)
        try:
            return self._tables[window]
        except KeyError:
            pass
        table = _build_window_table(self, window)
        self._tables[window] = table
        return table

    @cached_property
    def _tables(self) -> dict:
        return {}


def _build_window_table(sector: ChargeSector, window) -> tuple[np.ndarray, ...]:
    L, q, r = sector.L, sector.q, len(window)
    d = 2 * q
    local = np.zeros(sector.dim, dtype=np.int64)
    rest_spin = sector.spin_words.copy()
    rest_qudit = sector.qudit_words.copy()
    for k, s in enumerate(window):
        up = (sector.spin_words >> s) & 1
        digit = sector.digits(s) if q > 1 else 0
        local += ((1 - up) * q + digit) * d ** (r - 1 - k)
        rest_spin &= ~np.int64(1 << s)
        if q > 1:
            rest_qudit -= digit * q**s
    rest = rest_spin * q**L + rest_qudit

    blocks = local_blocks(r, q)
    block_of = np.empty(d**r, dtype=np.int64)
    pos_in_block = np.empty(d**r, dtype=np.int64)
    for n, idx in enumerate(blocks):
        block_of[idx] = n
        pos_in_block[idx] = np.arange(len(idx))

    table = []
    for n, idx in enumerate(blocks):
        members = np.flatnonzero(block_of[local] == n)
        order = np.lexsort((pos_in_block[local[members]], rest[members]))
        members = members[order]
        if members.size % len(idx):
            raise AssertionError("sector is not closed under the gate window")
        table.append(members.reshape(-1, len(idx)))
    return tuple(table)


def _spin_words(L: int, n_up: int) -> np.ndarray:
    if L <= 20:
        words = np.arange(1 << L, dtype=np.int64)
        return words[np.bitwise_count(words) == n_up]
    words = [sum(1 << s for s in c) for c in combinations(range(L), n_up)]
    return np.sort(np.array(words, dtype=np.int64))


@lru_cache(maxsize=32)
def enumerate_sector(L: int, q: int, n_up: int) -> ChargeSector:
    """All basis states with exactly ``n_up`` up spins, ascending global index."""
    if not 0 <= n_up <= L:
        raise ConfigError(f"n_up={n_up} outside [0, {L}]")
    words = _spin_words(L, n_up)
    qdim = q**L
    states = (words[:, None] * qdim + np.arange(qdim, dtype=np.int64)[None, :]).ravel()
    return ChargeSector(L, q, n_up, states)


@lru_cache(maxsize=8)
def full_space(L: int, q: int = 1) -> ChargeSector:
    """The unconstrained (2q)**L space, handled with the same machinery."""
    return ChargeSector(L, q, None, np.arange((2 * q) ** L, dtype=np.int64))


def sector_dim(L: int, q: int, n_up: int) -> int:
    return comb(L, n_up) * q**L
