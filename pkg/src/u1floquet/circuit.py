"""Brickwork Floquet circuits, sector-resolved state evolution and U_F."""

from __future__ import annotations

import numpy as np

from .basis import DENSE_GUARD, ChainGeometry, ChargeSector, ResourceError
from .gates import BlockGate, gate_sampler


class FloquetCircuit:
    """Gates indexed by (time step, sub-layer, slot).

    With ``random_in_time`` the circuit keeps drawing fresh gates for every
    new time step from its own generator; otherwise step t reuses step t % T.
    """

    def __init__(self, geometry: ChainGeometry, gates, sampler=None, rng=None,
                 random_in_time: bool = False):
        self.geometry = geometry
        self.random_in_time = random_in_time
        self._steps = [list(map(list, step)) for step in gates]
        self._sampler = sampler
        self._rng = rng
        if random_in_time and (sampler is None or rng is None):
            raise ValueError("a random-in-time circuit needs a sampler and an rng")

    @property
    def n_gates(self) -> int:
        return sum(len(slots) for step in self._steps[: self.geometry.T] for slots in step)

    def _draw_step(self):
        g = self.geometry
        return [[self._sampler(self._rng) for _ in range(g.gates_per_sublayer)]
                for _ in range(g.r)]

    def step_gates(self, t: int):
        """Gates of time step t as a list over sub-layers of lists over slots."""
        if not self.random_in_time:
            return self._steps[t % self.geometry.T]
        while len(self._steps) <= t:
            self._steps.append(self._draw_step())
        return self._steps[t]

    def gate(self, t: int, alpha: int, j: int) -> BlockGate:
        return self.step_gates(t)[alpha][j]

    def placements(self, t: int):
        """Yield (window, gate) in application order for time step t."""
        g = self.geometry
        for alpha, slots in enumerate(self.step_gates(t)):
            for j, gate in enumerate(slots):
                yield g.window(alpha, j), gate


def build_circuit(geometry: ChainGeometry, family: str, rng: np.random.Generator,
                  parameter: float | None = None, random_in_time: bool = False) -> FloquetCircuit:
    """Sample the T independent layers of a circuit."""
    sampler = gate_sampler(family, geometry.r, geometry.q, parameter)
    gates = [[[sampler(rng) for _ in range(geometry.gates_per_sublayer)]
              for _ in range(geometry.r)]
             for _ in range(geometry.T)]
    return FloquetCircuit(geometry, gates, sampler=sampler, rng=rng,
                          random_in_time=random_in_time)


def uniform_circuit(geometry: ChainGeometry, gate: BlockGate) -> FloquetCircuit:
    """Every slot holds the same gate; handy for deterministic checks."""
    gates = [[[gate] * geometry.gates_per_sublayer for _ in range(geometry.r)]
             for _ in range(geometry.T)]
    return FloquetCircuit(geometry, gates)


def apply_gate(psi: np.ndarray, sector: ChargeSector, window, gate: BlockGate) -> np.ndarray:
    """Apply one gate in place; psi is (dim,) or (dim, ncols)."""
    table = sector.window_table(window)
    for idx, block in zip(table, gate.blocks):
        if idx.size == 0:
            continue
        if psi.ndim == 1:
            psi[idx] = psi[idx] @ block.T
        else:
            psi[idx] = block @ psi[idx]
    return psi


def apply_one_step(psi: np.ndarray, sector: ChargeSector, circuit: FloquetCircuit, t: int,
                   out: bool = False) -> np.ndarray:
    """U(t+1, t) psi: sub-layer 0 first, then 1, ..., r-1.

    Works on a copy unless ``out`` is true, in which case psi is overwritten.
    """
    if not out:
        psi = np.array(psi, dtype=complex)
    for window, gate in circuit.placements(t):
        apply_gate(psi, sector, window, gate)
    return psi


def floquet_unitary(circuit: FloquetCircuit, sector: ChargeSector) -> np.ndarray:
    """Dense U_F on a sector, built by evolving every basis column through T steps."""
    if sector.dim > DENSE_GUARD:
        raise ResourceError(
            f"sector dimension {sector.dim} exceeds the dense guard {DENSE_GUARD}")
    if circuit.random_in_time:
        raise ValueError("a random-in-time circuit has no Floquet unitary")
    u = np.eye(sector.dim, dtype=complex)
    for t in range(circuit.geometry.T):
        apply_one_step(u, sector, circuit, t, out=True)
    return u


def snapshot_times(t_max: int, schedule: str = "log", ratio: float = 1.2, step: int = 1):
    """Snapshot grid from 0 to t_max inclusive.

    'log' keeps the distinct rounded powers of ``ratio`` plus every power of
    ten, so decade-aligned fit windows have exact endpoints; 'linear' keeps
    every ``step``.
    """
    if t_max < 0:
        raise ValueError("t_max must be >= 0")
    if schedule == "linear":
        times = set(range(0, t_max + 1, step))
    elif schedule == "log":
        times, k = {0}, 0
        while (t := round(ratio**k)) <= t_max:
            times.add(t)
            k += 1
        times.update(10**e for e in range(len(str(t_max))) if 10**e <= t_max)
    else:
        raise ValueError(f"unknown snapshot schedule {schedule!r}")
    times.add(t_max)
    return np.array(sorted(times), dtype=int)


def evolve(psi: np.ndarray, sector: ChargeSector, circuit: FloquetCircuit, times,
           observe=None):
    """Evolve psi and record snapshots at the requested (sorted) step counts.

    ``observe`` maps a state to whatever should be stored; by default the
    state itself is copied.  Returns a list aligned with ``times``.
    """
    times = np.asarray(times, dtype=int)
    if np.any(np.diff(times) < 0) or (times.size and times[0] < 0):
        raise ValueError("snapshot times must be sorted and non-negative")
    observe = observe or (lambda v: v.copy())
    state = np.array(psi, dtype=complex)
    out, t = [], 0
    for target in times:
        while t < target:
            apply_one_step(state, sector, circuit, t, out=True)
            t += 1
        out.append(observe(state))
    return out
