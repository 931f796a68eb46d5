"""Ideal von Neumann measurement of a two-level quantum.

The apparatus has a ready slot and two pointer slots. ``premeasure`` applies
a permutation unitary that copies the system's basis label into the
pointer; the cat scenario then samples joint eigenvalue records from the
resulting measurement state.
"""

import csv
import io
from dataclasses import dataclass

import numpy as np

from .numerics import tensor_product
from .qstate import (
    PureState,
    SubsystemLayout,
    densify,
    partial_trace,
    purity,
    schmidt,
    von_neumann_entropy,
)
from .streams import blocks, map_blocks

PROB_CLAMP = 1e-12


@dataclass(frozen=True)
class ApparatusSpec:
    dim: int = 3
    ready_index: int = 0
    pointer_indices: tuple = (1, 2)

    def __post_init__(self):
        slots = (self.ready_index, *self.pointer_indices)
        if self.dim < 3:
            raise ValueError("apparatus needs a ready state and two pointer states")
        if len(self.pointer_indices) != 2:
            raise ValueError("exactly two pointer states are required")
        if len(set(slots)) != 3 or not all(0 <= s < self.dim for s in slots):
            raise ValueError(f"ready/pointer slots {slots} must be distinct and < {self.dim}")


def premeasurement_unitary(app):
    """Permutation unitary on S x A with ``|s_i, a0> -> |s_i, a_i>``.

    For each system state the remaining apparatus slots are mapped onto the
    remaining targets in increasing order.
    """
    d = app.dim
    u = np.zeros((2 * d, 2 * d))
    for i, pointer in enumerate(app.pointer_indices):
        sources = [app.ready_index] + [k for k in range(d) if k != app.ready_index]
        targets = [pointer] + [k for k in range(d) if k != pointer]
        for src, dst in zip(sources, targets):
            u[i * d + dst, i * d + src] = 1
    return u.astype(np.complex128)


def premeasure(psi_s, app=ApparatusSpec()):
    """Couple a two-level state to a ready apparatus: returns the measurement state."""
    if psi_s.layout.dim != 2:
        raise ValueError("premeasure expects a two-dimensional system state")
    ready = np.zeros(app.dim, dtype=np.complex128)
    ready[app.ready_index] = 1
    joint = tensor_product(psi_s.amplitudes, ready)
    layout = SubsystemLayout((2, app.dim), (psi_s.layout.labels[0], "A"))
    return PureState(premeasurement_unitary(app) @ joint, layout)


def readout_projectors(app=ApparatusSpec()):
    """Projectors for the joint readout of S and the pointer.

    Ordered ``(s1a1, s1a2, s2a1, s2a2, unread)``; the last one covers the
    ready slot so the set is complete.
    """
    d = app.dim
    out = []
    for i in range(2):
        for p in app.pointer_indices:
            proj = np.zeros((2 * d, 2 * d), dtype=np.complex128)
            proj[i * d + p, i * d + p] = 1
            out.append(proj)
    out.append(np.eye(2 * d, dtype=np.complex128) - sum(out))
    return out


def born_probabilities(psi, projectors, tol=1e-10):
    projectors = [np.asarray(p, dtype=np.complex128) for p in projectors]
    n = psi.layout.dim
    if np.max(np.abs(sum(projectors) - np.eye(n))) > tol:
        raise ValueError("projectors do not sum to the identity")
    amps = psi.amplitudes
    probs = np.array([np.real(np.vdot(amps, p @ amps)) for p in projectors])
    return _clamp(probs)


def _clamp(probs):
    probs = np.asarray(probs, dtype=float)
    if np.any(probs < -PROB_CLAMP) or np.any(probs > 1 + PROB_CLAMP):
        raise ValueError(f"probabilities out of range: {probs}")
    return np.clip(probs, 0.0, 1.0)


def _cumulative(probabilities):
    p = _clamp(probabilities)
    if abs(p.sum() - 1) > 1e-9:
        raise ValueError(f"probabilities sum to {p.sum()}, not 1")
    cum = np.cumsum(p)
    # pin the tail at 1 so zero-probability trailing outcomes are unreachable
    last = int(np.flatnonzero(p > 0)[-1])
    cum[last:] = 1.0
    return cum


def sample(probabilities, gen):
    """Draw one index by inverse CDF, advancing the generator ``gen``."""
    return int(np.searchsorted(_cumulative(probabilities), gen.random(), side="right"))


def sample_many(probabilities, gen, size):
    return np.searchsorted(_cumulative(probabilities), gen.random(size), side="right")


@dataclass(frozen=True)
class OutcomeRecord:
    """One trial's eigenvalue record. Values are 1 or 2."""

    s_eigenvalue_index: int
    a_eigenvalue_index: int
    trial_id: int
    seed_path: tuple


@dataclass(frozen=True)
class OutcomeTable:
    """Columnar store for outcome records of one run."""

    trial_id: np.ndarray
    s_value: np.ndarray
    a_value: np.ndarray
    block_size: int

    def __len__(self):
        return int(self.trial_id.size)

    def __getitem__(self, i):
        t = int(self.trial_id[i])
        return OutcomeRecord(
            int(self.s_value[i]), int(self.a_value[i]), t, divmod(t, self.block_size)
        )

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    def frequencies(self):
        """Empirical frequencies in readout order ``(11, 12, 21, 22)``."""
        n = max(len(self), 1)
        return np.array(
            [np.count_nonzero((self.s_value == i) & (self.a_value == j)) / n
             for i in (1, 2) for j in (1, 2)]
        )

    def mismatches(self):
        return int(np.count_nonzero(self.s_value != self.a_value))

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["trial_id", "s_value", "a_value"])
        w.writerows(zip(self.trial_id.tolist(), self.s_value.tolist(), self.a_value.tolist()))
        return buf.getvalue()


@dataclass(frozen=True)
class CatScenario:
    state: PureState
    rho_s: object
    rho_a: object
    schmidt: object
    entropy_s: float
    entropy_a: float
    entropy_global: float
    purity_global: float
    purity_s: float
    purity_a: float
    probabilities: np.ndarray
    records: OutcomeTable


# readout index -> (s value, a value); index 4 is the unread ready slot
_READOUT_VALUES = np.array([[1, 1], [1, 2], [2, 1], [2, 2], [0, 0]])


def record_trials(probabilities, trials, rng, block_size=None, workers=1):
    """Sample ``trials`` joint readouts; trial ``t`` uses stream ``rng.child(t // block)``."""
    from .streams import BLOCK_SIZE

    block_size = block_size or BLOCK_SIZE
    cum = _cumulative(probabilities)

    def draw(block):
        b, start, size = block
        u = rng.child(b).generator().random(size)
        return np.searchsorted(cum, u, side="right")

    parts = map_blocks(draw, blocks(trials, block_size), workers)
    idx = np.concatenate(parts) if parts else np.zeros(0, dtype=int)
    vals = _READOUT_VALUES[idx]
    return OutcomeTable(np.arange(trials), vals[:, 0], vals[:, 1], block_size)


def run_cat_scenario(c1, c2, trials, rng, app=ApparatusSpec(), workers=1):
    norm2 = abs(c1) ** 2 + abs(c2) ** 2
    if abs(norm2 - 1) > 1e-10:
        raise ValueError(f"|c1|^2 + |c2|^2 = {norm2}, expected 1")
    layout = SubsystemLayout.single(2, "S")
    psi_s = PureState.normalized([c1, c2], layout)
    ms = premeasure(psi_s, app)
    rho = densify(ms)
    rho_s = partial_trace(rho, "S")
    rho_a = partial_trace(rho, "A")
    probs = born_probabilities(ms, readout_projectors(app))
    return CatScenario(
        state=ms,
        rho_s=rho_s,
        rho_a=rho_a,
        schmidt=schmidt(ms),
        entropy_s=von_neumann_entropy(rho_s),
        entropy_a=von_neumann_entropy(rho_a),
        entropy_global=von_neumann_entropy(rho),
        purity_global=purity(rho),
        purity_s=purity(rho_s),
        purity_a=purity(rho_a),
        probabilities=probs,
        records=record_trials(probs, trials, rng, workers=workers),
    )
