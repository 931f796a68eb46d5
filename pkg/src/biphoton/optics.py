"""Dual-rail optics for the two-photon (RTO) interferometer.

Each photon is a path qubit: index 0 is the solid beam, index 1 the dashed
beam. Detector ``k`` sits on output port ``k - 1`` of the photon's final
beam splitter. Joint states are ordered ``S (x) A``.
"""

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .numerics import as_matrix, tensor_product, unitarity_error
from .qstate import PureState, SubsystemLayout, densify, partial_trace

SQRT_HALF = 1 / math.sqrt(2)


def bs_unitary():
    """Symmetric 50:50 beam splitter ``(1/sqrt 2) [[1, i], [i, 1]]``."""
    return as_matrix(np.array([[1, 1j], [1j, 1]]) * SQRT_HALF)


def phase_unitary(path, phi):
    d = np.ones(2, dtype=np.complex128)
    d[path] = cmath.exp(1j * phi)
    return as_matrix(np.diag(d))


# --- components ---------------------------------------------------------


@dataclass(frozen=True)
class BeamSplitter:
    def matrix(self):
        return bs_unitary()


@dataclass(frozen=True)
class PhaseShifter:
    path: int
    phi: float

    def matrix(self):
        return phase_unitary(self.path, self.phi)


@dataclass(frozen=True)
class Mirror:
    # reflection phase is global for the photon and is dropped
    def matrix(self):
        return as_matrix(np.eye(2))


@dataclass(frozen=True)
class Barrier:
    path: int

    def matrix(self):
        d = np.ones(2)
        d[self.path] = 0
        return as_matrix(np.diag(d))


@dataclass(frozen=True)
class OpticalNetwork:
    """Per-photon component lists applied left to right.

    ``source`` is ``"pair"`` for the entangled RTO pair (arms S and A) or
    ``"single"`` for one photon in an even superposition (arm S only).
    """

    arms: tuple
    source: str = "pair"
    labels: tuple = ("S", "A")

    def __post_init__(self):
        expected = 2 if self.source == "pair" else 1
        if self.source not in ("pair", "single"):
            raise ValueError(f"unknown source {self.source!r}")
        if len(self.arms) != expected:
            raise ValueError(f"{self.source} source needs {expected} arm(s)")

    @property
    def lossy(self):
        return any(isinstance(c, Barrier) for arm in self.arms for c in arm)

    def arm_matrix(self, i):
        m = np.eye(2, dtype=np.complex128)
        for comp in self.arms[i]:
            m = comp.matrix() @ m
        return as_matrix(m)

    def compile(self):
        """Joint operator; unitary unless the network contains barriers."""
        m = self.arm_matrix(0)
        for i in range(1, len(self.arms)):
            m = tensor_product(m, self.arm_matrix(i))
        if not self.lossy and unitarity_error(m) > 1e-12:
            raise AssertionError("barrier-free network compiled to a non-unitary")
        return m

    def initial_state(self):
        if self.source == "pair":
            layout = SubsystemLayout((2, 2), self.labels)
            return PureState([SQRT_HALF, 0, 0, SQRT_HALF], layout)
        return PureState([SQRT_HALF, SQRT_HALF], SubsystemLayout.single(2, self.labels[0]))

    def propagate(self):
        """Output state conditioned on detection, and the loss probability."""
        psi = self.initial_state()
        out = self.compile() @ psi.amplitudes
        kept = float(np.vdot(out, out).real)
        if kept < 1e-15:
            raise ValueError("every photon is absorbed; nothing to post-select")
        return PureState(out / math.sqrt(kept), psi.layout), 1.0 - kept

    def detection_probs(self):
        psi, _ = self.propagate()
        return np.abs(psi.amplitudes) ** 2


# --- settings and results -----------------------------------------------


@dataclass(frozen=True)
class PhaseSettings:
    phi_S: float = 0.0
    phi_A: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.phi_S) and math.isfinite(self.phi_A)):
            raise ValueError("phase settings must be finite")

    @property
    def delta(self):
        return self.phi_S - self.phi_A


@dataclass(frozen=True)
class CalibrationRecord:
    """Result of zeroing the setup phase.

    ``setup_phase`` is the raw offset measured on the network; ``w`` is the
    residual offset left after shifting the phase origin by it.
    """

    w: float
    setup_phase: float
    note: str = "origin of phi_S shifted by -setup_phase"


@dataclass(frozen=True)
class JointDistribution:
    """Coincidence probabilities ``p[ij] = P(A_i, S_j)``."""

    p11: float
    p12: float
    p21: float
    p22: float

    def __post_init__(self):
        ps = self.as_array()
        if np.any(ps < -1e-12) or np.any(ps > 1 + 1e-12) or abs(ps.sum() - 1) > 1e-12:
            raise ValueError(f"not a probability distribution: {ps}")

    def as_array(self):
        return np.array([self.p11, self.p12, self.p21, self.p22])

    @property
    def same(self):
        return self.p11 + self.p22

    @property
    def diff(self):
        return self.p12 + self.p21

    @property
    def correlation(self):
        return self.same - self.diff


# --- single photon -------------------------------------------------------


def single_photon_network(phi):
    return OpticalNetwork(((PhaseShifter(0, phi), Mirror(), BeamSplitter()),), source="single")


def single_photon_probs(phi):
    p = single_photon_network(phi).detection_probs()
    return float(p[0]), float(p[1])


# --- RTO -----------------------------------------------------------------


def rto_network(settings):
    """phi_S on S's solid beam, phi_A on A's dashed beam, then a beam splitter each."""
    s_arm = (PhaseShifter(0, settings.phi_S), Mirror(), BeamSplitter())
    a_arm = (PhaseShifter(1, settings.phi_A), Mirror(), BeamSplitter())
    return OpticalNetwork((s_arm, a_arm))


def build_rto(settings):
    net = rto_network(settings)
    return net.initial_state(), net.compile()


def _born_joint(settings):
    psi, u = build_rto(settings)
    p = np.abs(u @ psi.amplitudes) ** 2  # index = 2*s + a
    p = np.clip(p, 0.0, 1.0)
    return JointDistribution(p11=p[0], p12=p[2], p21=p[1], p22=p[3])


def _measure_setup_phase():
    # P(same) = (1 + cos(delta + w)) / 2 sampled at delta = 0 and pi/2
    c0 = _born_joint(PhaseSettings(0.0, 0.0)).correlation
    c90 = _born_joint(PhaseSettings(math.pi / 2, 0.0)).correlation
    return math.atan2(-c90, c0)


def calibrate():
    w_raw = _measure_setup_phase()
    shifted = CalibrationRecord(0.0, w_raw)
    c0 = rto_joint_probs(PhaseSettings(0.0, 0.0), shifted).correlation
    c90 = rto_joint_probs(PhaseSettings(math.pi / 2, 0.0), shifted).correlation
    return CalibrationRecord(math.atan2(-c90, c0), w_raw)


def rto_joint_probs(settings, cal):
    """Born-rule coincidence probabilities with the calibrated phase origin."""
    shifted = PhaseSettings(settings.phi_S - cal.setup_phase, settings.phi_A)
    return _born_joint(shifted)


def rto_closed_form(settings, w=0.0):
    c = math.cos(settings.delta + w)
    same, diff = (1 + c) / 4, (1 - c) / 4
    return JointDistribution(same, diff, diff, same)


def correlation(settings, cal):
    return rto_joint_probs(settings, cal).correlation


def marginals(settings, cal):
    """``(P(A1), P(A2), P(S1), P(S2))``."""
    j = rto_joint_probs(settings, cal)
    return j.p11 + j.p12, j.p21 + j.p22, j.p11 + j.p21, j.p12 + j.p22


# --- ZWM which-path toggle -----------------------------------------------


def _apply_to_density(m, rho):
    out = m @ rho @ m.conj().T
    return np.real(np.diag(out))


def zwm_probs(overlap, phi):
    """Detector probabilities for photon S when its partner's path states overlap by ``overlap``.

    ``overlap`` is ``<e2|e1>`` for partner states ``e1`` (S solid) and ``e2``
    (S dashed). 0 means a perfect which-path record, 1 an uninformative one.
    """
    g = complex(overlap)
    if abs(g) > 1 + 1e-12:
        raise ValueError(f"|overlap| = {abs(g)} exceeds 1")
    rho_s = np.array([[0.5, g / 2], [g.conjugate() / 2, 0.5]])
    p = _apply_to_density(single_photon_network(phi).compile(), rho_s)
    return float(p[0]), float(p[1])


def zwm_partner_state(overlap):
    """Explicit joint state ``(|1>|e1> + |2>|e2>)/sqrt 2`` with ``<e2|e1> = overlap``."""
    g = complex(overlap)
    if abs(g) > 1 + 1e-12:
        raise ValueError(f"|overlap| = {abs(g)} exceeds 1")
    e1 = np.array([1, 0], dtype=np.complex128)
    e2 = np.array([g.conjugate(), math.sqrt(max(0.0, 1 - abs(g) ** 2))])
    amps = np.concatenate([e1, e2]) * SQRT_HALF
    return PureState.normalized(amps, SubsystemLayout((2, 2), ("S", "E")))


def zwm_probs_explicit(overlap, phi):
    """Same as :func:`zwm_probs`, built by tracing out an explicit partner."""
    rho_s = partial_trace(densify(zwm_partner_state(overlap)), "S")
    p = _apply_to_density(single_photon_network(phi).compile(), rho_s.matrix)
    return float(p[0]), float(p[1])


def fringe_visibility(p1_of_phi):
    """Visibility of a fringe ``a + b cos(phi) + c sin(phi)``.

    Exact for first-harmonic fringes; uses four quarter-period samples.
    """
    p0, p90, p180, p270 = (p1_of_phi(k * math.pi / 2) for k in range(4))
    mean = (p0 + p90 + p180 + p270) / 4
    amp = math.hypot((p0 - p180) / 2, (p90 - p270) / 2)
    return amp / mean if mean > 0 else 0.0


def zwm_visibility(overlap, explicit=False):
    probs = zwm_probs_explicit if explicit else zwm_probs
    return fringe_visibility(lambda phi: probs(overlap, phi)[0])


def export_unitary(m):
    """Nested ``[re, im]`` lists for JSON debugging output."""
    from .qstate import encode_complex

    return encode_complex(m)
