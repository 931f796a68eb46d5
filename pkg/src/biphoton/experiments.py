"""Runnable experiments built on the optics and measurement layers.

Each experiment returns a result object with ``columns``/``rows`` for the CSV
table and ``gates`` (name -> pass flag, value, tolerance) for the JSON summary.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import optics
from .optics import PhaseSettings, calibrate, correlation, marginals, rto_joint_probs
from .qstate import (
    PureState,
    SubsystemLayout,
    densify,
    measurement_state,
    partial_trace,
    rebase,
)
from .streams import blocks, map_blocks

SIGMAS = 4.0
MAX_COLLISIONS = 50
MAX_EXPLICIT_COLLISIONS = 3


def gate(value, tol, ok=None):
    """A pass/fail entry; by default passes when ``value <= tol``."""
    passed = bool(value <= tol) if ok is None else bool(ok)
    return {"pass": passed, "value": float(value), "tolerance": float(tol)}


@dataclass
class ExperimentResult:
    name: str
    columns: list
    rows: list
    gates: dict
    extra: dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(g["pass"] for g in self.gates.values())


# --- coincidence trials ---------------------------------------------------


@dataclass(frozen=True)
class TrialLedger:
    """Coincidence counts ``n_ij = N(A_i, S_j)``."""

    n11: int
    n12: int
    n21: int
    n22: int
    settings: PhaseSettings
    root_seed: int

    @property
    def total(self):
        return self.n11 + self.n12 + self.n21 + self.n22

    def frequencies(self):
        return np.array([self.n11, self.n12, self.n21, self.n22]) / self.total

    @property
    def correlation(self):
        return (self.n11 + self.n22 - self.n12 - self.n21) / self.total

    def marginals(self):
        """Empirical ``(P(A1), P(A2), P(S1), P(S2))``."""
        f = self.frequencies()
        return f[0] + f[1], f[2] + f[3], f[0] + f[2], f[1] + f[3]


def run_trials(settings, trials, rng, cal=None, workers=1):
    """Multinomial coincidence counts, one independent stream per block of trials."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    cal = cal or calibrate()
    p = rto_joint_probs(settings, cal).as_array()
    p = p / p.sum()

    def draw(block):
        b, _, size = block
        return rng.child(b).generator().multinomial(size, p)

    counts = sum(map_blocks(draw, blocks(trials), workers))
    n11, n12, n21, n22 = (int(c) for c in counts)
    return TrialLedger(n11, n12, n21, n22, settings, rng.seed)


# --- correlation phase scan -----------------------------------------------------


@dataclass(frozen=True)
class ScanPoint:
    delta: float
    c_analytic: float
    c_empirical: float = None
    n_trials: int = 0
    counts: tuple = None


def phase_scan(points, trials_per_point, rng, workers=1):
    if points < 2:
        raise ValueError("a scan needs at least 2 points")
    cal = calibrate()

    def one(i):
        delta = 2 * math.pi * i / points
        s = PhaseSettings(delta, 0.0)
        c = correlation(s, cal)
        if trials_per_point > 0:
            led = run_trials(s, trials_per_point, rng.child(i), cal)
            counts = (led.n11, led.n12, led.n21, led.n22)
            return ScanPoint(delta, c, led.correlation, trials_per_point, counts)
        return ScanPoint(delta, c)

    return map_blocks(one, range(points), workers)


def scan_experiment(points, trials_per_point, rng, workers=1):
    scan = phase_scan(points, trials_per_point, rng, workers)
    analytic_err = max(abs(p.c_analytic - math.cos(p.delta)) for p in scan)
    gates = {"max_analytic_error": gate(analytic_err, 1e-9)}
    rows = []
    for p in scan:
        counts = p.counts or ("", "", "", "")
        emp = "" if p.c_empirical is None else p.c_empirical
        rows.append([p.delta, p.c_analytic, emp, p.n_trials, *counts])
    if trials_per_point > 0:
        # 4 sigma of an estimator of C with variance (1 - C^2)/N, floored at the C=0 case
        sigma = math.sqrt(1 / trials_per_point)
        emp_err = max(abs(p.c_empirical - p.c_analytic) for p in scan)
        gates["max_empirical_error"] = gate(emp_err, max(0.02, SIGMAS * sigma))
    return ExperimentResult(
        "scan",
        ["delta", "c_analytic", "c_empirical", "n_trials", "n11", "n12", "n21", "n22"],
        rows,
        gates,
    )


def trials_experiment(settings, trials, rng, workers=1):
    cal = calibrate()
    led = run_trials(settings, trials, rng, cal, workers)
    p = rto_joint_probs(settings, cal).as_array()
    f = led.frequencies()
    z = [abs(fi - pi) / math.sqrt(max(pi * (1 - pi), 1e-300) / trials) if pi > 0 else
         (0.0 if fi == 0 else math.inf) for fi, pi in zip(f, p)]
    rows = [
        [f"{a}{s}", n, pi, fi]
        for (a, s), n, pi, fi in zip(
            [(1, 1), (1, 2), (2, 1), (2, 2)], [led.n11, led.n12, led.n21, led.n22], p, f
        )
    ]
    return ExperimentResult(
        "trials",
        ["pair", "count", "p_analytic", "p_empirical"],
        rows,
        {"max_count_z": gate(max(z), SIGMAS)},
        {"c_empirical": led.correlation, "c_analytic": correlation(settings, cal)},
    )


# --- CHSH ------------------------------------------------------------------


@dataclass(frozen=True)
class ChshResult:
    settings: tuple  # ((a, b), (a, b'), (a', b), (a', b'))
    E: tuple
    S: float


def _chsh_pairs(a, a2, b, b2):
    return ((a, b), (a, b2), (a2, b), (a2, b2))


def _chsh_value(E):
    return abs(E[0] - E[1] + E[2] + E[3])


def chsh(a, a2, b, b2, cal=None):
    cal = cal or calibrate()
    pairs = _chsh_pairs(a, a2, b, b2)
    E = tuple(correlation(PhaseSettings(x, y), cal) for x, y in pairs)
    return ChshResult(pairs, E, _chsh_value(E))


def chsh_empirical(a, a2, b, b2, trials, rng, cal=None, workers=1):
    cal = cal or calibrate()
    pairs = _chsh_pairs(a, a2, b, b2)
    ledgers = [run_trials(PhaseSettings(x, y), trials, rng.child(k), cal, workers)
               for k, (x, y) in enumerate(pairs)]
    E = tuple(led.correlation for led in ledgers)
    return ChshResult(pairs, E, _chsh_value(E)), ledgers


def chsh_experiment(a, a2, b, b2, trials, rng, workers=1):
    cal = calibrate()
    res = chsh(a, a2, b, b2, cal)
    gates = {"E_bounded": gate(max(abs(e) for e in res.E), 1 + 1e-10)}
    rows = [[x, y, e, "", "", "", "", ""] for (x, y), e in zip(res.settings, res.E)]
    extra = {"S_analytic": res.S}
    if trials > 0:
        emp, ledgers = chsh_empirical(a, a2, b, b2, trials, rng, cal, workers)
        rows = [
            [x, y, e, ee, led.n11, led.n12, led.n21, led.n22]
            for (x, y), e, ee, led in zip(res.settings, res.E, emp.E, ledgers)
        ]
        extra["S_empirical"] = emp.S
        # S has variance sum_k (1 - E_k^2)/N
        sigma_s = math.sqrt(sum(1 - e * e for e in res.E) / trials)
        gates["S_empirical_within_4sigma"] = gate(abs(emp.S - res.S), SIGMAS * sigma_s)
    if res.S > 2:
        gates["violates_classical_bound"] = gate(res.S, 2.0, ok=True)
        gates["below_tsirelson"] = gate(res.S, 2 * math.sqrt(2) + 1e-9)
    return ExperimentResult(
        "chsh",
        ["phi_s", "phi_a", "E_analytic", "E_empirical", "n11", "n12", "n21", "n22"],
        rows,
        gates,
        extra,
    )


# --- no-signalling ----------------------------------------------------------


def no_signaling_sweep(grid, trials, rng, workers=1):
    if grid < 2:
        raise ValueError("grid must be >= 2")
    cal = calibrate()
    phases = [2 * math.pi * i / grid for i in range(grid)]
    worst = 0.0
    for phi_s in phases:
        for phi_a in phases:
            m = marginals(PhaseSettings(phi_s, phi_a), cal)
            worst = max(worst, max(abs(x - 0.5) for x in m))
    gates = {"max_marginal_deviation": gate(worst, 1e-12)}
    rows = []
    extra = {"max_marginal_deviation": worst}
    if trials > 0:
        gen = rng.child(0).generator()
        settings = [PhaseSettings(*gen.uniform(0, 2 * math.pi, 2)) for _ in range(10)]
        bound = SIGMAS * math.sqrt(0.25 / trials)
        emp_worst = 0.0
        for k, s in enumerate(settings):
            led = run_trials(s, trials, rng.child(1, k), cal, workers)
            m = led.marginals()
            emp_worst = max(emp_worst, max(abs(x - 0.5) for x in m))
            rows.append([s.phi_S, s.phi_A, *m, led.total])
        gates["empirical_marginal_deviation"] = gate(emp_worst, bound)
        extra["empirical_marginal_deviation"] = emp_worst
    return ExperimentResult(
        "nosignal",
        ["phi_s", "phi_a", "p_a1", "p_a2", "p_s1", "p_s2", "n_trials"],
        rows,
        gates,
        extra,
    )


# --- ZWM ----------------------------------------------------------------------


def zwm_experiment(overlap, points):
    g = complex(overlap)
    vis = optics.zwm_visibility(g)
    vis_explicit = optics.zwm_visibility(g, explicit=True)
    rows = []
    worst = 0.0
    for i in range(points):
        phi = 2 * math.pi * i / points
        p1, p2 = optics.zwm_probs(g, phi)
        q1, _ = optics.zwm_probs_explicit(g, phi)
        worst = max(worst, abs(p1 - q1))
        rows.append([phi, p1, p2])
    gates = {
        "visibility_equals_overlap": gate(abs(vis - abs(g)), 1e-9),
        "explicit_partial_trace_agrees": gate(max(worst, abs(vis - vis_explicit)), 1e-12),
    }
    return ExperimentResult("zwm", ["phi", "p1", "p2"], rows, gates, {"visibility": vis})


# --- decoherence chain ----------------------------------------------------------


@dataclass(frozen=True)
class DecoherenceConfig:
    theta: float
    n_collisions: int
    max_collisions: int = MAX_COLLISIONS

    def __post_init__(self):
        if not 0 <= self.theta <= math.pi / 2 + 1e-15:
            raise ValueError(f"theta must lie in [0, pi/2], got {self.theta}")
        if not 0 <= self.n_collisions <= self.max_collisions:
            raise ValueError(
                f"n_collisions must lie in [0, {self.max_collisions}], got {self.n_collisions}"
            )


def _collision_unitary(theta):
    """Controlled rotation: the environment qubit turns by theta only on S's dashed path."""
    rot = np.array([[math.cos(theta), -math.sin(theta)], [math.sin(theta), math.cos(theta)]])
    u = np.zeros((4, 4), dtype=np.complex128)
    u[:2, :2] = np.eye(2)
    u[2:, 2:] = rot
    return u


def explicit_visibility(theta, n):
    """Build S plus ``n`` environment qubits, collide, trace out the environment."""
    if n > MAX_EXPLICIT_COLLISIONS:
        raise ValueError(f"explicit construction limited to {MAX_EXPLICIT_COLLISIONS} collisions")
    dims = (2,) + (2,) * n
    labels = ("S",) + tuple(f"E{k + 1}" for k in range(n))
    layout = SubsystemLayout(dims, labels)
    amps = np.zeros(layout.dim, dtype=np.complex128)
    env0 = 2 ** n
    amps[0] = amps[env0] = math.sqrt(0.5)
    cu = _collision_unitary(theta)
    for k in range(n):
        # S is axis 0, environment qubit k is axis k + 1
        t = amps.reshape(dims)
        t = np.moveaxis(t, k + 1, 1).reshape(4, -1)
        t = (cu @ t).reshape((2, 2) + (2,) * (n - 1))
        amps = np.moveaxis(t, 1, k + 1).reshape(-1)
    psi = PureState(amps, layout)
    if n == 0:
        rho_s = densify(psi).matrix
    else:
        rho_s = partial_trace(densify(psi), "S").matrix
    return float(2 * abs(rho_s[0, 1]))


def decoherence_chain(cfg):
    """Visibility after 0..n collisions, ``(cos theta)**n``."""
    c = math.cos(cfg.theta)
    return [c ** k for k in range(cfg.n_collisions + 1)]


def decoherence_experiment(cfg):
    vis = decoherence_chain(cfg)
    rows = []
    worst = 0.0
    for k, v in enumerate(vis):
        ex = explicit_visibility(cfg.theta, k) if k <= MAX_EXPLICIT_COLLISIONS else ""
        if ex != "":
            worst = max(worst, abs(ex - v))
        rows.append([k, v, ex])
    monotone = all(b <= a + 1e-15 for a, b in zip(vis, vis[1:]))
    gates = {
        "explicit_oracle_agrees": gate(worst, 1e-9),
        "non_increasing": gate(0.0, 0.0, ok=monotone),
    }
    return ExperimentResult(
        "decohere", ["n_collisions", "visibility", "visibility_explicit"], rows, gates
    )


# --- cat scenario ------------------------------------------------------------------


def cat_experiment(c1, c2, trials, rng, workers=1):
    from .measure import run_cat_scenario

    res = run_cat_scenario(c1, c2, trials, rng, workers=workers)
    p = res.probabilities[:4]
    freqs = res.records.frequencies()
    gates = {
        "no_cross_records": gate(res.records.mismatches(), 0),
        "global_purity": gate(abs(res.purity_global - 1), 1e-12),
        "global_entropy_zero": gate(res.entropy_global, 1e-10),
    }
    if trials > 0:
        z = max(
            abs(f - q) / math.sqrt(q * (1 - q) / trials) if 0 < q < 1 else (0.0 if f == q else math.inf)
            for f, q in zip(freqs, p)
        )
        gates["frequencies_within_4sigma"] = gate(z, SIGMAS)
    expected = abs(c1) ** 4 + abs(c2) ** 4
    gates["reduced_purity"] = gate(
        max(abs(res.purity_s - expected), abs(res.purity_a - expected)), 1e-12
    )
    rows = [[r, s, a] for r, s, a in zip(
        res.records.trial_id.tolist(), res.records.s_value.tolist(), res.records.a_value.tolist()
    )]
    extra = {
        "entropy_s": res.entropy_s,
        "entropy_a": res.entropy_a,
        "schmidt_coefficients": [float(x) for x in res.schmidt.coefficients],
        "degenerate": res.schmidt.degenerate,
        "frequencies": [float(x) for x in freqs],
    }
    return ExperimentResult("cat", ["trial_id", "s_value", "a_value"], rows, gates, extra)


# --- basis ambiguity -----------------------------------------------------------------

R_BASIS = (
    np.array([1, 1], dtype=np.complex128) / math.sqrt(2),
    np.array([1, -1], dtype=np.complex128) / math.sqrt(2),
)


def basis_ambiguity_check(c1, c2):
    """Reduced state of S written in the s-basis and in the rotated r-basis."""
    rho_s = partial_trace(densify(measurement_state(c1, c2)), "S")
    s_rep = rho_s.matrix
    r_rep = rebase(rho_s, R_BASIS)
    half = np.eye(2) / 2
    return {
        "rho_s": s_rep,
        "rho_r": r_rep,
        "degenerate": bool(
            np.max(np.abs(s_rep - half)) < 1e-12 and np.max(np.abs(r_rep - half)) < 1e-12
        ),
        "s_offdiag": float(abs(s_rep[0, 1])),
        "r_offdiag": float(abs(r_rep[0, 1])),
    }


def ambiguity_experiment(c1, c2):
    rep = basis_ambiguity_check(c1, c2)
    p1 = abs(c1) ** 2
    rows = []
    for basis, m in (("s", rep["rho_s"]), ("r", rep["rho_r"])):
        for i in range(2):
            for j in range(2):
                rows.append([basis, i + 1, j + 1, m[i, j].real, m[i, j].imag])
    gates = {
        "s_basis_offdiag_zero": gate(rep["s_offdiag"], 1e-12),
        "r_basis_offdiag_expected": gate(abs(rep["r_offdiag"] - abs(2 * p1 - 1) / 2), 1e-12),
    }
    return ExperimentResult(
        "ambiguity",
        ["basis", "row", "col", "re", "im"],
        rows,
        gates,
        {"degenerate": rep["degenerate"], "r_offdiag": rep["r_offdiag"]},
    )
