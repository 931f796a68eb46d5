import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from biphoton import optics
from biphoton.numerics import unitarity_error
from biphoton.optics import (
    Barrier,
    BeamSplitter,
    JointDistribution,
    Mirror,
    OpticalNetwork,
    PhaseSettings,
    PhaseShifter,
    bs_unitary,
    build_rto,
    calibrate,
    correlation,
    marginals,
    rto_closed_form,
    rto_joint_probs,
    single_photon_probs,
    zwm_probs,
    zwm_probs_explicit,
    zwm_visibility,
)
from biphoton.qstate import densify, partial_trace

angles = st.floats(-20, 20, allow_nan=False, allow_infinity=False)


@pytest.fixture(scope="module")
def cal():
    return calibrate()


def test_beam_splitter_double_pass_swaps_paths():
    out = bs_unitary() @ bs_unitary() @ np.array([1, 0])
    # by hand: (1/2)[[1, i], [i, 1]]^2 = [[0, i], [i, 0]]
    np.testing.assert_allclose(out, [0, 1j], atol=1e-15)


def test_beam_splitter_splits_evenly_and_is_unitary():
    out = bs_unitary() @ np.array([1, 0])
    np.testing.assert_allclose(abs(out) ** 2, [0.5, 0.5], atol=1e-15)
    assert unitarity_error(bs_unitary()) < 1e-15


def test_single_photon_full_visibility():
    phis = np.linspace(0, 2 * math.pi, 4001)
    p1 = np.array([single_photon_probs(p)[0] for p in phis])
    assert p1.max() == pytest.approx(1, abs=1e-6)
    assert p1.min() == pytest.approx(0, abs=1e-6)
    assert optics.fringe_visibility(lambda p: single_photon_probs(p)[0]) == pytest.approx(1, abs=1e-12)


def test_single_photon_normalization_and_half_turn():
    rng = np.random.default_rng(40)
    for phi in rng.uniform(-10, 10, 100):
        p1, p2 = single_photon_probs(phi)
        assert abs(p1 + p2 - 1) < 1e-12
        assert abs(single_photon_probs(phi + math.pi)[0] - p2) < 1e-12
        # hand evaluation of |e^{i phi} + i|^2 / 4
        assert abs(p1 - abs(cmath.exp(1j * phi) + 1j) ** 2 / 4) < 1e-12


def test_build_rto_structure():
    s = PhaseSettings(0.3, -1.1)
    psi, u = build_rto(s)
    np.testing.assert_allclose(psi.amplitudes, [2 ** -0.5, 0, 0, 2 ** -0.5], atol=0)
    assert unitarity_error(u) < 1e-12
    s_net = bs_unitary() @ optics.phase_unitary(0, s.phi_S)
    a_net = bs_unitary() @ optics.phase_unitary(1, s.phi_A)
    np.testing.assert_allclose(u, np.kron(s_net, a_net), atol=1e-15)
    rho = densify(psi)
    for label in ("S", "A"):
        np.testing.assert_allclose(partial_trace(rho, label).matrix, np.eye(2) / 2, atol=1e-15)


def test_uncalibrated_setup_phase_is_product_of_reflection_phases():
    # both photons reach detector 1 on the dashed branch by two reflections: i * i = e^{i pi}
    w = calibrate().setup_phase
    expected = cmath.phase(1j * 1j)
    assert abs(cmath.exp(1j * w) - cmath.exp(1j * expected)) < 1e-12


def test_calibration_zeroes_w_and_is_idempotent(cal):
    assert abs(cal.w) < 1e-9
    again = calibrate()
    assert abs(again.w - cal.w) < 1e-12
    assert abs(again.setup_phase - cal.setup_phase) < 1e-12
    same = rto_joint_probs(PhaseSettings(0, 0), cal).same
    assert abs(same - 1) < 1e-10


@pytest.mark.parametrize(
    "delta, expected",
    [
        (0.0, (0.5, 0.0, 0.0, 0.5)),
        (math.pi / 2, (0.25, 0.25, 0.25, 0.25)),
        (math.pi, (0.0, 0.5, 0.5, 0.0)),
    ],
)
def test_rto_joint_probs_benchmarks(cal, delta, expected):
    j = rto_joint_probs(PhaseSettings(delta, 0.0), cal)
    np.testing.assert_allclose(j.as_array(), expected, atol=1e-10)


@pytest.mark.parametrize(
    "delta, c", [(0.0, 1.0), (math.pi / 3, 0.5), (math.pi / 2, 0.0), (math.pi, -1.0)]
)
def test_correlation_benchmarks(cal, delta, c):
    assert abs(correlation(PhaseSettings(delta, 0.0), cal) - c) < 1e-10


def test_correlation_pi_over_3_agreement(cal):
    assert abs(rto_joint_probs(PhaseSettings(math.pi / 3, 0), cal).same - 0.75) < 1e-10


def test_born_rule_agrees_with_closed_form(cal):
    rng = np.random.default_rng(41)
    for phi_s, phi_a in rng.uniform(-2 * math.pi, 2 * math.pi, (200, 2)):
        s = PhaseSettings(phi_s, phi_a)
        born = rto_joint_probs(s, cal).as_array()
        closed = rto_closed_form(s).as_array()
        assert np.max(np.abs(born - closed)) < 1e-12


@settings(max_examples=100, deadline=None)
@given(angles, angles, angles)
def test_correlation_depends_only_on_difference(a, b, d):
    c = calibrate()
    assert abs(correlation(PhaseSettings(a, b), c) - correlation(PhaseSettings(a + d, b + d), c)) < 1e-12


@settings(max_examples=100, deadline=None)
@given(angles, angles)
def test_joint_symmetry(a, b):
    j = rto_joint_probs(PhaseSettings(a, b), calibrate())
    assert abs(j.p11 - j.p22) < 1e-10 and abs(j.p12 - j.p21) < 1e-10


def test_quarter_wave_moves_correlation_to_zero(cal):
    assert abs(correlation(PhaseSettings(0, 0), cal) - 1) < 1e-10
    assert abs(correlation(PhaseSettings(math.pi / 2, 0), cal)) < 1e-10


@pytest.mark.parametrize("s", [PhaseSettings(0, 0), PhaseSettings(1.234, -0.777)])
def test_marginals_examples(cal, s):
    np.testing.assert_allclose(marginals(s, cal), [0.5] * 4, atol=1e-12)


def test_marginals_random_sweep(cal):
    rng = np.random.default_rng(42)
    worst = max(
        max(abs(m - 0.5) for m in marginals(PhaseSettings(*p), cal))
        for p in rng.uniform(-10, 10, (1000, 2))
    )
    assert worst < 1e-12


def test_entanglement_kills_local_fringes(cal):
    phis = np.linspace(0, 2 * math.pi, 64)
    local = np.array([marginals(PhaseSettings(p, 0.4), cal) for p in phis])
    assert np.max(np.abs(local - local[0])) < 1e-12
    single = np.array([single_photon_probs(p)[0] for p in phis])
    assert single.max() - single.min() > 0.99


def test_joint_distribution_validation():
    with pytest.raises(ValueError):
        JointDistribution(0.5, 0.5, 0.5, 0.0)


def test_barrier_network_records_loss():
    net = OpticalNetwork(((Barrier(1), Mirror(), BeamSplitter()),), source="single")
    psi, loss = net.propagate()
    assert loss == pytest.approx(0.5, abs=1e-15)
    np.testing.assert_allclose(abs(psi.amplitudes) ** 2, [0.5, 0.5], atol=1e-15)
    assert net.lossy and unitarity_error(net.compile()) > 0.1


def test_barrier_on_pair_arm_leaves_partner_mixture():
    # absorbing A's dashed beam post-selects the solid branch: S no longer interferes
    arms = ((PhaseShifter(0, 0.7), BeamSplitter()), (Barrier(1), BeamSplitter()))
    psi, loss = OpticalNetwork(arms).propagate()
    assert loss == pytest.approx(0.5, abs=1e-15)
    rho_s = partial_trace(densify(psi), "S").matrix
    np.testing.assert_allclose(np.diag(rho_s).real, [0.5, 0.5], atol=1e-12)


def test_network_export_round_trips():
    u = build_rto(PhaseSettings(0.1, 0.2))[1]
    data = optics.export_unitary(u)
    back = np.array(data)[..., 0] + 1j * np.array(data)[..., 1]
    assert back.tobytes() == np.asarray(u).tobytes()


def test_zwm_barrier_inserted_gives_mixture():
    for phi in np.linspace(0, 2 * math.pi, 17):
        assert zwm_probs(0, phi) == pytest.approx((0.5, 0.5), abs=1e-15)


def test_zwm_no_barrier_reproduces_single_photon():
    for phi in np.linspace(-3, 3, 50):
        np.testing.assert_allclose(zwm_probs(1, phi), single_photon_probs(phi), atol=1e-12)


def test_zwm_half_overlap_against_partial_trace_oracle():
    assert abs(zwm_visibility(0.5) - 0.5) < 1e-9
    assert abs(zwm_visibility(0.5, explicit=True) - 0.5) < 1e-9
    for phi in np.linspace(0, 2 * math.pi, 33):
        np.testing.assert_allclose(zwm_probs(0.5, phi), zwm_probs_explicit(0.5, phi), atol=1e-12)


def test_zwm_complex_overlap_phase_shifts_fringe():
    g = 0.8 * cmath.exp(0.9j)
    for phi in np.linspace(0, 2 * math.pi, 33):
        p1 = zwm_probs(g, phi)[0]
        assert abs(p1 - (1 + 0.8 * math.cos(phi + 0.9 - math.pi / 2)) / 2) < 1e-12
        assert abs(p1 - zwm_probs_explicit(g, phi)[0]) < 1e-12


def test_zwm_rejects_overlap_above_one():
    with pytest.raises(ValueError):
        zwm_probs(1.01, 0)
