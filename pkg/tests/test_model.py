import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from polmem.errors import DomainError, InvalidArgument
from polmem.model import (Constant, DrivenJCParams, Gaussian, GaussianAmplitude, JCHParams,
                          KerrParams, PulseTrain, TriangularRamp, build_driven_jc, build_jch,
                          build_kerr, drive_eval, drive_series, excitation_operator)
from polmem.ops import commutator, hermiticity_error

GAUSS = Gaussian(10.0, 1000.0, 0.95 * math.pi / 0.04, 0.95 * math.pi / 0.16)
RAMP = TriangularRamp(1.0, 3.0, 30.0)


def test_gaussian_peak_and_endpoints():
    v = drive_eval(GAUSS, GAUSS.T)
    assert v.value == pytest.approx(1000.0)
    assert v.derivative == 0.0
    start = drive_eval(GAUSS, 0.0).value
    assert start == pytest.approx(10.0 + 990.0 * math.exp(-8.0), rel=1e-14)
    assert drive_eval(GAUSS, 2 * GAUSS.T).value == pytest.approx(start, rel=1e-12)


@pytest.mark.parametrize("args", [(10.0, 5.0, 10.0, 2.0), (0.0, 5.0, 10.0, 2.0),
                                  (1.0, 5.0, 10.0, 8.0)])
def test_gaussian_validation(args):
    with pytest.raises(InvalidArgument):
        Gaussian(*args)


def test_ramp_continuity_and_shape():
    eps = 1e-9
    below = drive_eval(RAMP, RAMP.t_s - eps).value
    above = drive_eval(RAMP, RAMP.t_s).value
    assert below == pytest.approx(4.0, abs=1e-8)
    assert above == pytest.approx(4.0, abs=1e-12)
    assert drive_eval(RAMP, 0.0).value == 1.0
    assert drive_eval(RAMP, 2 * RAMP.t_s).value == pytest.approx(1.0)
    assert drive_eval(RAMP, 15.0).derivative == pytest.approx(0.1)
    assert drive_eval(RAMP, 45.0).derivative == pytest.approx(-0.1)


def test_ramp_needs_positive_sweep_time():
    with pytest.raises(InvalidArgument):
        TriangularRamp(1.0, 3.0, 0.0)


def test_pulse_train_is_sum_of_shifted_gaussians():
    train = PulseTrain(GAUSS, count=3)
    assert train.period == pytest.approx(2 * GAUSS.T)
    ts = np.linspace(0, train.horizon, 301)
    vals, _ = drive_series(train, ts)
    ref = GAUSS.xi_i + sum((GAUSS.xi_f - GAUSS.xi_i)
                           * np.exp(-(ts - GAUSS.T - k * train.period) ** 2
                                    / (2 * GAUSS.sigma_w ** 2)) for k in range(3))
    assert np.allclose(vals, ref, rtol=1e-14)


def test_single_pulse_train_matches_gaussian():
    ts = np.linspace(0, 2 * GAUSS.T, 101)
    a, ra = drive_series(PulseTrain(GAUSS, count=1), ts)
    b, rb = drive_series(GAUSS, ts)
    assert np.array_equal(a, b) and np.array_equal(ra, rb)


def test_drive_domain_error():
    with pytest.raises(DomainError):
        drive_eval(GAUSS, -1.0)
    with pytest.raises(DomainError):
        drive_eval(RAMP, 60.1)


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(["gauss", "train", "ramp", "amp"]), st.floats(0.01, 0.99))
def test_drive_derivative_matches_finite_difference(which, frac):
    profile = {"gauss": GAUSS, "train": PulseTrain(GAUSS, count=2), "ramp": RAMP,
               "amp": GaussianAmplitude(1.0, 70.0, 17.5)}[which]
    t = frac * profile.horizon
    if which == "ramp" and abs(t - RAMP.t_s) < 1e-3:
        return
    h = 1e-4 * profile.horizon / 100
    fd = (drive_eval(profile, t + h).value - drive_eval(profile, t - h).value) / (2 * h)
    d = drive_eval(profile, t).derivative
    assert abs(fd - d) <= 1e-6 * max(abs(d), 1e-3 * max(1.0, abs(drive_eval(profile, t).value)))


def test_decoupled_lab_frame_spectrum():
    p = JCHParams(omega_c=3.0, omega_a=5.0, g=1.0, J=0.0, frame="lab", n_max=2)
    m = build_jch(p, Constant(0.0))
    # the atom-cavity coupling is off-diagonal, so the diagonal holds the bare energies
    h = m.H_static.entries
    diag = np.real(np.diag(h))
    lay = m.layout
    for n1 in range(3):
        for e1 in range(2):
            for n2 in range(3):
                for e2 in range(2):
                    k = lay.index((n1, n2), (e1, e2))
                    assert diag[k] == pytest.approx(3.0 * (n1 + n2) + 5.0 * (e1 + e2))
    p0 = JCHParams(omega_c=3.0, omega_a=5.0, g=1e-300, J=0.0, frame="lab", n_max=2)
    h0 = build_jch(p0, Constant(0.0)).H_static.entries
    assert np.allclose(h0, np.diag(np.diag(h0)))


@settings(max_examples=30, deadline=None)
@given(xi=st.floats(0, 2e3), J=st.floats(0, 0.5), frame=st.sampled_from(["lab", "number_rotating"]))
def test_jch_conserves_total_excitations(xi, J, frame):
    m = build_jch(JCHParams(J=J, frame=frame), Constant(0.0))
    N = excitation_operator(m).entries
    h = m.hamiltonian(0.0, xi)
    assert np.abs(commutator(h, N)).max() < 1e-10 * max(1.0, xi)


def test_jch_hermitian_and_collapse_ops():
    m = build_jch(JCHParams(gamma_c=(0.01, 0.0), gamma_a=(0.01, 0.02)), GAUSS)
    for t in np.linspace(0, GAUSS.horizon, 7):
        assert hermiticity_error(m.hamiltonian(t)) < 1e-12
    labels = sorted(op.label for _, op in m.collapse_ops)
    assert labels == ["a_0", "sigma_0", "sigma_1"]
    assert m.dim == 36


def test_number_rotating_frame_drops_cavity_frequency():
    a = build_jch(JCHParams(omega_c=1e4, frame="number_rotating"), GAUSS).H_static.entries
    b = build_jch(JCHParams(omega_c=5.0, frame="number_rotating"), GAUSS).H_static.entries
    assert np.array_equal(a, b)


def test_driven_jc_resonant_vacuum_is_stationary():
    m = build_driven_jc(DrivenJCParams(GaussianAmplitude(0.0, 20.0, 5.0), Omega=0.0, n_max=4))
    vac = np.zeros(m.dim)
    vac[0] = 1
    assert np.allclose(m.hamiltonian(3.0) @ vac, 0)


def test_driven_jc_hermitian_with_phase():
    p = DrivenJCParams(GaussianAmplitude(1.0, 20.0, 5.0), delta_1=0.7, n_max=5)
    m = build_driven_jc(p)
    assert len(m.harmonic_terms) == 2
    for t in np.random.default_rng(1).uniform(0, 40, 10):
        assert hermiticity_error(m.hamiltonian(t)) < 1e-12


def test_kerr_nonlinearity_on_fock_two():
    m = build_kerr(KerrParams(RAMP, delta=0.0, U=0.1, n_max=6))
    two = np.zeros(m.dim)
    two[2] = 1
    assert np.allclose(m.H_static.entries @ two, 0.1 * two)
    assert len(m.collapse_ops) == 1 and m.collapse_ops[0][0] == 1.0
