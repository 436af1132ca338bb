import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from polmem.dynamics import (DensityInput, DensityMatrix, Fock, IntegratorConfig,
                             PolaritonProduct, cutoff_sentinel, evolve, initial_density,
                             lindblad_rhs, liouvillian, oracle_propagate, oracle_step,
                             trace_distance)
from polmem.dynamics import kernel
from polmem.dynamics.evolve import invariant_support
from polmem.errors import CutoffOverflow, DomainError, InvalidArgument, OracleScaleExceeded
from polmem.model import (Constant, DrivenJCParams, Gaussian, GaussianAmplitude, JCHParams,
                          KerrParams, TriangularRamp, build_driven_jc, build_jch, build_kerr)

TAU = math.pi / 0.04
GAUSS = Gaussian(10.0, 1000.0, 0.95 * TAU, 0.95 * TAU / 4)
OPEN = dict(gamma_c=(0.01, 0.01), gamma_a=(0.01, 0.01))


def _final_state(traj):
    return traj.state(len(traj) - 1)


def test_rhs_matches_liouvillian_and_kernel():
    m = build_jch(JCHParams(n_max=1, **OPEN), GAUSS)
    rng = np.random.default_rng(0)
    x = rng.normal(size=(m.dim, m.dim)) + 1j * rng.normal(size=(m.dim, m.dim))
    rho = x @ x.conj().T
    rho /= np.trace(rho)
    t = 33.0
    direct = lindblad_rhs(rho, m, t)
    via_l = (liouvillian(m, t) @ rho.reshape(-1)).reshape(rho.shape)
    via_k = kernel.rhs(kernel.compile_model(m), t, rho)
    assert np.abs(direct - via_l).max() < 1e-12
    assert np.abs(direct - via_k).max() < 1e-12


def test_oracle_refuses_large_instances():
    m = build_jch(JCHParams(n_max=3), GAUSS)
    with pytest.raises(OracleScaleExceeded):
        liouvillian(m, 0.0)


def test_oracle_zero_step_is_identity():
    m = build_kerr(KerrParams(TriangularRamp(1.0, 3.0, 30.0), n_max=5))
    rho = initial_density(Fock((1,)), m)
    assert np.array_equal(oracle_step(rho, m, 1.0, 0.0), rho)


def test_oracle_equivalence_open_jch_constant_detuning():
    m = build_jch(JCHParams(n_max=2, **OPEN), Constant(40.0))
    cfg = IntegratorConfig(output_samples=3, reduce_support=False)
    traj = evolve(PolaritonProduct(("1-", "1-")), m, 20.0, cfg, store_states=True)
    rho0 = initial_density(PolaritonProduct(("1-", "1-")), m)
    ref = oracle_propagate(rho0, m, 0.0, 20.0, 20.0)
    assert trace_distance(_final_state(traj), ref) < 1e-6


def _oracle_check(model, init, duration, dt, tail=1e-6):
    # midpoint freezing is second order in dt; dt is chosen so that this error
    # sits well below the 1e-6 trace-distance budget
    cfg = IntegratorConfig(output_samples=3, cutoff_tail_threshold=tail)
    traj = evolve(init, model, duration, cfg, store_states=True)
    rho0 = initial_density(init, model)
    support = invariant_support(model, rho0)
    ref = oracle_propagate(rho0, model, 0.0, duration, dt, support=support)
    final = _final_state(traj)[np.ix_(support, support)]
    assert trace_distance(final, ref) < 1e-6


def test_oracle_equivalence_jch_gaussian_sweep():
    m = build_jch(JCHParams(n_max=1, **OPEN), Gaussian(10.0, 30.0, 15.0, 5.0))
    _oracle_check(m, PolaritonProduct(("1-", "0g")), 12.0, 0.005)


def test_oracle_equivalence_kerr_ramp():
    m = build_kerr(KerrParams(TriangularRamp(1.0, 3.0, 4.0), n_max=8))
    _oracle_check(m, Fock((0,)), 6.0, 0.0025, tail=1.0)


def test_oracle_equivalence_driven_jc():
    m = build_driven_jc(DrivenJCParams(GaussianAmplitude(0.3, 8.0, 2.0), n_max=4, delta_1=0.4))
    _oracle_check(m, PolaritonProduct(("1-",)), 6.0, 0.0025, tail=1.0)


def test_support_reduction_is_exact():
    m = build_jch(JCHParams(**OPEN), Gaussian(10.0, 200.0, 15.0, 4.0))
    init = PolaritonProduct(("1-", "1-"))
    full = evolve(init, m, 20.0, IntegratorConfig(reduce_support=False, output_samples=50))
    red = evolve(init, m, 20.0, IntegratorConfig(output_samples=50))
    assert red.stats["reduced_dim"] < full.stats["reduced_dim"] == 36
    assert np.abs(full.var_N - red.var_N).max() < 1e-9
    assert np.abs(full.purity - red.purity).max() < 1e-9


def test_support_of_closed_mott_start():
    m = build_jch(JCHParams(), GAUSS)
    rho0 = initial_density(PolaritonProduct(("1-", "1-")), m)
    # two excitations over two sites: 8 basis states
    assert len(invariant_support(m, rho0)) == 8


def test_damped_cavity_decays_exponentially():
    m = build_kerr(KerrParams(Constant(0.0), delta=0.0, U=0.0, gamma=0.1, n_max=4))
    traj = evolve(Fock((3,)), m, 30.0, IntegratorConfig(output_samples=31))
    assert np.allclose(traj.photons[:, 0], 3 * np.exp(-0.1 * traj.times), atol=1e-8)


def test_atom_decay_in_driven_jc_without_light():
    p = DrivenJCParams(Constant(0.0), Omega=0.0, g=1e-14, gamma_c=0.0, gamma_a=0.2, n_max=1)
    m = build_driven_jc(p)
    traj = evolve(Fock((0,), ("e",)), m, 10.0, IntegratorConfig(output_samples=11))
    assert np.allclose(traj.mean_N[:, 0], np.exp(-0.2 * traj.times), atol=1e-8)


def test_closed_run_conserves_excitations():
    m = build_jch(JCHParams(), GAUSS)
    traj = evolve(PolaritonProduct(("1-", "1-")), m, 2 * GAUSS.T,
                  IntegratorConfig(output_samples=400))
    total = traj.mean_N.sum(axis=1)
    assert np.abs(total - 2.0).max() < 1e-7
    assert np.abs(traj.purity - 1).max() < 1e-7


def test_frame_equivalence():
    drive = Gaussian(10.0, 1000.0, 8.0, 2.0)
    init = PolaritonProduct(("1-", "1-"))
    out = {}
    for frame in ("lab", "number_rotating"):
        m = build_jch(JCHParams(frame=frame, J=0.2, **OPEN), drive)
        out[frame] = evolve(init, m, 10.0, IntegratorConfig(output_samples=101, rtol=1e-10,
                                                             atol=1e-12))
    for name in ("var_N", "mean_N", "photons"):
        diff = getattr(out["lab"], name) - getattr(out["number_rotating"], name)
        assert np.abs(diff).max() < 1e-6, name


def test_frame_override_in_config():
    m = build_jch(JCHParams(J=0.2), Gaussian(10.0, 100.0, 8.0, 2.0))
    a = evolve(PolaritonProduct(("1-", "1-")), m, 2.0, IntegratorConfig(output_samples=11))
    b = evolve(PolaritonProduct(("1-", "1-")), m, 2.0,
               IntegratorConfig(output_samples=11, frame="lab"))
    assert np.abs(a.var_N - b.var_N).max() < 1e-6


def test_tolerance_convergence():
    m = build_jch(JCHParams(**OPEN), GAUSS)
    init = PolaritonProduct(("1-", "1-"))
    # loose tolerances may dip below the 1e-8 positivity floor, so skip that check here
    coarse = evolve(init, m, 60.0, IntegratorConfig(rtol=1e-6, atol=1e-8, output_samples=61,
                                                    check_invariants=False))
    fine = evolve(init, m, 60.0, IntegratorConfig(rtol=1e-10, atol=1e-12, output_samples=61))
    assert np.abs(coarse.var_N - fine.var_N).max() < 1e-4


def test_cutoff_overflow_is_reported():
    m = build_kerr(KerrParams(TriangularRamp(1.0, 3.0, 30.0), n_max=6))
    with pytest.raises(CutoffOverflow) as info:
        evolve(Fock((0,)), m, 60.0, IntegratorConfig(output_samples=200))
    assert info.value.tail > 1e-6 and 0 < info.value.time <= 60.0


def test_cutoff_sentinel_small_when_converged():
    m = build_kerr(KerrParams(TriangularRamp(1.0, 3.0, 30.0), n_max=60))
    traj = evolve(Fock((0,)), m, 60.0, IntegratorConfig(output_samples=200, max_step=0.02))
    assert cutoff_sentinel(traj) < 1e-6


def test_duration_beyond_drive_domain():
    m = build_jch(JCHParams(), GAUSS)
    with pytest.raises(DomainError):
        evolve(PolaritonProduct(("1-", "1-")), m, 3 * GAUSS.T)


def test_label_count_mismatch():
    m = build_jch(JCHParams(), GAUSS)
    with pytest.raises(InvalidArgument):
        evolve(PolaritonProduct(("1-",)), m, 1.0)


def test_density_input_validation():
    m = build_kerr(KerrParams(TriangularRamp(1.0, 3.0, 30.0), n_max=3))
    with pytest.raises(InvalidArgument):
        initial_density(DensityInput(np.eye(4)), m)


@settings(max_examples=8, deadline=None)
@given(seed=st.integers(0, 10_000), F=st.floats(0.0, 2.0))
def test_random_mixed_states_stay_physical(seed, F):
    m = build_kerr(KerrParams(Constant(F), n_max=8))
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(m.dim, 3)) + 1j * rng.normal(size=(m.dim, 3))
    x[-3:] = 0  # keep the top levels empty
    rho = x @ x.conj().T
    rho /= np.trace(rho)
    traj = evolve(DensityInput(rho), m, 3.0,
                  IntegratorConfig(output_samples=20, cutoff_tail_threshold=1.0),
                  store_states=True)
    for k in range(len(traj)):
        assert DensityMatrix(traj.state(k)).violations() == []


def test_max_error_norm_keeps_fast_sweep_positive():
    # the RMS norm averages over dim^2 entries, so a few badly resolved coherences
    # can push the smallest eigenvalue past the positivity floor
    m = build_jch(JCHParams(J=0.2, **OPEN), Gaussian(10.0, 100.0, 8.0, 2.0))
    init = PolaritonProduct(("1-", "1-"))
    runs = {}
    for norm in ("rms", "max"):
        for reduce in (False, True):
            runs[norm, reduce] = evolve(init, m, 16.0, IntegratorConfig(
                output_samples=41, reduce_support=reduce, error_norm=norm,
                check_invariants=False))
    assert runs["rms", False].min_eigenvalue.min() < -1e-8
    for reduce in (False, True):
        assert runs["max", reduce].min_eigenvalue.min() > -1e-8
    assert np.abs(runs["max", False].var_N - runs["max", True].var_N).max() < 1e-9
    with pytest.raises(InvalidArgument):
        IntegratorConfig(error_norm="l1")
