import dataclasses

import numpy as np
import pytest

from barload.errors import ResourceLimitError
from barload.physics.basis import CONDENSATE, ModeBasis, TrapSpec
from barload.physics.coupling import build_alpha_tensor
from barload.physics.decay import p_plus_s, p_zero_s
from barload.physics.oracle import FockBasis, integrate_cascade, quantum_jump_estimate
from barload.physics.quadrature import build_sphere_quadrature
from barload.physics.thermal import OccupationState
from barload.validation import BENCHMARK_CONDENSED, benchmark_channels


def test_no_coupling_leaves_excitation_in_place(benchmark):
    spec, alpha = benchmark
    state, step, _ = benchmark_channels(alpha, spec, 20)
    frozen = dataclasses.replace(step, gamma=0.0)
    result = integrate_cascade(frozen, state, alpha, t_max=5.0)
    assert all(p == 0.0 for p in result.probabilities.values())
    assert result.remaining_excited == pytest.approx(1.0, abs=1e-9)
    jumps = quantum_jump_estimate(frozen, state, alpha, 3, rng_seed=1, t_max=5.0)
    assert sum(jumps.probabilities.values()) == 0.0


def test_single_channel_condenses_everything():
    spec = TrapSpec(shells_g=1, shells_e=1, eta_sq=0.0, n_atoms=11, n_condensed=10)
    alpha = build_alpha_tensor(
        spec, build_sphere_quadrature(4), include_imaginary=False,
        excited=ModeBasis([CONDENSATE]), ground=ModeBasis([CONDENSATE]),
    )
    state = OccupationState(ground=alpha.ground, occupations=np.array([10]), excited_mode=CONDENSATE)
    result = integrate_cascade(spec, state, alpha)
    assert result.probabilities[(11,)] == pytest.approx(1.0, abs=1e-8)
    assert abs(result.trace_deficit) < 1e-6


def test_probability_bookkeeping(benchmark):
    spec, alpha = benchmark
    state, step, _ = benchmark_channels(alpha, spec, 25)
    result = integrate_cascade(step, state, alpha)
    total = sum(result.probabilities.values()) + result.remaining_excited + result.trace_deficit
    assert total == pytest.approx(1.0, abs=1e-8)
    assert result.remaining_excited <= 1e-9


def test_basis_cap_enforced(benchmark):
    spec, alpha = benchmark
    state, _, _ = benchmark_channels(alpha, spec, 25)
    with pytest.raises(ResourceLimitError):
        FockBasis.build(state, alpha.n_excited, max_removed=3, cap=2)


def test_basis_contains_both_channels(benchmark):
    spec, alpha = benchmark
    state, _, _ = benchmark_channels(alpha, spec, 25)
    basis = FockBasis.build(state, alpha.n_excited)
    assert (27, 0) in basis.ground_index and (25, 2) in basis.ground_index


def test_single_trajectory_is_reproducible(benchmark):
    spec, alpha = benchmark
    state, step, _ = benchmark_channels(alpha, spec, 25)
    a = quantum_jump_estimate(step, state, alpha, 1, rng_seed=42)
    b = quantum_jump_estimate(step, state, alpha, 1, rng_seed=42)
    assert a.probabilities == b.probabilities


@pytest.mark.slow
def test_jump_estimate_agrees_with_master_equation(benchmark):
    spec, alpha = benchmark
    state, step, _ = benchmark_channels(alpha, spec, 25)
    exact = integrate_cascade(step, state, alpha)
    jumps = quantum_jump_estimate(step, state, alpha, 400, rng_seed=7, threads=4)
    for got, err, ref in zip(jumps.channel(state, 1), jumps.channel_stderr(state, 1), exact.channel(state, 1)):
        assert abs(got - ref) <= 3 * err + 1e-12


@pytest.mark.slow
def test_expansion_converges_to_master_equation(benchmark):
    spec, alpha = benchmark
    errors = []
    for n0 in BENCHMARK_CONDENSED:
        state, step, machinery = benchmark_channels(alpha, spec, n0)
        ref_plus, ref_zero = integrate_cascade(step, state, alpha).channel(state, 1)
        plus = p_plus_s(state, 1, machinery)
        zero, _ = p_zero_s(state, 1, machinery)
        errors.append((abs(plus - ref_plus) / ref_plus, abs(zero - ref_zero) / ref_zero))
    errors = np.array(errors)
    assert np.all(np.diff(errors, axis=0) < 0)
    assert np.all(errors[-1] < 0.1)
