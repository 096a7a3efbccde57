import dataclasses

import numpy as np
import pytest

from barload.errors import InvalidArgumentError
from barload.physics.basis import CONDENSATE, ModeIndex, TrapSpec
from barload.physics.coupling import build_alpha_tensor
from barload.physics.decay import (
    DecayMachinery,
    averaged_outcome,
    bar_validity,
    condensate_update,
    p_plus_s,
    p_zero_s,
)
from barload.physics.quadrature import build_sphere_quadrature
from barload.physics.thermal import OccupationState
from barload.validation import benchmark_channels


def test_condensate_update_formula():
    n0, n, p2, p0 = 9000.0, 10_000, 0.003, 0.011
    assert condensate_update(n0, n, p2, p0) == (n0 + 1.0 + (p2 - p0)) / (n + 1.0)


def test_validity_flags():
    ok = bar_validity(0.01, 0.02, 9900, 10_000, a_estimate=20)
    assert ok.valid and ok.reason == ""
    small = bar_validity(0.01, 0.02, 9900, 10_000, a_estimate=20, threshold=0.0)
    assert not small.expansion_ok and small.reason == "expansion"
    crowded = bar_validity(0.01, 0.02, 5000, 10_000, a_estimate=20)
    assert crowded.reason == "occupation"


@pytest.mark.parametrize("n0", [25, 100, 400])
def test_single_level_closed_forms(benchmark, n0):
    spec, alpha = benchmark
    state, _, machinery = benchmark_channels(alpha, spec, n0)
    a = alpha.real[0, 0].real
    b = alpha.real[0, 1]
    g = alpha.real[1, 1].real
    n_s = 1

    total, (cond, side, inter) = p_zero_s(state, 1, machinery)
    assert side == pytest.approx((n_s + 1) * g / (n0 * a), rel=1e-10)
    assert cond == pytest.approx(0.5 * (n_s + 1) * abs(b) ** 2 / (n0 * a**2), rel=1e-10)
    assert inter == pytest.approx(-(n_s + 1) * abs(b) ** 2 / (n0 * a**2), rel=1e-10)
    assert total == pytest.approx(cond + side + inter, rel=1e-12)

    expected_plus = 0.5 * (n0 + 2) * (n0 + 1) * n_s * abs(b) ** 2 / (n0**3 * a**2)
    assert p_plus_s(state, 1, machinery) == pytest.approx(expected_plus, rel=1e-10)


def test_interference_is_destructive_on_benchmark(benchmark):
    spec, alpha = benchmark
    state, _, machinery = benchmark_channels(alpha, spec, 100)
    _, (_, _, inter) = p_zero_s(state, 1, machinery)
    assert inter < 0


def test_empty_sideband_cannot_feed_condensate(benchmark):
    spec, alpha = benchmark
    _, _, machinery = benchmark_channels(alpha, spec, 100)
    empty = OccupationState(ground=alpha.ground, occupations=np.array([100, 0]), excited_mode=CONDENSATE)
    assert p_plus_s(empty, 1, machinery) == 0.0


def test_condensate_is_not_a_sideband(benchmark):
    spec, alpha = benchmark
    state, _, machinery = benchmark_channels(alpha, spec, 100)
    with pytest.raises(InvalidArgumentError):
        p_zero_s(state, 0, machinery)


def test_no_recoil_has_no_sideband_channels():
    spec = TrapSpec(shells_g=2, shells_e=1, eta_sq=0.0, n_atoms=101, n_condensed=100)
    alpha = build_alpha_tensor(spec, build_sphere_quadrature(4), include_imaginary=False)
    machinery = DecayMachinery(alpha, spec)
    occ = np.array([100, 1, 0, 0])
    state = OccupationState(ground=alpha.ground, occupations=occ, excited_mode=CONDENSATE)
    for s in range(1, 4):
        total, _ = p_zero_s(state, s, machinery)
        assert total == pytest.approx(0.0, abs=1e-14)
        assert p_plus_s(state, s, machinery) == pytest.approx(0.0, abs=1e-14)


def test_zero_probability_mode(two_level_alpha, two_level_spec):
    machinery = DecayMachinery(two_level_alpha, two_level_spec, zero_probabilities=True)
    out = averaged_outcome(two_level_spec, 1.0, 1.0, 4, machinery, rng_seed=3)
    assert out.p_plus == 0.0 and out.p_zero == 0.0
    assert out.n_prime == (out.n_condensed + 1.0) / (two_level_spec.n_atoms + 1.0)


def test_averaged_outcome_reproducible_across_threads(two_level_alpha, two_level_spec):
    machinery = DecayMachinery(two_level_alpha, two_level_spec)
    one = averaged_outcome(two_level_spec, 2.0, 0.5, 6, machinery, rng_seed=11, threads=1)
    many = averaged_outcome(two_level_spec, 2.0, 0.5, 6, machinery, rng_seed=11, threads=3)
    assert one == many
    assert one.n_prime == condensate_update(one.n_condensed, two_level_spec.n_atoms, one.p_plus, one.p_zero)
    assert one.n_samples == 6 and one.p_zero_stderr >= 0


def test_zero_ground_temperature_has_no_reabsorption_gain(two_level_alpha, two_level_spec):
    machinery = DecayMachinery(two_level_alpha, two_level_spec)
    out = averaged_outcome(two_level_spec, 0.0, 0.5, 2, machinery, rng_seed=0)
    assert out.p_plus == 0.0
    assert out.n_condensed == two_level_spec.n_atoms


def test_machinery_follows_a_changed_spec(two_level_alpha, two_level_spec):
    machinery = DecayMachinery(two_level_alpha, two_level_spec)
    smaller = dataclasses.replace(two_level_spec, n_atoms=4000, n_condensed=4000)
    out = averaged_outcome(smaller, 1.0, 1.0, 2, machinery, rng_seed=5)
    assert out.n_atoms == 4000


def test_a_estimate_counts_sidebands(two_level_alpha, two_level_spec):
    machinery = DecayMachinery(two_level_alpha, two_level_spec)
    weights = np.array([1.0, 0.0, 0.0, 0.0])
    a = machinery.a_estimate(weights)
    assert 0 < a <= two_level_alpha.n_ground - 1


def test_no_recoil_raising_channel_skips_undamped_excited_mode():
    # (1,0,0) does not decay without recoil, yet P2 must come out as zero
    spec = TrapSpec(shells_g=2, shells_e=2, eta_sq=0.0, n_atoms=102, n_condensed=100)
    alpha = build_alpha_tensor(spec, build_sphere_quadrature(4), include_imaginary=False)
    machinery = DecayMachinery(alpha, spec)
    state = OccupationState(
        ground=alpha.ground, occupations=np.array([100, 0, 0, 2]), excited_mode=ModeIndex(1, 0, 0)
    )
    assert p_plus_s(state, ModeIndex(1, 0, 0), machinery) == 0.0


@pytest.mark.parametrize("include_imaginary", [False, True])
def test_channels_do_not_depend_on_decay_rate(include_imaginary):
    spec = TrapSpec(shells_g=3, shells_e=2, eta_sq=1.0, n_atoms=503, n_condensed=500)
    alpha = build_alpha_tensor(spec, build_sphere_quadrature(8), pv_grid=40, include_imaginary=include_imaginary)
    occ = np.zeros(len(alpha.ground), dtype=np.int64)
    occ[0], occ[4], occ[7] = 500, 2, 1
    state = OccupationState(ground=alpha.ground, occupations=occ, excited_mode=ModeIndex(0, 0, 1))
    results = []
    for gamma in (1.0, 7.0):
        machinery = DecayMachinery(alpha, dataclasses.replace(spec, gamma=gamma))
        results.append([p_plus_s(state, s, machinery) for s in (4, 7)] + [p_zero_s(state, s, machinery)[0] for s in (4, 7)])
    np.testing.assert_allclose(results[0], results[1], rtol=1e-9, atol=1e-15)
    assert max(results[0]) > 0


def test_outcome_invariant_under_axis_permutation(two_level_alpha, two_level_spec):
    machinery = DecayMachinery(two_level_alpha, two_level_spec)
    ground = two_level_alpha.ground
    occ = np.zeros(len(ground), dtype=np.int64)
    occ[0] = 4990
    occ[ground.index(ModeIndex(1, 0, 0))] = 6
    occ[ground.index(ModeIndex(0, 1, 1))] = 4
    state = OccupationState(ground=ground, occupations=occ, excited_mode=ModeIndex(0, 0, 1))

    order = (2, 0, 1)
    perm = ground.permutation(order)
    permuted_occ = np.zeros_like(occ)
    permuted_occ[perm] = occ
    permuted = OccupationState(ground=ground, occupations=permuted_occ, excited_mode=state.excited_mode.permuted(order))

    for s in (ground.index(ModeIndex(1, 0, 0)), ground.index(ModeIndex(0, 1, 1)), ground.index(ModeIndex(0, 2, 0))):
        assert p_plus_s(permuted, int(perm[s]), machinery) == pytest.approx(p_plus_s(state, s, machinery), rel=1e-8, abs=1e-16)
        assert p_zero_s(permuted, int(perm[s]), machinery)[0] == pytest.approx(
            p_zero_s(state, s, machinery)[0], rel=1e-8, abs=1e-16
        )
