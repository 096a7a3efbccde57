import pytest

from barload.errors import InvalidArgumentError
from barload.physics.basis import (
    CONDENSATE,
    ModeBasis,
    ModeIndex,
    TrapSpec,
    enumerate_modes,
    mode_count,
    mode_energy,
    shell_degeneracy,
)


@pytest.mark.parametrize("shells, count", [(1, 1), (2, 4), (4, 20), (10, 220)])
def test_mode_count_matches_enumeration(shells, count):
    assert mode_count(shells) == count
    assert len(enumerate_modes(shells)) == count


def test_enumeration_is_shell_major_and_starts_at_condensate():
    modes = enumerate_modes(3)
    assert modes[0] == CONDENSATE
    shells = [m.shell for m in modes]
    assert shells == sorted(shells)
    assert modes[1:4] == [ModeIndex(0, 0, 1), ModeIndex(0, 1, 0), ModeIndex(1, 0, 0)]


def test_zero_shells_rejected():
    with pytest.raises(InvalidArgumentError):
        enumerate_modes(0)


def test_mode_energy_includes_zero_point():
    spec = TrapSpec(omega=2.0)
    assert mode_energy(CONDENSATE, spec) == pytest.approx(3.0)
    assert mode_energy(ModeIndex(1, 2, 0), spec) == pytest.approx(9.0)


def test_basis_index_round_trip_and_missing_mode():
    basis = ModeBasis.from_shells(3)
    for i, m in enumerate(basis):
        assert basis.index(m) == i
    assert ModeIndex(0, 0, 2) in basis
    with pytest.raises(InvalidArgumentError):
        basis.index(ModeIndex(3, 0, 0))


def test_axis_permutation_is_a_bijection():
    basis = ModeBasis.from_shells(4)
    perm = basis.permutation((2, 0, 1))
    assert sorted(perm.tolist()) == list(range(len(basis)))


@pytest.mark.parametrize(
    "kwargs",
    [
        {"shells_g": 0},
        {"shells_e": 0},
        {"omega": 0.0},
        {"eta_sq": -1.0},
        {"n_atoms": 10, "n_condensed": 11},
    ],
)
def test_trap_spec_rejects_bad_values(kwargs):
    with pytest.raises(InvalidArgumentError):
        TrapSpec(**kwargs)


@pytest.mark.parametrize("shells", [1, 3, 10])
def test_shell_degeneracies_add_up_to_mode_count(shells):
    modes = enumerate_modes(shells)
    assert sum(shell_degeneracy(n) for n in range(shells)) == mode_count(shells)
    assert shell_degeneracy(shells - 1) == sum(m.shell == shells - 1 for m in modes)
