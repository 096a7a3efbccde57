"""Isotropic 3D harmonic-oscillator modes: enumeration, energies, index maps."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from ..errors import InvalidArgumentError


class ModeIndex(NamedTuple):
    """Quantum numbers (nx, ny, nz) of one trap mode."""

    nx: int
    ny: int
    nz: int

    @property
    def shell(self) -> int:
        return self.nx + self.ny + self.nz

    def permuted(self, order: tuple[int, int, int]) -> "ModeIndex":
        return ModeIndex(*(self[i] for i in order))


CONDENSATE = ModeIndex(0, 0, 0)


@dataclass(frozen=True)
class TrapSpec:
    """Physical configuration of the ground and excited traps (hbar = 1)."""

    omega: float = 1.0
    shells_g: int = 6
    shells_e: int = 2
    eta_sq: float = 2.0
    gamma: float = 1.0
    transition_frequency: float = 0.0
    n_atoms: int = 10_000
    n_condensed: int = 10_000

    def __post_init__(self) -> None:
        if self.shells_g < 1 or self.shells_e < 1:
            raise InvalidArgumentError("shells_g and shells_e must be >= 1")
        if self.omega <= 0 or self.gamma < 0 or self.eta_sq < 0:
            raise InvalidArgumentError("need omega > 0, gamma >= 0, eta_sq >= 0")
        if not 0 <= self.n_condensed <= self.n_atoms:
            raise InvalidArgumentError(
                f"n_condensed={self.n_condensed} outside [0, n_atoms={self.n_atoms}]"
            )

    @property
    def eta(self) -> float:
        return float(np.sqrt(self.eta_sq))


def mode_count(shells: int) -> int:
    """Number of modes with nx+ny+nz < shells."""
    return shells * (shells + 1) * (shells + 2) // 6


def shell_degeneracy(n: int) -> int:
    return (n + 1) * (n + 2) // 2


@lru_cache(maxsize=64)
def _enumerate(shells: int) -> tuple[ModeIndex, ...]:
    modes: list[ModeIndex] = []
    for n in range(shells):
        modes.extend(
            sorted(ModeIndex(nx, ny, n - nx - ny) for nx in range(n + 1) for ny in range(n + 1 - nx))
        )
    return tuple(modes)


def enumerate_modes(shells: int) -> list[ModeIndex]:
    """All modes below *shells* in canonical order: shell-major, lexicographic within a shell."""
    if shells < 1:
        raise InvalidArgumentError(f"shells must be >= 1, got {shells}")
    return list(_enumerate(shells))


def mode_energy(m: ModeIndex, spec: TrapSpec) -> float:
    return spec.omega * (m.nx + m.ny + m.nz + 1.5)


def mode_energies(modes: list[ModeIndex], omega: float) -> np.ndarray:
    return omega * (np.array([m.shell for m in modes], dtype=float) + 1.5)


class ModeBasis:
    """Ordered set of modes with a flat index map."""

    def __init__(self, modes: list[ModeIndex]):
        if not modes:
            raise InvalidArgumentError("a mode basis needs at least one mode")
        self.modes = list(modes)
        self._index = {m: i for i, m in enumerate(self.modes)}
        if len(self._index) != len(self.modes):
            raise InvalidArgumentError("duplicate modes in basis")

    @classmethod
    def from_shells(cls, shells: int) -> "ModeBasis":
        return cls(enumerate_modes(shells))

    def __len__(self) -> int:
        return len(self.modes)

    def __iter__(self):
        return iter(self.modes)

    def __getitem__(self, i: int) -> ModeIndex:
        return self.modes[i]

    def __contains__(self, m: object) -> bool:
        return m in self._index

    def index(self, m: ModeIndex) -> int:
        try:
            return self._index[ModeIndex(*m)]
        except KeyError:
            raise InvalidArgumentError(f"mode {tuple(m)} not in basis") from None

    def quantum_numbers(self) -> np.ndarray:
        """(len, 3) integer array of (nx, ny, nz)."""
        return np.array(self.modes, dtype=int).reshape(len(self.modes), 3)

    def energies(self, omega: float) -> np.ndarray:
        return mode_energies(self.modes, omega)

    def permutation(self, order: tuple[int, int, int]) -> np.ndarray:
        """Flat-index map i -> index of modes[i] with axes permuted by *order*."""
        return np.array([self.index(m.permuted(order)) for m in self.modes], dtype=int)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, ModeBasis) and self.modes == other.modes

    def __hash__(self) -> int:
        return hash(tuple(self.modes))
