"""Ideal Bose gas on the truncated trap: occupation sums, chemical potential,
temperature <-> condensate fraction, and thermal sampling of initial states."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Mapping, Optional

import numpy as np
from scipy.optimize import bisect, brentq

from ..errors import InvalidArgumentError
from .basis import CONDENSATE, ModeBasis, ModeIndex, TrapSpec, shell_degeneracy

logger = logging.getLogger(__name__)

TEMPERATURE_XTOL = 1e-10
BRACKET_START = 1e3


@dataclass(frozen=True)
class OccupationState:
    """Ground-trap occupations plus the mode of the single excited atom."""

    ground: ModeBasis
    occupations: np.ndarray
    excited_mode: ModeIndex

    def __post_init__(self) -> None:
        occ = np.asarray(self.occupations)
        if occ.shape != (len(self.ground),) or np.any(occ < 0):
            raise InvalidArgumentError("occupations must be non-negative, one per ground mode")
        if self.ground[0] != CONDENSATE:
            raise InvalidArgumentError("ground basis must start with the condensate mode")

    @classmethod
    def from_mapping(
        cls, ground: ModeBasis, occupations: Mapping[ModeIndex, int], excited_mode: ModeIndex
    ) -> "OccupationState":
        occ = np.zeros(len(ground), dtype=np.int64)
        for mode, count in occupations.items():
            occ[ground.index(mode)] = count
        return cls(ground=ground, occupations=occ, excited_mode=ModeIndex(*excited_mode))

    @classmethod
    def condensed(cls, ground: ModeBasis, n_atoms: int, excited_mode: ModeIndex = CONDENSATE) -> "OccupationState":
        occ = np.zeros(len(ground), dtype=np.int64)
        occ[0] = n_atoms
        return cls(ground=ground, occupations=occ, excited_mode=ModeIndex(*excited_mode))

    @property
    def ground_occupations(self) -> dict[ModeIndex, int]:
        return {m: int(n) for m, n in zip(self.ground, self.occupations) if n}

    @property
    def n_atoms(self) -> int:
        return int(np.sum(self.occupations))

    @property
    def n_condensed(self) -> int:
        return int(self.occupations[0])


def bose_occupation(excess_energy, temperature: float) -> np.ndarray:
    """1/(exp(e/T) - 1) for excess energies e > 0; zero at T = 0."""
    e = np.asarray(excess_energy, dtype=float)
    if temperature <= 0:
        return np.zeros_like(e)
    with np.errstate(over="ignore"):
        return 1.0 / np.expm1(e / temperature)


def noncondensed_number(temperature: float, shells_g: int, omega: float) -> float:
    """Mean non-condensed atoms with mu pinned at the condensate energy."""
    if temperature <= 0 or shells_g < 2:
        return 0.0
    n = np.arange(1, shells_g)
    deg = shell_degeneracy(n)
    return float(np.sum(deg * bose_occupation(n * omega, temperature)))


def fraction_to_temperature(fraction: float, n_atoms: int, shells_g: int, omega: float) -> float:
    """Ground-trap temperature at which the ideal gas has condensate *fraction*."""
    if fraction <= 0:
        raise InvalidArgumentError(f"condensate fraction must be > 0, got {fraction}")
    if fraction > 1:
        raise InvalidArgumentError(f"condensate fraction must be <= 1, got {fraction}")
    target = n_atoms * (1.0 - fraction)
    if target <= 0:
        return 0.0
    if shells_g < 2:
        raise InvalidArgumentError("a single-shell ground trap has no thermal modes")

    def excess(t: float) -> float:
        return noncondensed_number(t, shells_g, omega) - target

    hi = BRACKET_START * omega
    while excess(hi) < 0:
        hi *= 10.0
        logger.debug("temperature bracket expanded to %g", hi)
    return float(bisect(excess, 0.0, hi, xtol=TEMPERATURE_XTOL * omega, maxiter=500))


def _reduced_fugacity_root(n_atoms: float, excess: np.ndarray, degeneracy: np.ndarray, temperature: float) -> float:
    """u = (e_0 - mu)/T such that the grand-canonical total equals n_atoms."""

    def total_minus_n(v: float) -> float:
        u = np.exp(v)
        return 1.0 / np.expm1(u) + float(
            np.sum(degeneracy * bose_occupation(excess + u * temperature, temperature))
        ) - n_atoms

    lo = -np.log(max(n_atoms, 1.0)) - 30.0
    return float(np.exp(brentq(total_minus_n, lo, 50.0, xtol=1e-14, rtol=1e-14, maxiter=500)))


def grand_canonical_occupations(ground: ModeBasis, temperature: float, n_atoms: int, omega: float) -> np.ndarray:
    """Mean occupation per ground mode with mu fitted to the total atom number."""
    excess = ground.energies(omega) - ground.energies(omega)[0]
    if temperature <= 0:
        occ = np.zeros(len(ground))
        occ[0] = n_atoms
        return occ
    ones = np.ones(len(ground) - 1)
    u = _reduced_fugacity_root(n_atoms, excess[1:], ones, temperature)
    occ = np.empty(len(ground))
    occ[0] = 1.0 / np.expm1(u)
    occ[1:] = bose_occupation(excess[1:] + u * temperature, temperature)
    return occ


def excited_weights(excited: ModeBasis, temperature: float, omega: float) -> np.ndarray:
    """Boltzmann weights of the excited atom over the truncated excited basis."""
    excess = excited.energies(omega) - excited.energies(omega).min()
    if temperature <= 0:
        w = (excess == 0).astype(float)
    else:
        w = np.exp(-excess / temperature)
    return w / w.sum()


def sample_initial(
    spec: TrapSpec,
    t_g: float,
    t_e: float,
    rng_seed: int | np.random.Generator,
    ground: Optional[ModeBasis] = None,
    excited: Optional[ModeBasis] = None,
    max_attempts: int = 64,
) -> OccupationState:
    """Draw one initial configuration: geometric occupations per thermal mode
    with mu fitted to the grand-canonical total, condensate as the remainder."""
    if t_g < 0 or t_e < 0:
        raise InvalidArgumentError("temperatures must be >= 0")
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
    ground = ground or ModeBasis.from_shells(spec.shells_g)
    excited = excited or ModeBasis.from_shells(spec.shells_e)
    n_atoms = spec.n_atoms

    weights = excited_weights(excited, t_e, spec.omega)
    j = int(rng.choice(len(excited), p=weights)) if len(excited) > 1 else 0
    excited_mode = excited[j]

    if t_g <= 0 or len(ground) == 1:
        return OccupationState.condensed(ground, n_atoms, excited_mode)

    mean = grand_canonical_occupations(ground, t_g, n_atoms, spec.omega)[1:]
    ratio = mean / (1.0 + mean)  # geometric parameter x with <n> = x/(1-x)
    cap = n_atoms
    for attempt in range(max_attempts):
        draws = rng.geometric(1.0 - ratio) - 1
        draws = np.minimum(draws, cap)
        n0 = n_atoms - int(draws.sum())
        if n0 >= 0:
            occ = np.concatenate([[n0], draws]).astype(np.int64)
            return OccupationState(ground=ground, occupations=occ, excited_mode=excited_mode)
        cap = max(cap // 2, 0)
        logger.warning(
            "sampled %d thermal atoms > N=%d (attempt %d); resampling with cap %d",
            int(draws.sum()), n_atoms, attempt + 1, cap,
        )
    raise InvalidArgumentError(f"could not sample a configuration with N0 >= 0 at T_g={t_g}")


__all__ = [
    "OccupationState",
    "bose_occupation",
    "excited_weights",
    "fraction_to_temperature",
    "grand_canonical_occupations",
    "noncondensed_number",
    "sample_initial",
]
