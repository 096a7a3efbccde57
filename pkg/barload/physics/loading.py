"""Condensate loading: one pump event per step, rethermalized in between."""

from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .. import config
from ..errors import InvalidArgumentError
from .basis import TrapSpec
from .coupling import AlphaTensor
from .decay import BarValidity, DecayMachinery, averaged_outcome
from .thermal import fraction_to_temperature

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LoadingStep:
    step: int
    n_atoms: int
    n_condensed: float
    fraction: float
    fraction_stderr: float
    t_g: float
    t_e: float
    validity: BarValidity


@dataclass
class LoadingTrajectory:
    initial_atoms: int
    initial_fraction: float
    steps: list[LoadingStep] = field(default_factory=list)

    @property
    def first_invalid_step(self) -> Optional[int]:
        return next((s.step for s in self.steps if not s.validity.valid), None)

    @property
    def fractions(self) -> list[float]:
        return [s.fraction for s in self.steps]


def stochastic_round(value: float, rng: np.random.Generator) -> int:
    """floor(value) or floor(value) + 1, unbiased in expectation."""
    base = int(np.floor(value))
    return base + int(rng.random() < value - base)


def run_loading(
    spec: TrapSpec,
    alpha: AlphaTensor,
    t_e: float | Sequence[float],
    initial_fraction: float,
    steps: int,
    samples_per_step: int = config.SAMPLES_PER_STEP,
    rng_seed: int = 0,
    threads: int = 1,
    include_excited_energies: bool = False,
    first_order: bool = True,
    zero_probabilities: bool = False,
    threshold: float = config.VALIDITY_THRESHOLD,
    margin: float = config.BAR_MARGIN,
) -> LoadingTrajectory:
    """Add one atom per step and update the mean condensate number.

    Each step derives T_g from the current fraction, averages one cascade over
    thermal configurations and applies n' = (N0 + 1 + P2 - P0)/(N + 1).
    *t_e* is either fixed or one value per step.  With *zero_probabilities*
    the cascade is skipped and the fraction follows (N0 + k)/(N + k).
    """
    if steps < 0:
        raise InvalidArgumentError(f"steps must be >= 0, got {steps}")
    if not 0 < initial_fraction <= 1:
        raise InvalidArgumentError(f"initial_fraction must be in (0, 1], got {initial_fraction}")
    schedule = [float(t_e)] * steps if isinstance(t_e, (int, float)) else [float(t) for t in t_e]
    if len(schedule) < steps:
        raise InvalidArgumentError(f"t_e schedule has {len(schedule)} entries for {steps} steps")

    n_atoms = spec.n_atoms
    n0 = initial_fraction * n_atoms
    trajectory = LoadingTrajectory(initial_atoms=n_atoms, initial_fraction=initial_fraction)
    rounding = np.random.default_rng(rng_seed)

    for k in range(steps):
        fraction = n0 / n_atoms
        t_g = fraction_to_temperature(fraction, n_atoms, spec.shells_g, spec.omega)
        step_spec = dataclasses.replace(spec, n_atoms=n_atoms, n_condensed=min(n_atoms, stochastic_round(n0, rounding)))
        machinery = DecayMachinery(alpha, step_spec, include_excited_energies, first_order, zero_probabilities)
        outcome = averaged_outcome(
            step_spec,
            t_g,
            schedule[k],
            samples_per_step,
            machinery,
            rng_seed + k * samples_per_step,
            threads=threads,
            threshold=threshold,
            margin=margin,
            n_condensed=n0,
        )
        n_atoms += 1
        n0 = outcome.n_prime * n_atoms
        record = LoadingStep(
            step=k + 1,
            n_atoms=n_atoms,
            n_condensed=n0,
            fraction=outcome.n_prime,
            fraction_stderr=outcome.n_prime_minus_n_stderr,
            t_g=t_g,
            t_e=schedule[k],
            validity=outcome.validity,
        )
        trajectory.steps.append(record)
        if not record.validity.valid and trajectory.first_invalid_step == record.step:
            logger.warning("loading step %d leaves the validity region (%s)", record.step, record.validity.reason)
        logger.info("step %d: N=%d fraction=%.8f T_g=%.4g", record.step, n_atoms, outcome.n_prime, t_g)
    return trajectory
