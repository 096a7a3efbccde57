"""Assembles the tensor and decay machinery for a run configuration."""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Optional

from .. import config
from ..errors import InvalidArgumentError
from .basis import TrapSpec, mode_count
from .cache import load_or_build
from .coupling import AlphaTensor, TensorKey, build_alpha_tensor
from .decay import DecayMachinery, DecayOutcome, averaged_outcome
from .quadrature import build_sphere_quadrature

logger = logging.getLogger(__name__)


def is_long_running(spec: TrapSpec) -> bool:
    """Bases at which a single run takes hours."""
    return mode_count(spec.shells_e) * mode_count(spec.shells_g) >= config.LONG_RUNNING_COMPOSITE_DIM


def tensor_key(spec: TrapSpec, numerics) -> TensorKey:
    return TensorKey(
        shells_g=spec.shells_g,
        shells_e=spec.shells_e,
        eta_sq=float(spec.eta_sq),
        quadrature_order=numerics.quadrature_order,
        pattern=numerics.pattern,
        pv_grid=int(numerics.pv_grid),
        kappa_max=float(numerics.kappa_max),
        include_imaginary=bool(numerics.include_imaginary),
    )


def build_tensor(
    spec: TrapSpec,
    numerics,
    budget_gib: float = config.TENSOR_BUDGET_GIB,
    threads: int = 1,
    cache_path: Optional[str | Path] = None,
) -> tuple[AlphaTensor, str]:
    """Tensor for *spec*, read from *cache_path* when its key matches.

    *numerics* is a ``NumericsSection``; returns ``(tensor, cache_status)``.
    """
    if is_long_running(spec):
        logger.warning(
            "shells_e=%d, shells_g=%d is a long-running configuration (hours)", spec.shells_e, spec.shells_g
        )
    quad = build_sphere_quadrature(numerics.quadrature_order, numerics.pattern)

    def build() -> AlphaTensor:
        return build_alpha_tensor(
            spec,
            quad,
            pv_grid=numerics.pv_grid,
            include_imaginary=numerics.include_imaginary,
            kappa_max=numerics.kappa_max,
            budget_gib=budget_gib,
            threads=threads,
        )

    path = cache_path if cache_path is not None else numerics.cache
    return load_or_build(path, tensor_key(spec, numerics), build)


def build_machinery(
    alpha: AlphaTensor, spec: TrapSpec, numerics, zero_probabilities: bool = False
) -> DecayMachinery:
    return DecayMachinery(
        alpha,
        spec,
        include_excited_energies=numerics.include_excited_energies,
        first_order=numerics.first_order,
        zero_probabilities=zero_probabilities,
    )


def scan_cell(
    machinery: DecayMachinery,
    t_e: float,
    t_g: float,
    samples: int,
    seed: int,
    threads: int = 1,
    threshold: float = config.VALIDITY_THRESHOLD,
    margin: float = config.BAR_MARGIN,
) -> DecayOutcome:
    """One (T_e, T_g) grid cell: thermal average at the trap's atom number."""
    if samples < 1:
        raise InvalidArgumentError("samples must be >= 1")
    outcome = averaged_outcome(
        machinery.spec, t_g, t_e, samples, machinery, seed, threads=threads, threshold=threshold, margin=margin
    )
    logger.debug(
        "cell T_e=%g T_g=%g: n'-n=%.6g +- %.2g, P2=%.6g, P0=%.6g",
        t_e, t_g, outcome.n_prime_minus_n, outcome.n_prime_minus_n_stderr, outcome.p_plus, outcome.p_zero,
    )
    return outcome
