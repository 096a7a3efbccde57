"""Invariant suite run by ``barload validate``."""

from __future__ import annotations

import dataclasses
import logging
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.integrate import quad, solve_ivp

from .errors import BarloadError
from .models import NumericsSection, RunConfig
from .physics.basis import ModeBasis, ModeIndex, TrapSpec
from .physics.cache import load_or_build, write_cache
from .physics.coupling import AlphaTensor, build_alpha_tensor
from .physics.decay import DecayMachinery, averaged_outcome, p_plus_s, p_zero_s
from .physics.dynamics import biortho_decompose, propagate_A0
from .physics.engine import build_machinery, build_tensor
from .physics.oracle import integrate_cascade
from .physics.quadrature import build_sphere_quadrature, pv_integrate
from .physics.thermal import OccupationState

logger = logging.getLogger(__name__)

BENCHMARK_EXCITED = (ModeIndex(0, 0, 0),)
BENCHMARK_GROUND = (ModeIndex(0, 0, 0), ModeIndex(0, 0, 2))
BENCHMARK_CONDENSED = (25, 100, 400)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class ValidationReport:
    checks: list[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self) -> list[CheckResult]:
        return [c for c in self.checks if not c.passed]


def benchmark_tensor(eta_sq: float = 0.5, quadrature_order: int = 16) -> tuple[TrapSpec, AlphaTensor]:
    """One excited level and two even ground levels (the odd level decouples by parity)."""
    spec = TrapSpec(shells_g=3, shells_e=1, eta_sq=eta_sq, n_atoms=2, n_condensed=1)
    alpha = build_alpha_tensor(
        spec,
        build_sphere_quadrature(quadrature_order),
        include_imaginary=False,
        excited=ModeBasis(list(BENCHMARK_EXCITED)),
        ground=ModeBasis(list(BENCHMARK_GROUND)),
    )
    return spec, alpha


def benchmark_channels(alpha: AlphaTensor, spec: TrapSpec, n_condensed: int) -> tuple[OccupationState, TrapSpec, DecayMachinery]:
    state = OccupationState(
        ground=alpha.ground, occupations=np.array([n_condensed, 1]), excited_mode=BENCHMARK_EXCITED[0]
    )
    step = dataclasses.replace(spec, n_atoms=n_condensed + 1, n_condensed=n_condensed)
    return state, step, DecayMachinery(alpha, step)


def _check_pv() -> CheckResult:
    flat = pv_integrate(lambda x: np.ones_like(x), 1.0, 0.0, 2.0)
    linear = pv_integrate(lambda x: x, 1.0, 0.0, 2.0)
    decaying = pv_integrate(lambda x: np.exp(-x), 1.0, 0.0, 40.0, n_points=400)
    reference, _ = quad(lambda x: np.exp(-x), 0.0, 40.0, weight="cauchy", wvar=1.0, epsabs=1e-13, epsrel=1e-13)
    errors = (abs(flat), abs(linear - 2.0), abs(decaying - reference))
    return CheckResult("pv_exact_cases", max(errors) <= 1e-8, f"errors {', '.join(f'{e:.2e}' for e in errors)}")


def _check_sphere(order: int) -> CheckResult:
    sq = build_sphere_quadrature(order)
    z = sq.nodes[:, 2]
    errors = (
        abs(sq.weights.sum() - 1.0),
        abs(sq.integrate(z**2) - 1.0 / 3.0),
        abs(sq.integrate(0.5 * (3 * z**2 - 1) * z)),
    )
    return CheckResult("sphere_moments", max(errors) <= 1e-12, f"max error {max(errors):.2e}")


def _check_tensor(alpha: AlphaTensor) -> list[CheckResult]:
    real = alpha.real
    herm = float(np.max(np.abs(real - real.conj().T))) if real.size else 0.0
    min_eig = float(np.linalg.eigvalsh(real).min())
    comp = alpha.completeness()
    q = alpha.ground.quantum_numbers()
    e = alpha.excited.quantum_numbers()
    parity = (e[:, None, :] + q[None, :, :]).reshape(-1, 3) % 2
    mismatch = np.any(parity[:, None, :] != parity[None, :, :], axis=-1)
    parity_leak = float(np.max(np.abs(real[mismatch]))) if mismatch.any() else 0.0
    return [
        CheckResult("alpha_hermitian", herm == 0.0, f"max asymmetry {herm:.2e}"),
        CheckResult("alpha_psd", min_eig >= -1e-10, f"min eigenvalue {min_eig:.3e}"),
        CheckResult("completeness_bound", bool(np.all(comp <= 1 + 1e-10)), f"max {comp.max():.12f}"),
        CheckResult("parity_selection", parity_leak <= 1e-12, f"max leak {parity_leak:.2e}"),
    ]


def _check_biortho(seed: int, count: int = 100, size: int = 20) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(count):
        m = rng.normal(size=(size, size)) + 1j * rng.normal(size=(size, size))
        d = biortho_decompose(m)
        worst = max(worst, np.linalg.norm(d.reconstruct() - m) / np.linalg.norm(m))
    return CheckResult("biortho_reconstruction", worst <= 1e-10, f"worst residual {worst:.2e}")


def _check_propagator(machinery: DecayMachinery) -> CheckResult:
    decomp = machinery.decomposition(float(machinery.spec.n_condensed))
    matrix = decomp.reconstruct()
    n = matrix.shape[0]
    t_end = 1.0 / max(decomp.scale, 1e-12)
    sol = solve_ivp(
        lambda _t, y: (-1j * matrix @ y.reshape(n, n)).ravel(),
        (0.0, t_end),
        np.eye(n, dtype=complex).ravel(),
        method="DOP853",
        rtol=1e-12,
        atol=1e-14,
    )
    err = float(np.max(np.abs(sol.y[:, -1].reshape(n, n) - propagate_A0(decomp, t_end))))
    return CheckResult("a0_vs_ode", err <= 1e-8, f"max deviation {err:.2e}")


def _check_oracle(quadrature_order: int) -> CheckResult:
    spec, alpha = benchmark_tensor(quadrature_order=quadrature_order)
    rel: list[tuple[float, float]] = []
    for n0 in BENCHMARK_CONDENSED:
        state, step, machinery = benchmark_channels(alpha, spec, n0)
        plus = p_plus_s(state, 1, machinery)
        zero, _ = p_zero_s(state, 1, machinery)
        ref_plus, ref_zero = integrate_cascade(step, state, alpha).channel(state, 1)
        rel.append((abs(plus - ref_plus) / ref_plus, abs(zero - ref_zero) / ref_zero))
    rel_arr = np.array(rel)
    monotone = bool(np.all(np.diff(rel_arr, axis=0) < 0))
    ok = monotone and bool(np.all(rel_arr[-1] < 0.1))
    detail = "; ".join(f"N0={n}: {a:.3g}/{b:.3g}" for n, (a, b) in zip(BENCHMARK_CONDENSED, rel))
    return CheckResult("oracle_equivalence", ok, detail)


def interference_sweep(
    n_configs: int, seed: int, samples: int = 4, threads: int = 1, include_imaginary: bool = True
) -> CheckResult:
    """Random small traps; the cross term of P_N0 must never be constructive."""
    rng = np.random.default_rng(seed)
    worst = -np.inf
    for i in range(n_configs):
        spec = TrapSpec(
            shells_g=int(rng.integers(2, 7)),
            shells_e=int(rng.integers(1, 3)),
            eta_sq=float(rng.uniform(0.5, 3.0)),
            n_atoms=10_000,
            n_condensed=10_000,
        )
        numerics = NumericsSection(include_imaginary=include_imaginary, quadrature_order=12, pv_grid=60)
        alpha, _ = build_tensor(spec, numerics, threads=threads, cache_path=None)
        machinery = build_machinery(alpha, spec, numerics)
        t_g = float(np.exp(rng.uniform(np.log(0.5), np.log(50.0))))
        t_e = float(rng.uniform(0.1, 2.0))
        outcome = averaged_outcome(spec, t_g, t_e, samples, machinery, seed + 1000 * i, threads=threads)
        worst = max(worst, outcome.interference)
    return CheckResult("interference_sign", worst <= 1e-12, f"largest cross term {worst:.3e}")


def _check_cache(alpha: AlphaTensor) -> CheckResult:
    """A cache written for another key must be rejected and rebuilt."""
    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "alpha.cache"
        stale = dataclasses.replace(alpha, key=dataclasses.replace(alpha.key, eta_sq=alpha.key.eta_sq + 1.0))
        write_cache(stale, path)
        _, status = load_or_build(path, alpha.key, lambda: alpha)
        _, second = load_or_build(path, alpha.key, lambda: alpha)
    return CheckResult("cache_key_mismatch", status == "rebuild" and second == "hit", f"statuses {status}, {second}")


def _check_validity(cfg: RunConfig, machinery: DecayMachinery) -> CheckResult:
    t_e = cfg.scan.t_e[0] if cfg.scan.t_e else 0.0
    outcome = averaged_outcome(
        machinery.spec,
        cfg.scan.t_g_min,
        t_e,
        min(cfg.scan.samples, 8),
        machinery,
        cfg.run.seed,
        threads=cfg.run.threads,
        threshold=cfg.validity.threshold,
        margin=cfg.validity.margin,
    )
    v = outcome.validity
    return CheckResult("bar_validity", v.valid, v.reason or f"p_max {v.p_max:.3e}")


def _guard(name: str, fn: Callable[[], CheckResult | list[CheckResult]]) -> list[CheckResult]:
    try:
        out = fn()
    except BarloadError as exc:
        logger.error("check %s raised %s", name, exc)
        return [CheckResult(name, False, f"{type(exc).__name__}: {exc}")]
    return out if isinstance(out, list) else [out]


def run_validation(cfg: RunConfig, sweep_configs: int = 20) -> ValidationReport:
    spec = cfg.trap.to_spec()
    report = ValidationReport()
    report.checks += _guard("pv_exact_cases", _check_pv)
    report.checks += _guard("sphere_moments", lambda: _check_sphere(cfg.numerics.quadrature_order))
    report.checks += _guard("biortho_reconstruction", lambda: _check_biortho(cfg.run.seed))

    alpha, status = build_tensor(spec, cfg.numerics, cfg.run.budget_gib, cfg.run.threads)
    logger.info("tensor cache status: %s", status)
    machinery = build_machinery(alpha, spec, cfg.numerics)
    report.checks += _guard("tensor", lambda: _check_tensor(alpha))
    report.checks += _guard("cache_key_mismatch", lambda: _check_cache(alpha))
    report.checks += _guard("a0_vs_ode", lambda: _check_propagator(machinery))
    report.checks += _guard("bar_validity", lambda: _check_validity(cfg, machinery))
    report.checks += _guard("oracle_equivalence", lambda: _check_oracle(cfg.numerics.quadrature_order))
    report.checks += _guard(
        "interference_sign", lambda: interference_sweep(
            sweep_configs, cfg.run.seed, threads=cfg.run.threads, include_imaginary=cfg.numerics.include_imaginary
        )
    )
    for check in report.checks:
        logger.info("%-24s %s  %s", check.name, "ok" if check.passed else "FAIL", check.detail)
    return report
