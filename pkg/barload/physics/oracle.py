"""Brute-force reference for the cascade: the full master equation on a small
truncated Fock space, integrated deterministically or unravelled into jumps.

Basis: the single-excitation manifold (ground occupations summing to N plus one
excited atom) and the ground manifold (N + 1 ground atoms).  Configurations may
remove at most ``max_removed`` atoms from the initial ground occupations; the
outermost layer acts as a guard whose outgoing transitions are truncated.
"""

from __future__ import annotations

import logging
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .. import config
from ..errors import BasisClosureError, InvalidArgumentError, OracleAccuracyError, ResourceLimitError
from .basis import TrapSpec
from .coupling import AlphaTensor
from .thermal import OccupationState

logger = logging.getLogger(__name__)

Occupation = tuple[int, ...]
EXCITED_FLOOR = 1e-10
TRACE_TOLERANCE = 1e-6


def _removed(occ: Occupation, reference: np.ndarray) -> int:
    return int(np.sum(np.maximum(0, reference - np.asarray(occ))))


@dataclass
class FockBasis:
    """Truncated many-body basis around one initial configuration."""

    excited_states: list[tuple[Occupation, int]]
    ground_states: list[Occupation]
    reference: np.ndarray
    max_removed: int
    excited_index: dict = field(init=False)
    ground_index: dict = field(init=False)

    def __post_init__(self) -> None:
        self.excited_index = {s: i for i, s in enumerate(self.excited_states)}
        self.ground_index = {s: i for i, s in enumerate(self.ground_states)}

    @property
    def dimension(self) -> int:
        return len(self.excited_states) + len(self.ground_states)

    @classmethod
    def build(
        cls,
        initial: OccupationState,
        n_excited: int,
        max_removed: int = 3,
        cap: int = config.ORACLE_BASIS_CAP,
    ) -> "FockBasis":
        reference = np.asarray(initial.occupations, dtype=np.int64)
        n_modes = len(reference)
        start = (tuple(int(n) for n in reference), 0)
        excited: list[tuple[Occupation, int]] = []
        seen = {start[0]}
        queue = deque([start[0]])
        while queue:
            occ = queue.popleft()
            excited.extend((occ, l) for l in range(n_excited))
            if len(excited) > cap:
                raise ResourceLimitError(f"oracle basis exceeds cap {cap}")
            for m in range(n_modes):
                if occ[m] == 0:
                    continue
                for mp in range(n_modes):
                    if mp == m:
                        continue
                    nxt = list(occ)
                    nxt[m] -= 1
                    nxt[mp] += 1
                    nxt_t = tuple(nxt)
                    if nxt_t not in seen and _removed(nxt_t, reference) <= max_removed:
                        seen.add(nxt_t)
                        queue.append(nxt_t)
        ground = sorted(
            {tuple(occ[k] + (k == m) for k in range(n_modes)) for occ, _ in excited for m in range(n_modes)}
        )
        basis = cls(excited_states=excited, ground_states=ground, reference=reference, max_removed=max_removed)
        if basis.dimension > cap:
            raise ResourceLimitError(f"oracle basis dimension {basis.dimension} exceeds cap {cap}")
        basis.check_closure()
        return basis

    def check_closure(self) -> None:
        """Every transition out of a non-guard state must land inside the basis."""
        n_modes = len(self.reference)
        for occ, _ in self.excited_states:
            if _removed(occ, self.reference) >= self.max_removed:
                continue
            for m in range(n_modes):
                if occ[m] == 0:
                    continue
                for mp in range(n_modes):
                    nxt = list(occ)
                    nxt[m] -= 1
                    nxt[mp] += 1
                    if (tuple(nxt), 0) not in self.excited_index:
                        raise BasisClosureError(f"state {tuple(nxt)} escapes the basis", state=tuple(nxt))
            for m in range(n_modes):
                landed = tuple(occ[k] + (k == m) for k in range(n_modes))
                if landed not in self.ground_index:
                    raise BasisClosureError(f"jump lands outside the basis at {landed}", state=landed)


@dataclass
class _Operators:
    hamiltonian: np.ndarray
    # per ground state f: (excited indices x, matrix Q with rate_f = sum Q[y, x] rho[x, y])
    channels: list[tuple[np.ndarray, np.ndarray]]


def _operators(basis: FockBasis, alpha: AlphaTensor, spec: TrapSpec) -> _Operators:
    n_g, n_e = alpha.n_ground, alpha.n_excited
    e_g = alpha.ground.energies(spec.omega)
    e_e = alpha.excited.energies(spec.omega)
    values = alpha.values
    completeness = np.einsum("lmkm->lk", alpha.real.reshape(n_e, n_g, n_e, n_g))
    dim = len(basis.excited_states)
    ham = np.zeros((dim, dim), dtype=complex)
    gamma = spec.gamma
    ref_occ, _ = basis.excited_states[0]
    e_ref = spec.transition_frequency + e_e[0] + float(np.dot(ref_occ, e_g))

    for col, (occ, lp) in enumerate(basis.excited_states):
        occ_arr = np.asarray(occ)
        ham[col, col] += spec.transition_frequency + e_e[lp] + float(occ_arr @ e_g) - e_ref
        for l in range(n_e):
            row = basis.excited_index[(occ, l)]
            ham[row, col] += -0.5j * gamma * completeness[l, lp]
        for m in range(n_g):
            if occ[m] == 0:
                continue
            for mp in range(n_g):
                nxt = list(occ)
                nxt[m] -= 1
                nxt[mp] += 1
                amp = np.sqrt(occ[m] * nxt[mp])
                for l in range(n_e):
                    row = basis.excited_index.get((tuple(nxt), l))
                    if row is None:
                        continue  # truncated at the guard layer
                    ham[row, col] += -0.5j * gamma * amp * values[l * n_g + m, lp * n_g + mp]

    pre: dict[int, list[tuple[int, int, float]]] = {}
    for x, (occ, l) in enumerate(basis.excited_states):
        for m in range(n_g):
            landed = tuple(occ[k] + (k == m) for k in range(n_g))
            f = basis.ground_index[landed]
            pre.setdefault(f, []).append((x, l * n_g + m, np.sqrt(occ[m] + 1.0)))
    channels = []
    for f in range(len(basis.ground_states)):
        entries = pre.get(f, [])
        idx = np.array([e[0] for e in entries], dtype=int)
        comp = np.array([e[1] for e in entries], dtype=int)
        amp = np.array([e[2] for e in entries])
        q = gamma * alpha.real[np.ix_(comp, comp)] * np.outer(amp, amp)
        channels.append((idx, q))
    return _Operators(hamiltonian=ham, channels=channels)


@dataclass
class CascadeResult:
    probabilities: dict[Occupation, float]
    remaining_excited: float
    trace_deficit: float
    basis_dimension: int
    t_final: float
    stderr: dict[Occupation, float] = field(default_factory=dict)

    def channel(self, initial: OccupationState, s: int) -> tuple[float, float]:
        """(P_{N0+2}^s, P_{N0}^s) read from the final-state map."""
        plus, zero = _channel_states(initial, s)
        return self.probabilities.get(plus, 0.0), self.probabilities.get(zero, 0.0)

    def channel_stderr(self, initial: OccupationState, s: int) -> tuple[float, float]:
        plus, zero = _channel_states(initial, s)
        return self.stderr.get(plus, 0.0), self.stderr.get(zero, 0.0)


def _channel_states(initial: OccupationState, s: int) -> tuple[Occupation, Occupation]:
    occ = [int(v) for v in initial.occupations]
    plus = list(occ)
    plus[0] += 2
    plus[s] -= 1
    zero = list(occ)
    zero[s] += 1
    return tuple(plus), tuple(zero)


def _setup(spec: TrapSpec, initial: OccupationState, alpha: AlphaTensor, max_removed: int, cap: int):
    if initial.ground != alpha.ground:
        raise InvalidArgumentError("initial state and tensor use different ground bases")
    basis = FockBasis.build(initial, alpha.n_excited, max_removed=max_removed, cap=cap)
    ops = _operators(basis, alpha, spec)
    start = basis.excited_index[(tuple(int(n) for n in initial.occupations), alpha.excited.index(initial.excited_mode))]
    logger.debug("oracle basis: %d excited + %d ground states", len(basis.excited_states), len(basis.ground_states))
    return basis, ops, start


def _rates(ops: _Operators, rho: np.ndarray) -> np.ndarray:
    return np.array([np.real(np.sum(q * rho[np.ix_(idx, idx)].T)) if len(idx) else 0.0 for idx, q in ops.channels])


def integrate_cascade(
    spec: TrapSpec,
    initial: OccupationState,
    alpha: AlphaTensor,
    t_max: float = 50.0,
    dt_control: float = 1e-10,
    max_removed: int = 3,
    cap: int = config.ORACLE_BASIS_CAP,
) -> CascadeResult:
    """Integrate d(rho)/dt = -i H rho + i rho H^dagger + J rho until the excitation has decayed."""
    basis, ops, start = _setup(spec, initial, alpha, max_removed, cap)
    h = ops.hamiltonian
    de = h.shape[0]
    dg = len(basis.ground_states)
    h_dag = h.conj().T

    def rhs(_t: float, y: np.ndarray) -> np.ndarray:
        rho = y[: de * de].reshape(de, de)
        drho = -1j * (h @ rho) + 1j * (rho @ h_dag)
        return np.concatenate([drho.ravel(), _rates(ops, rho).astype(complex)])

    def decayed(_t: float, y: np.ndarray) -> float:
        return float(np.real(np.trace(y[: de * de].reshape(de, de)))) - EXCITED_FLOOR

    decayed.terminal = True
    decayed.direction = -1

    y0 = np.zeros(de * de + dg, dtype=complex)
    y0[start * de + start] = 1.0
    sol = solve_ivp(rhs, (0.0, t_max), y0, method="DOP853", rtol=dt_control, atol=dt_control * 1e-2, events=decayed)
    if not sol.success:
        raise OracleAccuracyError(f"master-equation integration failed: {sol.message}")
    y = sol.y[:, -1]
    remaining = float(np.real(np.trace(y[: de * de].reshape(de, de))))
    pops = np.real(y[de * de:])
    deficit = 1.0 - remaining - float(pops.sum())
    if abs(deficit) > TRACE_TOLERANCE:
        raise OracleAccuracyError(f"trace deficit {deficit:.3g} exceeds {TRACE_TOLERANCE}")
    probs = {state: float(p) for state, p in zip(basis.ground_states, pops) if p != 0.0}
    return CascadeResult(
        probabilities=probs,
        remaining_excited=remaining,
        trace_deficit=deficit,
        basis_dimension=basis.dimension,
        t_final=float(sol.t[-1]),
    )


def _trajectory(
    ops: _Operators, start: int, dg: int, t_max: float, rtol: float, seed: int
) -> np.ndarray:
    rng = np.random.default_rng(seed)
    threshold = rng.random()
    h = ops.hamiltonian
    psi0 = np.zeros(h.shape[0], dtype=complex)
    psi0[start] = 1.0

    def rhs(_t: float, psi: np.ndarray) -> np.ndarray:
        return -1j * (h @ psi)

    def jump(_t: float, psi: np.ndarray) -> float:
        return float(np.real(np.vdot(psi, psi))) - threshold

    jump.terminal = True
    jump.direction = -1
    sol = solve_ivp(rhs, (0.0, t_max), psi0, method="DOP853", rtol=rtol, atol=rtol * 1e-2, events=jump)
    out = np.zeros(dg)
    if sol.status != 1:
        return out  # no jump before t_max
    psi = sol.y_events[0][0]
    rates = _rates(ops, np.outer(psi, psi.conj()))
    total = rates.sum()
    if total > 0:
        out = rates / total
    return out


def quantum_jump_estimate(
    spec: TrapSpec,
    initial: OccupationState,
    alpha: AlphaTensor,
    n_trajectories: int,
    rng_seed: int,
    t_max: float = 50.0,
    dt_control: float = 1e-10,
    max_removed: int = 3,
    cap: int = config.ORACLE_BASIS_CAP,
    threads: int = 1,
) -> CascadeResult:
    """Monte Carlo wavefunction estimate of the final-state distribution.

    Each trajectory draws a jump threshold, propagates under H_eff until the
    norm falls to it, and contributes the conditional final-state distribution
    of the jump at that instant.
    """
    if n_trajectories < 1:
        raise InvalidArgumentError("n_trajectories must be >= 1")
    basis, ops, start = _setup(spec, initial, alpha, max_removed, cap)
    dg = len(basis.ground_states)
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        samples = np.array(
            list(pool.map(lambda k: _trajectory(ops, start, dg, t_max, dt_control, rng_seed + k), range(n_trajectories)))
        )
    mean = samples.mean(axis=0)
    err = samples.std(axis=0, ddof=1) / np.sqrt(n_trajectories) if n_trajectories > 1 else np.zeros(dg)
    total = float(mean.sum())
    return CascadeResult(
        probabilities={s: float(p) for s, p in zip(basis.ground_states, mean) if p != 0.0},
        remaining_excited=1.0 - total,
        trace_deficit=0.0,
        basis_dimension=basis.dimension,
        t_final=t_max,
        stderr={s: float(e) for s, e in zip(basis.ground_states, err)},
    )
