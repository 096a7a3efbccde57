"""Channel probabilities of one emission/reabsorption cascade, their thermal
average, the condensate-fraction update and the expansion-validity flags.

Probabilities are assembled in physical time with explicit Bose factors.  For
a final state with one more atom in sideband s (condensate unchanged)::

    P0^s = Gamma int dt int dOmega/4pi | sqrt(N_s+1) eta_{.s} A0 c + sqrt(N0) eta_{.0} A1_low c |^2

and for two more condensed atoms taken from s::

    P2^s = Gamma int dt int dOmega/4pi | sqrt(N0+2) eta_{.0} A1_raise c |^2

The solid-angle integral of ``conj(eta_{la}) eta_{l'b}`` is ``alpha^r_{l a b l'}``,
so the angular part is exact once the tensor exists.
"""

from __future__ import annotations

import logging
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .. import config
from ..errors import InvalidArgumentError
from .basis import ModeIndex, TrapSpec
from .coupling import AlphaTensor
from .dynamics import BiorthoDecomp, TermSet, a0_terms, a1_terms, biortho_decompose, build_generator, time_overlap
from .thermal import OccupationState, excited_weights, sample_initial

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BarValidity:
    p_max: float
    threshold: float
    expansion_ok: bool
    bar_condition_ok: bool
    a_estimate: int
    margin: float

    @property
    def valid(self) -> bool:
        return self.expansion_ok and self.bar_condition_ok

    @property
    def reason(self) -> str:
        reasons = []
        if not self.expansion_ok:
            reasons.append("expansion")
        if not self.bar_condition_ok:
            reasons.append("occupation")
        return "+".join(reasons)


@dataclass(frozen=True)
class DecayOutcome:
    p_plus: float
    p_zero: float
    p_zero_terms: tuple[float, float, float]
    n_prime: float
    n_condensed: float
    n_atoms: int
    validity: BarValidity
    p_plus_stderr: float = 0.0
    p_zero_stderr: float = 0.0
    n_prime_minus_n_stderr: float = 0.0
    n_samples: int = 1

    @property
    def n_prime_minus_n(self) -> float:
        return self.n_prime - self.n_condensed / self.n_atoms

    @property
    def interference(self) -> float:
        return self.p_zero_terms[2]


def condensate_update(n_condensed: float, n_atoms: int, p_plus: float, p_zero: float) -> float:
    """New condensate fraction after one cascade: (N0 + 1 + P2 - P0)/(N + 1)."""
    return (n_condensed + 1.0 + (p_plus - p_zero)) / (n_atoms + 1.0)


def bar_validity(
    p_plus: float,
    p_zero: float,
    n_condensed: float,
    n_atoms: int,
    a_estimate: int,
    threshold: float = config.VALIDITY_THRESHOLD,
    margin: float = config.BAR_MARGIN,
) -> BarValidity:
    p_max = max(p_plus, p_zero)
    return BarValidity(
        p_max=p_max,
        threshold=threshold,
        expansion_ok=p_max < threshold,
        bar_condition_ok=n_condensed > margin * max(a_estimate, n_atoms - n_condensed),
        a_estimate=int(a_estimate),
        margin=margin,
    )


class DecayMachinery:
    """Tensor-derived blocks and cached eigensystems shared by every decay evaluation."""

    def __init__(
        self,
        alpha: AlphaTensor,
        spec: TrapSpec,
        include_excited_energies: bool = False,
        first_order: bool = True,
        zero_probabilities: bool = False,
    ):
        self.alpha = alpha
        self.spec = spec
        self.include_excited_energies = include_excited_energies
        self.first_order = first_order
        self.zero_probabilities = zero_probabilities
        self._decomps: dict[float, BiorthoDecomp] = {}
        self._lock = threading.Lock()
        self._emission = np.real(np.diag(alpha.real)).reshape(alpha.n_excited, alpha.n_ground)

    @property
    def n_excited(self) -> int:
        return self.alpha.n_excited

    @property
    def n_ground(self) -> int:
        return self.alpha.n_ground

    def decomposition(self, n_condensed: float) -> BiorthoDecomp:
        key = float(n_condensed)
        with self._lock:
            cached = self._decomps.get(key)
        if cached is not None:
            return cached
        gen = build_generator(self.alpha, self.spec, key, self.include_excited_energies)
        decomp = biortho_decompose(gen)
        with self._lock:
            if len(self._decomps) > 4096:
                self._decomps.clear()
            self._decomps[key] = decomp
        return decomp

    def metric(self, a: int, b: int) -> np.ndarray:
        return self.alpha.block(a, b, "real")

    def coupling(self, a: int, b: int) -> np.ndarray:
        """alpha_{l a b l'} as used in H_eff (real part plus level shift)."""
        return self.alpha.block(a, b, "full")

    def branching(self, weights: np.ndarray) -> np.ndarray:
        """Spontaneous branching of the excited atom into each ground mode."""
        return weights @ self._emission

    def a_estimate(self, weights: np.ndarray, cutoff: float = config.BRANCHING_CUTOFF) -> int:
        b = self.branching(weights)
        total = b.sum()
        if total <= 0:
            return 0
        return int(np.count_nonzero(b[1:] >= cutoff * total))


@dataclass
class ChannelSums:
    """Per-initial-excited-mode channel probabilities summed over sidebands."""

    p_plus: np.ndarray
    direct_condensate: np.ndarray
    direct_sideband: np.ndarray
    interference: np.ndarray

    @property
    def p_zero(self) -> np.ndarray:
        return self.direct_condensate + self.direct_sideband + self.interference


def _check_sideband(initial: OccupationState, s: int, machinery: DecayMachinery) -> None:
    if s == 0:
        raise InvalidArgumentError("the condensate mode is not a sideband channel")
    if not 0 < s < machinery.n_ground:
        raise InvalidArgumentError(f"sideband index {s} outside the ground basis")
    if initial.ground != machinery.alpha.ground:
        raise InvalidArgumentError("initial state and tensor use different ground bases")


def _initial_vectors(machinery: DecayMachinery, excited_index: np.ndarray) -> np.ndarray:
    eye = np.eye(machinery.n_excited, dtype=complex)
    return eye[:, excited_index]


def _raise_channel(
    machinery: DecayMachinery,
    decomp: BiorthoDecomp,
    initial_vectors: np.ndarray,
    n0: float,
    n_s: int,
    s: int,
) -> np.ndarray:
    """P2 for sideband s: reabsorption from s, then emission into the condensate."""
    if n_s <= 0 or n0 <= 0 or not machinery.first_order:
        return np.zeros(initial_vectors.shape[1])
    gamma = machinery.spec.gamma
    h_raise = -0.5j * gamma * np.sqrt((n0 + 1) * n_s) * machinery.coupling(s, 0)
    a1_raise = a1_terms(decomp, h_raise, initial_vectors)
    return gamma * (n0 + 2) * np.real(time_overlap(a1_raise, a1_raise, machinery.metric(0, 0)))


def _sideband_channels(
    machinery: DecayMachinery,
    decomp: BiorthoDecomp,
    a0: TermSet,
    initial_vectors: np.ndarray,
    n0: float,
    n_s: int,
    s: int,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """(p_plus, direct_condensate, direct_sideband, interference) for sideband s, one entry per initial vector."""
    gamma = machinery.spec.gamma
    n_init = initial_vectors.shape[1]
    zeros = np.zeros(n_init)

    direct_sideband = gamma * (n_s + 1) * np.real(time_overlap(a0, a0, machinery.metric(s, s)))
    if not machinery.first_order or n0 <= 0:
        return zeros, zeros, direct_sideband, zeros

    h_low = -0.5j * gamma * np.sqrt(n0 * (n_s + 1)) * machinery.coupling(0, s)
    a1_low = a1_terms(decomp, h_low, initial_vectors)
    direct_condensate = gamma * n0 * np.real(time_overlap(a1_low, a1_low, machinery.metric(0, 0)))
    cross = time_overlap(a1_low, a0, machinery.metric(0, s))
    interference = 2.0 * gamma * np.sqrt(n0 * (n_s + 1)) * np.real(cross)

    p_plus = _raise_channel(machinery, decomp, initial_vectors, n0, n_s, s)
    return p_plus, direct_condensate, direct_sideband, interference


def channel_sums(
    initial: OccupationState,
    machinery: DecayMachinery,
    excited_index: Optional[np.ndarray] = None,
) -> ChannelSums:
    """Sum over every sideband s != 0 for each requested initial excited mode."""
    if excited_index is None:
        excited_index = np.array([machinery.alpha.excited.index(initial.excited_mode)])
    excited_index = np.asarray(excited_index, dtype=int)
    n_init = len(excited_index)
    totals = [np.zeros(n_init) for _ in range(4)]
    if machinery.zero_probabilities:
        return ChannelSums(*totals)

    n0 = float(initial.n_condensed)
    decomp = machinery.decomposition(n0)
    vectors = _initial_vectors(machinery, excited_index)
    a0 = a0_terms(decomp, vectors)
    for s in range(1, machinery.n_ground):
        parts = _sideband_channels(machinery, decomp, a0, vectors, n0, int(initial.occupations[s]), s)
        for acc, part in zip(totals, parts):
            acc += part
    return ChannelSums(*totals)


def p_plus_s(initial: OccupationState, s: ModeIndex | int, machinery: DecayMachinery) -> float:
    """Probability of ending with N0 + 2 condensed atoms and one atom fewer in sideband s."""
    s_idx = s if isinstance(s, (int, np.integer)) else machinery.alpha.ground.index(s)
    _check_sideband(initial, s_idx, machinery)
    if initial.occupations[s_idx] == 0 or machinery.zero_probabilities:
        return 0.0
    j = machinery.alpha.excited.index(initial.excited_mode)
    n0 = float(initial.n_condensed)
    decomp = machinery.decomposition(n0)
    vectors = _initial_vectors(machinery, np.array([j]))
    p_plus = _raise_channel(machinery, decomp, vectors, n0, int(initial.occupations[s_idx]), s_idx)
    return float(p_plus[0])


def p_zero_s(
    initial: OccupationState, s: ModeIndex | int, machinery: DecayMachinery
) -> tuple[float, tuple[float, float, float]]:
    """Probability of ending with N0 condensed atoms and one more atom in sideband s.

    Returns the total and (direct condensate emission, direct sideband, interference).
    """
    s_idx = s if isinstance(s, (int, np.integer)) else machinery.alpha.ground.index(s)
    _check_sideband(initial, s_idx, machinery)
    if machinery.zero_probabilities:
        return 0.0, (0.0, 0.0, 0.0)
    j = machinery.alpha.excited.index(initial.excited_mode)
    n0 = float(initial.n_condensed)
    decomp = machinery.decomposition(n0)
    vectors = _initial_vectors(machinery, np.array([j]))
    a0 = a0_terms(decomp, vectors)
    _, cond, side, inter = _sideband_channels(
        machinery, decomp, a0, vectors, n0, int(initial.occupations[s_idx]), s_idx
    )
    terms = (float(cond[0]), float(side[0]), float(inter[0]))
    return sum(terms), terms


@dataclass
class _SampleResult:
    n_condensed: float
    p_plus: float
    terms: np.ndarray = field(default_factory=lambda: np.zeros(3))


def _evaluate_sample(
    machinery: DecayMachinery, t_g: float, t_e: float, weights: np.ndarray, seed: int
) -> _SampleResult:
    state = sample_initial(
        machinery.spec, t_g, t_e, seed, ground=machinery.alpha.ground, excited=machinery.alpha.excited
    )
    active = np.flatnonzero(weights > 0)
    sums = channel_sums(state, machinery, active)
    w = weights[active]
    terms = np.array([w @ sums.direct_condensate, w @ sums.direct_sideband, w @ sums.interference])
    logger.debug("sample seed=%d N0=%d P2=%.6g P0=%.6g", seed, state.n_condensed, w @ sums.p_plus, terms.sum())
    return _SampleResult(n_condensed=float(state.n_condensed), p_plus=float(w @ sums.p_plus), terms=terms)


def _stderr(values: np.ndarray) -> float:
    return float(np.std(values, ddof=1) / np.sqrt(len(values))) if len(values) > 1 else 0.0


def averaged_outcome(
    spec: TrapSpec,
    t_g: float,
    t_e: float,
    n_samples: int,
    machinery: DecayMachinery,
    rng_seed: int,
    threads: int = 1,
    threshold: float = config.VALIDITY_THRESHOLD,
    margin: float = config.BAR_MARGIN,
    n_condensed: Optional[float] = None,
) -> DecayOutcome:
    """Monte Carlo average over thermal ground configurations, exact over excited weights and sidebands.

    *n_condensed*, when given, is the condensate number used in the fraction
    update instead of the sample mean (the loading loop carries its own mean).
    """
    if n_samples < 1:
        raise InvalidArgumentError("n_samples must be >= 1")
    if machinery.spec != spec:
        machinery = DecayMachinery(
            machinery.alpha, spec, machinery.include_excited_energies,
            machinery.first_order, machinery.zero_probabilities,
        )
    weights = excited_weights(machinery.alpha.excited, t_e, spec.omega)
    seeds = [rng_seed + i for i in range(n_samples)]
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        results = list(pool.map(lambda sd: _evaluate_sample(machinery, t_g, t_e, weights, sd), seeds))

    n0s = np.array([r.n_condensed for r in results])
    p_plus = np.array([r.p_plus for r in results])
    terms = np.array([r.terms for r in results])
    p_zero = terms.sum(axis=1)

    n0_mean = float(np.mean(n0s)) if n_condensed is None else float(n_condensed)
    pp, pz = float(np.mean(p_plus)), float(np.mean(p_zero))
    n_prime = condensate_update(n0_mean, spec.n_atoms, pp, pz)
    per_sample = (n0s + 1.0 + p_plus - p_zero) / (spec.n_atoms + 1.0) - n0s / spec.n_atoms

    validity = bar_validity(
        pp, pz, n0_mean, spec.n_atoms, machinery.a_estimate(weights), threshold, margin
    )
    return DecayOutcome(
        p_plus=pp,
        p_zero=pz,
        p_zero_terms=tuple(float(x) for x in terms.mean(axis=0)),
        n_prime=n_prime,
        n_condensed=n0_mean,
        n_atoms=spec.n_atoms,
        validity=validity,
        p_plus_stderr=_stderr(p_plus),
        p_zero_stderr=_stderr(p_zero),
        n_prime_minus_n_stderr=_stderr(per_sample),
        n_samples=n_samples,
    )
