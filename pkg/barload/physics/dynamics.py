"""No-jump dynamics of the single excitation: generator, biorthogonal
eigensystem, the A0/A1 propagators and their infinite-time integrals."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np
import scipy.linalg

from ..errors import DefectiveMatrixError, DivergenceError, InvalidArgumentError
from .basis import CONDENSATE, TrapSpec
from .coupling import AlphaTensor

logger = logging.getLogger(__name__)

DEGENERACY_RTOL = 1e-8
DEFECT_CONDITION = 1e8


@dataclass(frozen=True)
class EffectiveGenerator:
    """H0 = -i (Gamma N0 / 2) alpha_{l00l'} (+ diag(omega_l^e) when requested).

    ``decay`` is the matrix K with H0 = -iK (+ energies); ``phase_offset`` is the
    global energy N0 (omega_0 + omega_0^g) that drops out of every probability.
    """

    matrix: np.ndarray
    decay: np.ndarray
    phase_offset: float
    n_condensed: float

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.matrix, 2))


@dataclass(frozen=True)
class BiorthoDecomp:
    """matrix = right @ diag(eigenvalues) @ left^H with left^H right = 1."""

    eigenvalues: np.ndarray
    right: np.ndarray
    left: np.ndarray
    phase_offset: float = 0.0
    scale: float = 1.0

    def reconstruct(self) -> np.ndarray:
        return (self.right * self.eigenvalues) @ self.left.conj().T

    @property
    def degeneracy_tol(self) -> float:
        return DEGENERACY_RTOL * max(self.scale, 1e-300)


def build_generator(
    alpha: AlphaTensor,
    spec: TrapSpec,
    n_condensed: Optional[float] = None,
    include_excited_energies: bool = False,
) -> EffectiveGenerator:
    """Zeroth-order effective Hamiltonian over the excited modes."""
    if not alpha.key.excited_modes and (
        alpha.key.shells_e != spec.shells_e or alpha.key.shells_g != spec.shells_g
    ):
        raise InvalidArgumentError(
            f"alpha tensor built for shells ({alpha.key.shells_e}, {alpha.key.shells_g}), "
            f"trap has ({spec.shells_e}, {spec.shells_g})"
        )
    if alpha.ground[0] != CONDENSATE:
        raise InvalidArgumentError("ground basis must start with the condensate mode")
    n0 = float(spec.n_condensed if n_condensed is None else n_condensed)

    decay = 0.5 * spec.gamma * n0 * alpha.block(0, 0)
    matrix = -1j * decay
    if include_excited_energies:
        matrix = matrix + np.diag(alpha.excited.energies(spec.omega))
    phase = n0 * (spec.transition_frequency + 1.5 * spec.omega)
    return EffectiveGenerator(matrix=matrix, decay=decay, phase_offset=phase, n_condensed=n0)


def _clusters(values: np.ndarray, tol: float) -> list[complex]:
    out: list[complex] = []
    for i in range(len(values)):
        for j in range(i + 1, len(values)):
            if abs(values[i] - values[j]) <= tol:
                out.extend([complex(values[i]), complex(values[j])])
    return out


def biortho_decompose(gen: EffectiveGenerator | np.ndarray) -> BiorthoDecomp:
    """Paired right/left eigenvectors of a (generally non-Hermitian) matrix."""
    matrix = gen.matrix if isinstance(gen, EffectiveGenerator) else np.asarray(gen, dtype=complex)
    phase = gen.phase_offset if isinstance(gen, EffectiveGenerator) else 0.0
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise InvalidArgumentError(f"need a square matrix, got shape {matrix.shape}")
    if not np.all(np.isfinite(matrix)):
        raise InvalidArgumentError("matrix has non-finite entries")
    scale = float(np.linalg.norm(matrix, 2)) if matrix.size else 0.0

    # Normal (Hermitian or anti-Hermitian) inputs get orthonormal eigenvectors,
    # which keeps degenerate shells well conditioned.
    for factor in (1.0, 1j):
        b = factor * matrix
        if np.linalg.norm(b - b.conj().T) <= 1e-13 * max(scale, 1e-300):
            w, v = scipy.linalg.eigh(0.5 * (b + b.conj().T))
            return BiorthoDecomp(eigenvalues=w / factor, right=v, left=v, phase_offset=phase, scale=scale)

    w, vr = scipy.linalg.eig(matrix)
    cond = np.linalg.cond(vr)
    if not np.isfinite(cond) or cond > DEFECT_CONDITION:
        clustered = _clusters(w, 1e-6 * max(scale, 1e-300)) or [complex(x) for x in w]
        raise DefectiveMatrixError(
            f"matrix is not diagonalizable within tolerance (eigenvector condition {cond:.3g}); "
            f"clustered eigenvalues: {clustered}",
            clustered=clustered,
        )
    left = np.linalg.inv(vr).conj().T
    return BiorthoDecomp(eigenvalues=w, right=vr, left=left, phase_offset=phase, scale=scale)


def propagate_A0(decomp: BiorthoDecomp, t: float, include_phase: bool = False) -> np.ndarray:
    """exp(-i H0 t) from the eigensystem."""
    if t < 0:
        raise InvalidArgumentError(f"time must be >= 0, got {t}")
    out = (decomp.right * np.exp(-1j * decomp.eigenvalues * t)) @ decomp.left.conj().T
    if include_phase:
        out = out * np.exp(-1j * decomp.phase_offset * t)
    return out


def a1_time_kernel(lambda_a, lambda_b, t, eps_deg: Optional[float] = None):
    """-i int_0^t exp(-i lambda_a (t - tau)) exp(-i lambda_b tau) dtau (broadcasts)."""
    la = np.asarray(lambda_a, dtype=complex)
    lb = np.asarray(lambda_b, dtype=complex)
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise InvalidArgumentError("time must be >= 0")
    diff = la - lb
    tol = eps_deg if eps_deg is not None else DEGENERACY_RTOL * np.maximum(1.0, np.abs(la))
    degenerate = np.abs(diff) <= tol
    safe = np.where(degenerate, 1.0, diff)
    general = -(np.exp(-1j * lb * t) - np.exp(-1j * la * t)) / safe
    confluent = -1j * t * np.exp(-1j * la * t)
    out = np.where(degenerate, confluent, general)
    return complex(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class TermSet:
    """x(t) = sum_i coeffs[..., i, :] t^powers[i] exp(exponents[i] t)."""

    coeffs: np.ndarray
    exponents: np.ndarray
    powers: np.ndarray

    def evaluate(self, t: float) -> np.ndarray:
        f = t ** self.powers * np.exp(self.exponents * t)
        return np.einsum("...id,i->...d", self.coeffs, f)


def _time_weights(left: TermSet, right: TermSet, live: np.ndarray) -> np.ndarray:
    s = np.conj(left.exponents)[:, None] + right.exponents[None, :]
    p = left.powers[:, None] + right.powers[None, :]
    diverging = live & (s.real >= 0)
    if np.any(diverging):
        raise DivergenceError(
            f"non-decaying exponent in infinite-time integral (Re = {s[diverging].real.max():.3g}); "
            "a mode has zero decay rate"
        )
    fact = np.vectorize(math.factorial, otypes=[float])(p)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        w = fact / (-s) ** (p + 1)
    return np.where(live, w, 0.0)


def time_overlap(
    left: TermSet, right: TermSet, metric: Optional[np.ndarray] = None, rtol: float = 1e-13
) -> np.ndarray:
    """int_0^inf x(t)^H M y(t) dt, batched over leading coefficient axes.

    Term pairs whose metric-weighted coefficient product is negligible are
    dropped before the decay check, so undamped modes that never reach the
    measured channel do not count as divergent.
    """
    ry = right.coeffs if metric is None else np.einsum("de,...je->...jd", metric, right.coeffs)
    gram = np.einsum("...id,...jd->...ij", left.coeffs.conj(), ry)
    mags = np.abs(gram).reshape(-1, *gram.shape[-2:]).max(axis=0)
    top = mags.max() if mags.size else 0.0
    live = mags > rtol * top if top > 0 else np.zeros(mags.shape, dtype=bool)
    w = _time_weights(left, right, live)
    return np.einsum("...ij,ij->...", gram, w)


def infinite_time_overlap(terms: Iterable[tuple[complex, complex, int]]) -> float:
    """int_0^inf |sum_j c_j t^p_j exp(z_j t)|^2 dt."""
    terms = list(terms)
    if not terms:
        return 0.0
    c, z, p = zip(*terms)
    if any(pi not in (0, 1, 2) for pi in p):
        raise InvalidArgumentError("powers must be 0, 1 or 2")
    ts = TermSet(
        coeffs=np.asarray(c, dtype=complex)[:, None],
        exponents=np.asarray(z, dtype=complex),
        powers=np.asarray(p, dtype=int),
    )
    return float(np.real(time_overlap(ts, ts)))


def a0_terms(decomp: BiorthoDecomp, initial: np.ndarray) -> TermSet:
    """A0(t) c as a term set; *initial* is (n,) or (n, J) for J initial vectors."""
    c = np.asarray(initial, dtype=complex)
    batched = c.ndim == 2
    c = c if batched else c[:, None]
    gamma = decomp.left.conj().T @ c  # (n, J)
    coeffs = np.einsum("dk,kj->jkd", decomp.right, gamma)
    coeffs = coeffs if batched else coeffs[0]
    return TermSet(
        coeffs=coeffs,
        exponents=-1j * decomp.eigenvalues,
        powers=np.zeros(len(decomp.eigenvalues), dtype=int),
    )


def a1_terms(decomp: BiorthoDecomp, h1: np.ndarray, initial: np.ndarray) -> TermSet:
    """A1(t) c = -i int_0^t A0(t - tau) H1 A0(tau) c dtau as a term set.

    Non-degenerate eigenvalue pairs contribute plain exponentials; pairs closer
    than the degeneracy tolerance contribute the confluent ``t exp`` terms.
    """
    c = np.asarray(initial, dtype=complex)
    batched = c.ndim == 2
    c = c if batched else c[:, None]
    lam = decomp.eigenvalues
    vr = decomp.right
    beta = decomp.left.conj().T @ h1 @ vr
    gamma = decomp.left.conj().T @ c

    diff = lam[:, None] - lam[None, :]
    degenerate = np.abs(diff) <= decomp.degeneracy_tol
    inv = np.where(degenerate, 0.0, 1.0 / np.where(degenerate, 1.0, diff))
    p_mat = beta * inv
    q_mat = beta * degenerate

    outer = p_mat @ gamma  # (k, J): coefficient on exp(-i lam_k t) via vR_k
    plain = np.einsum("dk,kj->jkd", vr, outer) - np.einsum("dm,mk,kj->jkd", vr, p_mat, gamma)
    confluent = -1j * np.einsum("dk,kj->jkd", vr, q_mat @ gamma)

    coeffs = np.concatenate([plain, confluent], axis=1)
    coeffs = coeffs if batched else coeffs[0]
    n = len(lam)
    return TermSet(
        coeffs=coeffs,
        exponents=np.concatenate([-1j * lam, -1j * lam]),
        powers=np.concatenate([np.zeros(n, dtype=int), np.ones(n, dtype=int)]),
    )
