"""Franck-Condon amplitudes of a photon recoil kick between trap modes.

The 1D factor is the matrix element of the displacement operator
``<m| exp(i k X) |l>`` with ``X = (a + a^dagger)/sqrt(2)`` in oscillator-length
units.  The kick amplitude is ``beta = i k / sqrt(2)``, which is purely imaginary,
so the closed form is symmetric in (l, m)::

    <m|D(beta)|l> = sqrt(lo!/hi!) beta^|m-l| exp(-k^2/4) L_lo^(|m-l|)(k^2/2)
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import eval_genlaguerre, gammaln

from .basis import ModeBasis, ModeIndex, TrapSpec


def fc_1d(l: int, m: int, kick) -> complex | np.ndarray:
    """1D overlap ``<m|exp(i*kick*X)|l>``; *kick* may be an array."""
    k = np.asarray(kick, dtype=float)
    lo, hi = min(l, m), max(l, m)
    d = hi - lo
    x = 0.5 * k * k
    norm = np.exp(0.5 * (gammaln(lo + 1) - gammaln(hi + 1)))
    value = (1j**d) * norm * (k / np.sqrt(2.0)) ** d * np.exp(-0.5 * x) * eval_genlaguerre(lo, d, x)
    return complex(value) if np.ndim(value) == 0 else np.asarray(value)


def fc_1d_table(n_max: int, kicks: np.ndarray) -> np.ndarray:
    """Table ``T[l, m, ...] = fc_1d(l, m, kicks)`` for l, m <= n_max."""
    kicks = np.asarray(kicks, dtype=float)
    table = np.empty((n_max + 1, n_max + 1) + kicks.shape, dtype=complex)
    for l in range(n_max + 1):
        for m in range(l, n_max + 1):
            table[l, m] = fc_1d(l, m, kicks)
            table[m, l] = table[l, m]
    return table


def fc_3d(
    l: ModeIndex,
    m: ModeIndex,
    direction,
    kappa_ratio: float,
    spec: TrapSpec,
) -> complex:
    """Franck-Condon factor for emission of a photon along *direction* at wavenumber ``kappa_ratio * k0``."""
    direction = np.asarray(direction, dtype=float)
    kicks = kappa_ratio * spec.eta * direction
    value = 1.0 + 0.0j
    for axis in range(3):
        value *= fc_1d(l[axis], m[axis], kicks[axis])
    return complex(value)


def overlap_tensor(
    excited: ModeBasis,
    ground: ModeBasis,
    nodes: np.ndarray,
    kappa_ratio: float,
    eta: float,
) -> np.ndarray:
    """eta_{lm}(kappa * Omega_q) for every node q, shape (n_e, n_g, n_nodes)."""
    le = excited.quantum_numbers()
    mg = ground.quantum_numbers()
    n_max = int(max(le.max(), mg.max()))
    out = np.ones((len(excited), len(ground), len(nodes)), dtype=complex)
    for axis in range(3):
        table = fc_1d_table(n_max, kappa_ratio * eta * nodes[:, axis])
        out *= table[le[:, axis][:, None], mg[:, axis][None, :]]
    return out


@dataclass(frozen=True)
class FranckCondonTable:
    """eta_{lm} over (excited mode, ground mode, quadrature node, wavenumber ratio)."""

    amplitudes: np.ndarray
    kappa_ratios: np.ndarray

    @classmethod
    def build(
        cls,
        excited: ModeBasis,
        ground: ModeBasis,
        nodes: np.ndarray,
        kappa_ratios,
        eta: float,
    ) -> "FranckCondonTable":
        kappa_ratios = np.atleast_1d(np.asarray(kappa_ratios, dtype=float))
        amps = np.stack(
            [overlap_tensor(excited, ground, nodes, k, eta) for k in kappa_ratios], axis=-1
        )
        return cls(amplitudes=amps, kappa_ratios=kappa_ratios)

    def completeness(self) -> np.ndarray:
        """sum_m |eta_lm|^2 for every (l, node, kappa)."""
        return np.sum(np.abs(self.amplitudes) ** 2, axis=1)
