"""Solid-angle quadrature and Cauchy principal-value integration."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import roots_legendre

from ..errors import InvalidArgumentError

EMISSION_PATTERNS = ("isotropic", "dipole")


@dataclass(frozen=True)
class SphereQuadrature:
    """Nodes on the unit sphere with weights normalized to the mean over solid angle."""

    nodes: np.ndarray
    weights: np.ndarray
    order: int
    pattern: str = "isotropic"

    def __len__(self) -> int:
        return len(self.weights)

    def integrate(self, values: np.ndarray) -> np.ndarray:
        """Mean over solid angle of *values* sampled at the nodes (node axis last)."""
        return np.asarray(values) @ self.weights


def build_sphere_quadrature(
    order: int,
    pattern: str = "isotropic",
    dipole_axis=(0.0, 0.0, 1.0),
) -> SphereQuadrature:
    """Gauss-Legendre in cos(theta) times a uniform offset grid in phi.

    The phi grid always has an even number of points so the node set is
    symmetric under Omega -> -Omega.
    """
    if order < 1:
        raise InvalidArgumentError(f"quadrature order must be >= 1, got {order}")
    if pattern not in EMISSION_PATTERNS:
        raise InvalidArgumentError(f"unknown emission pattern {pattern!r}")

    cos_t, w_t = roots_legendre(order)
    n_phi = order + (order % 2)
    phi = 2.0 * np.pi * (np.arange(n_phi) + 0.5) / n_phi

    ct, pp = np.meshgrid(cos_t, phi, indexing="ij")
    st = np.sqrt(1.0 - ct**2)
    nodes = np.stack([st * np.cos(pp), st * np.sin(pp), ct], axis=-1).reshape(-1, 3)
    weights = np.repeat(0.5 * w_t / n_phi, n_phi)

    if pattern == "dipole":
        axis = np.asarray(dipole_axis, dtype=float)
        axis = axis / np.linalg.norm(axis)
        weights = weights * 1.5 * (1.0 - (nodes @ axis) ** 2)
    weights = weights / weights.sum()
    return SphereQuadrature(nodes=nodes, weights=weights, order=order, pattern=pattern)


def pv_rule(pole: float, lower: float, upper: float, n_points: int) -> tuple[np.ndarray, np.ndarray, float]:
    """Nodes, weights and log term for ``PV int f(x)/(x - pole) dx``.

    The principal value is ``sum(w * (f(x) - f(pole)) / (x - pole)) + f(pole) * log_term``.
    Gauss-Legendre rules are laid separately on both sides of the pole so no
    node coincides with it.
    """
    if not lower < pole < upper:
        raise InvalidArgumentError(f"pole {pole} outside ({lower}, {upper})")
    if n_points < 2:
        raise InvalidArgumentError("principal-value grid needs at least 2 points")
    left_n = max(n_points // 4, int(round(n_points * (pole - lower) / (upper - lower))))
    left_n = max(1, min(left_n, n_points - n_points // 4))
    right_n = max(1, n_points - left_n)
    xs, ws = [], []
    for a, b, n in ((lower, pole, left_n), (pole, upper, right_n)):
        t, w = roots_legendre(n)
        xs.append(0.5 * (b - a) * t + 0.5 * (b + a))
        ws.append(0.5 * (b - a) * w)
    log_term = float(np.log((upper - pole) / (pole - lower)))
    return np.concatenate(xs), np.concatenate(ws), log_term


def pv_integrate(
    integrand: Callable[[np.ndarray], np.ndarray],
    pole: float,
    lower: float,
    upper: float,
    n_points: int = 200,
) -> float:
    """Cauchy principal value of ``int_lower^upper integrand(x)/(x - pole) dx``.

    *integrand* must accept an array of abscissae.
    """
    x, w, log_term = pv_rule(pole, lower, upper, n_points)
    f_x = np.asarray(integrand(x), dtype=float)
    f_p = float(np.asarray(integrand(np.array([pole])), dtype=float)[0])
    return float(np.sum(w * (f_x - f_p) / (x - pole)) + f_p * log_term)
