"""The complex alpha coupling tensor over (excited, ground, ground, excited) modes.

Storage is a dense matrix over composite indices ``c = l * n_g + m``: entry
``[c(l, m), c(l', m')]`` holds ``alpha_{l m m' l'}``.  The real (emission) part
is the angular Gram matrix of the on-shell Franck-Condon amplitudes,

    alpha^r_{l m m' l'} = int dOmega/4pi  conj(eta_{lm}(k0 Omega)) eta_{l'm'}(k0 Omega),

and the level-shift part is the principal-value frequency integral

    alpha^i = (1/pi) PV int_0^kmax dk (k/k0)^3 [G(k) - G_vac] / (k0 - k)

of the same Gram integral taken off shell.  ``G_vac`` is the recoil-free limit;
subtracting it folds the mode-independent vacuum shift into the transition
frequency.  Both parts are Hermitian as composite matrices.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .. import config
from ..errors import InvalidArgumentError, ResourceLimitError
from .basis import ModeBasis, TrapSpec
from .franck_condon import overlap_tensor
from .quadrature import SphereQuadrature, pv_rule

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TensorKey:
    """Everything an AlphaTensor depends on; written into cache headers."""

    shells_g: int
    shells_e: int
    eta_sq: float
    quadrature_order: int
    pattern: str
    pv_grid: int
    kappa_max: float
    include_imaginary: bool
    excited_modes: tuple = field(default=())
    ground_modes: tuple = field(default=())

    def as_dict(self) -> dict:
        d = asdict(self)
        d["excited_modes"] = [list(m) for m in self.excited_modes]
        d["ground_modes"] = [list(m) for m in self.ground_modes]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TensorKey":
        d = dict(d)
        d["excited_modes"] = tuple(tuple(int(v) for v in m) for m in d.get("excited_modes", ()))
        d["ground_modes"] = tuple(tuple(int(v) for v in m) for m in d.get("ground_modes", ()))
        return cls(**d)


@dataclass(frozen=True)
class AlphaTensor:
    """alpha = alpha^r + i alpha^i over composite (l, m) x (l', m') indices."""

    excited: ModeBasis
    ground: ModeBasis
    real: np.ndarray
    imag: np.ndarray
    key: TensorKey

    @property
    def n_excited(self) -> int:
        return len(self.excited)

    @property
    def n_ground(self) -> int:
        return len(self.ground)

    @property
    def values(self) -> np.ndarray:
        return self.real + 1j * self.imag

    def composite(self, l: int, m: int) -> int:
        return l * self.n_ground + m

    def entry(self, l: int, m: int, mp: int, lp: int) -> complex:
        a, b = self.composite(l, m), self.composite(lp, mp)
        return complex(self.real[a, b] + 1j * self.imag[a, b])

    def real_part(self, l: int, m: int, mp: int, lp: int) -> complex:
        return complex(self.real[self.composite(l, m), self.composite(lp, mp)])

    def block(self, m: int, mp: int, part: str = "full") -> np.ndarray:
        """Matrix ``X[l, l'] = alpha_{l m mp l'}`` over excited modes."""
        src = {"full": None, "real": self.real, "imag": self.imag}
        if part not in src:
            raise InvalidArgumentError(f"unknown tensor part {part!r}")
        rows = np.arange(self.n_excited) * self.n_ground + m
        cols = np.arange(self.n_excited) * self.n_ground + mp
        if part == "full":
            return self.real[np.ix_(rows, cols)] + 1j * self.imag[np.ix_(rows, cols)]
        return src[part][np.ix_(rows, cols)]

    def completeness(self) -> np.ndarray:
        """sum_m alpha^r_{l m m l} for each excited mode l."""
        diag = np.real(np.diag(self.real)).reshape(self.n_excited, self.n_ground)
        return diag.sum(axis=1)


def tensor_bytes(n_excited: int, n_ground: int, n_nodes: int) -> int:
    dim = n_excited * n_ground
    # real + imag + one PV accumulator, plus the amplitude table at one wavenumber
    return 16 * (3 * dim * dim + dim * n_nodes)


def _hermitize(a: np.ndarray) -> np.ndarray:
    """Bit-exact Hermitian symmetrization."""
    return 0.5 * (a + a.conj().T)


def _gram(excited: ModeBasis, ground: ModeBasis, quad: SphereQuadrature, kappa: float, eta: float) -> np.ndarray:
    amps = overlap_tensor(excited, ground, quad.nodes, kappa, eta)
    amps = amps.reshape(len(excited) * len(ground), len(quad))
    return (amps.conj() * quad.weights) @ amps.T


def _vacuum_gram(excited: ModeBasis, ground: ModeBasis) -> np.ndarray:
    v = np.array([float(e == g) for e in excited for g in ground])
    return np.outer(v, v).astype(complex)


def build_alpha_tensor(
    spec: TrapSpec,
    quad: SphereQuadrature,
    pv_grid: int = config.PV_GRID,
    include_imaginary: bool = True,
    kappa_max: float = config.PV_KAPPA_MAX,
    excited: Optional[ModeBasis] = None,
    ground: Optional[ModeBasis] = None,
    budget_gib: float = config.TENSOR_BUDGET_GIB,
    threads: int = 1,
) -> AlphaTensor:
    """Assemble alpha over the trap bases (or explicit mode subsets)."""
    explicit = excited is not None or ground is not None
    excited = excited or ModeBasis.from_shells(spec.shells_e)
    ground = ground or ModeBasis.from_shells(spec.shells_g)
    if kappa_max <= 1.0:
        raise InvalidArgumentError("kappa_max must exceed the resonant wavenumber ratio 1")

    need = tensor_bytes(len(excited), len(ground), len(quad))
    budget = int(budget_gib * 2**30)
    if need > budget:
        raise ResourceLimitError(
            f"alpha tensor for {len(excited)} excited x {len(ground)} ground modes needs "
            f"{need / 2**30:.2f} GiB, budget is {budget_gib:.2f} GiB",
            required_bytes=need,
            budget_bytes=budget,
        )

    key = TensorKey(
        shells_g=spec.shells_g,
        shells_e=spec.shells_e,
        eta_sq=float(spec.eta_sq),
        quadrature_order=quad.order,
        pattern=quad.pattern,
        pv_grid=int(pv_grid),
        kappa_max=float(kappa_max),
        include_imaginary=bool(include_imaginary),
        excited_modes=tuple(tuple(m) for m in excited) if explicit else (),
        ground_modes=tuple(tuple(m) for m in ground) if explicit else (),
    )
    logger.info(
        "building alpha tensor: %d excited x %d ground modes, %d nodes, imaginary=%s",
        len(excited), len(ground), len(quad), include_imaginary,
    )

    eta = spec.eta
    real = _hermitize(_gram(excited, ground, quad, 1.0, eta))

    dim = real.shape[0]
    imag = np.zeros((dim, dim), dtype=complex)
    if include_imaginary:
        x, w, log_term = pv_rule(1.0, 0.0, kappa_max, pv_grid)
        vac = _vacuum_gram(excited, ground)
        f_pole = (real - vac) / np.pi

        def remainder(i: int) -> np.ndarray:
            f_x = x[i] ** 3 * (_gram(excited, ground, quad, x[i], eta) - vac) / np.pi
            return w[i] * (f_x - f_pole) / (x[i] - 1.0)

        with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
            # ordered reduction keeps the sum independent of the thread count
            for term in pool.map(remainder, range(len(x))):
                imag += term
        imag += f_pole * log_term
        # 1/(k0 - k) = -1/(k - k0)
        imag = _hermitize(-imag)

    logger.info("alpha tensor ready: composite dimension %d", dim)
    return AlphaTensor(excited=excited, ground=ground, real=real, imag=imag, key=key)
