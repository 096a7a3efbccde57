from __future__ import annotations

import numpy as np
import pytest

from barload.physics.basis import TrapSpec
from barload.physics.coupling import build_alpha_tensor
from barload.physics.quadrature import build_sphere_quadrature
from barload.validation import benchmark_tensor


@pytest.fixture(scope="session")
def small_spec() -> TrapSpec:
    return TrapSpec(shells_g=3, shells_e=1, eta_sq=2.0, n_atoms=1000, n_condensed=1000)


@pytest.fixture(scope="session")
def small_alpha(small_spec):
    return build_alpha_tensor(small_spec, build_sphere_quadrature(10), include_imaginary=False)


@pytest.fixture(scope="session")
def two_level_spec() -> TrapSpec:
    return TrapSpec(shells_g=4, shells_e=2, eta_sq=1.0, n_atoms=5000, n_condensed=5000)


@pytest.fixture(scope="session")
def two_level_alpha(two_level_spec):
    return build_alpha_tensor(two_level_spec, build_sphere_quadrature(12), pv_grid=60)


@pytest.fixture(scope="session")
def benchmark():
    return benchmark_tensor()


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)
