import numpy as np
import pytest
import scipy.linalg
from numpy.testing import assert_allclose
from scipy.integrate import quad, quad_vec

from barload.errors import DefectiveMatrixError, DivergenceError, InvalidArgumentError
from barload.physics.basis import TrapSpec
from barload.physics.coupling import build_alpha_tensor
from barload.physics.dynamics import (
    a0_terms,
    a1_terms,
    a1_time_kernel,
    biortho_decompose,
    build_generator,
    infinite_time_overlap,
    propagate_A0,
)
from barload.physics.quadrature import build_sphere_quadrature


def _random_contraction(rng, n):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    k = a @ a.conj().T / n + 0.1 * np.eye(n)
    h = rng.normal(size=(n, n))
    return -1j * k + 0.3 * (h + h.T)


def test_no_recoil_generator_single_level():
    spec = TrapSpec(shells_g=2, shells_e=1, eta_sq=0.0, gamma=2.0, n_atoms=100, n_condensed=100)
    alpha = build_alpha_tensor(spec, build_sphere_quadrature(4), include_imaginary=False)
    gen = build_generator(alpha, spec)
    assert_allclose(gen.matrix, [[-100j]], atol=1e-12)


def test_no_recoil_generator_projects_on_lowest_excited_mode():
    spec = TrapSpec(shells_g=2, shells_e=2, eta_sq=0.0, n_atoms=10, n_condensed=10)
    alpha = build_alpha_tensor(spec, build_sphere_quadrature(4), include_imaginary=False)
    gen = build_generator(alpha, spec)
    expected = np.zeros((4, 4))
    expected[0, 0] = 5.0
    assert_allclose(gen.decay, expected, atol=1e-14)


def test_generator_is_a_contraction(two_level_alpha, two_level_spec):
    gen = build_generator(two_level_alpha, two_level_spec)
    herm = -1j * gen.matrix
    herm = 0.5 * (herm + herm.conj().T)
    assert np.linalg.eigvalsh(herm).max() <= 1e-10 * gen.norm


def test_shell_mismatch_rejected(two_level_alpha):
    with pytest.raises(InvalidArgumentError):
        build_generator(two_level_alpha, TrapSpec(shells_g=5, shells_e=2))


def test_reconstruction_of_random_matrices(rng):
    for _ in range(100):
        m = rng.normal(size=(20, 20)) + 1j * rng.normal(size=(20, 20))
        d = biortho_decompose(m)
        assert np.linalg.norm(d.reconstruct() - m) <= 1e-10 * np.linalg.norm(m)
        assert_allclose(d.left.conj().T @ d.right, np.eye(20), atol=1e-8)


def test_anti_hermitian_input_uses_orthonormal_vectors():
    k = np.diag([1.0, 1.0, 2.0])
    d = biortho_decompose(-1j * k)
    assert np.array_equal(d.left, d.right)
    assert_allclose(np.sort(d.eigenvalues.imag), [-2.0, -1.0, -1.0], atol=1e-14)


def test_jordan_block_is_defective():
    with pytest.raises(DefectiveMatrixError) as info:
        biortho_decompose(np.array([[0.0, 1.0], [0.0, 0.0]]))
    assert info.value.clustered


def test_a0_matches_matrix_exponential(rng):
    m = _random_contraction(rng, 6)
    d = biortho_decompose(m)
    for t in (0.0, 0.3, 2.0):
        assert_allclose(propagate_A0(d, t), scipy.linalg.expm(-1j * m * t), atol=1e-8)
        assert np.linalg.norm(propagate_A0(d, t), 2) <= 1.0 + 1e-10


def test_negative_time_rejected():
    d = biortho_decompose(-1j * np.eye(2))
    with pytest.raises(InvalidArgumentError):
        propagate_A0(d, -1.0)


def test_time_kernel_general_and_confluent():
    la, lb, t = 1.0 - 0.5j, 0.2 - 1.0j, 1.7

    def integrand(tau):
        return -1j * np.exp(-1j * la * (t - tau)) * np.exp(-1j * lb * tau)

    re, _ = quad(lambda s: integrand(s).real, 0, t, epsabs=1e-13)
    im, _ = quad(lambda s: integrand(s).imag, 0, t, epsabs=1e-13)
    assert a1_time_kernel(la, lb, t) == pytest.approx(re + 1j * im, abs=1e-10)
    assert a1_time_kernel(la, la, t) == pytest.approx(-1j * t * np.exp(-1j * la * t), abs=1e-14)


@pytest.mark.parametrize("degenerate", [False, True])
def test_first_order_terms_match_direct_integral(rng, degenerate):
    m = -1j * np.diag([1.0, 1.0, 2.5]) if degenerate else _random_contraction(rng, 3)
    h1 = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    c = np.array([1.0, 0.5j, -0.2])
    d = biortho_decompose(m)
    terms = a1_terms(d, h1, c)
    t = 1.3

    def integrand(tau):
        v = -1j * scipy.linalg.expm(-1j * m * (t - tau)) @ h1 @ scipy.linalg.expm(-1j * m * tau) @ c
        return np.concatenate([v.real, v.imag])

    stacked, _ = quad_vec(integrand, 0.0, t, epsabs=1e-12)
    reference = stacked[:3] + 1j * stacked[3:]
    assert_allclose(terms.evaluate(t), reference, atol=1e-8)
    assert_allclose(a0_terms(d, c).evaluate(t), scipy.linalg.expm(-1j * m * t) @ c, atol=1e-10)


def test_infinite_time_overlap_against_quadrature():
    terms = [(1.0, -1.0 + 2.0j, 0), (0.5j, -0.5, 1), (0.2, -0.8 - 1.0j, 2)]

    def f(t):
        return abs(sum(c * t**p * np.exp(z * t) for c, z, p in terms)) ** 2

    reference, _ = quad(f, 0, np.inf, epsabs=1e-12, epsrel=1e-12, limit=200)
    assert infinite_time_overlap(terms) == pytest.approx(reference, abs=1e-8)


def test_non_decaying_exponent_diverges():
    with pytest.raises(DivergenceError):
        infinite_time_overlap([(1.0, 0.5j, 0)])


@pytest.mark.parametrize("t1,t2", [(0.0, 0.3), (0.05, 0.2), (0.7, 1.9)])
def test_free_propagator_composes_over_time(two_level_alpha, two_level_spec, t1, t2):
    d = biortho_decompose(build_generator(two_level_alpha, two_level_spec))
    scale = 1.0 / d.scale
    whole = propagate_A0(d, (t1 + t2) * scale)
    split = propagate_A0(d, t1 * scale) @ propagate_A0(d, t2 * scale)
    assert_allclose(whole, split, atol=1e-8)
    assert_allclose(propagate_A0(d, 0.0), np.eye(whole.shape[0]), atol=1e-9)
