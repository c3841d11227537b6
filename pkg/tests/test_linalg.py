import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from qcap.errors import ExponentOverflow, InvalidDensityMatrix, NotHermitianError, RegularityViolation
from qcap.linalg import (
    binary_entropy,
    density_matrix,
    dual_radius,
    eig_hermitian,
    entropy_maximizer,
    gibbs_state,
    hermitian,
    hermitian_basis,
    matrix_exp2,
    min_spectrum_gamma,
    norms,
    project_frobenius_ball,
    random_density_matrix,
    random_hermitian,
    random_unitary,
    von_neumann_entropy,
)

RHO1 = np.array([[2, 1], [1, 2]]) / 4


def test_eig_identity():
    sp = eig_hermitian(np.eye(2))
    assert np.allclose(sp.eigenvalues, [1, 1])


def test_eig_example_state_descending():
    assert np.allclose(eig_hermitian(RHO1).eigenvalues, [0.75, 0.25], atol=1e-14)


def test_eig_reconstruction_random():
    rng = np.random.default_rng(0)
    a = random_hermitian(4, rng)
    w, v = eig_hermitian(a)
    assert np.all(np.diff(w) <= 0)
    assert np.linalg.norm((v * w) @ v.conj().T - a) <= 1e-9 * max(1.0, np.linalg.norm(a))
    assert np.allclose(v.conj().T @ v, np.eye(4), atol=1e-12)


def test_eig_deterministic():
    a = random_hermitian(5, np.random.default_rng(3))
    s1, s2 = eig_hermitian(a), eig_hermitian(a.copy())
    assert np.array_equal(s1.eigenvalues, s2.eigenvalues)
    assert np.array_equal(s1.eigenvectors, s2.eigenvectors)


def test_eig_shift_invariance():
    rng = np.random.default_rng(1)
    for _ in range(20):
        a = random_hermitian(3, rng)
        c = rng.uniform(-10, 10)
        assert np.allclose(eig_hermitian(a + c * np.eye(3)).eigenvalues, eig_hermitian(a).eigenvalues + c)


def test_hermitian_rejects_asymmetric():
    with pytest.raises(NotHermitianError):
        hermitian([[0, 1], [0, 0]])


def test_hermitian_symmetrizes_small_noise():
    a = np.array([[1, 1e-10], [0, 1]], dtype=complex)
    h = hermitian(a)
    assert np.array_equal(h, h.conj().T)


def test_density_matrix_checks():
    with pytest.raises(InvalidDensityMatrix):
        density_matrix(np.zeros((2, 2)))
    with pytest.raises(InvalidDensityMatrix):
        density_matrix(np.diag([1.5, -0.5]))
    # tiny negative eigenvalues are tolerated
    density_matrix(np.diag([1 + 1e-11, -1e-11]))


def test_entropy_values():
    assert von_neumann_entropy(np.eye(2) / 2) == pytest.approx(1.0, abs=1e-14)
    assert von_neumann_entropy(np.diag([1.0, 0.0])) == 0.0
    assert von_neumann_entropy(RHO1) == pytest.approx(binary_entropy(0.25), abs=1e-14)
    assert binary_entropy(0.25) == pytest.approx(0.8112781244591328, abs=1e-12)


def test_entropy_unitary_invariance():
    rng = np.random.default_rng(2)
    for _ in range(20):
        rho = random_density_matrix(3, rng)
        u = random_unitary(3, rng)
        assert von_neumann_entropy(u @ rho @ u.conj().T) == pytest.approx(von_neumann_entropy(rho), abs=1e-10)


@settings(max_examples=50, deadline=None)
@given(st.integers(min_value=1, max_value=5), st.integers(min_value=0, max_value=2**31))
def test_entropy_range(dim, seed):
    rho = random_density_matrix(dim, np.random.default_rng(seed))
    h = von_neumann_entropy(rho)
    assert -1e-12 <= h <= math.log2(dim) + 1e-12


def test_matrix_exp2_examples():
    assert np.allclose(matrix_exp2(np.zeros((3, 3))), np.eye(3))
    assert np.allclose(matrix_exp2(np.diag([1.0, -1.0])), np.diag([2.0, 0.5]), atol=1e-15)
    x = np.array([[0, 1], [1, 0]], dtype=float)
    assert np.linalg.norm(matrix_exp2(x) @ matrix_exp2(-x) - np.eye(2)) <= 1e-9
    assert np.allclose(matrix_exp2(x), [[math.cosh(math.log(2)), math.sinh(math.log(2))],
                                        [math.sinh(math.log(2)), math.cosh(math.log(2))]])


def test_matrix_exp2_against_expm():
    rng = np.random.default_rng(4)
    for _ in range(10):
        a = random_hermitian(4, rng, scale=2.0)
        assert np.allclose(matrix_exp2(a), scipy.linalg.expm(a * math.log(2)), atol=1e-10)
        w = np.linalg.eigvalsh(a)
        assert np.allclose(np.linalg.eigvalsh(matrix_exp2(a)), np.exp2(w), rtol=1e-10)


def test_matrix_exp2_overflow_guard():
    with pytest.raises(ExponentOverflow):
        matrix_exp2(np.diag([2000.0, 0.0]))
    shifted, s = matrix_exp2(np.diag([2000.0, 0.0]), return_shift=True)
    assert s == 2000.0
    assert np.allclose(shifted, np.diag([1.0, 0.0]))


def test_norms():
    n = norms(np.diag([3.0, -4.0]))
    assert (n.frobenius, n.trace, n.operator) == pytest.approx((5.0, 7.0, 4.0))
    n = norms(np.eye(2))
    assert (n.frobenius, n.trace, n.operator) == pytest.approx((math.sqrt(2), 2.0, 1.0))
    rho = random_density_matrix(4, np.random.default_rng(5))
    n = norms(rho)
    assert n.trace == pytest.approx(1.0, abs=1e-12)
    assert n.operator <= n.frobenius <= n.trace


def test_projection_examples():
    r = 2.0
    b = np.eye(2) * r / (2 * math.sqrt(2))
    assert np.array_equal(project_frobenius_ball(b, r), b)
    assert np.allclose(project_frobenius_ball(np.diag([2 * r, 0]), r), np.diag([r, 0]))
    rng = np.random.default_rng(6)
    a = random_hermitian(3, rng)
    a *= 3 * r / np.linalg.norm(a)
    p = project_frobenius_ball(a, r)
    assert np.linalg.norm(p) == pytest.approx(r, abs=1e-12)
    assert np.allclose(p * 3, a)


@settings(max_examples=50, deadline=None)
@given(st.integers(min_value=0, max_value=2**31), st.floats(min_value=0.0, max_value=10.0))
def test_projection_idempotent_and_contractive(seed, r):
    rng = np.random.default_rng(seed)
    a, b = random_hermitian(3, rng, 4.0), random_hermitian(3, rng, 4.0)
    pa = project_frobenius_ball(a, r)
    assert np.linalg.norm(pa) <= r + 1e-12
    assert np.array_equal(project_frobenius_ball(pa, r), pa)
    pb = project_frobenius_ball(b, r)
    assert np.linalg.norm(pa - pb) <= np.linalg.norm(a - b) + 1e-12


def test_entropy_maximizer_examples():
    assert np.allclose(entropy_maximizer(np.zeros((4, 4))), np.eye(4) / 4)
    assert np.allclose(entropy_maximizer(np.diag([1.0, -1.0])), np.diag([0.8, 0.2]))
    assert entropy_maximizer(np.diag([60.0, 0.0]))[0, 0] == pytest.approx(1.0, abs=1e-15)
    assert entropy_maximizer(np.diag([5000.0, 0.0]))[0, 0] == 1.0


def test_entropy_maximizer_optimal_against_random_states():
    rng = np.random.default_rng(7)
    for _ in range(3):
        lam = random_hermitian(3, rng)
        star = entropy_maximizer(lam)
        best = von_neumann_entropy(star) + np.trace(star @ lam).real
        # log2 Tr 2^lam is the optimal value
        assert best == pytest.approx(gibbs_state(lam)[1], abs=1e-10)
        for _ in range(1000):
            rho = random_density_matrix(3, rng, rank=int(rng.integers(1, 4)))
            assert von_neumann_entropy(rho) + np.trace(rho @ lam).real <= best + 1e-10


def test_min_spectrum_gamma():
    assert min_spectrum_gamma(np.array([np.eye(2) / 2, RHO1])) == pytest.approx(0.25)
    with pytest.raises(RegularityViolation, match="perturb"):
        min_spectrum_gamma(np.array([np.diag([1.0, 0.0]), np.full((2, 2), 0.5)]))
    assert min_spectrum_gamma(np.array([np.eye(3) / 3])) == pytest.approx(1 / 3)


def test_dual_radius():
    assert dual_radius(2, 0.25) == 4.0
    assert dual_radius(2, 0.5) == pytest.approx(2 * math.log2(math.e))


def test_hermitian_basis_orthonormal():
    for d in (1, 2, 3):
        b = hermitian_basis(d)
        gram = np.einsum("aij,bji->ab", b, b)
        assert np.allclose(gram, np.eye(d * d))
        assert all(np.allclose(m, m.conj().T) for m in b)
