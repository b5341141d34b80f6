import math

import numpy as np
import pytest
import scipy.sparse as sp

from dopo_qb import fock
from dopo_qb.errors import InvalidArgumentError, InvalidDimensionError, TruncationError

from conftest import random_hermitian, random_state


class TestLadderOperators:
    def test_two_level_lowering(self):
        np.testing.assert_array_equal(fock.annihilation(2).toarray(), [[0, 1], [0, 0]])

    def test_number_operator_from_ladder(self):
        a = fock.annihilation(3)
        np.testing.assert_allclose((a.dag() @ a).toarray(), np.diag([0, 1, 2]))

    def test_matrix_elements(self):
        a = fock.annihilation(6).toarray()
        for m in range(5):
            assert a[m, m + 1] == pytest.approx(math.sqrt(m + 1))
        assert np.count_nonzero(a) == 5

    def test_coherent_state_is_eigenvector(self):
        alpha = 2.0
        ket = fock.coherent_ket(32, alpha)
        a = fock.annihilation(32).toarray()
        assert np.linalg.norm(a @ ket - alpha * ket) < 1e-6

    @pytest.mark.parametrize("n", [0, 1])
    def test_too_small(self, n):
        with pytest.raises(InvalidDimensionError):
            fock.annihilation(n)

    def test_commutator_below_top_level(self):
        n = 7
        a = fock.annihilation(n).toarray()
        comm = a @ a.conj().T - a.conj().T @ a
        np.testing.assert_allclose(comm[: n - 1, : n - 1], np.eye(n - 1), atol=1e-14)

    def test_sigma_conventions(self):
        np.testing.assert_array_equal(fock.sigma_z().toarray(), np.diag([1, -1]))
        sp_ = fock.sigma_plus().toarray()
        sm = fock.sigma_minus().toarray()
        # sigma_+ raises |g> (index 1) to |e> (index 0)
        np.testing.assert_array_equal(sp_ @ [0, 1], [1, 0])
        np.testing.assert_array_equal(sm, sp_.T)


class TestKron:
    def test_identities(self):
        out = fock.kron(fock.identity(2), fock.identity(3))
        assert out.dims == (2, 3)
        np.testing.assert_array_equal(out.toarray(), np.eye(6))

    def test_sigma_z_with_identity(self):
        out = fock.kron(fock.sigma_z(), fock.identity(2))
        np.testing.assert_array_equal(out.toarray(), np.diag([1, 1, -1, -1]))

    def test_mixed_product(self, rng):
        a = fock.Operator(rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3)), (3,))
        b = fock.Operator(rng.normal(size=(3, 3)), (3,))
        lhs = fock.kron(a, fock.identity(3)) @ fock.kron(fock.identity(3), b)
        np.testing.assert_allclose(lhs.toarray(), np.kron(a.toarray(), b.toarray()), atol=1e-13)

    def test_associative(self, rng):
        # integer entries keep the products exact
        ops = [fock.Operator(rng.integers(-5, 6, size=(d, d)), (d,)) for d in (2, 3, 2)]
        left = fock.kron(fock.kron(ops[0], ops[1]), ops[2])
        right = fock.kron(ops[0], fock.kron(ops[1], ops[2]))
        assert left.dims == right.dims == (2, 3, 2)
        np.testing.assert_array_equal(left.toarray(), right.toarray())

    def test_embed_matches_kron(self):
        a = fock.annihilation(4)
        np.testing.assert_array_equal(fock.embed(a, 1, (3, 4)).toarray(),
                                      fock.kron(fock.identity(3), a).toarray())
        with pytest.raises(InvalidArgumentError):
            fock.embed(a, 0, (3, 4))


class TestOperator:
    def test_dims_must_match_order(self):
        with pytest.raises(InvalidDimensionError):
            fock.Operator(sp.identity(6), (2, 2))
        with pytest.raises(InvalidDimensionError):
            fock.Operator(np.zeros((2, 3)), (2,))

    def test_arithmetic_checks_dims(self):
        with pytest.raises(InvalidArgumentError):
            fock.identity(2) @ fock.Operator(np.eye(2), (2,)) + fock.number(3)

    def test_hermiticity(self):
        assert fock.number(4).is_hermitian()
        assert not fock.annihilation(4).is_hermitian()


class TestPartialTrace:
    def test_product_state(self, rng):
        ra, rb = random_state((3,), rng), random_state((4,), rng)
        rho = fock.tensor_states(ra, rb)
        np.testing.assert_allclose(fock.partial_trace(rho, [0]).data, ra.data, atol=1e-13)
        np.testing.assert_allclose(fock.partial_trace(rho, [1]).data, rb.data, atol=1e-13)

    def test_bell_state(self):
        bell = fock.pure(np.array([1, 0, 0, 1]) / math.sqrt(2), (2, 2))
        np.testing.assert_allclose(fock.partial_trace(bell, [0]).data, np.eye(2) / 2, atol=1e-15)

    def test_expectation_oracle(self, rng):
        rho = random_state((3, 4), rng)
        x = random_hermitian(3, rng)
        reduced = fock.partial_trace(rho, [0])
        lhs = np.trace(reduced.data @ x)
        rhs = np.trace(rho.data @ np.kron(x, np.eye(4)))
        assert abs(lhs - rhs) < 1e-12

    def test_three_subsystems_keeps_order(self, rng):
        ra, rb, rc = (random_state((d,), rng) for d in (2, 3, 2))
        rho = fock.tensor_states(ra, rb, rc)
        np.testing.assert_allclose(fock.partial_trace(rho, [2, 0]).data,
                                   np.kron(ra.data, rc.data), atol=1e-13)

    @pytest.mark.parametrize("keep", [[], [2], [-1]])
    def test_bad_keep(self, keep, rng):
        with pytest.raises(InvalidArgumentError):
            fock.partial_trace(random_state((2, 2), rng), keep)


class TestExpectation:
    def test_vacuum_number(self):
        assert fock.expectation(fock.vacuum(5), fock.number(5)) == 0

    def test_maximally_mixed_identity(self):
        n = 5
        rho = fock.DensityMatrix(np.eye(n) / n, (n,))
        assert fock.expectation(rho, fock.identity(n)) == pytest.approx(1.0, abs=1e-15)

    def test_coherent_mean_number(self):
        alpha = 1.5
        val = fock.expectation(fock.coherent(32, alpha), fock.number(32))
        assert abs(val - alpha ** 2) < 1e-6

    def test_dimension_mismatch(self):
        with pytest.raises(InvalidArgumentError):
            fock.expectation(fock.vacuum(3), fock.number(4))

    def test_hermitian_gives_real(self, rng):
        rho = random_state((5,), rng)
        h = fock.Operator(random_hermitian(5, rng), (5,))
        assert abs(fock.expectation(rho, h).imag) < 1e-14


class TestStates:
    def test_vacuum_and_fock(self):
        np.testing.assert_array_equal(fock.vacuum(4).data, np.diag([1, 0, 0, 0]))
        np.testing.assert_array_equal(fock.fock(4, 2).data, np.diag([0, 0, 1, 0]))

    def test_fock_out_of_range(self):
        with pytest.raises(InvalidArgumentError):
            fock.fock(4, 4)

    def test_coherent_poisson_diagonal(self):
        alpha = 2.0
        diag = np.real(np.diag(fock.coherent(32, alpha).data))
        m = np.arange(32)
        poisson = np.array([math.exp(-alpha ** 2) * alpha ** (2 * k) / math.factorial(k) for k in m])
        np.testing.assert_allclose(diag, poisson, atol=1e-8)

    def test_coherent_truncation_error_reports_leak(self):
        with pytest.raises(TruncationError) as info:
            fock.coherent(8, 2.5)
        assert info.value.leaked > 1e-8

    def test_constructors_pass_strict_tolerances(self):
        for rho in (fock.vacuum(6), fock.fock(6, 3), fock.coherent(24, 1.0 + 0.5j)):
            assert rho.tol_herm == rho.tol_trace == rho.tol_pos == 1e-12
            assert abs(np.trace(rho.data) - 1) < 1e-12

    def test_density_matrix_validation(self):
        with pytest.raises(InvalidArgumentError):
            fock.DensityMatrix(np.diag([0.5, 0.6]), (2,))
        with pytest.raises(InvalidArgumentError):
            fock.DensityMatrix(np.array([[0.5, 0.1], [0.2, 0.5]]), (2,))
        with pytest.raises(InvalidArgumentError):
            fock.DensityMatrix(np.diag([1.1, -0.1]), (2,))

    def test_density_matrix_is_a_copy(self):
        data = np.diag([1.0, 0.0]).astype(complex)
        rho = fock.DensityMatrix(data, (2,))
        data[0, 0] = 5
        assert rho.data[0, 0] == 1
