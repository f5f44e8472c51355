"""
Tests for dense Hermitian eigensolvers, matrix functions and the polar decomposition.
"""

import logging

import numpy as np
import pytest
from numpy.testing import assert_allclose

from src.core.errors import (
    DimensionMismatchError,
    DomainError,
    InputError,
    MatrixOverflowError,
    NotHermitianError,
    ZeroOperatorError,
)
from src.core.matcore import (
    ancilla_block,
    as_complex_matrix,
    as_hermitian,
    expm,
    heig,
    is_unitary,
    loglog_slope,
    marccos,
    mcos,
    msin,
    msqrt,
    pinv_on_support,
    polar,
    support_projector,
    trace_distance,
)
from tests.helpers import haar_unitary, random_density, random_hermitian, sigma_minus

logger = logging.getLogger(__name__)


def test_matrix_validation():
    m = as_complex_matrix([[1, 2], [3, 4]])
    assert m.dtype == np.complex128
    assert not m.flags.writeable

    with pytest.raises(DimensionMismatchError):
        as_complex_matrix([1, 2, 3])
    with pytest.raises(DimensionMismatchError):
        as_complex_matrix(np.zeros((2, 3)), square=True)
    with pytest.raises(InputError):
        as_complex_matrix([[np.nan, 0], [0, 1]])
    with pytest.raises(NotHermitianError):
        as_hermitian([[0, 1], [0, 0]])


def test_heig_reconstructs():
    rng = np.random.default_rng(1)
    for d in (1, 2, 3, 4, 6):
        h = random_hermitian(rng, d, scale=3.0)
        es = heig(h)
        assert np.all(np.diff(es.eigenvalues) >= 0)
        assert is_unitary(es.eigenvectors, tol=1e-12)
        assert_allclose(es.reconstruct(), h, atol=1e-12)
    logger.info("✓ heig reconstruction")


def test_heig_degenerate_is_deterministic():
    rng = np.random.default_rng(2)
    u = haar_unitary(rng, 4)
    h = u @ np.diag([1.0, 1.0, 1.0, 2.0]) @ u.conj().T
    first = heig(h)
    second = heig(h.copy())
    assert np.array_equal(first.eigenvectors, second.eigenvectors)
    assert_allclose(first.reconstruct(), h, atol=1e-12)

    assert_allclose(heig(np.eye(3)).eigenvectors, np.eye(3), atol=1e-12)


def test_matrix_functions():
    rng = np.random.default_rng(3)
    for d in (2, 3, 4):
        rho = np.array(random_density(rng, d).matrix)
        root = msqrt(rho)
        assert_allclose(root @ root, rho, atol=1e-12)

        h = random_hermitian(rng, d, scale=2.0)
        c, s = mcos(h), msin(h)
        assert_allclose(c @ c + s @ s, np.eye(d), atol=1e-12)


def test_arccos_domain_and_clamping():
    theta = marccos(np.diag([1.0 + 1e-12, 0.5]))
    assert_allclose(np.diag(theta).real, [0.0, np.pi / 3], atol=1e-12)
    assert_allclose(marccos(np.diag([0.0, 0.0])), np.eye(2) * np.pi / 2, atol=1e-15)

    with pytest.raises(DomainError):
        marccos(np.diag([1.1, 0.0]))
    with pytest.raises(DomainError):
        msqrt(np.diag([1.0, -0.5]))


def test_polar_random():
    rng = np.random.default_rng(4)
    for d in (1, 2, 3, 4):
        for _ in range(10):
            a = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
            f = polar(a)
            assert is_unitary(f.unitary, tol=1e-10)
            assert_allclose(f.unitary @ f.positive, a, atol=1e-10)
            assert np.min(np.linalg.eigvalsh(f.positive)) > -1e-12
    logger.info("✓ polar decomposition")


def test_polar_rank_deficient():
    f = polar(sigma_minus())
    assert_allclose(f.unitary, [[0, 1], [1, 0]], atol=1e-12)
    assert_allclose(f.positive, np.diag([0.0, 1.0]), atol=1e-12)

    zero = polar(np.zeros((3, 3)))
    assert_allclose(zero.unitary, np.eye(3), atol=1e-12)
    assert_allclose(zero.positive, np.zeros((3, 3)), atol=1e-15)

    # identity on the kernel whenever range(A) is orthogonal to ker(A)
    proj = polar(np.diag([2.0, 0.0, 0.0]))
    assert_allclose(proj.unitary, np.eye(3), atol=1e-12)

    rng = np.random.default_rng(5)
    u = haar_unitary(rng, 3)
    a = u @ np.diag([0.7, 0.3, 0.0])
    f = polar(a)
    assert is_unitary(f.unitary, tol=1e-10)
    assert_allclose(f.unitary @ f.positive, a, atol=1e-12)


def test_polar_of_positive_is_identity():
    rng = np.random.default_rng(6)
    rho = np.array(random_density(rng, 3).matrix)
    f = polar(rho)
    assert_allclose(f.unitary, np.eye(3), atol=1e-10)
    assert_allclose(f.positive, rho, atol=1e-12)


def test_pinv_on_support():
    assert_allclose(pinv_on_support(np.diag([2.0, 0.0])), np.diag([0.5, 0.0]), atol=1e-15)
    assert_allclose(pinv_on_support(np.diag([1.0, 1e-12])), np.diag([1.0, 0.0]), atol=1e-15)
    assert_allclose(support_projector(np.diag([3.0, 0.0, 1.0])), np.diag([1.0, 0.0, 1.0]), atol=1e-15)
    with pytest.raises(ZeroOperatorError):
        pinv_on_support(np.zeros((2, 2)))


def test_expm():
    assert_allclose(expm(np.diag([0.0, np.log(2.0)])), np.diag([1.0, 2.0]), atol=1e-14)
    sx = np.array([[0, 1], [1, 0]])
    assert_allclose(expm(-1j * np.pi / 2 * sx), -1j * sx, atol=1e-14)
    with pytest.raises(MatrixOverflowError):
        expm(1000.0 * np.eye(2))


def test_small_helpers():
    assert loglog_slope([1, 2, 4, 8], [1, 4, 16, 64]) == pytest.approx(2.0)
    assert loglog_slope([16, 32, 64], [1.0, 0.5, 0.25]) == pytest.approx(-1.0)

    zero = np.diag([1.0, 0.0])
    one = np.diag([0.0, 1.0])
    assert trace_distance(zero, one) == pytest.approx(1.0)
    assert trace_distance(zero, zero) == pytest.approx(0.0)

    rng = np.random.default_rng(7)
    rho = np.array(random_density(rng, 3).matrix)
    joint = np.kron(rho, zero)
    assert_allclose(ancilla_block(joint, 3, 0), rho, atol=0)
    assert_allclose(ancilla_block(joint, 3, 1), np.zeros((3, 3)), atol=0)
