"""
Tests for GKS and canonical generators, trace absorption and semigroup propagation.
"""

import logging

import numpy as np
import pytest
from numpy.testing import assert_allclose

from src.core.channels import DensityMatrix, apply
from src.core.errors import NegativeEigenvalueError, NegativeTimeError, NonTracelessWarning, NotTracelessError
from src.core.lindblad import (
    CanonicalGenerator,
    GKSGenerator,
    absorb_traces,
    add_generators,
    canonical_rhs,
    canonicalize,
    gell_mann_basis,
    gks_from_lindblad_op,
    gks_rhs,
    integrate_rk4,
    liouvillian,
    propagate,
    propagator,
    propagator_channel,
    semigroup_check,
    to_gks,
    vec,
)
from tests.helpers import random_density, random_generator, random_traceless, sigma_minus

logger = logging.getLogger(__name__)


def _raw_rhs(h, ops, rho):
    out = -1j * (h @ rho - rho @ h)
    for l in ops:
        ldl = l.conj().T @ l
        out = out + l @ rho @ l.conj().T - 0.5 * (ldl @ rho + rho @ ldl)
    return out


def test_gell_mann_qubit():
    basis = gell_mann_basis(2)
    sx = np.array([[0, 1], [1, 0]])
    sy = np.array([[0, -1j], [1j, 0]])
    sz = np.diag([1, -1])
    for f, s in zip(basis.elements, (sx, sy, sz)):
        assert_allclose(f, s / np.sqrt(2), atol=1e-15)
    for d in (3, 4):
        assert len(gell_mann_basis(d).elements) == d * d - 1


def test_gks_canonical_equivalence():
    rng = np.random.default_rng(21)
    for d in (2, 3):
        basis = gell_mann_basis(d)
        for _ in range(10):
            g = random_generator(rng, d, n_ops=2)
            rho = random_density(rng, d).matrix
            gks = to_gks(g, basis)
            assert_allclose(gks_rhs(gks, rho), canonical_rhs(g, rho), atol=1e-10)
            back = canonicalize(gks)
            assert_allclose(canonical_rhs(back, rho), canonical_rhs(g, rho), atol=1e-10)
            assert_allclose(liouvillian(g).act(rho), canonical_rhs(g, rho), atol=1e-12)
    logger.info("✓ GKS <-> canonical equivalence")


def test_rank_one_round_trip_up_to_phase():
    rng = np.random.default_rng(22)
    for d in (2, 3):
        basis = gell_mann_basis(d)
        l = random_traceless(rng, d, scale=0.8)
        back = canonicalize(gks_from_lindblad_op(l, basis))
        assert len(back.lindblad_ops) == 1
        recovered = back.lindblad_ops[0]
        overlap = np.trace(recovered.conj().T @ l)
        phase = overlap / abs(overlap)
        assert_allclose(phase * recovered, l, atol=1e-10)


def test_invalid_generators():
    basis = gell_mann_basis(2)
    with pytest.raises(NegativeEigenvalueError):
        GKSGenerator(H=np.zeros((2, 2)), basis=basis, A=np.diag([-1.0, 0.0, 0.0]))
    # slightly negative spectra are rejected at construction, not dropped later
    with pytest.raises(NegativeEigenvalueError):
        GKSGenerator(H=np.zeros((2, 2)), basis=basis, A=np.diag([-5e-9, 0.0, 0.0]))
    tiny = GKSGenerator(H=np.zeros((2, 2)), basis=basis, A=np.diag([-1e-12, 0.5, 0.0]))
    assert len(canonicalize(tiny).lindblad_ops) == 1
    with pytest.raises(NotTracelessError):
        CanonicalGenerator(H=np.zeros((2, 2)), lindblad_ops=(np.eye(2),))
    with pytest.raises(NotTracelessError):
        gks_from_lindblad_op(np.diag([1.0, 0.0]), basis)


def test_absorb_traces_preserves_dynamics():
    rng = np.random.default_rng(23)
    h = np.diag([0.3, -0.3]).astype(np.complex128)
    ops = [sigma_minus() + 0.4 * np.eye(2), random_traceless(rng, 2) + (0.2 - 0.1j) * np.eye(2)]
    with pytest.warns(NonTracelessWarning):
        g, traces = absorb_traces(h, ops)
    assert_allclose(traces, [0.4, 0.2 - 0.1j], atol=1e-14)
    for l in g.lindblad_ops:
        assert abs(np.trace(l)) < 1e-14
    for _ in range(5):
        rho = random_density(rng, 2).matrix
        assert_allclose(canonical_rhs(g, rho), _raw_rhs(h, ops, rho), atol=1e-12)


def test_add_generators():
    rng = np.random.default_rng(24)
    g1 = random_generator(rng, 2, 1)
    g2 = random_generator(rng, 2, 2)
    total = add_generators(g1, g2)
    assert len(total.lindblad_ops) == 3
    rho = random_density(rng, 2).matrix
    assert_allclose(canonical_rhs(total, rho), canonical_rhs(g1, rho) + canonical_rhs(g2, rho), atol=1e-12)


def test_decay_propagation():
    gamma = 0.5
    g = CanonicalGenerator(H=np.zeros((2, 2)), lindblad_ops=(np.sqrt(gamma) * sigma_minus(),))
    rho = propagate(g, DensityMatrix.basis(2, 1), 1.0)
    assert rho.matrix[1, 1].real == pytest.approx(np.exp(-gamma), abs=1e-12)
    assert rho.matrix[0, 0].real == pytest.approx(1 - np.exp(-gamma), abs=1e-12)

    rho0 = DensityMatrix.basis(2, 1)
    assert propagate(g, rho0, 0.0) is rho0
    zero = CanonicalGenerator.zero(2)
    assert_allclose(propagate(zero, rho0, 3.0).matrix, rho0.matrix, atol=1e-15)


def test_propagate_matches_rk4():
    rng = np.random.default_rng(25)
    for d in (2, 3):
        g = random_generator(rng, d, 2)
        rho0 = random_density(rng, d)
        exact = propagate(g, rho0, 1.0).matrix
        assert_allclose(integrate_rk4(g, rho0.matrix, 1.0, dt=1e-3), exact, atol=1e-9)


def test_semigroup_property():
    rng = np.random.default_rng(26)
    for _ in range(50):
        d = int(rng.integers(2, 4))
        g = random_generator(rng, d, 2)
        t, s = rng.uniform(0, 1, size=2)
        assert semigroup_check(g, t, s) < 1e-9

    g = random_generator(rng, 2, 1)
    superop = propagator(g, 0.7).matrix
    rho = random_density(rng, 2).matrix
    assert_allclose(superop @ vec(rho), vec(propagate(g, DensityMatrix(rho), 0.7).matrix), atol=1e-12)

    # the same map as a Kraus channel
    kraus = propagator_channel(g, 0.7)
    assert len(kraus) <= 4
    assert_allclose(apply(kraus, DensityMatrix(rho)).matrix, propagate(g, DensityMatrix(rho), 0.7).matrix, atol=1e-10)


def test_negative_time_rejected():
    g = CanonicalGenerator.zero(2)
    with pytest.raises(NegativeTimeError):
        propagate(g, DensityMatrix.basis(2, 0), -1.0)
    with pytest.raises(NegativeTimeError):
        semigroup_check(g, 0.5, -0.1)
