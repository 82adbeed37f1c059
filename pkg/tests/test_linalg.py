"""Tests for the Hermitian container types and spectral helpers."""

import numpy as np
import pytest
import scipy.linalg as sla

from qthermo import (
    BipartiteState,
    DensityMatrix,
    HermitianMatrix,
    InvalidInput,
    InvalidState,
    UnitaryMatrix,
    eig_hermitian,
    matrix_function,
    partial_trace,
    tensor_product,
    trace_distance,
    unitary_step,
)
from qthermo.rand import rand_bipartite, rand_density, rand_hermitian, rand_unitary


def test_hermitian_symmetrizes_roundoff():
    rng = np.random.default_rng(0)
    for _ in range(20):
        a = rand_hermitian(rng, 4).mat
        noisy = a + 1e-14 * rng.standard_normal((4, 4))
        h = HermitianMatrix(noisy)
        assert np.all(h.mat == h.mat.conj().T)
        assert np.max(np.abs(h.mat - a)) < 1e-13


def test_hermitian_rejects_gross_asymmetry():
    a = np.array([[0.0, 1.0], [0.0, 0.0]])
    with pytest.raises(InvalidInput):
        HermitianMatrix(a)
    with pytest.raises(InvalidInput):
        HermitianMatrix(np.ones((2, 3)))


def test_density_matrix_validation():
    with pytest.raises(InvalidState):
        DensityMatrix(np.diag([0.9, 0.3]))  # trace 1.2
    with pytest.raises(InvalidState):
        DensityMatrix(np.diag([1.5, -0.5]))  # negative eigenvalue
    d = DensityMatrix(np.diag([0.25, 0.75]))
    assert d.dim == 2
    assert abs(np.trace(d.mat) - 1.0) < 1e-15


def test_density_matrix_is_read_only():
    d = DensityMatrix(np.eye(2) / 2)
    with pytest.raises(ValueError):
        d.mat[0, 0] = 5.0


def test_unitary_matrix_validation():
    rng = np.random.default_rng(1)
    u = rand_unitary(rng, 3)
    assert isinstance(u, UnitaryMatrix)
    with pytest.raises(InvalidInput):
        UnitaryMatrix(np.ones((3, 3)))


def test_bipartite_marginals_match_index_loops():
    # Oracle: partial traces written as explicit index sums.
    rng = np.random.default_rng(2)
    for _ in range(10):
        d_s, d_e = rng.integers(2, 4), rng.integers(2, 4)
        state = rand_bipartite(rng, d_s, d_e)
        full = state.mat.reshape(d_s, d_e, d_s, d_e)
        rho_s = np.zeros((d_s, d_s), dtype=complex)
        rho_e = np.zeros((d_e, d_e), dtype=complex)
        for i in range(d_s):
            for j in range(d_s):
                for k in range(d_e):
                    rho_s[i, j] += full[i, k, j, k]
        for i in range(d_e):
            for j in range(d_e):
                for k in range(d_s):
                    rho_e[i, j] += full[k, i, k, j]
        assert np.max(np.abs(state.rho_sys.mat - rho_s)) < 1e-14
        assert np.max(np.abs(state.rho_env.mat - rho_e)) < 1e-14
        assert np.max(np.abs(partial_trace(state, "S").mat - rho_s)) < 1e-14
        assert np.max(np.abs(partial_trace(state, "E").mat - rho_e)) < 1e-14


def test_bipartite_dimension_checks():
    with pytest.raises(InvalidInput):
        BipartiteState(2, 3, np.eye(5) / 5)
    with pytest.raises(InvalidState):
        BipartiteState(2, 2, np.diag([2.0, -1.0, 0.0, 0.0]))


def test_tensor_product_marginals_roundtrip():
    rng = np.random.default_rng(3)
    for _ in range(10):
        a = rand_density(rng, 2)
        b = rand_density(rng, 3)
        prod = tensor_product(a, b)
        assert np.max(np.abs(prod.mat - np.kron(a.mat, b.mat))) < 1e-15
        state = BipartiteState(2, 3, prod.mat)
        assert np.max(np.abs(state.rho_sys.mat - a.mat)) < 1e-14
        assert np.max(np.abs(state.rho_env.mat - b.mat)) < 1e-14


def test_eig_hermitian_reconstructs():
    rng = np.random.default_rng(4)
    for _ in range(10):
        h = rand_hermitian(rng, 5)
        w, v = eig_hermitian(h)
        rebuilt = (v.mat * w) @ v.mat.conj().T
        assert np.max(np.abs(rebuilt - h.mat)) < 1e-13
        assert np.all(np.diff(w) >= 0)


def test_matrix_function_matches_expm():
    rng = np.random.default_rng(5)
    for _ in range(10):
        h = rand_hermitian(rng, 4)
        ours = matrix_function(h, np.exp)
        oracle = sla.expm(h.mat)
        assert np.max(np.abs(ours.mat - oracle)) < 1e-12


def test_trace_distance_fixed_oracle():
    # Oracle: half the sum of |eigenvalues| of the difference, by hand.
    rho = np.array([[0.7, 0.2 - 0.1j], [0.2 + 0.1j, 0.3]])
    sig = np.array([[0.5, 0.05j], [-0.05j, 0.5]])
    t = trace_distance(DensityMatrix(rho), DensityMatrix(sig))
    assert abs(t - 0.32015621187164245) < 1e-14


def test_trace_distance_properties():
    rng = np.random.default_rng(6)
    for _ in range(30):
        a = rand_density(rng, 4)
        b = rand_density(rng, 4)
        t = trace_distance(a, b)
        oracle = 0.5 * np.sum(np.abs(np.linalg.eigvalsh(a.mat - b.mat)))
        assert abs(t - oracle) < 1e-13
        assert 0.0 <= t <= 1.0
        assert trace_distance(a, a) < 1e-15
    # orthogonal pure states are perfectly distinguishable
    up = DensityMatrix(np.diag([1.0, 0.0]))
    down = DensityMatrix(np.diag([0.0, 1.0]))
    assert abs(trace_distance(up, down) - 1.0) < 1e-15


def test_unitary_step_matches_expm_propagator():
    rng = np.random.default_rng(7)
    for _ in range(10):
        h = rand_hermitian(rng, 4)
        dt = 0.37
        u = unitary_step(h, dt)
        oracle = sla.expm(-1j * h.mat * dt)
        assert isinstance(u, UnitaryMatrix)
        assert np.max(np.abs(u.mat - oracle)) < 1e-12


def test_rand_unitary_is_unitary():
    rng = np.random.default_rng(8)
    for dim in (2, 3, 6):
        u = rand_unitary(rng, dim)
        err = np.max(np.abs(u.mat @ u.mat.conj().T - np.eye(dim)))
        assert err < 1e-13


def test_rand_density_is_valid_state():
    rng = np.random.default_rng(9)
    for dim in (2, 4, 6):
        rho = rand_density(rng, dim)
        ev = np.linalg.eigvalsh(rho.mat)
        assert abs(np.sum(ev) - 1.0) < 1e-13
        assert ev[0] > -1e-14
    low = rand_density(rng, 4, rank=2)
    ev = np.sort(np.linalg.eigvalsh(low.mat))
    assert ev[1] < 1e-13 and ev[2] > 1e-6
