from __future__ import annotations

import numpy as np
import numpy.testing as nptest
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from splinext.duals import (
    compact_dual,
    compact_dual_min_support,
    continuous_dual_coeffs,
    continuous_gram_column,
    discrete_dual_coeffs,
    discrete_pairing,
    periodize_sequence,
    primal_stencil,
    truncate_dual,
)
from splinext.errors import NormCapUnreachable, SingularCirculant
from splinext.kernel import PeriodizedBasis, bspline, sample_spline


def _gauss_grid(N, nodes=8):
    """Composite Gauss nodes/weights with one panel per knot interval of [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(nodes)
    # degree p splines have knots at (j + (p+1)/2)/N; half-cells cover both parities
    a = np.arange(2 * N) / (2 * N)
    h = 1 / (4 * N)
    t = (a[:, None] + h + h * x[None, :]).ravel()
    wt = np.tile(h * w, 2 * N)
    return t, wt


def _dense_l2_gram(p, N):
    t, wt = _gauss_grid(N)
    basis = PeriodizedBasis(p, N)
    Phi = np.stack([basis(k, t) for k in range(N)])
    return (Phi * wt) @ Phi.T, Phi, wt


def _dense_discrete_gram(p, q, N):
    """G[k, l] = sum_j b_q(j - qk) b_q(j - ql) over the periodic qN grid."""
    b = sample_spline(p, q)
    L = q * N
    j = np.arange(L)
    B = np.stack([b(((j - q * k + L // 2) % L) - L // 2) for k in range(N)])
    return B @ B.T


class TestPeriodize:
    def test_delta(self):
        nptest.assert_array_equal(periodize_sequence([1.0], 5), np.eye(5)[0])

    def test_folding_matches_lattice_sum(self):
        seq = np.arange(1.0, 8.0)  # positions -3..3
        out = periodize_sequence(seq, 4)
        direct = np.zeros(4)
        for pos, v in zip(range(-3, 4), seq):
            direct[pos % 4] += v
        nptest.assert_array_equal(out, direct)

    def test_plain_embedding(self):
        out = periodize_sequence([1.0, 2.0, 3.0], 8)
        nptest.assert_array_equal(out, [2, 3, 0, 0, 0, 0, 0, 1])


class TestContinuousDual:
    @pytest.mark.parametrize("N", [4, 9, 32])
    def test_degree_zero_is_delta(self, N):
        nptest.assert_allclose(continuous_dual_coeffs(0, N).coeffs, np.eye(N)[0], atol=1e-14)

    def test_linear_decay_ratio(self):
        c = continuous_dual_coeffs(1, 32).coeffs
        ratios = np.abs(c[4:10] / c[3:9])
        nptest.assert_allclose(ratios, 2 - np.sqrt(3), atol=1e-2)

    @pytest.mark.parametrize("p, N", [(1, 16), (3, 16), (2, 12)])
    def test_gram_matches_quadrature(self, p, N):
        G, _, _ = _dense_l2_gram(p, N)
        nptest.assert_allclose(G[:, 0], continuous_gram_column(p, N), atol=1e-12)
        c = continuous_dual_coeffs(p, N).coeffs
        nptest.assert_allclose(c, np.linalg.solve(G, np.eye(N)[0]), atol=1e-10)

    def test_cubic_biorthonormal_by_quadrature(self):
        N = 64
        _, Phi, wt = _dense_l2_gram(3, N)
        c = continuous_dual_coeffs(3, N).coeffs
        dual0 = c @ Phi
        pairing = (Phi * wt) @ dual0
        nptest.assert_allclose(pairing, np.eye(N)[0], atol=1e-10)

    @pytest.mark.parametrize("p", [1, 2, 3, 4])
    def test_symmetric_and_decaying(self, p):
        N = 64
        c = continuous_dual_coeffs(p, N).coeffs
        nptest.assert_allclose(c[1:], c[1:][::-1], atol=1e-14)
        mag = np.abs(c[2 : N // 4 + 1])
        assert np.all(np.diff(mag) < 0)


class TestDiscreteDual:
    @pytest.mark.parametrize("q", [3, 5])
    def test_degree_zero_odd_q(self, q):
        for N in (16, 31):
            c = discrete_dual_coeffs(0, q, N).coeffs
            nptest.assert_allclose(c, np.eye(N)[0] / q, atol=1e-15)

    @pytest.mark.parametrize("N", [16, 17, 32])
    def test_degree_zero_q2_is_singular(self, N):
        with pytest.raises(SingularCirculant):
            discrete_dual_coeffs(0, 2, N)

    def test_degree_zero_q4_one_sided_geometric(self):
        N = 32
        c = discrete_dual_coeffs(0, 4, N).coeffs
        side = c[[0, N - 1, N - 2, N - 3]]  # k = 0, -1, -2, -3
        nptest.assert_allclose(np.abs(side), [1 / 3, 1 / 9, 1 / 27, 1 / 81], rtol=1e-10)
        nptest.assert_allclose(side[1:] / side[:-1], -1 / 3, rtol=1e-10)
        nptest.assert_allclose(c[1:6], 0.0, atol=1e-12)

    def test_cubic_exponential_decay(self):
        N = 64
        c = discrete_dual_coeffs(3, 2, N).coeffs
        k = np.arange(2, 13)
        slope = np.polyfit(k, np.log(np.abs(c[k])), 1)[0]
        assert slope < 0
        assert abs(c[N // 2]) < 1e-6 * abs(c[0])

    @pytest.mark.parametrize("p, q, N", [(1, 2, 16), (3, 2, 20), (2, 3, 12), (4, 3, 16)])
    def test_matches_dense_gram_inversion(self, p, q, N):
        G = _dense_discrete_gram(p, q, N)
        expected = np.linalg.solve(G, np.eye(N)[0])
        nptest.assert_allclose(discrete_dual_coeffs(p, q, N).coeffs, expected, atol=1e-10)

    @pytest.mark.parametrize("p", [1, 2, 3, 4])
    @pytest.mark.parametrize("q", [2, 3])
    def test_pairing_is_delta(self, p, q):
        N = 32
        d = discrete_dual_coeffs(p, q, N)
        P = discrete_pairing(primal_stencil(p, q, N), d.grid_stencil())
        nptest.assert_allclose(P, np.eye(N)[0], atol=1e-10)
        nptest.assert_allclose(d.coeffs[1:], d.coeffs[1:][::-1], atol=1e-14)


class TestTruncation:
    def test_large_threshold_keeps_centre(self):
        base = discrete_dual_coeffs(3, 2, 32)
        t = truncate_dual(base, 10 * np.abs(base.coeffs).max())
        assert t.band_radius == 0
        assert np.count_nonzero(t.coeffs) == 1

    def test_tiny_threshold_keeps_everything(self):
        base = discrete_dual_coeffs(1, 2, 16)
        t = truncate_dual(base, 1e-16)
        nptest.assert_array_equal(t.coeffs, base.coeffs)

    def test_zero_threshold_rejected(self):
        with pytest.raises(ValueError):
            truncate_dual(discrete_dual_coeffs(1, 2, 16), 0.0)

    def test_band_radius_from_dense_scan(self):
        N, eps = 256, 1e-8
        c = np.linalg.solve(_dense_discrete_gram(3, 2, N), np.eye(N)[0])
        first_below = int(np.argmax(np.abs(c[: N // 2]) < eps))
        t = truncate_dual(discrete_dual_coeffs(3, 2, N), eps)
        assert t.band_radius == first_below - 1
        assert np.all(np.abs(c[first_below : N - first_below + 1]) < eps)

    @pytest.mark.parametrize("p", [1, 2, 3, 4])
    @pytest.mark.parametrize("q", [2, 3])
    @pytest.mark.parametrize("eps", [1e-4, 1e-8])
    def test_pairing_within_ten_eps(self, p, q, eps):
        N = 64
        t = truncate_dual(discrete_dual_coeffs(p, q, N), eps)
        P = discrete_pairing(primal_stencil(p, q, N), t.grid_stencil())
        assert np.max(np.abs(P - np.eye(N)[0])) <= 10 * eps

    def test_grid_radius_bounds_stencil(self):
        t = truncate_dual(discrete_dual_coeffs(3, 2, 128), 1e-8)
        st_ = t.grid_stencil()
        offsets = np.arange(st_.period)
        dist = np.minimum(offsets, st_.period - offsets)
        assert np.all(st_.values[dist > t.grid_radius] == 0)


def _substitution_residual(w, p, q, K):
    L = (K + sample_spline(p, q).radius) // q
    worst = 0.0
    for l in range(-L - 2, L + 3):
        s = sum(w[k + K] * bspline(p, (k - q * l) / q) for k in range(-K, K + 1))
        worst = max(worst, abs(s - (l == 0)))
    return worst


class TestCompactDual:
    @pytest.mark.parametrize("p, q, K", [(3, 2, 2), (1, 3, 0), (1, 2, 0), (2, 2, 1), (4, 2, 3)])
    def test_minimal_support(self, p, q, K):
        assert compact_dual_min_support(p, q) == K

    @pytest.mark.parametrize("p", [1, 2, 3, 4])
    @pytest.mark.parametrize("q", [2, 3, 4])
    def test_exact_at_minimal_support(self, p, q):
        w = compact_dual(p, q)
        assert w.residual() < 1e-10
        assert _substitution_residual(w.values, p, q, w.K) < 1e-10

    def test_cubic_K2_direct(self):
        w = compact_dual(3, 2, K=2)
        assert w.K == 2 and w.L == 2
        assert _substitution_residual(w.values, 3, 2, 2) < 1e-10
        nptest.assert_allclose(w.values, w.values[::-1], atol=1e-13)

    def test_larger_support_smaller_norm(self):
        assert compact_dual(3, 2, K=7).sup_norm() <= compact_dual(3, 2, K=2).sup_norm()

    @pytest.mark.parametrize("cap", [2.0, 1.0, 0.8])
    def test_norm_cap(self, cap):
        w = compact_dual(3, 2, norm_cap=cap)
        assert w.sup_norm() <= cap / sample_spline(3, 2).sup_norm()
        assert w.residual() < 1e-10
        assert w.K >= compact_dual_min_support(3, 2)

    def test_infinite_cap_is_minimal(self):
        assert compact_dual(3, 2, norm_cap=float("inf")).K == 2

    def test_unreachable_cap(self):
        with pytest.raises(NormCapUnreachable):
            compact_dual(3, 2, norm_cap=1e-3)

    def test_requires_oversampling(self):
        with pytest.raises(ValueError):
            compact_dual(3, 1)

    @pytest.mark.parametrize("p, q", [(3, 2), (2, 3), (1, 4)])
    def test_grid_pairing(self, p, q):
        N = 16
        w = compact_dual(p, q)
        P = discrete_pairing(primal_stencil(p, q, N), w.grid_stencil(N))
        nptest.assert_allclose(P, np.eye(N)[0], atol=1e-12)

    @given(st.integers(1, 4), st.integers(2, 4), st.integers(0, 4))
    @settings(max_examples=30, deadline=None)
    def test_any_support_above_minimum(self, p, q, extra):
        K = compact_dual_min_support(p, q) + extra
        w = compact_dual(p, q, K=K)
        assert w.values.size == 2 * K + 1
        assert w.residual() < 1e-10
