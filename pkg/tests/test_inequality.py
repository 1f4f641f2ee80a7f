import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from matlea import inequality as ineq
from matlea.hermitian import random_hermitian
from matlea.matrix_io import matrix_from_json, matrix_to_json


def pair(d, seed, eps=1.0):
    S, G = ineq.sample_pairs(np.random.default_rng(seed), 1, d, eps)
    return S[0], G[0]


def sides_by_expm(c, S, G, eps):
    """Both sides for Phi = exp(c x), using plain matrix products (no shared eigenbasis)."""
    d = S.shape[0]
    I = np.eye(d)
    lhs = np.trace(scipy.linalg.expm(c * (S + G))).real
    rhs = np.trace((eps * I + G) / (2 * eps) @ scipy.linalg.expm(c * (S + eps * I))
                   + (eps * I - G) / (2 * eps) @ scipy.linalg.expm(c * (S - eps * I))).real
    return lhs, rhs


class TestJensenGap:
    def test_counterexample(self):
        s = ineq.appendix_a_instance()
        assert float(s.lhs) == pytest.approx(2 * math.sqrt(2), abs=1e-12)
        assert float(s.rhs) == pytest.approx(2.0, abs=1e-12)
        gap = ineq.jensen_gap(ineq.absolute(), ineq.APPENDIX_A["S"], ineq.APPENDIX_A["G"], 1.0)
        assert gap == pytest.approx(2 - 2 * math.sqrt(2), abs=1e-12)

    @pytest.mark.parametrize("c", [-0.5, 0.5, 1.3])
    def test_matches_matrix_product_oracle(self, c):
        for seed in range(10):
            S, G = pair(4, seed, eps=0.7)
            lhs, rhs = sides_by_expm(c, S, G, 0.7)
            s = ineq.jensen_sides(ineq.exponential(c), S, G, 0.7)
            assert float(s.lhs) == pytest.approx(lhs, rel=1e-11)
            assert float(s.rhs) == pytest.approx(rhs, rel=1e-11)

    def test_affine_is_equality(self):
        S, G = ineq.sample_pairs(np.random.default_rng(0), 500, 5, 1.3)
        gaps = ineq.jensen_gap(ineq.affine(-2.5, 0.7), S, G, 1.3)
        assert np.max(np.abs(gaps)) <= 1e-10

    @pytest.mark.parametrize("phi", [ineq.absolute(), ineq.monomial(6), ineq.exponential(2.0), ineq.monomial(3)])
    def test_commuting_convex(self, phi):
        r = np.random.default_rng(1)
        for _ in range(200):
            d = int(r.integers(1, 7))
            V = np.linalg.qr(r.standard_normal((d, d)) + 1j * r.standard_normal((d, d)))[0]
            s, g = r.normal(size=d) * 2, r.uniform(-1, 1, d)
            S = V @ np.diag(s) @ V.conj().T
            G = V @ np.diag(g) @ V.conj().T
            if phi.kind == "monomial" and phi.params[0] % 2:  # x^3 is convex only on x >= 0
                S = S + 10 * np.eye(d)
            assert ineq.jensen_gap(phi, S, G, 1.0) >= -1e-10 * max(1.0, abs(ineq.jensen_sides(phi, S, G, 1.0).lhs))

    def test_unitary_invariance(self):
        r = np.random.default_rng(2)
        for phi in (ineq.monomial(4), ineq.exp_square_fn(3, 1.0, 4), ineq.absolute()):
            S, G = pair(4, 3)
            U = np.linalg.qr(r.standard_normal((4, 4)) + 1j * r.standard_normal((4, 4)))[0]
            a = ineq.jensen_gap(phi, S, G, 1.0)
            b = ineq.jensen_gap(phi, U @ S @ U.conj().T, U @ G @ U.conj().T, 1.0)
            assert b == pytest.approx(a, abs=1e-10 * max(1.0, abs(a)))

    @settings(max_examples=40, deadline=None)
    @given(st.integers(1, 3), st.floats(0.1, 5.0), st.integers(0, 2**32 - 1))
    def test_monomial_scaling(self, k, c, seed):
        S, G = pair(3, seed)
        phi = ineq.monomial(2 * k)
        a = ineq.jensen_gap(phi, S, G, 1.0)
        b = ineq.jensen_gap(phi, c * S, c * G, c)
        scale = c ** (2 * k) * max(1.0, float(ineq.jensen_sides(phi, S, G, 1.0).scale))
        assert b == pytest.approx(c ** (2 * k) * a, abs=1e-10 * scale)

    def test_jacobi_route_agrees(self):
        for seed in range(5):
            S, G = pair(5, seed)
            phi = ineq.erfi_fn(2, 1.0, 5)
            a = ineq.jensen_sides(phi, S, G, 1.0)
            b = ineq.jensen_sides(phi, S, G, 1.0, method="jacobi")
            assert float(b.lhs) == pytest.approx(float(a.lhs), rel=1e-11)
            assert float(b.rhs) == pytest.approx(float(a.rhs), rel=1e-11)

    def test_norm_precondition(self):
        with pytest.raises(ValueError):
            ineq.jensen_gap(ineq.absolute(), np.eye(2), np.diag([1.5, 0.0]), 1.0)

    def test_batched_matches_single(self):
        S, G = ineq.sample_pairs(np.random.default_rng(4), 7, 3, 1.0)
        batched = ineq.jensen_gap(ineq.monomial(4), S, G, 1.0)
        single = [ineq.jensen_gap(ineq.monomial(4), S[i], G[i], 1.0) for i in range(7)]
        assert np.allclose(batched, single, rtol=1e-13, atol=1e-13)

    def test_spectral_function_values(self):
        x = np.array([-2.0, 0.5])
        assert np.allclose(ineq.affine(2, 1)(x), [-3, 2])
        assert np.allclose(ineq.monomial(3)(x), [-8, 0.125])
        assert np.allclose(ineq.exponential(-1)(x), np.exp([2, -0.5]))
        with pytest.raises(ValueError):
            ineq.monomial(-1)


class TestSampling:
    def test_g_norm_range(self):
        S, G = ineq.sample_pairs(np.random.default_rng(5), 2000, 4, 2.0)
        n = np.max(np.abs(np.linalg.eigvalsh(G)), axis=1)
        assert n.max() <= 2.0 * (1 + 1e-12) and n.min() > 0
        assert np.allclose(S, np.swapaxes(S, 1, 2).conj())

    def test_s_scale(self):
        S, _ = ineq.sample_pairs(np.random.default_rng(6), 50, 4, 1.0, s_scale=4.0)
        assert np.allclose(np.max(np.abs(np.linalg.eigvalsh(S)), axis=1), 4.0)


class TestSuites:
    @pytest.mark.parametrize("phi", [ineq.exponential(0.5), ineq.exponential(-1.0), ineq.monomial(2), ineq.monomial(4),
                                     ineq.exp_square_fn(1, 1.0, 4), ineq.erfi_fn(4, 1.0, 4)])
    def test_certified_functions_hold(self, phi):
        res = ineq.random_jensen_suite(phi, 5, 2000, seed=7)
        assert res.violations == 0 and res.min_normalized_gap >= -1e-9

    def test_abs_violation_found(self):
        res = ineq.random_jensen_suite(ineq.absolute(), 4, 1000, seed=8)
        assert res.first_violation is not None and res.first_violation < 1000 and res.min_gap < 0
        again = ineq.jensen_gap(ineq.absolute(), res.argmin_S, res.argmin_G, res.eps)
        assert again == pytest.approx(res.min_gap)

    def test_argmin_serializes(self):
        res = ineq.random_jensen_suite(ineq.absolute(), 3, 200, seed=9)
        S = matrix_from_json(matrix_to_json(res.argmin_S))
        assert np.array_equal(S, res.argmin_S)

    def test_reproducible(self):
        a = ineq.random_jensen_suite(ineq.monomial(4), 4, 300, seed=10, batch=64)
        b = ineq.random_jensen_suite(ineq.monomial(4), 4, 300, seed=10, batch=64)
        assert a.min_gap == b.min_gap and np.array_equal(a.argmin_S, b.argmin_S)

    def test_dimension_limits(self):
        with pytest.raises(ValueError):
            ineq.random_jensen_suite(ineq.absolute(), 17, 10, seed=0)
        with pytest.raises(ValueError):
            ineq.random_jensen_suite(ineq.absolute(), 2, 0, seed=0)


class TestInterleaving:
    def test_gsgs(self):
        for seed in range(20):
            S, G = pair(4, seed)
            gap = ineq.interleaving_bound_gap("GSGS", S, G)
            ref = np.trace(S @ S).real - abs(np.trace(G @ S @ G @ S))
            assert gap == pytest.approx(ref) and gap >= -1e-9

    def test_all_g(self):
        S, G = pair(5, 11)
        assert ineq.interleaving_bound_gap("GGGG", S, G) == pytest.approx(5 - abs(np.trace(np.linalg.matrix_power(G, 4))))

    def test_random_words(self):
        res = ineq.interleaving_suite(2000, seed=12)
        assert res.min_normalized_gap >= -1e-9

    def test_psd_variant(self):
        r = np.random.default_rng(13)
        A = random_hermitian(3, r)
        S = A @ A
        B = random_hermitian(3, r)
        G = B @ B
        G = G / np.linalg.eigvalsh(G)[-1]
        assert ineq.interleaving_bound_gap("SGS", S, G, psd=True) >= -1e-9

    @pytest.mark.parametrize("word", ["", "SS", "GSG", "GSSX", "SG"])
    def test_malformed(self, word):
        S, G = pair(2, 0)
        with pytest.raises(ValueError):
            ineq.interleaving_bound_gap(word, S, G)

    def test_random_sequence_counts(self):
        w = ineq.random_sequence(np.random.default_rng(0), 4, 2)
        assert len(w) == 8 and w.count("G") == 4


class TestConjecture:
    def test_proved_cases(self):
        for rep in ineq.monomial_conjecture_search(2, 5000, 4, seed=14):
            assert rep.min_normalized_gap >= -1e-9 and not rep.flagged

    def test_small_search_k3_to_5(self):
        reps = ineq.monomial_conjecture_search(5, 2000, 3, seed=15, k_min=3)
        assert [r.k for r in reps] == [3, 4, 5]
        assert all(not r.flagged for r in reps)

    def test_k_max_limit(self):
        with pytest.raises(ValueError):
            ineq.monomial_conjecture_search(9, 10, 2, seed=0)
