import concurrent.futures
import math

import numpy as np
import pytest

import thetagauss as tg
from thetagauss.engine import (
    TWO_PI,
    SiegelMatrix,
    ThetaPoint,
    lattice_points,
    theta,
    theta_dB,
    theta_du,
    theta_du_many,
    truncation_radius,
)
from thetagauss.errors import NonPositiveDefinite, ToleranceUnreachable

import properties
from oracles import brute_theta

# frozen brute-force values (direct cube sums, see oracles.py)
THETA_0_1 = 1.0864348112133082  # sum_n e^{-pi n^2}
SUM_N2 = 0.08645573527585405    # sum_n n^2 e^{-pi n^2}


def test_frozen_oracle_values_still_match_brute_force():
    assert brute_theta([0.0], [[1.0]]).real == pytest.approx(THETA_0_1, abs=1e-15)
    n = np.arange(-12, 13)
    assert (n**2 * np.exp(-np.pi * n**2)).sum() == pytest.approx(SUM_N2, abs=1e-15)


class TestSiegelMatrix:
    def test_accepts_valid_complex_matrix(self):
        B = SiegelMatrix([[1 + 1j, 0.3], [0.3, 1.2 - 0.5j]])
        assert B.g == 2
        assert B.lambda_min > 0

    def test_rejects_nonsymmetric_exactly(self):
        with pytest.raises(ValueError, match="symmetric"):
            SiegelMatrix([[1.0, 0.3], [0.3 + 1e-14, 1.0]])

    def test_rejects_non_positive_definite(self):
        with pytest.raises(NonPositiveDefinite):
            SiegelMatrix([[1.0, 2.0], [2.0, 1.0]])

    def test_rejects_degenerate(self):
        with pytest.raises(NonPositiveDefinite):
            SiegelMatrix([[1e-13]])

    def test_theta_point_dimension_check(self):
        with pytest.raises(ValueError):
            ThetaPoint([0.0, 0.0], [[1.0]])


class TestTruncationRadius:
    def test_g1_eps12_radius_at_most_6(self):
        budget = truncation_radius([[1.0]], [0.0], None, 1e-12)
        assert 1 <= budget.radius <= 6
        # the certificate is honest: the explicit dropped tail is below eps
        R = int(budget.radius)
        tail = 2 * sum(math.exp(-math.pi * n * n) for n in range(R + 1, R + 60))
        assert tail < 1e-12

    def test_g1_loose_eps_accepts_radius_1(self):
        budget = truncation_radius([[1.0]], [0.0], None, 0.5)
        assert budget.radius == 1.0
        tail = 2 * sum(math.exp(-math.pi * n * n) for n in range(2, 60))
        assert tail < 0.5

    def test_scaling_B_by_4_halves_the_radius(self):
        for g, B in ((1, np.eye(1) * 0.25), (2, np.array([[0.3, 0.05], [0.05, 0.4]]))):
            r1 = truncation_radius(B, np.zeros(g), None, 1e-12).radius
            r4 = truncation_radius(4.0 * B, np.zeros(g), None, 1e-12).radius
            assert r4 <= math.ceil(r1 / 2) + 1

    def test_derivative_order_grows_radius(self):
        r0 = truncation_radius([[1.0]], [0.0], None, 1e-12).radius
        r4 = truncation_radius([[1.0]], [0.0], (4,), 1e-12).radius
        assert r4 >= r0

    def test_eps_floor_refused(self):
        with pytest.raises(ToleranceUnreachable):
            truncation_radius([[1.0]], [0.0], None, 1e-15)

    def test_hard_cap(self, monkeypatch):
        monkeypatch.setenv("THETA_GAUSS_MAX_RADIUS", "3")
        with pytest.raises(ToleranceUnreachable):
            truncation_radius([[0.01]], [0.0], None, 1e-12)
        monkeypatch.delenv("THETA_GAUSS_MAX_RADIUS")
        budget = truncation_radius([[0.01]], [0.0], None, 1e-12)
        assert budget.radius > 3


class TestTheta:
    def test_g1_standard_value(self):
        val = theta(ThetaPoint([0.0], [[1.0]]), 1e-12)
        assert val == pytest.approx(THETA_0_1, abs=1e-12)
        assert val.imag == pytest.approx(0.0, abs=1e-13)

    def test_divisor_point_vanishes(self):
        for B in (1.0, 0.8, 1.7):
            val = theta(ThetaPoint([0.5j + B / 2], [[B]]), 1e-12)
            assert abs(val) < 1e-12

    def test_block_diagonal_factorizes(self):
        B1, B2 = 0.9, 1.4
        u1, u2 = 0.2 + 0.1j, -0.3
        prod = theta(ThetaPoint([u1], [[B1]]), 1e-13) * theta(
            ThetaPoint([u2], [[B2]]), 1e-13
        )
        joint = theta(
            ThetaPoint([u1, u2], [[B1, 0.0], [0.0, B2]]), 1e-13
        )
        assert abs(joint - prod) < 1e-12

    def test_matches_brute_force_complex(self, rng):
        from oracles import random_complex_params

        for _ in range(5):
            g = int(rng.integers(1, 3))
            u, B = random_complex_params(rng, g)
            assert theta(ThetaPoint(u, B), 1e-12) == pytest.approx(
                complex(brute_theta(u, B, K=12)), abs=1e-11
            )

    def test_bit_reproducible(self):
        p = ThetaPoint([0.21 + 0.13j, -0.08], [[1.1, 0.3], [0.3, 0.9 + 0.2j]])
        assert theta(p, 1e-12) == theta(p, 1e-12)


class TestThetaDu:
    def test_order_zero_is_theta(self):
        p = ThetaPoint([0.2 + 0.1j], [[1.1]])
        assert theta_du((0,), p, 1e-12) == theta(p, 1e-12)

    def test_odd_derivative_vanishes_at_origin(self):
        assert abs(theta_du((1,), ThetaPoint([0.0], [[1.0]]), 1e-12)) < 1e-12

    def test_second_derivative_value(self):
        val = theta_du((2,), ThetaPoint([0.0], [[1.0]]), 1e-12)
        assert val == pytest.approx(TWO_PI**2 * SUM_N2, abs=1e-10)
        assert abs(val) / TWO_PI**2 == pytest.approx(0.0864557, abs=1e-6)

    def test_batch_consistent_with_single(self):
        p = ThetaPoint([0.15, -0.2], [[1.0, 0.25], [0.25, 0.8]])
        table = theta_du_many([(0, 0), (1, 0), (1, 1), (2, 2)], p, 1e-12)
        for a, v in table.items():
            assert v == pytest.approx(theta_du(a, p, 1e-12), rel=1e-12, abs=1e-13)


class TestThetaDB:
    def test_heat_equation_diagonal_value(self):
        val = theta_dB(0, 0, ThetaPoint([0.0], [[1.0]]), 1e-12)
        assert val == pytest.approx(-np.pi * SUM_N2, abs=1e-10)
        assert val.real == pytest.approx(-np.pi * 0.0864557, abs=1e-6)

    def test_index_validation(self):
        p = ThetaPoint([0.0, 0.0], [[1.0, 0.0], [0.0, 1.0]])
        with pytest.raises(ValueError):
            theta_dB(1, 0, p, 1e-12)
        with pytest.raises(ValueError):
            theta_dB(0, 2, p, 1e-12)

    def test_cross_block_product_rule(self):
        # block-diagonal B: the B11-derivative factorizes through theta2
        B1, B2, u1, u2 = 1.2, 0.9, 0.1, -0.25
        p = ThetaPoint([u1, u2], [[B1, 0.0], [0.0, B2]])
        lhs = theta_dB(0, 0, p, 1e-13)
        rhs = theta_dB(0, 0, ThetaPoint([u1], [[B1]]), 1e-13) * theta(
            ThetaPoint([u2], [[B2]]), 1e-13
        )
        assert lhs == pytest.approx(rhs, rel=1e-10)

    def test_finite_difference_agreement(self, rng):
        assert properties.run_heat_equation_fd(rng, 8) < 1e-6


class TestInvariants:
    def test_quasiperiodicity(self, rng):
        assert properties.run_quasiperiodicity(rng, 12) < 1e-11

    def test_parity(self, rng):
        assert properties.run_parity(rng, 12) < 2e-12

    def test_factorization(self, rng):
        assert properties.run_factorization(rng, 8) < 1e-11

    def test_jacobi_identity(self, rng):
        assert properties.run_jacobi_identity(rng, 10) < 1e-9

    def test_truncation_monotonicity(self, rng):
        assert properties.run_truncation_monotonicity(rng, 6) < 1e-12


class TestLattice:
    def test_shell_order_small_case(self):
        pts = lattice_points(2, 1.5)
        expected = [
            (0, 0),
            (-1, 0),
            (0, -1),
            (0, 1),
            (1, 0),
            (-1, -1),
            (-1, 1),
            (1, -1),
            (1, 1),
        ]
        assert [tuple(map(int, p)) for p in pts] == expected

    def test_euclidean_cutoff(self):
        pts = lattice_points(2, 2.0)
        norms = (pts**2).sum(axis=1)
        assert norms.max() == 4  # (2,0) in, (2,1) out
        assert sorted(norms)[:1] == [0]

    def test_returned_array_is_readonly(self):
        pts = lattice_points(1, 3.0)
        with pytest.raises(ValueError):
            pts[0, 0] = 99

    def test_g3_matches_direct_enumeration(self):
        pts = lattice_points(3, 2.2)
        direct = {
            (i, j, k)
            for i in range(-3, 4)
            for j in range(-3, 4)
            for k in range(-3, 4)
            if i * i + j * j + k * k <= 2.2 * 2.2
        }
        assert {tuple(p) for p in pts} == direct


def test_thread_safety_smoke():
    p = ThetaPoint([0.11 + 0.21j, -0.05], [[1.0, 0.2], [0.2, 1.3]])
    expected = theta(p, 1e-12)
    with concurrent.futures.ThreadPoolExecutor(max_workers=8) as pool:
        results = list(pool.map(lambda _: theta(p, 1e-12), range(32)))
    assert all(r == expected for r in results)
