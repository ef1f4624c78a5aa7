import math

import numpy as np
import pytest

from afcsim.feedforward import (
    FeedforwardState,
    NumeratorEvaluator,
    ResponseBlocks,
    ResponseSmoother,
    build_response_blocks,
    evaluate_numerator,
)
from afcsim.regressors import HarmonicSet, regressor_table, rro_regressor


def raw_smoother(floor=1e-4):
    return ResponseSmoother(beta=0.0, floor=floor)


class TestControl:
    def test_zero_coefficients(self):
        st = FeedforwardState(4, alpha=0.1)
        assert st.control(np.ones(4)) == 0.0

    def test_single_harmonic_cosine(self):
        h = HarmonicSet(120.0, 420, (1,))
        st = FeedforwardState(2, alpha=0.1)
        st.coeffs[:] = [1.0, 0.0]
        for k in (0, 5, 100):
            assert st.control(rro_regressor(h, k)) == pytest.approx(
                math.cos(2 * math.pi * k / 420)
            )

    def test_matches_inner_product_oracle(self):
        rng = np.random.default_rng(8)
        st = FeedforwardState(10, alpha=0.1)
        st.coeffs[:] = rng.standard_normal(10)
        phi = rng.standard_normal(10)
        oracle = sum(float(a) * float(b) for a, b in zip(st.coeffs, phi))
        assert st.control(phi) == pytest.approx(oracle, rel=1e-12)


class TestResponseBlocks:
    def test_unit_delay_block(self):
        # numerator q^-1 at frequency w: magnitude 1, phase -w
        h = HarmonicSet(120.0, 420, (10,))
        omega = h.omegas[0]
        blocks = build_response_blocks(np.array([1.0]), h, raw_smoother())
        expected = np.array(
            [[math.cos(omega), -math.sin(omega)], [math.sin(omega), math.cos(omega)]]
        )
        assert np.allclose(blocks.block(0), expected, atol=1e-12)
        assert not blocks.frozen[0]

    def test_zero_numerator_freezes_everything(self):
        h = HarmonicSet(120.0, 420, (1, 2, 3))
        blocks = build_response_blocks(np.zeros(2), h, raw_smoother())
        assert blocks.frozen.all()
        with pytest.raises(ValueError):
            blocks.apply_inverse(np.ones(6))

    def test_near_dc_block_is_scaled_identity(self):
        h = HarmonicSet(120.0, 4_000_000, (1,))  # omega ~ 1.6e-6
        blocks = build_response_blocks(np.array([0.5, 0.25]), h, raw_smoother())
        assert np.allclose(blocks.block(0), 0.75 * np.eye(2), atol=1e-5)

    def test_block_times_inverse_is_identity(self):
        rng = np.random.default_rng(4)
        mags = rng.uniform(0.1, 5.0, size=6)
        phases = rng.uniform(-math.pi, math.pi, size=6)
        blocks = ResponseBlocks(mags, phases, np.zeros(6, dtype=bool))
        for i in range(6):
            prod = blocks.block(i) @ blocks.inverse_block(i)
            assert np.allclose(prod, np.eye(2), atol=1e-12)

    def test_determinant_is_magnitude_squared(self):
        blocks = ResponseBlocks([2.0], [0.7], [False])
        assert np.linalg.det(blocks.block(0)) == pytest.approx(4.0)

    def test_apply_and_transpose_match_dense_matrix(self):
        rng = np.random.default_rng(12)
        blocks = ResponseBlocks(
            rng.uniform(0.5, 2, 4), rng.uniform(-3, 3, 4), np.zeros(4, bool)
        )
        v = rng.standard_normal(8)
        dense = blocks.as_matrix()
        assert np.allclose(blocks.apply(v), dense @ v, atol=1e-12)
        assert np.allclose(blocks.apply_transpose(v), dense.T @ v, atol=1e-12)
        assert np.allclose(
            blocks.apply_inverse(v), np.linalg.solve(dense, v), atol=1e-12
        )


class TestSteadyStateEquivalence:
    def test_filtered_regressor_equals_transposed_blocks(self):
        # the identity tying both update laws to one geometry
        rng = np.random.default_rng(31)
        for trial in range(10):
            n_b = int(rng.integers(1, 6))
            theta_b = rng.uniform(-1, 1, size=n_b)
            indices = tuple(
                sorted(rng.choice(np.arange(1, 200), size=10, replace=False))
            )
            h = HarmonicSet(120.0, 420, indices)
            blocks = build_response_blocks(theta_b, h, raw_smoother(floor=1e-12))
            state = FeedforwardState(h.dimension, alpha=0.0, n_taps=n_b)
            table = regressor_table(h)
            for k in range(n_b + 50):
                phi_r = table[k % 420]
                filtered = state.filter_regressor(theta_b, phi_r)
                if k >= n_b:
                    expected = blocks.apply_transpose(phi_r)
                    assert np.allclose(filtered, expected, atol=1e-9)


class TestFilterRegressor:
    def test_zero_numerator_gives_zero(self):
        h = HarmonicSet(120.0, 420, (1, 2))
        state = FeedforwardState(4, alpha=0.0, n_taps=3)
        for k in range(5):
            out = state.filter_regressor(np.zeros(3), rro_regressor(h, k))
            assert np.array_equal(out, np.zeros(4))

    def test_unit_delay_returns_previous_regressor(self):
        h = HarmonicSet(120.0, 420, (1, 5))
        state = FeedforwardState(4, alpha=0.0, n_taps=1)
        prev = np.zeros(4)
        for k in range(6):
            phi_r = rro_regressor(h, k)
            out = state.filter_regressor(np.array([1.0]), phi_r)
            assert np.array_equal(out, prev)
            prev = phi_r


class TestUpdateBasic:
    def test_zero_residual_leaves_coefficients(self):
        blocks = ResponseBlocks([1.0], [0.0], [False])
        st = FeedforwardState(2, alpha=0.5)
        st.coeffs[:] = [1.0, -2.0]
        st.update_basic(blocks, np.zeros(2))
        assert np.array_equal(st.coeffs, [1.0, -2.0])

    def test_identity_block_decrement(self):
        blocks = ResponseBlocks([1.0], [0.0], [False])
        st = FeedforwardState(2, alpha=0.1)
        st.update_basic(blocks, np.array([1.0, 0.0]))
        assert np.allclose(st.coeffs, [-0.1, 0.0], atol=1e-15)

    def test_quarter_turn_block_decrement(self):
        # numerator q^-1 at omega = pi/2: psi = -pi/2, m = 1;
        # inverse applied to [1, 0] gives [cos psi, sin psi] = [0, -1]
        h = HarmonicSet(120.0, 4, (1,))
        blocks = build_response_blocks(np.array([1.0]), h, raw_smoother())
        numeric = np.linalg.inv(blocks.block(0)) @ np.array([1.0, 0.0])
        assert np.allclose(numeric, [0.0, -1.0], atol=1e-12)
        st = FeedforwardState(2, alpha=1.0)
        st.update_basic(blocks, np.array([1.0, 0.0]))
        # coefficients moved by minus the decrement
        assert np.allclose(st.coeffs, -numeric, atol=1e-12)

    def test_frozen_pairs_hold_still(self):
        blocks = ResponseBlocks([1.0, 2.0], [0.0, 0.3], [True, False])
        st = FeedforwardState(4, alpha=0.5)
        st.coeffs[:] = [1.0, 1.0, 1.0, 1.0]
        st.update_basic(blocks, np.array([5.0, 5.0, 0.0, 0.0]))
        assert np.array_equal(st.coeffs[:2], [1.0, 1.0])


class TestUpdateImproved:
    def test_zero_residual_no_change(self):
        st = FeedforwardState(4, alpha=0.3)
        st.coeffs[:] = [1, 2, 3, 4]
        st.update_improved(np.ones(4), 0.0)
        assert np.array_equal(st.coeffs, [1, 2, 3, 4])

    def test_zero_filtered_regressor_no_change(self):
        st = FeedforwardState(4, alpha=0.3)
        st.coeffs[:] = [1, 2, 3, 4]
        st.update_improved(np.zeros(4), 2.5)
        assert np.array_equal(st.coeffs, [1, 2, 3, 4])

    def test_rank_one_step(self):
        st = FeedforwardState(2, alpha=0.5)
        st.update_improved(np.array([1.0, 2.0]), 3.0)
        assert np.allclose(st.coeffs, [-1.5, -3.0])

    def test_revolution_average_equals_half_transposed_blocks(self):
        # mean over one revolution of filtered * (theta_m . phi_r) equals
        # (1/2) * D.T @ theta_m; oracle is the explicit sample sum
        h = HarmonicSet(120.0, 420, (7,))
        theta_b = np.array([0.8, 0.3])
        blocks = build_response_blocks(theta_b, h, raw_smoother())
        theta_m = np.array([0.5, -1.2])
        state = FeedforwardState(2, alpha=0.0, n_taps=2)
        table = regressor_table(h)
        # warm-up fills the taps; then accumulate one full revolution
        state.filter_regressor(theta_b, table[0])
        state.filter_regressor(theta_b, table[1])
        acc = np.zeros(2)
        for k in range(2, 2 + 420):
            phi_r = table[k % 420]
            filtered = state.filter_regressor(theta_b, phi_r)
            acc += filtered * float(theta_m @ phi_r)
        avg = acc / 420
        assert np.allclose(avg, blocks.apply_transpose(theta_m) / 2, atol=1e-6)


class TestResponseSmoother:
    def test_below_floor_freezes_and_preserves_state(self):
        sm = ResponseSmoother(beta=0.5, floor=0.1)
        b1 = sm.update(np.array([1.0]), np.array([0.2]))
        assert not b1.frozen[0]
        b2 = sm.update(np.array([0.01]), np.array([-3.0]))
        assert b2.frozen[0]
        assert b2.mags[0] == pytest.approx(1.0)  # untouched by the dip
        assert b2.phases[0] == pytest.approx(0.2)

    def test_first_live_sample_seeds_directly(self):
        sm = ResponseSmoother(beta=0.9, floor=0.1)
        blocks = sm.update(np.array([2.0]), np.array([1.0]))
        assert blocks.mags[0] == pytest.approx(2.0)
        assert blocks.phases[0] == pytest.approx(1.0)

    def test_ema_tracks(self):
        sm = ResponseSmoother(beta=0.5, floor=0.01)
        sm.update(np.array([1.0]), np.array([0.0]))
        blocks = sm.update(np.array([2.0]), np.array([0.4]))
        assert blocks.mags[0] == pytest.approx(1.5)
        assert blocks.phases[0] == pytest.approx(0.2)

    def test_phase_unwrap_across_branch_cut(self):
        sm = ResponseSmoother(beta=0.5, floor=0.01)
        sm.update(np.array([1.0]), np.array([math.pi - 0.1]))
        blocks = sm.update(np.array([1.0]), np.array([-math.pi + 0.1]))
        # raw jumped by 2*pi - 0.2; the unwrapped move is +0.2, halved by EMA
        assert blocks.phases[0] == pytest.approx(math.pi, abs=1e-12)

    def test_counts_frozen_samples(self):
        sm = ResponseSmoother(beta=0.0, floor=0.5)
        sm.update(np.array([0.1, 1.0]), np.zeros(2))
        sm.update(np.array([0.1, 1.0]), np.zeros(2))
        assert sm.freeze_events == 2

    def test_parameter_validation(self):
        with pytest.raises(ValueError):
            ResponseSmoother(beta=1.0)
        with pytest.raises(ValueError):
            ResponseSmoother(floor=0.0)


class TestEvaluateNumerator:
    def test_matches_direct_sum(self):
        rng = np.random.default_rng(2)
        theta_b = rng.standard_normal(4)
        omegas = np.array([0.3, 1.1, 2.9])
        got = evaluate_numerator(theta_b, omegas)
        for i, w in enumerate(omegas):
            direct = sum(b * np.exp(-1j * w * j) for j, b in enumerate(theta_b, 1))
            assert got[i] == pytest.approx(direct, rel=1e-12)

    def test_evaluator_matches_function(self):
        rng = np.random.default_rng(9)
        theta_b = rng.standard_normal(3)
        omegas = np.array([0.5, 2.0])
        ev = NumeratorEvaluator(omegas, 3)
        assert np.allclose(ev.response(theta_b), evaluate_numerator(theta_b, omegas))
