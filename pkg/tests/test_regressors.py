import numpy as np
import pytest

from afcsim.regressors import (
    HarmonicSet,
    TappedDelayLine,
    parse_index_spec,
    regressor_table,
    rro_regressor,
)


class TestParseIndexSpec:
    def test_range_string(self):
        assert parse_index_spec("1-5") == (1, 2, 3, 4, 5)

    def test_mixed_string(self):
        assert parse_index_spec("7, 1-3, 5") == (1, 2, 3, 5, 7)

    def test_iterable(self):
        assert parse_index_spec([3, 1, 2, 2]) == (1, 2, 3)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            parse_index_spec("")


class TestHarmonicSet:
    def test_dimension_is_twice_count(self):
        h = HarmonicSet(120.0, 420, "1-58")
        assert h.n_harmonics == 58
        assert h.dimension == 116

    def test_omegas(self):
        h = HarmonicSet(120.0, 420, (1, 2))
        assert np.allclose(h.omegas, [2 * np.pi / 420, 4 * np.pi / 420])

    def test_nyquist_enforced(self):
        with pytest.raises(ValueError):
            HarmonicSet(120.0, 420, (210,))
        HarmonicSet(120.0, 420, (209,))  # strictly below passes

    def test_positive_indices(self):
        with pytest.raises(ValueError):
            HarmonicSet(120.0, 420, (0, 1))

    def test_frequencies_hz(self):
        h = HarmonicSet(120.0, 420, (1, 10))
        assert np.allclose(h.frequencies_hz(), [120.0, 1200.0])


class TestRroRegressor:
    def test_at_zero_is_cos_one_sin_zero(self):
        h = HarmonicSet(120.0, 420, (1, 5, 9))
        assert np.array_equal(rro_regressor(h, 0), [1, 0, 1, 0, 1, 0])

    def test_quarter_period(self):
        h = HarmonicSet(120.0, 4, (1,))
        phi = rro_regressor(h, 1)
        assert phi[0] == pytest.approx(0.0, abs=1e-15)
        assert phi[1] == pytest.approx(1.0)

    def test_periodicity_is_bit_exact(self):
        h = HarmonicSet(120.0, 420, (1, 7, 58, 173))
        for k in (0, 3, 419, 1000):
            assert np.array_equal(rro_regressor(h, k), rro_regressor(h, k + 420))
            assert np.array_equal(rro_regressor(h, k), rro_regressor(h, k + 420 * 97))

    def test_per_harmonic_unit_norm(self):
        h = HarmonicSet(120.0, 420, (2, 31, 160))
        for k in range(0, 2000, 13):
            phi = rro_regressor(h, k)
            norms = phi[0::2] ** 2 + phi[1::2] ** 2
            assert np.allclose(norms, 1.0, atol=1e-12)

    def test_negative_index_rejected(self):
        h = HarmonicSet(120.0, 420, (1,))
        with pytest.raises(ValueError):
            rro_regressor(h, -1)

    def test_outer_product_average_is_half_identity(self):
        h = HarmonicSet(120.0, 420, tuple(range(1, 59)) + (100, 173))
        table = regressor_table(h)
        gram = table.T @ table / 420
        assert np.allclose(gram, np.eye(h.dimension) / 2, atol=1e-9)

    def test_table_rows_match_single_evaluations(self):
        h = HarmonicSet(120.0, 60, (1, 4, 9))
        table = regressor_table(h)
        for k in range(60):
            assert np.array_equal(table[k], rro_regressor(h, k))


class TestTappedDelayLine:
    def test_zero_initialization(self):
        line = TappedDelayLine(3)
        line.push(5.0)
        assert np.array_equal(line.read(), [5.0, 0.0, 0.0])

    def test_fifo_order(self):
        line = TappedDelayLine(3)
        for x in (1.0, 2.0, 3.0, 4.0):
            line.push(x)
        assert np.array_equal(line.read(), [4.0, 3.0, 2.0])

    def test_depth_one_acts_as_unit_delay(self):
        line = TappedDelayLine(1)
        xs = [1.0, 2.0, 3.0]
        seen = []
        for x in xs:
            seen.append(line.read()[0])  # read before push: value from k-1
            line.push(x)
        assert seen == [0.0, 1.0, 2.0]

    def test_reset(self):
        line = TappedDelayLine(2)
        line.push(1.0)
        line.reset()
        assert np.array_equal(line.read(), [0.0, 0.0])

    def test_depth_must_be_positive(self):
        with pytest.raises(ValueError):
            TappedDelayLine(0)
