import numpy as np
import pytest

from afcsim.analysis import harmonic_spectrum
from afcsim.disturbance import NrroModel, RroProfile, random_profile
from afcsim.lti_core import DelayPolynomial, RationalSystem
from afcsim.regressors import HarmonicSet, regressor_table


def make_profile(indices, amps, phases, n=420):
    h = HarmonicSet(120.0, n, indices)
    return RroProfile(h, np.asarray(amps, float), np.asarray(phases, float))


class TestRroSample:
    def test_zero_amplitudes_give_zero_signal(self):
        p = make_profile((1, 2), [0.0, 0.0], [0.3, -1.0])
        assert all(p.sample(k) == 0.0 for k in range(10))

    def test_single_harmonic_at_zero(self):
        p = make_profile((1,), [1.0], [0.0], n=8)
        assert p.sample(0) == pytest.approx(1.0)

    def test_periodicity_exact(self):
        p = make_profile((1, 3, 10), [1.0, 0.4, 0.2], [0.1, 2.0, -2.5])
        for k in (0, 5, 419, 1234):
            assert p.sample(k) == p.sample(k + 420)

    def test_revolution_matches_samples(self):
        p = make_profile((2, 5), [1.0, 0.5], [0.0, 1.0], n=60)
        rev = p.revolution()
        assert np.array_equal(rev, [p.sample(k) for k in range(60)])


class TestFilteredCoefficients:
    def test_identity_filter_returns_raw_pairs(self):
        amps, phases = [2.0, 0.7], [0.4, -1.3]
        p = make_profile((1, 4), amps, phases)
        got = p.filtered_coefficients(DelayPolynomial(()))
        expected = np.array(
            [
                amps[0] * np.cos(phases[0]),
                -amps[0] * np.sin(phases[0]),
                amps[1] * np.cos(phases[1]),
                -amps[1] * np.sin(phases[1]),
            ]
        )
        assert np.allclose(got, expected, atol=1e-15)

    def test_zero_profile_maps_to_zero(self):
        p = make_profile((1, 2), [0.0, 0.0], [0.3, 0.9])
        got = p.filtered_coefficients(DelayPolynomial((0.5, -0.2)))
        assert np.array_equal(got, np.zeros(4))

    def test_against_projection_oracle(self):
        # oracle: filter the signal directly with A = 1 - 0.5 q^-1, then
        # least-squares-project one steady revolution onto the regressor
        a_star = DelayPolynomial((0.5,))
        p = make_profile((3,), [1.3], [0.8], n=60)
        n = 60
        k = np.arange(3 * n)
        r = np.array([p.sample(int(kk)) for kk in k])
        filtered = r.copy()
        filtered[1:] -= 0.5 * r[:-1]
        table = regressor_table(p.harmonics)
        window = slice(n, 2 * n)
        coeffs, *_ = np.linalg.lstsq(table, filtered[window], rcond=None)
        got = p.filtered_coefficients(a_star)
        assert np.allclose(got, coeffs, atol=1e-9)

    def test_linear_in_amplitudes(self):
        a_star = DelayPolynomial((0.3, -0.1))
        p1 = make_profile((2, 7), [1.0, 0.5], [0.2, 1.1])
        p2 = make_profile((2, 7), [3.0, 1.5], [0.2, 1.1])
        assert np.allclose(
            3 * p1.filtered_coefficients(a_star),
            p2.filtered_coefficients(a_star),
            atol=1e-12,
        )


class TestRoundTrip:
    def test_spectrum_recovers_profile(self):
        p = random_profile(HarmonicSet(120.0, 420, (1, 5, 17, 58)), seed=9)
        signal = np.tile(p.revolution(), 4)
        spec = harmonic_spectrum(signal, 420, p.harmonics.indices)
        assert np.allclose(spec.amplitudes, p.amplitudes, atol=1e-9)
        # compare phases on the circle
        dphi = np.angle(np.exp(1j * (spec.phases - p.phases)))
        assert np.allclose(dphi, 0.0, atol=1e-9)

    def test_csv_round_trip(self, tmp_path):
        p = random_profile(HarmonicSet(120.0, 420, (1, 2, 9)), seed=3)
        path = tmp_path / "profile.csv"
        p.to_csv(path)
        q = RroProfile.from_csv(path, 120.0, 420)
        assert q.harmonics.indices == p.harmonics.indices
        assert np.array_equal(q.amplitudes, p.amplitudes)
        assert np.array_equal(q.phases, p.phases)


class TestRandomProfile:
    def test_deterministic_under_seed(self):
        h = HarmonicSet(120.0, 420, "1-20")
        p1 = random_profile(h, seed=5, amplitude_scale=2.0)
        p2 = random_profile(h, seed=5, amplitude_scale=2.0)
        assert np.array_equal(p1.amplitudes, p2.amplitudes)
        assert np.array_equal(p1.phases, p2.phases)

    def test_envelope_declines_with_index(self):
        h = HarmonicSet(120.0, 420, (1, 100))
        p = random_profile(h, seed=5, decay_exponent=1.0)
        # amplitudes are scale * u / i with u in [0.5, 1.5]
        assert p.amplitudes[1] < p.amplitudes[0]
        assert p.amplitudes[1] <= 1.5 / 100


class TestNrro:
    def test_zero_sigma_is_silent(self):
        m = NrroModel(0.0, seed=1)
        assert np.array_equal(m.generate(100), np.zeros(100))

    def test_seeded_reproducibility(self):
        a = NrroModel(1.0, seed=77).generate(500)
        b = NrroModel(1.0, seed=77).generate(500)
        assert np.array_equal(a, b)

    def test_sample_and_generate_agree(self):
        a = NrroModel(0.3, seed=5).generate(50)
        m = NrroModel(0.3, seed=5)
        b = np.array([m.sample() for _ in range(50)])
        assert np.array_equal(a, b)

    def test_unshaped_variance(self):
        m = NrroModel(0.7, seed=11)
        x = m.generate(1_000_000)
        assert np.var(x) == pytest.approx(0.49, rel=0.02)

    def test_shaping_filter_applies(self):
        shaping = RationalSystem((1.0,), (0.9,))
        m = NrroModel(1.0, seed=2, shaping=shaping)
        x = m.generate(5000)
        w = NrroModel(1.0, seed=2).generate(5000)
        # shaped sequence is the white one passed through the filter
        ref = RationalSystem((1.0,), (0.9,)).run(w)
        assert np.allclose(x, ref, atol=1e-12)

    def test_negative_sigma_rejected(self):
        with pytest.raises(ValueError):
            NrroModel(-0.1, seed=0)
