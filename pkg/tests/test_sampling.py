import json
import math

import numpy as np
import pytest

from pqcexpr.ansatz import AnsatzSpec
from pqcexpr.sampling import (
    CHUNK,
    FidelitySample,
    expressibility_deviation,
    frame_potential,
    haar_bin_masses,
    haar_frame_potential,
    histogram_csv,
    estimate_json,
    kl_expressibility,
    kl_trials,
    sample_fidelities,
    sample_haar_fidelities,
)


class TestClosedForms:
    @pytest.mark.parametrize("n", range(1, 13))
    def test_haar_values(self, n):
        assert haar_frame_potential(1, n) == 1 / 2**n
        assert haar_frame_potential(2, n) == 1 / (2 ** (n - 1) * (2**n + 1))

    def test_unsupported_moment(self):
        with pytest.raises(ValueError):
            haar_frame_potential(3, 2)

    @pytest.mark.parametrize("n", [1, 2, 4, 10])
    def test_bin_masses_sum_to_one(self, n):
        p = haar_bin_masses(n, 1000)
        assert p.sum() == pytest.approx(1.0, abs=1e-12)
        assert np.all(p >= 0)

    def test_bin_masses_small_case(self):
        # N = 4: mass of [l, r) is (1-l)^3 - (1-r)^3
        edges = np.linspace(0, 1, 5)
        expected = (1 - edges[:-1]) ** 3 - (1 - edges[1:]) ** 3
        np.testing.assert_allclose(haar_bin_masses(2, 4), expected, rtol=1e-12)

    def test_bin_masses_no_nan_for_large_register(self):
        p = haar_bin_masses(20, 1000)
        assert np.all(np.isfinite(p))
        assert p[0] == pytest.approx(1.0, abs=1e-12)


class TestFidelitySamples:
    def test_validation(self):
        with pytest.raises(ValueError):
            FidelitySample(np.array([0.2, 1.5]), "x", 0)

    def test_deterministic_and_seed_sensitive(self):
        spec = AnsatzSpec("ALT", 4, 2, 2)
        a = sample_fidelities(spec, 50, seed=3)
        b = sample_fidelities(spec, 50, seed=3)
        c = sample_fidelities(spec, 50, seed=4)
        np.testing.assert_array_equal(a.values, b.values)
        assert not np.array_equal(a.values, c.values)

    def test_chunking_covers_all_pairs(self):
        s = sample_haar_fidelities(2, CHUNK + 7, seed=0)
        assert len(s) == CHUNK + 7

    def test_bad_arguments(self):
        with pytest.raises(ValueError):
            sample_fidelities(AnsatzSpec("HEA", 2, 1), 0)
        with pytest.raises(ValueError):
            sample_fidelities(AnsatzSpec("HEA", 2, 1), 5, mode="other")

    def test_haar_block_mode_hea_is_haar(self):
        s = sample_fidelities(AnsatzSpec("HEA", 3, 2), 20_000, mode="haar_block", seed=1)
        est = frame_potential(s, 2)
        assert abs(est.mean - haar_frame_potential(2, 3)) < 3 * est.standard_error


class TestFramePotential:
    def test_estimate_fields(self):
        s = FidelitySample(np.array([0.0, 0.5, 1.0]), "toy", 0)
        e = frame_potential(s, 2)
        assert e.mean == pytest.approx((0 + 0.25 + 1) / 3)
        assert e.standard_error == pytest.approx(np.std([0, 0.25, 1], ddof=1) / math.sqrt(3))
        assert e.count == 3

    def test_single_value_has_zero_error(self):
        assert frame_potential(FidelitySample(np.array([0.3]), "x", 0), 1).standard_error == 0.0

    def test_deviation_can_be_slightly_negative(self):
        s = sample_haar_fidelities(3, 2000, seed=0)
        dev, se = expressibility_deviation(frame_potential(s, 2), 3)
        assert abs(dev) < 4 * se

    def test_json(self):
        spec = AnsatzSpec("TEN", 4, 1, 2)
        est = frame_potential(sample_fidelities(spec, 10, seed=2), 1)
        data = json.loads(estimate_json(spec, est, 2))
        assert data["seed"] == 2 and data["spec"]["family"] == "TEN" and data["count"] == 10


class TestKL:
    def test_nonnegative_and_small_for_haar(self):
        n = 3
        big = kl_expressibility(sample_haar_fidelities(n, 200_000, seed=5), n, bins=50)
        assert 0 <= big.kl < 0.01

    def test_point_mass_matches_log_of_bin_mass(self):
        n = 2
        s = FidelitySample(np.full(10, 0.0005), "x", 0)
        r = kl_expressibility(s, n, bins=1000)
        assert r.kl == pytest.approx(-math.log(haar_bin_masses(n, 1000)[0]))

    def test_histogram_csv(self):
        s = sample_haar_fidelities(2, 100, seed=0)
        r = kl_expressibility(s, 2, bins=10)
        lines = histogram_csv(r, 2).strip().splitlines()
        assert lines[0] == "bin_left,bin_right,count,haar_mass"
        assert len(lines) == 11
        assert sum(int(l.split(",")[2]) for l in lines[1:]) == 100

    def test_trials_reproducible(self):
        spec = AnsatzSpec("TEN", 4, 3, 2, 2)
        a = kl_trials(spec, trials=3, pairs=30, seed=1)
        b = kl_trials(spec, trials=3, pairs=30, seed=1)
        np.testing.assert_array_equal(a, b)
        assert len(set(a)) == 3
