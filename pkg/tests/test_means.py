import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from paraconcave.errors import DimensionMismatchError, InvalidWeightsError, NegativeInputError
from paraconcave.means import (
    WeightVector,
    format_exponent,
    p_mean,
    p_mean_limit_check,
    parse_exponent,
    power_mean,
)

positive = st.floats(min_value=1e-3, max_value=10.0, allow_nan=False, allow_infinity=False)
exponents = st.one_of(
    st.floats(min_value=-5.0, max_value=5.0, allow_nan=False),
    st.sampled_from([0.0, math.inf, -math.inf]),
)


@st.composite
def weighted_values(draw, min_size=2, max_size=5):
    m = draw(st.integers(min_value=min_size, max_value=max_size))
    values = draw(st.lists(positive, min_size=m, max_size=m))
    raw = draw(st.lists(st.floats(min_value=0.05, max_value=1.0), min_size=m, max_size=m))
    total = sum(raw)
    return values, WeightVector(tuple(w / total for w in raw))


class TestPMean:

    def test_identity_case(self):
        assert p_mean([1.0, 1.0], WeightVector.pair(0.5), 2.0) == pytest.approx(1.0)

    def test_geometric_mean(self):
        assert p_mean([1.0, 4.0], WeightVector.pair(0.5), 0.0) == pytest.approx(2.0)

    def test_negative_exponent_with_zero_entry_is_zero(self):
        assert p_mean([0.0, 5.0], WeightVector((0.3, 0.7)), -1.0) == 0.0

    def test_geometric_mean_with_zero_entry_is_zero(self):
        assert p_mean([0.0, 5.0], WeightVector.pair(0.5), 0.0) == 0.0

    def test_positive_exponent_with_zero_entry(self):
        # (0.5 * 0 + 0.5 * 4) ** 1
        assert p_mean([0.0, 4.0], WeightVector.pair(0.5), 1.0) == pytest.approx(2.0)

    def test_maximum_and_minimum(self):
        lam = WeightVector.uniform(3)
        assert p_mean([2.0, 3.0, 5.0], lam, math.inf) == 5.0
        assert p_mean([2.0, 3.0, 5.0], lam, -math.inf) == 2.0

    def test_harmonic_mean(self):
        assert p_mean([1.0, 3.0], WeightVector.pair(0.5), -1.0) == pytest.approx(1.5)

    def test_large_exponents_do_not_overflow(self):
        lam = WeightVector.pair(0.5)
        assert p_mean([1e3, 2e3], lam, 500.0) == pytest.approx(2e3 * 0.5 ** (1 / 500), rel=1e-10)
        assert p_mean([1e-3, 2e-3], lam, -500.0) == pytest.approx(1e-3 * 0.5 ** (-1 / 500), rel=1e-10)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            p_mean([1.0, 2.0, 3.0], WeightVector.pair(0.5), 1.0)

    def test_negative_input(self):
        with pytest.raises(NegativeInputError):
            p_mean([-1.0, 2.0], WeightVector.pair(0.5), 1.0)

    def test_vectorized_rows(self):
        values = np.array([[1.0, 4.0], [2.0, 2.0], [0.0, 9.0]])
        weights = np.array([0.5, 0.5])
        np.testing.assert_allclose(power_mean(values, weights, 0.0), [2.0, 2.0, 0.0])
        np.testing.assert_allclose(power_mean(values, weights, 0.5), [2.25, 2.0, 2.25])


class TestWeightVector:

    def test_renormalizes_decimal_weights(self):
        lam = WeightVector((0.1, 0.2, 0.7000000001))
        assert sum(lam.weights) == pytest.approx(1.0, abs=1e-15)

    @pytest.mark.parametrize("weights", [(1.0,), (0.0, 1.0), (0.5, 0.6), (-0.2, 1.2), (0.5, float("nan"))])
    def test_rejects_points_off_the_open_simplex(self, weights):
        with pytest.raises(InvalidWeightsError):
            WeightVector(weights)

    def test_pair(self):
        assert WeightVector.pair(0.25).weights == (0.75, 0.25)


class TestLimits:

    def test_limit_check_approximates_max_and_min(self):
        hi, lo = p_mean_limit_check([2.0, 8.0], WeightVector.pair(0.5))
        assert hi == pytest.approx(8.0, rel=1e-3)
        assert lo == pytest.approx(2.0, rel=1e-3)

    def test_limit_check_constant_vector(self):
        hi, lo = p_mean_limit_check([1.0, 1.0, 1.0], WeightVector.uniform(3))
        assert hi == 1.0
        assert lo == 1.0

    def test_limit_check_skewed_weights(self):
        hi, lo = p_mean_limit_check([3.0, 4.0], WeightVector((0.9, 0.1)))
        assert hi == pytest.approx(4.0, rel=1e-3)
        assert lo == pytest.approx(3.0, rel=1e-3)

    def test_continuity_at_zero(self):
        a, lam = [0.5, 2.0, 7.0], WeightVector((0.2, 0.3, 0.5))
        assert p_mean(a, lam, 1e-6) == pytest.approx(p_mean(a, lam, 0.0), rel=1e-4)
        assert p_mean(a, lam, -1e-6) == pytest.approx(p_mean(a, lam, 0.0), rel=1e-4)


class TestProperties:

    def test_jensen_monotonicity_random_cases(self, rng):
        """10^4 random (a, lam, p <= q) cases, no violation beyond 1e-12."""
        specials = np.array([0.0, np.inf, -np.inf])
        n = 10_000
        m = rng.integers(2, 6, size=n)
        violations = 0
        for i in range(n):
            a = rng.uniform(0.0, 10.0, size=m[i])
            a[a == 0.0] = 1e-3
            raw = rng.uniform(0.05, 1.0, size=m[i])
            lam = WeightVector(tuple(raw / raw.sum()))
            p, q = (rng.choice(specials) if rng.random() < 0.1 else rng.uniform(-5.0, 5.0) for _ in range(2))
            p, q = min(p, q), max(p, q)
            if p_mean(a, lam, p) > p_mean(a, lam, q) + 1e-12 * max(1.0, a.max()):
                violations += 1
        assert violations == 0

    @given(weighted_values(), exponents, exponents)
    @settings(max_examples=200, deadline=None)
    def test_monotone_in_exponent(self, data, p, q):
        a, lam = data
        p, q = min(p, q), max(p, q)
        assert p_mean(a, lam, p) <= p_mean(a, lam, q) * (1 + 1e-12) + 1e-12

    @given(weighted_values(), exponents, st.floats(min_value=0.01, max_value=100.0))
    @settings(max_examples=200, deadline=None)
    def test_homogeneity(self, data, p, c):
        a, lam = data
        assert p_mean([c * x for x in a], lam, p) == pytest.approx(c * p_mean(a, lam, p), rel=1e-9)

    @given(positive, exponents, st.integers(min_value=2, max_value=6))
    @settings(max_examples=100, deadline=None)
    def test_idempotence(self, c, p, m):
        assert p_mean([c] * m, WeightVector.uniform(m), p) == pytest.approx(c, rel=1e-12)


class TestExponentParsing:

    @pytest.mark.parametrize("text,value", [("inf", math.inf), ("+inf", math.inf), ("-inf", -math.inf),
                                            ("∞", math.inf), (0.5, 0.5), ("0.25", 0.25), (2, 2.0)])
    def test_parse(self, text, value):
        assert parse_exponent(text) == value

    def test_parse_rejects_nan(self):
        with pytest.raises(ValueError):
            parse_exponent(float("nan"))

    def test_format(self):
        assert format_exponent(math.inf) == "inf"
        assert format_exponent(-math.inf) == "-inf"
        assert format_exponent(0.5) == 0.5
