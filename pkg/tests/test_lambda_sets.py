import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gausspan.lambda_sets import (
    DiscreteSet,
    angular_density,
    counting_function,
    density_estimate,
    explicit_set,
    generate_arithmetic_set,
    generate_sqrt_set,
    pair_sum_check,
    s_epsilon,
    scale,
    union_with_rotation,
)


class TestConstruction:
    def test_symmetric_example(self):
        s = generate_sqrt_set(0.8, "symmetric", 2)
        np.testing.assert_allclose(np.sort(s.points), [-1.5811388300841898, -1.118033988749895, 1.118033988749895, 1.5811388300841898])
        assert s.points[0] == pytest.approx(math.sqrt(1.25))

    def test_positive_example(self):
        s = generate_sqrt_set(1.0, "positive", 3)
        np.testing.assert_array_equal(s.points, [1.0, math.sqrt(2), math.sqrt(3)])

    @pytest.mark.parametrize("delta", [0.0, -1.0])
    def test_rejects_nonpositive_density(self, delta):
        with pytest.raises(ValueError):
            generate_sqrt_set(delta, "positive", 3)

    def test_rejects_zero_and_duplicates(self):
        with pytest.raises(ValueError):
            explicit_set([0.0, 1.0])
        with pytest.raises(ValueError):
            explicit_set([1.0, 1.0])

    def test_sorted_by_modulus_and_readonly(self):
        s = explicit_set([3.0, -1.0, 2.0, 1.5])
        assert list(np.abs(s.points)) == sorted(np.abs(s.points))
        with pytest.raises(ValueError):
            s.points[0] = 7.0

    @given(st.floats(0.05, 5.0), st.integers(1, 500))
    def test_exact_ratio_per_point(self, delta, n):
        s = generate_sqrt_set(delta, "positive", n)
        k = np.arange(1, n + 1)
        np.testing.assert_allclose(k / s.points**2, delta, rtol=4e-16 * 4)

    def test_json_round_trip(self):
        s = generate_sqrt_set(0.7, "symmetric", 20)
        back = DiscreteSet.from_json(s.to_json())
        np.testing.assert_array_equal(back.points, s.points)
        assert (back.generator, back.pattern, back.delta_per_side, back.n) == ("sqrt", "symmetric", 0.7, 20)


class TestCounting:
    def test_strict_count(self):
        s = generate_sqrt_set(1.0, "symmetric", 100)
        assert counting_function(s, 5.0) == 48

    @given(st.lists(st.floats(0, 40), min_size=2, max_size=20))
    def test_nondecreasing(self, radii):
        s = generate_sqrt_set(0.5, "symmetric", 400)
        counts = [counting_function(s, r) for r in sorted(radii)]
        assert counts == sorted(counts)

    def test_changes_only_at_moduli(self):
        s = generate_sqrt_set(1.0, "positive", 50)
        m = s.moduli
        for a, b in zip(m[:-1], m[1:]):
            lo, hi = np.nextafter(a, np.inf), b
            assert counting_function(s, lo) == counting_function(s, 0.5 * (a + b)) == counting_function(s, hi)


class TestDensity:
    def test_half_density(self):
        rep = density_estimate(generate_sqrt_set(0.5, "positive", 10_000))
        assert 0.49 <= rep.density <= 0.51

    def test_symmetric_splits_by_side(self):
        rep = density_estimate(generate_sqrt_set(1.0, "symmetric", 10_000), np.linspace(10, 90, 33))
        assert rep.density == pytest.approx(2.0, rel=0.02)
        assert rep.density_positive == pytest.approx(1.0, rel=0.02)
        assert rep.density_negative == pytest.approx(1.0, rel=0.02)
        assert rep.density == pytest.approx(rep.density_positive + rep.density_negative, rel=1e-3)

    def test_arithmetic_trend_to_zero(self):
        s = generate_arithmetic_set(1.0, "positive", 10_000)
        small = density_estimate(s, np.linspace(10, 20, 11)).density
        large = density_estimate(s, np.linspace(80, 90, 11)).density
        assert large < small < 0.1

    def test_grid_beyond_truncation_rejected(self):
        s = generate_sqrt_set(1.0, "positive", 100)
        with pytest.raises(ValueError, match="beyond"):
            density_estimate(s, [5.0, 20.0])

    @given(st.sampled_from([0.5, 1 / math.sqrt(2), 2.0, 3.0]), st.floats(0.2, 2.0))
    def test_scale_law(self, c, delta):
        s = generate_sqrt_set(delta, "positive", 4000)
        base = density_estimate(s)
        scaled = density_estimate(scale(s, c))
        assert abs(scaled.density - base.density / c**2) <= 3 * max(scaled.residual, 1e-12) + 1e-12

    def test_scale_examples(self):
        s = generate_sqrt_set(1.0, "positive", 10_000)
        assert density_estimate(scale(s, 2.0)).density == pytest.approx(0.25, rel=0.02)
        assert density_estimate(scale(generate_sqrt_set(0.4, "positive", 10_000), 1 / math.sqrt(2))).density == pytest.approx(0.8, rel=0.02)
        np.testing.assert_array_equal(scale(s, 1.0).points, s.points)
        with pytest.raises(ValueError):
            scale(s, 0.0)

    def test_negative_scale_swaps_side(self):
        s = scale(generate_sqrt_set(1.0, "positive", 10), -2.0)
        assert s.pattern == "negative" and np.all(s.points < 0)


class TestSeries:
    def test_single_point(self):
        assert s_epsilon(explicit_set([2.0]), 0.0).partial_sum == 0.25

    def test_harmonic(self):
        s = generate_sqrt_set(1.0, "positive", 10_000)
        rep = s_epsilon(s, 0.0)
        harmonic = math.fsum(1.0 / k for k in range(1, 10_001))
        assert rep.partial_sum == pytest.approx(harmonic, abs=1e-6)
        assert rep.partial_sum == pytest.approx(9.7876, abs=1e-4)
        assert rep.classification == "diverging"

    def test_epsilon_one(self):
        rep = s_epsilon(generate_sqrt_set(1.0, "positive", 10_000), 1.0)
        direct = math.fsum(k**-1.5 for k in range(1, 10_001))
        assert rep.partial_sum == pytest.approx(direct, rel=1e-12)
        assert rep.tail_bound < 0.02
        assert rep.classification == "converging"
        # the tail bound is a true bound on the remaining mass
        assert rep.partial_sum + rep.tail_bound == pytest.approx(2.6123753486854883, rel=1e-10)

    @given(st.integers(1, 300), st.integers(1, 300), st.floats(0, 2), st.floats(0, 2))
    def test_monotone_in_n_and_epsilon(self, n1, n2, e1, e2):
        lo_n, hi_n = sorted((n1, n2))
        lo_e, hi_e = sorted((e1, e2))
        a = s_epsilon(generate_sqrt_set(1.0, "symmetric", lo_n), lo_e).partial_sum
        b = s_epsilon(generate_sqrt_set(1.0, "symmetric", hi_n), lo_e).partial_sum
        c = s_epsilon(generate_sqrt_set(1.0, "symmetric", lo_n), hi_e).partial_sum
        assert a <= b
        assert c <= a


class TestRotation:
    def test_small_union(self):
        g = union_with_rotation(explicit_set([1.0, -1.0, 2.0, -2.0]))
        assert len(g) == 8
        expected = {1, -1, 2, -2, 1j, -1j, 2j, -2j}
        assert set(complex(p) for p in g.points) == expected

    def test_single(self):
        g = union_with_rotation(explicit_set([1.0]))
        assert list(g.points) == [1.0, 1j]

    def test_ray_profiles_equal(self):
        g = union_with_rotation(generate_sqrt_set(0.5, "symmetric", 200))
        counts = g.sector_counts
        assert counts["ray_0"] == counts["ray_pi/2"] == counts["ray_pi"] == counts["ray_3pi/2"] == 200
        assert counts["quadrant_1"] == 0

    def test_angular_density_steps(self):
        g = union_with_rotation(generate_sqrt_set(0.5, "symmetric", 4000))
        assert angular_density(g, math.pi / 2 - 0.01) == pytest.approx(0.5, rel=0.02)
        assert angular_density(g, math.pi / 2 + 0.01) == pytest.approx(1.0, rel=0.02)
        assert angular_density(g, 2 * math.pi - 0.01) == pytest.approx(2.0, rel=0.02)
        # convention: the ray at pi/2 is not yet counted at theta = pi/2 itself
        assert angular_density(g, math.pi / 2) == pytest.approx(0.5, rel=0.02)

    def test_pair_sum_exact(self):
        g = union_with_rotation(explicit_set([1.0, -1.0, 2.0, -2.0]))
        assert pair_sum_check(g, [3.0]) == 0.0
        assert pair_sum_check(g, [0.5]) == 0.0

    def test_pair_sum_large(self):
        g = union_with_rotation(generate_sqrt_set(1.0, "symmetric", 1000))
        assert pair_sum_check(g) < 1e-12

    @given(st.lists(st.floats(0.1, 50), min_size=1, max_size=30, unique=True), st.floats(0.01, 60))
    def test_pair_sum_zero_between_moduli(self, mags, r):
        s = explicit_set(mags)
        g = union_with_rotation(s)
        if np.any(np.isclose(g.moduli, r, rtol=0, atol=1e-9)):
            return
        assert pair_sum_check(g, [r]) == 0.0

    def test_tail_sum_doubles(self):
        s = generate_sqrt_set(1.0, "symmetric", 50)
        assert union_with_rotation(s).tail_power_sum(4) == 2 * s.tail_power_sum(4)
