"""Tests for src/specfun.py"""
# pylint: disable=missing-function-docstring


import math
import unittest
from unittest import TestCase

from hypothesis import given, settings, strategies as st
import numpy as np

from src import specfun


def series_j(order: int, x: float, terms: int = 60) -> float:
    """J_order(x) of integer order by its power series."""
    return sum(
        (-1) ** m * (x / 2) ** (2 * m + order)
        / (math.factorial(m) * math.factorial(m + order))
        for m in range(terms))


def bisect_zero(order: int, low: float, high: float) -> float:
    """Plain bisection on the series, independent of scipy."""
    f_low = series_j(order, low)
    for _ in range(200):
        middle = (low + high) / 2
        f_middle = series_j(order, middle)
        if f_low * f_middle <= 0:
            high = middle
        else:
            low, f_low = middle, f_middle
    return (low + high) / 2


class TestBesselJ(TestCase):
    """Tests for specfun.bessel_j & specfun.scaled_bessel_j"""

    def test_values_at_the_origin(self) -> None:
        self.assertEqual(specfun.bessel_j(0, 0.0), 1.0)
        self.assertEqual(specfun.bessel_j(1, 0.0), 0.0)

    def test_matches_the_power_series(self) -> None:
        for order in (0, 1, 2):
            for x in (0.5, 2.0, 7.5):
                with self.subTest(order=order, x=x):
                    self.assertAlmostEqual(
                        specfun.bessel_j(order, x), series_j(order, x),
                        places=12)

    def test_keeps_the_shape_of_array_arguments(self) -> None:
        values = specfun.bessel_j(0.5, np.linspace(0, 1, 7))

        self.assertEqual(values.shape, (7,))

    def test_rejects_negative_orders_or_arguments(self) -> None:
        for nu, x in ((-1.0, 1.0), (1.0, -1.0), (math.nan, 1.0)):
            with self.subTest(nu=nu, x=x):
                with self.assertRaises(ValueError):
                    specfun.bessel_j(nu, x)

    @settings(max_examples=100, deadline=None)
    @given(st.floats(min_value=1, max_value=6),
           st.floats(min_value=0.1, max_value=40))
    def test_satisfies_the_three_term_recurrence(
        self, nu: float, x: float
    ) -> None:
        residual = (
            specfun.bessel_j(nu - 1, x) + specfun.bessel_j(nu + 1, x)
            - 2 * nu / x * specfun.bessel_j(nu, x))

        self.assertLess(abs(residual), 1e-10)

    def test_scaled_kernel_is_continuous_at_the_origin(self) -> None:
        nu, k = 0.5, 3.0
        limit = (k / 2) ** nu / math.gamma(nu + 1)

        self.assertAlmostEqual(
            specfun.scaled_bessel_j(nu, k, 0.0), limit, places=15)
        self.assertAlmostEqual(
            specfun.scaled_bessel_j(nu, k, 1e-8), limit, places=12)


class TestBesselZeros(TestCase):
    """Tests for specfun.bessel_j_zero"""

    def test_half_order_zero_is_pi(self) -> None:
        self.assertLess(
            abs(specfun.bessel_j_first_zero(0.5) - math.pi), 1e-11)

    def test_integer_orders_match_bisection_on_the_series(self) -> None:
        for order, (low, high) in ((0, (2.0, 3.0)), (1, (3.5, 4.0))):
            with self.subTest(order=order):
                self.assertLess(
                    abs(specfun.bessel_j_first_zero(order)
                        - bisect_zero(order, low, high)),
                    1e-10)

    def test_second_zero(self) -> None:
        self.assertAlmostEqual(
            specfun.bessel_j_zero(0, 2), 5.520078110286311, places=12)

    def test_zeros_increase_with_the_order(self) -> None:
        zeros = [specfun.bessel_j_first_zero(n / 2) for n in range(0, 12)]

        self.assertEqual(zeros, sorted(zeros))

    def test_is_memoized(self) -> None:
        specfun.bessel_j_zero(2.5, 1)
        hits = specfun.bessel_j_zero.cache_info().hits

        specfun.bessel_j_zero(2.5, 1)

        self.assertEqual(specfun.bessel_j_zero.cache_info().hits, hits + 1)

    def test_rejects_a_nonpositive_index(self) -> None:
        with self.assertRaises(ValueError):
            specfun.bessel_j_zero(1.0, 0)


class TestBesselRatio(TestCase):
    """Tests for specfun.bessel_ratio"""

    def test_regular_value(self) -> None:
        ratio = specfun.bessel_ratio(1, 0, 1.0)

        self.assertAlmostEqual(
            ratio.value, series_j(1, 1.0) / series_j(0, 1.0), places=13)
        self.assertFalse(ratio.pole)

    def test_flags_a_zero_of_the_denominator(self) -> None:
        ratio = specfun.bessel_ratio(1, 0, specfun.bessel_j_first_zero(0))

        self.assertTrue(ratio.pole)

    def test_small_argument_underflow_is_not_a_pole(self) -> None:
        ratio = specfun.bessel_ratio(4, 3, 1e-6)

        self.assertFalse(ratio.pole)
        self.assertAlmostEqual(ratio.value, 1e-6 / 8, delta=1e-15)

    def test_rejects_nonpositive_arguments(self) -> None:
        with self.assertRaises(ValueError):
            specfun.bessel_ratio(1, 0, 0.0)


if __name__ == '__main__':
    unittest.main()
