"""Tests for src/variational.py"""
# pylint: disable=missing-function-docstring


import csv
import itertools
import math
from pathlib import Path
import tempfile
import unittest
from unittest import TestCase

import numpy as np
from scipy import special  # type: ignore

from helpers import factories

from src import closedform, variational
from src.gauge import euclidean, p_norm
from src.variational import GridFunction, MinimizeOptions

J01 = 2.404825557695773


class TestRadialGrid(TestCase):
    """Tests for variational.RadialGrid"""

    def test_measures_sum_to_the_wulff_set_volume(self) -> None:
        for n in (2, 3, 5):
            with self.subTest(n=n):
                grid = factories.RadialGrid.createOne(n=n, radius=1.3)
                total = grid.weights.sum() + grid.boundary_weight
                self.assertAlmostEqual(
                    total, grid.kappa_n * 1.3 ** n, places=12)

    def test_stiffness_is_symmetric(self) -> None:
        stiffness = factories.RadialGrid.createOne(nodes=20).stiffness()

        self.assertEqual(abs(stiffness - stiffness.T).max(), 0)

    def test_rejects_coarse_grids(self) -> None:
        with self.assertRaises(ValueError):
            factories.RadialGrid.createOne(nodes=8)


class TestRadialLocalSolve(TestCase):
    """Tests for variational.radial_local_solve"""

    def test_three_dimensional_unit_ball(self) -> None:
        grid = factories.RadialGrid.createOne(n=3, nodes=4000)

        eigenvalue, _ = variational.radial_local_solve(grid)

        self.assertLess(
            abs(eigenvalue - math.pi ** 2), 1e-5 * math.pi ** 2)

    def test_converges_at_second_order(self) -> None:
        errors = []
        for nodes in (250, 500):
            eigenvalue, _ = variational.radial_local_solve(
                factories.RadialGrid.createOne(n=3, nodes=nodes))
            errors.append(abs(eigenvalue - math.pi ** 2))

        order = math.log2(errors[0] / errors[1])

        self.assertGreaterEqual(order, 1.8)
        self.assertLessEqual(order, 2.2)

    def test_profile_is_positive_and_normalized(self) -> None:
        grid = factories.RadialGrid.createOne(nodes=200)

        _, profile = variational.radial_local_solve(grid)

        self.assertTrue(np.all(profile.values[:-1] > 0))
        self.assertEqual(profile.values[-1], 0.0)
        self.assertAlmostEqual(
            profile.norm_squared(grid.kappa_n), 1.0, places=12)


class TestRadialPairNonlocalSolve(TestCase):
    """Tests for variational.radial_pair_nonlocal_solve"""

    def test_agrees_with_the_closed_form(self) -> None:
        for r1, r2, alpha in (
            (0.5, 1.0, 10.0),
            (0.3, 0.8, -5.0),
            (0.9, 1.0, 40.0),
            (0.5, 1.0, -200.0),
            (0.0, 1.0, 25.0),
        ):
            with self.subTest(r1=r1, r2=r2, alpha=alpha):
                closed = closedform.nonlocal_pair_eigenvalue(
                    2, math.pi, r1, r2, alpha,
                    include_nonradial=False).eigenvalue
                discrete, _, _ = variational.radial_pair_nonlocal_solve(
                    2, math.pi, r1, r2, alpha, 2000)
                self.assertLess(
                    abs(discrete - closed), 1e-4 * max(1.0, abs(closed)))

    def test_agrees_with_the_closed_form_over_a_grid(self) -> None:
        radii = (0.3, 0.5, 0.7, 0.9, 1.1)
        for r1, r2, alpha in itertools.product(
                radii, radii, (-10.0, 0.0, 5.0, 20.0, 50.0)):
            with self.subTest(r1=r1, r2=r2, alpha=alpha):
                closed = closedform.nonlocal_pair_eigenvalue(
                    2, math.pi, r1, r2, alpha,
                    include_nonradial=False).eigenvalue
                discrete, _, _ = variational.radial_pair_nonlocal_solve(
                    2, math.pi, r1, r2, alpha, 4000)
                self.assertLess(
                    abs(discrete - closed), 1e-4 * max(1.0, abs(closed)))

    def test_obeys_the_scaling_law(self) -> None:
        rng = np.random.default_rng(7)
        for _ in range(50):
            r1, r2 = (float(r) for r in rng.uniform(0.2, 1.5, 2))
            alpha = float(rng.uniform(-20, 60))
            t = float(rng.uniform(0.5, 2))

            with self.subTest(r1=r1, r2=r2, alpha=alpha, t=t):
                direct, _, _ = variational.radial_pair_nonlocal_solve(
                    2, math.pi, t * r1, t * r2, alpha, 200)
                unscaled, _, _ = variational.radial_pair_nonlocal_solve(
                    2, math.pi, r1, r2,
                    closedform.rescaled_weight(2, t, alpha), 200)
                self.assertLess(
                    abs(direct - closedform.rescale(t, unscaled)),
                    1e-9 * max(1.0, abs(direct)))

    def test_large_weight_approaches_the_radial_twisted_value(self) -> None:
        twisted = closedform.nonlocal_pair_eigenvalue(
            2, math.pi, 0.5, 1.0, math.inf,
            include_nonradial=False).eigenvalue

        discrete, _, _ = variational.radial_pair_nonlocal_solve(
            2, math.pi, 0.5, 1.0, 1e8, 2000)

        self.assertLess(abs(discrete - twisted), 1e-3 * twisted)

    def test_single_set_has_no_small_profile(self) -> None:
        _, small, large = variational.radial_pair_nonlocal_solve(
            2, math.pi, 0.0, 1.0, 1.0, 100)

        self.assertIsNone(small)
        self.assertEqual(large.radius, 1.0)


class TestCartesianGrids(TestCase):
    """Tests for disk_grid, square_grid, mask_grid & wulff_grid"""

    def test_disk_area_is_first_order_accurate(self) -> None:
        grid = factories.DiskGrid.createOne(h=1 / 64)

        self.assertLess(abs(grid.area - math.pi), 4 * math.pi * grid.h)

    def test_masks_never_touch_the_border(self) -> None:
        for grid in (
            factories.DiskGrid.createOne(),
            variational.square_grid(math.pi, 1 / 16),
            variational.wulff_grid(p_norm(2, 4.0), math.pi, 1 / 16),
        ):
            with self.subTest(shape=grid.shape):
                mask = grid.mask
                self.assertFalse(
                    mask[0].any() or mask[-1].any()
                    or mask[:, 0].any() or mask[:, -1].any())

    def test_mask_grid_pads_a_full_mask(self) -> None:
        grid = variational.mask_grid(np.ones((3, 4), dtype=bool), 0.5)

        self.assertEqual(grid.shape, (5, 6))
        self.assertEqual(grid.unknowns, 12)

    def test_rejects_a_mask_touching_the_border(self) -> None:
        with self.assertRaises(ValueError):
            variational.CartesianGrid2D(
                h=1.0, x0=0.0, y0=0.0, mask=np.ones((3, 3), dtype=bool))

    def test_grid_function_vanishes_outside_the_mask(self) -> None:
        grid = factories.DiskGrid.createOne(h=1 / 8)

        u = GridFunction(grid, np.ones(grid.shape))

        self.assertEqual(u.values[~grid.mask].sum(), 0)
        self.assertAlmostEqual(u.integral(), grid.area)


class TestRayleighQuotient(TestCase):
    """Tests for variational.rayleigh_quotient"""

    grid: variational.CartesianGrid2D

    @classmethod
    def setUpClass(cls) -> None:
        cls.grid = factories.DiskGrid.createOne(h=1 / 16)

    def test_zero_average_ignores_the_weight(self) -> None:
        u = GridFunction.from_function(self.grid, lambda x, y: x)
        plain = variational.rayleigh_quotient(u, euclidean(2), 0.0)

        for alpha in (-50.0, 1.0, 1e6):
            with self.subTest(alpha=alpha):
                self.assertAlmostEqual(
                    variational.rayleigh_quotient(u, euclidean(2), alpha),
                    plain, delta=1e-9 * plain)

    def test_is_affine_in_the_weight(self) -> None:
        u = factories.Bump.createOne(self.grid)
        plain = variational.rayleigh_quotient(u, p_norm(2, 4.0), 0.0)
        slope = u.integral() ** 2 / u.norm_squared()

        self.assertGreater(slope, 0)
        for alpha in (-3.0, 0.5, 40.0):
            with self.subTest(alpha=alpha):
                self.assertAlmostEqual(
                    variational.rayleigh_quotient(u, p_norm(2, 4.0), alpha),
                    plain + alpha * slope,
                    delta=1e-10 * max(1.0, abs(plain + alpha * slope)))

    def test_disk_eigenfunction_gives_the_bessel_level(self) -> None:
        grid = factories.DiskGrid.createOne(h=1 / 128)

        def first_mode(x: np.ndarray, y: np.ndarray) -> np.ndarray:
            return special.jv(0, J01 * np.hypot(x, y))

        u = GridFunction.from_function(grid, first_mode)

        self.assertLess(
            abs(variational.rayleigh_quotient(u, euclidean(2), 0.0)
                - J01 ** 2), 0.01 * J01 ** 2)


class TestMinimizeRayleigh(TestCase):
    """Tests for variational.minimize_rayleigh"""

    disk: variational.RayleighMinimum
    square: variational.RayleighMinimum

    @classmethod
    def setUpClass(cls) -> None:
        cls.disk = variational.minimize_rayleigh(
            variational.disk_grid(math.pi, 1 / 128), euclidean(2), 0.0)
        cls.square = variational.minimize_rayleigh(
            variational.square_grid(math.pi, 1 / 128), euclidean(2), 0.0)

    def test_disk_matches_the_bessel_level(self) -> None:
        self.assertLess(
            abs(self.disk.eigenvalue - J01 ** 2), 0.01 * J01 ** 2)
        self.assertTrue(self.disk.converged)

    def test_square_matches_separation_of_variables(self) -> None:
        self.assertLess(
            abs(self.square.eigenvalue - 2 * math.pi), 0.01 * 2 * math.pi)

    def test_square_lies_above_the_disk(self) -> None:
        self.assertGreater(self.square.eigenvalue, self.disk.eigenvalue)

    def test_eigenfunction_is_nonnegative_and_normalized(self) -> None:
        u = self.disk.u

        self.assertGreaterEqual(u.interior.min(), -1e-12)
        self.assertAlmostEqual(u.norm_squared(), 1.0, places=12)

    def test_weight_sweep_is_monotone_and_lipschitz(self) -> None:
        grid = factories.DiskGrid.createOne(h=1 / 16)
        alphas = np.linspace(0, 100, 11)
        values = [
            variational.minimize_rayleigh(
                grid, euclidean(2), float(alpha)).eigenvalue
            for alpha in alphas]

        for before, after in zip(values, values[1:]):
            self.assertGreaterEqual(after, before - 1e-10 * before)
            self.assertLessEqual(
                after, before + grid.area * (alphas[1] - alphas[0])
                + 1e-10 * before)

    def test_descent_agrees_with_the_exact_solve(self) -> None:
        grid = factories.DiskGrid.createOne(h=1 / 8)
        exact = variational.minimize_rayleigh(grid, euclidean(2), 3.0)

        descent = variational.minimize_rayleigh(
            grid, euclidean(2), 3.0, MinimizeOptions(method='descent'))

        self.assertLess(
            abs(descent.eigenvalue - exact.eigenvalue),
            1e-8 * exact.eigenvalue)
        self.assertTrue(descent.converged)

    def test_p_norm_gauge_certifies_stationarity(self) -> None:
        grid = variational.wulff_grid(p_norm(2, 4.0), math.pi, 1 / 8)

        result = variational.minimize_rayleigh(grid, p_norm(2, 4.0), 0.0)

        self.assertTrue(result.converged)
        self.assertAlmostEqual(
            variational.rayleigh_quotient(result.u, p_norm(2, 4.0), 0.0),
            result.eigenvalue, delta=1e-9 * result.eigenvalue)

    def test_negative_weights_keep_one_sign(self) -> None:
        cases = [
            (factories.DiskGrid.createOne(h=1 / 16), euclidean(2), alpha)
            for alpha in (-5.0, -50.0)]
        cases.append((
            variational.wulff_grid(p_norm(2, 4.0), math.pi, 1 / 8),
            p_norm(2, 4.0), -20.0))

        for grid, g, alpha in cases:
            with self.subTest(gauge=g.kind, alpha=alpha):
                interior = variational.minimize_rayleigh(
                    grid, g, alpha).u.interior
                self.assertGreaterEqual(
                    interior.min(), -1e-8 * abs(interior).max())

    def test_rejects_unknown_methods(self) -> None:
        with self.assertRaises(ValueError):
            variational.minimize_rayleigh(
                factories.DiskGrid.createOne(h=1 / 4), euclidean(2), 0.0,
                MinimizeOptions(method='newton'))

    def test_rayleigh_quotient_of_zero_is_an_error(self) -> None:
        grid = factories.DiskGrid.createOne(h=1 / 4)

        with self.assertRaises(ValueError):
            variational.rayleigh_quotient(
                GridFunction(grid, np.zeros(grid.shape)), euclidean(2), 0.0)


class TestRearrangements(TestCase):
    """Tests for decreasing & convex rearrangements"""

    u: GridFunction

    @classmethod
    def setUpClass(cls) -> None:
        cls.u = factories.Bump.createOne(factories.DiskGrid.createOne())

    def test_decreasing_rearrangement_is_equimeasurable(self) -> None:
        mu, u_star = variational.decreasing_rearrangement(self.u)
        cell = self.u.grid.h ** 2

        for t in (0.1, 0.4, 0.8):
            with self.subTest(t=t):
                above = np.sum(np.abs(self.u.interior) > t) * cell
                self.assertAlmostEqual(float(mu(t)), above, places=12)
                self.assertAlmostEqual(
                    float(np.sum(u_star.levels > t)) * cell, above,
                    places=12)

    def test_decreasing_rearrangement_is_nonincreasing(self) -> None:
        _, u_star = variational.decreasing_rearrangement(self.u)

        samples = u_star(np.linspace(0, u_star.total_measure, 500))

        self.assertTrue(np.all(np.diff(samples) <= 0))
        self.assertEqual(float(u_star(2 * u_star.total_measure)), 0.0)

    def test_convex_rearrangement_keeps_the_l2_norm(self) -> None:
        g = euclidean(2)
        target = variational.wulff_grid(g, self.u.grid.area, self.u.grid.h)

        rearranged = variational.convex_rearrangement(self.u, g, target)

        self.assertAlmostEqual(
            rearranged.norm_squared(), self.u.norm_squared(),
            delta=0.05 * self.u.norm_squared())

    def test_rejects_a_target_of_the_wrong_measure(self) -> None:
        target = variational.disk_grid(2 * math.pi, self.u.grid.h)

        with self.assertRaises(ValueError):
            variational.convex_rearrangement(self.u, euclidean(2), target)

    def test_polya_szego_holds_on_random_bumps(self) -> None:
        rng = np.random.default_rng(3)
        grid = factories.DiskGrid.createOne()
        for g in (euclidean(2), p_norm(2, 4.0)):
            for _ in range(10):
                center = tuple(rng.uniform(-0.4, 0.4, 2))
                width = float(rng.uniform(0.1, 0.5))
                with self.subTest(gauge=g.spec, center=center, width=width):
                    lhs, rhs = variational.polya_szego_gap(
                        factories.Bump.createOne(grid, center, width), g)
                    self.assertGreaterEqual(lhs, rhs * (1 - 3 * grid.h))


class TestSignSplit(TestCase):
    """Tests for variational.sign_split"""

    def test_measures_both_signs(self) -> None:
        grid = factories.DiskGrid.createOne(h=1 / 16)
        u = GridFunction.from_function(grid, lambda x, y: x + 0 * y)

        split = variational.sign_split(u)

        self.assertAlmostEqual(split.positive, split.negative, places=12)
        self.assertLess(split.positive + split.negative, grid.area)


class TestFiles(TestCase):
    """Tests for read_mask & write_grid_function"""

    def test_reads_a_mask_file(self) -> None:
        with tempfile.TemporaryDirectory() as directory:
            path = Path(directory) / 'mask.txt'
            path.write_text('4 3 0.25\n0000\n0110\n0000\n')

            grid = variational.read_mask(path)

        self.assertEqual(grid.shape, (4, 3))
        self.assertEqual(grid.unknowns, 2)
        self.assertEqual(grid.h, 0.25)
        self.assertTrue(grid.mask[1, 1] and grid.mask[2, 1])

    def test_rejects_a_malformed_mask(self) -> None:
        for text in ('4 3\n0000', '2 2 0.5\n012', '2 2 0.5\n000'):
            with self.subTest(text=text):
                with tempfile.TemporaryDirectory() as directory:
                    path = Path(directory) / 'mask.txt'
                    path.write_text(text)
                    with self.assertRaises(ValueError):
                        variational.read_mask(path)

    def test_writes_every_node(self) -> None:
        grid = factories.DiskGrid.createOne(h=1 / 4)
        u = factories.Bump.createOne(grid)

        with tempfile.TemporaryDirectory() as directory:
            path = Path(directory) / 'u.csv'
            variational.write_grid_function(u, path)
            with open(path, newline='') as stream:
                rows = list(csv.reader(stream))

        nx, ny = grid.shape
        self.assertEqual(rows[0], ['i', 'j', 'x', 'y', 'u'])
        self.assertEqual(len(rows), nx * ny + 1)


if __name__ == '__main__':
    unittest.main()
