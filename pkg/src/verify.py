"""Invariant suites run by `verify`.

Each suite is a function returning (passed, detail) registered under its
name with the `suite` decorator; suites run in registration order when
results are reported.
"""

from dataclasses import dataclass
import logging
import math
from typing import Callable, Dict, List, Tuple

import numpy as np
from scipy import integrate, special  # type: ignore

from . import closedform, specfun
from .gauge import (
    ellipse,
    euclidean,
    gauge_value,
    identity_residuals,
    measure_by_quadrature,
    p_norm,
    unit_ball_volume,
)
from .variational import (
    GridFunction,
    disk_grid,
    polya_szego_gap,
    radial_pair_nonlocal_solve,
)

LOGGER = logging.getLogger(__name__)

Outcome = Tuple[bool, str]

SCALING_NODES = 200
ORACLE_NODES = 4000


@dataclass(frozen=True)
class SuiteContext:
    """Inputs shared by the suites.

    `perturb_kappa` scales kappa_n in the forward map of the round trip;
    any nonzero value must make that suite fail.
    """

    n: int = 2
    kappa_n: float = math.pi
    seed: int = 0
    perturb_kappa: float = 0.0


Suite = Callable[[SuiteContext], Outcome]
SUITES: Dict[str, Suite] = {}


def suite(name: str) -> Callable[[Suite], Suite]:
    """Register a suite under `name`."""
    def register(function: Suite) -> Suite:
        SUITES[name] = function
        return function

    return register


def _random_pair(rng: np.random.Generator, n: int,
                 kappa_n: float) -> closedform.WulffPair:
    r1, r2 = rng.uniform(0.2, 1.5, 2)
    return closedform.WulffPair(n, float(r1), float(r2), kappa_n)


@suite('gauge')
def gauge_identities(context: SuiteContext) -> Outcome:
    """Polar identities, homogeneity, bounds & normalization in 2-D."""
    rng = np.random.default_rng(context.seed)
    gauges = [
        euclidean(2),
        p_norm(2, 4.0),
        p_norm(2, 1.5),
        ellipse([[4.0, 1.0], [1.0, 2.0]]),
    ]
    worst = 0.0

    for g in gauges:
        points = rng.standard_normal((1000, 2))
        for point in points:
            worst = max(worst, *identity_residuals(g, point))

        t = rng.uniform(-3, 3, 1000)
        values = gauge_value(g, points)
        scaled = gauge_value(g, points * t[:, None])
        if np.max(np.abs(scaled - np.abs(t) * values)) > 1e-12 * np.max(
                values * np.abs(t)):
            return False, f'homogeneity fails for {g.spec}'

        ratios = values / np.linalg.norm(points, axis=1)
        low, high = g.bounds
        if ratios.min() < low * (1 - 1e-12) or ratios.max() > high * (
                1 + 1e-12):
            return False, f'bounds fail for {g.spec}'

        area = measure_by_quadrature(g)
        if abs(area - unit_ball_volume(2)) > 1e-6 * unit_ball_volume(2):
            return False, f'normalization fails for {g.spec}: {area}'

    return worst <= 1e-9, f'max identity residual {worst:.3e}'


@suite('bessel')
def bessel_identities(context: SuiteContext) -> Outcome:
    """Recurrence, integral identity & zero orderings."""
    rng = np.random.default_rng(context.seed)
    worst = 0.0

    for nu, x in zip(rng.uniform(1, 5, 1000), rng.uniform(0.1, 30, 1000)):
        residual = abs(
            specfun.bessel_j(nu - 1, x) + specfun.bessel_j(nu + 1, x)
            - 2 * nu / x * specfun.bessel_j(nu, x))
        worst = max(worst, residual / max(1.0, abs(specfun.bessel_j(nu, x))))
    if worst > 1e-10:
        return False, f'recurrence residual {worst:.3e}'

    for n in (2, 3, 4):
        k, r = rng.uniform(0.5, 4, 2)
        integral, _ = integrate.quad(
            lambda s, n=n, k=k: special.jv(n / 2 - 1, k * s) * s ** (n / 2),
            0, r, epsabs=0, epsrel=1e-12)
        closed = r ** (n / 2) * specfun.bessel_j(n / 2, k * r) / k
        if abs(integral - closed) > 1e-8 * max(1.0, abs(closed)):
            return False, f'integral identity fails for n = {n}'

    for n in range(2, 9):
        zeros = [specfun.bessel_j_first_zero(n / 2 + shift)
                 for shift in (-1, 0, 1)]
        if not zeros[0] < zeros[1] < zeros[2]:
            return False, f'zeros do not interlace for n = {n}'
        if not zeros[1] > 2 ** (1 / n) * zeros[0]:
            return False, f'j_(n/2) <= 2^(1/n) j_(n/2-1) for n = {n}'

    if abs(specfun.bessel_j_first_zero(0.5) - math.pi) > 1e-11:
        return False, 'j_(1/2,1) differs from pi'

    return True, f'recurrence residual {worst:.3e}'


@suite('theta')
def theta_lower_bound(context: SuiteContext) -> Outcome:
    """theta(R1, R2) >= theta* over a grid of normalized pairs."""
    # pylint: disable=unused-argument
    worst = math.inf

    for n in (2, 3, 4):
        bound = closedform.theta_star(n).theta_star
        for ratio in np.linspace(0.05, 1.0, 40):
            r2 = (1 + ratio ** n) ** (-1 / n)
            gap = closedform.theta_root(n, ratio * r2, r2) - bound
            worst = min(worst, gap)

    return worst >= -1e-9, f'smallest theta - theta* = {worst:.3e}'


@suite('roundtrip')
def roundtrip(context: SuiteContext) -> Outcome:
    """alpha_eta followed by the eta inversion returns eta."""
    rng = np.random.default_rng(context.seed)
    n, kappa = context.n, context.kappa_n
    worst = 0.0

    for _ in range(100):
        pair = _random_pair(rng, n, kappa)
        low = closedform.faber_krahn_level(n, kappa, pair.volume)
        high = closedform.saturated_level(n, kappa, pair.volume)
        eta = float(rng.uniform(low, high))
        pole = (specfun.bessel_j_first_zero(n / 2 - 1) / pair.r2) ** 2
        if abs(eta - pole) < 1e-6 * pole:
            continue

        alpha = closedform.alpha_for_eta(
            n, kappa * (1 + context.perturb_kappa), pair.r1, pair.r2, eta)
        result = closedform.nonlocal_pair_eigenvalue(
            n, kappa, pair.r1, pair.r2, alpha, include_nonradial=False)
        worst = max(worst, abs(result.eigenvalue - eta) / eta)

    return worst <= 1e-9, f'max relative round-trip error {worst:.3e}'


@suite('scaling')
def scaling_law(context: SuiteContext) -> Outcome:
    """lambda(alpha, t Omega) = t^-2 lambda(t^(n+2) alpha, Omega).

    Checked on the closed form & on the radial finite volumes, whose
    grids scale with the sets.
    """
    rng = np.random.default_rng(context.seed)
    n, kappa = context.n, context.kappa_n
    worst = 0.0

    def closed(pair: closedform.WulffPair, alpha: float) -> float:
        return closedform.nonlocal_pair_eigenvalue(
            n, kappa, pair.r1, pair.r2, alpha).eigenvalue

    def discrete(pair: closedform.WulffPair, alpha: float) -> float:
        return radial_pair_nonlocal_solve(
            n, kappa, pair.r1, pair.r2, alpha, SCALING_NODES)[0]

    for _ in range(50):
        pair = _random_pair(rng, n, kappa)
        alpha = float(rng.uniform(-20, 60))
        t = float(rng.uniform(0.5, 2))
        weight = closedform.rescaled_weight(n, t, alpha)

        for solve in (closed, discrete):
            direct = solve(pair.rescaled(t), alpha)
            mapped = closedform.rescale(t, solve(pair, weight))
            worst = max(
                worst, abs(direct - mapped) / max(1.0, abs(direct)))

    return worst <= 1e-9, f'max relative scaling error {worst:.3e}'


@suite('monotonicity')
def monotonicity(context: SuiteContext) -> Outcome:
    """lambda(alpha) <= lambda(alpha + e) <= lambda(alpha) + V e."""
    rng = np.random.default_rng(context.seed)
    n, kappa = context.n, context.kappa_n

    for _ in range(100):
        pair = _random_pair(rng, n, kappa)
        alpha = float(rng.uniform(-20, 60))
        step = float(rng.uniform(0.01, 5))

        before = closedform.nonlocal_pair_eigenvalue(
            n, kappa, pair.r1, pair.r2, alpha).eigenvalue
        after = closedform.nonlocal_pair_eigenvalue(
            n, kappa, pair.r1, pair.r2, alpha + step).eigenvalue
        slack = 1e-10 * max(1.0, abs(before))

        if not before - slack <= after <= before + pair.volume * step + slack:
            return False, (
                f'violated at {pair}, alpha = {alpha}, step = {step}')

    return True, '100 samples'


@suite('oracle')
def radial_oracle(context: SuiteContext) -> Outcome:
    """Closed-form pair eigenvalues against the radial finite volumes."""
    rng = np.random.default_rng(context.seed)
    n, kappa = context.n, context.kappa_n
    worst = 0.0

    radii = np.sort(rng.uniform(0.2, 1.5, (2, 5)), axis=1)
    alphas = np.sort(rng.uniform(-10, 50, 5))

    for r1 in radii[0]:
        for r2 in radii[1]:
            for alpha in alphas:
                closed = closedform.nonlocal_pair_eigenvalue(
                    n, kappa, r1, r2, alpha,
                    include_nonradial=False).eigenvalue
                discrete, _, _ = radial_pair_nonlocal_solve(
                    n, kappa, r1, r2, alpha, ORACLE_NODES)
                worst = max(
                    worst, abs(discrete - closed) / max(1.0, abs(closed)))

    return worst <= 1e-4, f'max relative disagreement {worst:.3e}'


@suite('critical-alpha')
def critical_weight(context: SuiteContext) -> Outcome:
    """Displayed alpha_c against the vanishing-set limit, n = 2 & 3."""
    # pylint: disable=unused-argument
    worst = 0.0

    for n in (2, 3):
        kappa = unit_ball_volume(n)
        formula = closedform.critical_alpha(n, kappa)
        oracle = closedform.critical_alpha_oracle(n, kappa)
        if not formula > 0:
            return False, f'alpha_c = {formula} for n = {n}'
        worst = max(worst, abs(formula - oracle) / formula)

    return worst <= 1e-6, f'max relative difference {worst:.3e}'


@suite('polya-szego')
def polya_szego(context: SuiteContext) -> Outcome:
    """Energy does not grow under convex rearrangement (O(h) slack)."""
    rng = np.random.default_rng(context.seed)
    g = euclidean(2)
    grid = disk_grid(math.pi, 1 / 24)
    slack = 3 * grid.h

    for _ in range(10):
        cx, cy = rng.uniform(-0.4, 0.4, 2)
        width = float(rng.uniform(0.1, 0.5))

        def bump(x: np.ndarray, y: np.ndarray) -> np.ndarray:
            # pylint: disable=cell-var-from-loop
            envelope = np.clip(1 - x ** 2 - y ** 2, 0, None)
            return envelope * np.exp(
                -((x - cx) ** 2 + (y - cy) ** 2) / width)

        lhs, rhs = polya_szego_gap(GridFunction.from_function(grid, bump), g)
        if lhs < rhs * (1 - slack):
            return False, f'energy {lhs} below rearranged {rhs}'

    return True, f'10 bumps, slack {slack:.3e}'


def suite_names() -> List[str]:
    """Return the registered suite names in order."""
    return list(SUITES)
