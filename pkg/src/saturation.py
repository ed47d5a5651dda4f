"""Shape optimization of the first eigenvalue over Wulff pairs.

At fixed volume V the optimal pair is a single Wulff set while
alpha V^(1+2/n) stays below the critical weight alpha_c, & two equal
Wulff sets beyond it, where the minimum saturates at
2^(2/n) kappa_n^(2/n) j_nu^2 / V^(2/n).
"""

from dataclasses import dataclass, field
import logging
import math
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize_scalar  # type: ignore

from .closedform import (
    DEFAULT_RTOL,
    EigenResult,
    WulffPair,
    critical_alpha,
    nonlocal_pair_eigenvalue,
    saturated_level,
)
from .errors import SolverError
from .gauge import Gauge, wulff_measure
from .runner import run_all
from .variational import GridFunction, sign_split

LOGGER = logging.getLogger(__name__)

SCAN_SEEDS = 64
# relative gap below which two splits count as equally good
TIE_TOLERANCE = 1e-12
MONOTONE_TOLERANCE = 1e-10
BOUND_TOLERANCE = 1e-8


@dataclass(frozen=True)
class ShapeSplit:
    """Mass fraction s in [0, 1/2] held by the smaller Wulff set."""

    s: float

    def __post_init__(self) -> None:
        if not 0 <= self.s <= 0.5:
            raise ValueError(f'Mass split must lie in [0, 1/2], got {self.s}.')

    def pair(self, n: int, kappa_n: float, volume: float) -> WulffPair:
        """Return the Wulff pair of volume V with this split."""
        return WulffPair.from_split(n, kappa_n, volume, self.s)


@dataclass(frozen=True)
class CurveSample:
    """One point of the saturation curve; `error` is set on failure."""

    alpha: float
    lambda_min: float
    split: float
    regime: str
    error: Optional[str] = None


@dataclass
class SaturationCurve:
    """Minimum eigenvalue over Wulff pairs of volume V, per weight."""

    volume: float
    n: int
    kappa_n: float
    critical_alpha_scaled: float
    samples: List[CurveSample] = field(default_factory=list)
    invariants_ok: bool = True

    @property
    def transition_alpha(self) -> Optional[float]:
        """Smallest sampled alpha whose optimum is the equal pair."""
        for sample in self.samples:
            if sample.error is None and sample.split == 0.5:
                return sample.alpha
        return None


def _split_eigenvalue(n: int, kappa_n: float, volume: float, alpha: float,
                      s: float, rtol: float) -> EigenResult:
    pair = ShapeSplit(s).pair(n, kappa_n, volume)

    try:
        return nonlocal_pair_eigenvalue(
            n, kappa_n, pair.r1, pair.r2, alpha, rtol=rtol)
    except SolverError as err:
        raise SolverError(
            f'Pair eigenvalue failed at split s = {s}, alpha = {alpha}: '
            f'{err}') from err


def _better(candidate: Tuple[float, float],
            incumbent: Tuple[float, float]) -> bool:
    """Compare (s, lambda); near ties go to the smaller split."""
    s, value = candidate
    best_s, best_value = incumbent
    gap = TIE_TOLERANCE * max(abs(value), abs(best_value))

    if value < best_value - gap:
        return True
    if value <= best_value + gap:
        return s < best_s
    return False


def optimal_pair(n: int, kappa_n: float, volume: float, alpha: float,
                 rtol: float = DEFAULT_RTOL) -> Tuple[ShapeSplit, EigenResult]:
    """Return the best split & its eigenvalue result.

    A 64-point scan of [0, 1/2] (endpoints included) guards against
    several local minima; the best scan point is refined by bounded Brent
    search on its neighbouring interval.
    """
    if not volume > 0:
        raise ValueError(f'Volume must be positive, got {volume}.')

    def value(s: float) -> float:
        return _split_eigenvalue(
            n, kappa_n, volume, alpha, s, rtol).eigenvalue

    seeds = np.linspace(0.0, 0.5, SCAN_SEEDS)
    scan = [(float(s), value(float(s))) for s in seeds]

    best = scan[0]
    for candidate in scan[1:]:
        if _better(candidate, best):
            best = candidate

    index = [s for s, _ in scan].index(best[0])
    low = seeds[max(index - 1, 0)]
    high = seeds[min(index + 1, SCAN_SEEDS - 1)]
    refined = minimize_scalar(
        value, bounds=(low, high), method='bounded',
        options={'xatol': 1e-10})
    LOGGER.debug(
        f'alpha = {alpha}: scan best {best}, refined '
        f'({refined.x}, {refined.fun})')

    candidate = (float(refined.x), float(refined.fun))
    if _better(candidate, best):
        best = candidate

    split = ShapeSplit(best[0])
    if split.pair(n, kappa_n, volume).equal:
        split = ShapeSplit(0.5)
    return split, _split_eigenvalue(
        n, kappa_n, volume, alpha, split.s, rtol)


def min_over_pairs(n: int, kappa_n: float, volume: float, alpha: float,
                   rtol: float = DEFAULT_RTOL) -> Tuple[ShapeSplit, float]:
    """Return the split minimizing lambda(alpha, pair) at volume V."""
    split, result = optimal_pair(n, kappa_n, volume, alpha, rtol)
    return split, result.eigenvalue


def theorem_bound(n: int, kappa_n: float, volume: float,
                  alpha: float) -> float:
    """Return the lower bound for lambda(alpha, Omega) with |Omega| = V.

    The single Wulff set value below alpha_c / V^(1+2/n), the saturated
    level above it.
    """
    if not volume > 0:
        raise ValueError(f'Volume must be positive, got {volume}.')
    if alpha < 0:
        raise ValueError(f'The bound is stated for alpha >= 0, got {alpha}.')

    threshold = critical_alpha(n, kappa_n) / volume ** (1 + 2 / n)

    if alpha <= threshold:
        ball = WulffPair.from_split(n, kappa_n, volume, 0.0)
        return nonlocal_pair_eigenvalue(
            n, kappa_n, ball.r1, ball.r2, alpha).eigenvalue

    return saturated_level(n, kappa_n, volume)


def _locally_optimal(curve: SaturationCurve, sample: CurveSample) -> bool:
    """Whether no scan-step neighbour of the sample's split does better."""
    step = 0.5 / (SCAN_SEEDS - 1)
    neighbours = [
        s for s in (sample.split - step, sample.split + step)
        if 0 <= s <= 0.5]
    slack = MONOTONE_TOLERANCE * max(1.0, abs(sample.lambda_min))

    for s in neighbours:
        value = _split_eigenvalue(
            curve.n, curve.kappa_n, curve.volume, sample.alpha, s,
            DEFAULT_RTOL).eigenvalue
        if value < sample.lambda_min - slack:
            LOGGER.warning(
                f'alpha = {sample.alpha}: split {s} gives {value}, below '
                f'the optimum {sample.lambda_min} at {sample.split}.')
            return False

    return True


def _check_invariants(curve: SaturationCurve) -> bool:
    """Log every violated curve invariant & report whether all hold."""
    ok = True
    samples = [sample for sample in curve.samples if sample.error is None]
    plateau = saturated_level(curve.n, curve.kappa_n, curve.volume)

    for before, after in zip(samples, samples[1:]):
        if after.lambda_min < before.lambda_min * (1 - MONOTONE_TOLERANCE):
            LOGGER.warning(
                f'Curve decreases between alpha = {before.alpha} & '
                f'{after.alpha}.')
            ok = False

    for sample in samples:
        if not _locally_optimal(curve, sample):
            ok = False
        if sample.alpha < 0:
            continue
        bound = theorem_bound(
            curve.n, curve.kappa_n, curve.volume, sample.alpha)
        if abs(sample.lambda_min - bound) > BOUND_TOLERANCE * bound:
            LOGGER.warning(
                f'alpha = {sample.alpha}: minimum {sample.lambda_min} '
                f'differs from the bound {bound}.')
            ok = False
        if (sample.alpha >= curve.critical_alpha_scaled
                and abs(sample.lambda_min - plateau)
                > BOUND_TOLERANCE * plateau):
            LOGGER.warning(
                f'alpha = {sample.alpha}: minimum {sample.lambda_min} is '
                f'off the plateau {plateau}.')
            ok = False

    return ok


def saturation_curve(n: int, kappa_n: float, volume: float,
                     alphas: Sequence[float],
                     max_workers: Optional[int] = None,
                     rtol: float = DEFAULT_RTOL) -> SaturationCurve:
    """Tabulate the minimum over Wulff pairs for each alpha.

    Weights are evaluated in parallel; a failing weight yields a sample
    with its error recorded & a NaN eigenvalue, & the curve is still
    returned.
    """
    weights = [float(alpha) for alpha in alphas]
    if any(b < a for a, b in zip(weights, weights[1:])):
        raise ValueError('Weights must be sorted in ascending order.')

    def job(alpha: float) -> Callable[[], Tuple[ShapeSplit, EigenResult]]:
        return lambda: optimal_pair(n, kappa_n, volume, alpha, rtol)

    results = run_all(
        [job(alpha) for alpha in weights], max_workers,
        return_exceptions=True)

    curve = SaturationCurve(
        volume=volume,
        n=n,
        kappa_n=kappa_n,
        critical_alpha_scaled=(
            critical_alpha(n, kappa_n) / volume ** (1 + 2 / n)))

    for alpha, result in zip(weights, results):
        if isinstance(result, BaseException):
            if not isinstance(result, (SolverError, ValueError)):
                raise result
            LOGGER.warning(f'alpha = {alpha} failed: {result}')
            curve.samples.append(CurveSample(
                alpha=alpha, lambda_min=math.nan, split=math.nan,
                regime='error', error=str(result)))
            continue

        split, eigen = result
        curve.samples.append(CurveSample(
            alpha=alpha,
            lambda_min=eigen.eigenvalue,
            split=split.s,
            regime=eigen.regime))

    curve.invariants_ok = _check_invariants(curve)

    return curve


def pair_reduction_bound(u: GridFunction, g: Gauge, alpha: float) -> float:
    """Return lambda(alpha, W+ U W-) for the Wulff sets of |{u>0}|, |{u<0}|.

    Any planar set with a minimizer u satisfies
    lambda(alpha, Omega) >= pair_reduction_bound(u, g, alpha).
    """
    split = sign_split(u)
    if split.positive + split.negative == 0:
        raise ValueError('Pair reduction of the zero function.')

    kappa = wulff_measure(g).kappa_n
    radii = sorted(
        math.sqrt(measure / kappa)
        for measure in (split.positive, split.negative))

    return nonlocal_pair_eigenvalue(
        2, kappa, radii[0], radii[1], alpha).eigenvalue
