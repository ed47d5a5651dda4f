"""Closed-form first eigenvalues on Wulff sets & unions of two Wulff sets.

Every formula reduces to Bessel functions of order nu = n/2 - 1 & its
neighbours. Pairs are handled through the inverse weight

    F(eta) = 1 / alpha_eta
           = sum_i kappa R_i^n / eta
                   - n kappa R_i^(n-1) J_(n/2)(k R_i) / (k^3 J_nu(k R_i)),

with k = sqrt(eta). F is strictly decreasing on each branch between its
poles, so the eigenvalue for a given weight is the root of
F(eta) = 1 / alpha on the branch selected by the sign of alpha:

    alpha > 0      eta in ((j_nu / R2)^2, theta^2)
    alpha_0 < alpha < 0      eta in (0, (j_nu / R2)^2)
    alpha <= alpha_0         eta <= 0, continued through I_nu

where theta is the root of the twisted coupling equation & alpha_0 = 1/F(0).
"""

from dataclasses import dataclass
from functools import lru_cache
import logging
import math
from typing import Callable, Optional, Tuple

import numpy as np
from scipy import special  # type: ignore
from scipy.optimize import brentq  # type: ignore

from .errors import (
    BracketError,
    EtaOutOfRange,
    PoleEncountered,
    SolverError,
)
from .specfun import (
    ZERO_RTOL,
    bessel_j,
    bessel_j_first_zero,
    bessel_j_zero,
    bessel_ratio,
    scaled_bessel_j,
)
from .variational import RadialProfile

LOGGER = logging.getLogger(__name__)

LOCAL = 'local'
TWISTED_LARGE_BALL = 'twisted-large-ball'
TWISTED_THETA = 'twisted-theta'
NONLOCAL = 'nonlocal'
SATURATED = 'saturated'
REGIMES = (LOCAL, TWISTED_LARGE_BALL, TWISTED_THETA, NONLOCAL, SATURATED)

# radii closer than this ratio are treated as equal
EQUAL_RATIO = 1 - 1e-6
BRACKET_MARGIN = 1e-9
# relative root tolerance of every eta inversion, scaled by `rtol`
DEFAULT_RTOL = 1e-13
# below this k R the inverse weight is summed as a power series in eta
SERIES_CUTOFF = 1e-2
MAX_EXPANSIONS = 1100
# |alpha| V below this fraction of the local level leaves it unchanged
NEGLIGIBLE_WEIGHT = 1e-14
# split used by the critical weight oracle before extrapolation
ORACLE_SPLIT = 1e-6


#
# DATA
#

@dataclass(frozen=True)
class WulffPair:
    """Two disjoint Wulff sets of radii r1 <= r2 in dimension n.

    The constructor sorts the radii, so `WulffPair(n, 2, 1, k)` and
    `WulffPair(n, 1, 2, k)` describe the same domain.
    """

    n: int
    r1: float
    r2: float
    kappa_n: float

    def __post_init__(self) -> None:
        if self.n < 2:
            raise ValueError(f'Dimension must be at least 2, got {self.n}.')
        if not self.kappa_n > 0:
            raise ValueError(f'kappa_n must be positive, got {self.kappa_n}.')
        if min(self.r1, self.r2) < 0 or not math.isfinite(self.r1 + self.r2):
            raise ValueError(
                f'Radii must be finite & nonnegative, got '
                f'({self.r1}, {self.r2}).')
        if max(self.r1, self.r2) <= 0:
            raise ValueError('At least one radius must be positive.')

        if self.r1 > self.r2:
            small, large = self.r2, self.r1
            # frozen dataclass, so bypass the generated __setattr__
            object.__setattr__(self, 'r1', small)
            object.__setattr__(self, 'r2', large)

    @classmethod
    def from_split(cls, n: int, kappa_n: float, volume: float,
                   s: float) -> 'WulffPair':
        """Build the pair whose smaller set holds the fraction s of V."""
        if not 0 <= s <= 0.5:
            raise ValueError(f'Mass split must lie in [0, 1/2], got {s}.')

        return cls(
            n=n,
            r1=(s * volume / kappa_n) ** (1 / n),
            r2=((1 - s) * volume / kappa_n) ** (1 / n),
            kappa_n=kappa_n)

    @property
    def volume(self) -> float:
        """Return kappa_n (r1^n + r2^n)."""
        return self.kappa_n * (self.r1 ** self.n + self.r2 ** self.n)

    @property
    def ratio(self) -> float:
        """Return r1 / r2 in [0, 1]."""
        return self.r1 / self.r2

    @property
    def split(self) -> float:
        """Return the mass fraction of the smaller set."""
        return self.r1 ** self.n / (self.r1 ** self.n + self.r2 ** self.n)

    @property
    def equal(self) -> bool:
        """Whether the radii are equal up to EQUAL_RATIO."""
        return self.ratio > EQUAL_RATIO

    def rescaled(self, t: float) -> 'WulffPair':
        """Return a new pair with both radii multiplied by t."""
        if not t > 0:
            raise ValueError(f'Scale factor must be positive, got {t}.')

        return WulffPair(self.n, t * self.r1, t * self.r2, self.kappa_n)

    def normalized(self) -> Tuple['WulffPair', float]:
        """Return the pair rescaled to r1^n + r2^n = 1, & the factor t.

        The original pair is `normalized.rescaled(t)`.
        """
        t = (self.r1 ** self.n + self.r2 ** self.n) ** (1 / self.n)
        return self.rescaled(1 / t), t


@dataclass(frozen=True)
class EigenResult:
    """A first eigenvalue with its regime & eigenfunction constants.

    `c1`, `c2` are the amplitudes of the eigenfunction on the smaller &
    larger set, `c` the constant right-hand side of the radial equation
    u'' + (n - 1)/rho u' + lambda u = c. `extended` marks values computed
    outside the interval where the weight inversion is certified.
    """

    eigenvalue: float
    regime: str
    c1: Optional[float] = None
    c2: Optional[float] = None
    c: Optional[float] = None
    zero_average: bool = False
    extended: bool = False


@dataclass(frozen=True)
class ThetaStar:
    """Universal lower bound theta* of the coupling root & ratio threshold."""

    theta_star: float
    c_n: float


def _nu(n: int) -> float:
    return n / 2 - 1


def faber_krahn_level(n: int, kappa_n: float, volume: float) -> float:
    """Return kappa_n^(2/n) j_nu^2 / V^(2/n), the first level on one set."""
    j = bessel_j_first_zero(_nu(n))
    return (kappa_n / volume) ** (2 / n) * j ** 2


def saturated_level(n: int, kappa_n: float, volume: float) -> float:
    """Return 2^(2/n) times the Faber-Krahn level of the same volume."""
    return 2 ** (2 / n) * faber_krahn_level(n, kappa_n, volume)


def rescale(t: float, lambda_of_rescaled_weight: float) -> float:
    """Map lambda(t^(n+2) alpha, Omega) to lambda(alpha, t Omega).

    The eigenvalue scales as t^-2 once the weight absorbs t^(n+2), see
    `rescaled_weight`: lambda(alpha, t Omega) = t^-2 lambda(t^(n+2) alpha,
    Omega).
    """
    if not t > 0:
        raise ValueError(f'Scale factor must be positive, got {t}.')

    return lambda_of_rescaled_weight / t ** 2


def rescaled_weight(n: int, t: float, alpha: float) -> float:
    """Return t^(n+2) alpha, the weight to evaluate on the unscaled set."""
    return t ** (n + 2) * alpha


#
# LOCAL & TWISTED PROBLEMS
#

def local_wulff_eigenvalue(n: int, kappa_n: float, r: float) -> EigenResult:
    """Return (j_nu / R)^2, the first Dirichlet eigenvalue of W_R."""
    if not r > 0:
        raise ValueError(f'Radius must be positive, got {r}.')

    j = bessel_j_first_zero(_nu(n))
    eigenvalue = (j / r) ** 2
    LOGGER.debug(
        f'local level n={n}, R={r}: {eigenvalue} '
        f'(volume {kappa_n * r ** n})')

    return EigenResult(eigenvalue=eigenvalue, regime=LOCAL, c=0.0)


def _coupling(n: int, a: float, b: float) -> Callable[[float], float]:
    """Coupling equation multiplied through by J_nu(theta a) J_nu(theta b).

    The product has no poles & changes sign at the coupling root.
    """
    nu = _nu(n)
    upper = n / 2 + 1

    def equation(theta: float) -> float:
        return float(
            a ** n * special.jv(upper, theta * a) * special.jv(nu, theta * b)
            + b ** n * special.jv(upper, theta * b)
            * special.jv(nu, theta * a))

    return equation


@lru_cache(maxsize=4096)
def _normalized_theta(n: int, a: float, b: float) -> float:
    """Coupling root for a normalized pair a^n + b^n = 1, 0 <= a <= b."""
    nu = _nu(n)
    j_first = bessel_j_first_zero(nu)

    if a == 0:
        return bessel_j_first_zero(n / 2 + 1) / b

    if a / b > EQUAL_RATIO:
        return 2 ** (1 / n) * j_first

    low = j_first / b * (1 + BRACKET_MARGIN)
    high = min(j_first / a, bessel_j_zero(nu, 2) / b) * (1 - BRACKET_MARGIN)
    equation = _coupling(n, a, b)

    f_low, f_high = equation(low), equation(high)
    if not f_low > 0 > f_high:
        raise BracketError(
            f'Coupling equation does not change sign on [{low}, {high}] '
            f'for radii ({a}, {b}): values {f_low}, {f_high}.')

    LOGGER.debug(f'theta bracket for ({a}, {b}): [{low}, {high}]')

    return float(brentq(
        equation, low, high, xtol=1e-15, rtol=ZERO_RTOL, maxiter=200))


def _radial_theta(pair: WulffPair) -> float:
    """Root of the coupling equation; j_(n/2+1) / r2 when r1 = 0."""
    normal, t = pair.normalized()
    theta = _normalized_theta(pair.n, normal.r1, normal.r2)
    return math.sqrt(rescale(t, theta ** 2))


def theta_root(n: int, r1: float, r2: float) -> float:
    """Return the first positive root theta of the coupling equation.

    R1^n J_(n/2+1)(theta R1) / J_nu(theta R1)
        + R2^n J_(n/2+1)(theta R2) / J_nu(theta R2) = 0

    The root lies between the first pole j_nu / R2 & the next singularity;
    near-equal radii return theta* analytically.
    """
    pair = WulffPair(n, r1, r2, 1.0)

    if pair.r1 == 0:
        raise ValueError(
            'Coupling root needs two nonempty sets; use '
            'twisted_pair_eigenvalue for a single Wulff set.')

    return _radial_theta(pair)


def theta_star(n: int) -> ThetaStar:
    """Return theta* = 2^(1/n) j_nu & the threshold ratio c_n."""
    return ThetaStar(
        theta_star=2 ** (1 / n) * bessel_j_first_zero(_nu(n)),
        c_n=threshold_ratio(n))


@lru_cache(maxsize=None)
def threshold_ratio(n: int) -> float:
    """Return c_n, the ratio r1/r2 where theta^2 = (j_(n/2) / r2)^2.

    Below c_n the twisted value is that of the larger set alone.
    """
    if n < 2:
        raise ValueError(f'Dimension must be at least 2, got {n}.')

    j_half = bessel_j_first_zero(n / 2)

    def crossing(q: float) -> float:
        b = (1 + q ** n) ** (-1 / n)
        return _normalized_theta(n, q * b, b) * b - j_half

    low, high = 1e-6, 1 - 1e-6
    try:
        ratio = brentq(crossing, low, high, xtol=1e-15, rtol=ZERO_RTOL)
    except ValueError as err:
        raise BracketError(
            f'Threshold ratio not bracketed for n = {n}.') from err

    LOGGER.debug(f'c_{n} = {ratio}')

    return float(ratio)


def _twisted_coefficients(n: int, r1: float, r2: float,
                          theta: float) -> Tuple[float, float, float]:
    """Amplitudes c1, c2 & multiplier c of the two-set twisted mode.

    Set i carries c_i (K(rho) - K(R_i)) with K(rho) = rho^(-nu) J_nu(theta
    rho); the amplitudes have opposite signs so the averages cancel.
    """
    upper = n / 2 + 1
    nu = _nu(n)
    eigenvalue = theta ** 2

    c1 = r2 ** upper * float(bessel_j(upper, theta * r2))
    c2 = -r1 ** upper * float(bessel_j(upper, theta * r1))
    c = -c1 * eigenvalue * r1 ** (-nu) * float(bessel_j(nu, theta * r1))

    return c1, c2, c


def twisted_pair_eigenvalue(n: int, r1: float, r2: float) -> EigenResult:
    """Return the first zero-average eigenvalue of W_R1 U W_R2.

    Pairs with r1 / r2 < c_n keep the antisymmetric mode of the larger set,
    (j_(n/2) / r2)^2; all others take theta^2 from the coupling equation.
    """
    pair = WulffPair(n, r1, r2, 1.0)
    c_n = threshold_ratio(n)

    if pair.ratio < c_n:
        eigenvalue = (bessel_j_first_zero(n / 2) / pair.r2) ** 2
        return EigenResult(
            eigenvalue=eigenvalue,
            regime=TWISTED_LARGE_BALL,
            c=0.0,
            zero_average=True)

    theta = _radial_theta(pair)
    c1, c2, c = _twisted_coefficients(n, pair.r1, pair.r2, theta)

    return EigenResult(
        eigenvalue=theta ** 2,
        regime=TWISTED_THETA,
        c1=c1,
        c2=c2,
        c=c,
        zero_average=True)


#
# NONLOCAL PROBLEM
#

# Rayleigh sums sum_m j_(nu,m)^(-2k) for k = 2, 3, 4
def _rayleigh_sums(nu: float) -> Tuple[float, float, float]:
    second = 1 / (16 * (nu + 1) ** 2 * (nu + 2))
    third = 1 / (32 * (nu + 1) ** 3 * (nu + 2) * (nu + 3))
    fourth = (5 * nu + 11) / (
        256 * (nu + 1) ** 4 * (nu + 2) ** 2 * (nu + 3) * (nu + 4))
    return second, third, fourth


def _set_weight(n: int, kappa_n: float, r: float, eta: float,
                allow_pole: bool) -> float:
    """Contribution of one Wulff set W_r to the inverse weight F(eta)."""
    if r == 0:
        return 0.0

    nu = _nu(n)
    x = math.sqrt(abs(eta)) * r

    if x < SERIES_CUTOFF:
        second, third, fourth = _rayleigh_sums(nu)
        return -2 * n * kappa_n * r ** (n + 2) * (
            second + third * r ** 2 * eta + fourth * r ** 4 * eta ** 2)

    if eta < 0:
        s = math.sqrt(-eta)
        # exponentially scaled I keeps the ratio finite for large s r
        ratio = special.ive(nu + 1, s * r) / special.ive(nu, s * r)
        return (kappa_n * r ** n / eta
                + n * kappa_n * r ** (n - 1) * ratio / s ** 3)

    ratio, pole = bessel_ratio(n / 2, nu, x)
    if pole and not allow_pole:
        raise PoleEncountered(
            f'sqrt(eta) R = {x} is at a zero of J_{nu} (R = {r}).')

    return (kappa_n * r ** n / eta
            - n * kappa_n * r ** (n - 1) * ratio / eta ** 1.5)


def _inverse_weight(pair: WulffPair, eta: float,
                    allow_pole: bool = True) -> float:
    """Return F(eta) = 1 / alpha_eta for the pair."""
    return (
        _set_weight(pair.n, pair.kappa_n, pair.r1, eta, allow_pole)
        + _set_weight(pair.n, pair.kappa_n, pair.r2, eta, allow_pole))


def alpha_for_eta(n: int, kappa_n: float, r1: float, r2: float,
                  eta: float, extended: bool = False) -> float:
    """Return the weight alpha_eta making eta the first pair eigenvalue.

    eta must lie strictly between the Faber-Krahn & saturated levels of the
    pair's volume unless `extended` is set, which admits any eta. The sign
    is reported as computed; a zero inverse weight is an infinite alpha.
    """
    pair = WulffPair(n, r1, r2, kappa_n)
    low = faber_krahn_level(n, kappa_n, pair.volume)
    high = saturated_level(n, kappa_n, pair.volume)

    if not extended and not low < eta < high:
        raise EtaOutOfRange(
            f'eta = {eta} outside ({low}, {high}); pass extended=True to '
            'evaluate beyond the certified interval.')

    inverse = _inverse_weight(pair, eta, allow_pole=False)

    if extended and not low < eta < high:
        LOGGER.debug(f'alpha_eta evaluated in extended mode at eta = {eta}')

    if inverse == 0:
        return math.inf

    return 1 / inverse


def _nonlocal_coefficients(pair: WulffPair,
                           eta: float) -> Tuple[float, float, float]:
    """Amplitudes on both sets & multiplier of the nonlocal eigenfunction."""
    nu = _nu(pair.n)
    k = math.sqrt(eta)
    kernel_small = float(scaled_bessel_j(nu, k, pair.r1))
    kernel_large = float(scaled_bessel_j(nu, k, pair.r2))

    return kernel_large, kernel_small, -eta * kernel_small * kernel_large


def _solve_branch(equation: Callable[[float], float], pole: float,
                  far: float, rtol: float) -> float:
    """Find the root of a decreasing-to-pole equation on (pole, far].

    Approaches the pole geometrically until the equation's sign differs
    from its sign at `far`, ending one float away from the pole. A root
    closer to the pole than that is returned as the pole itself.
    """
    f_far = equation(far)
    nearest = float(np.nextafter(pole, far))
    approach = [pole + fraction * (far - pole)
                for fraction in np.logspace(-3, -15, 5)]

    for near in approach + [nearest]:
        if abs(near - pole) < abs(nearest - pole):
            continue
        f_near = equation(near)
        if not math.isfinite(f_near):
            raise BracketError(
                f'Equation is not finite at {near} next to pole {pole}; '
                'the pole bracket is straddled.')
        if f_near * f_far < 0:
            low, high = sorted((near, far))
            scale = max(abs(low), abs(high))
            try:
                return float(brentq(
                    equation, low, high,
                    xtol=rtol * scale, rtol=ZERO_RTOL, maxiter=500))
            except (ValueError, RuntimeError) as err:
                raise SolverError(
                    f'eta inversion failed on [{low}, {high}].') from err
        far, f_far = near, f_near

    LOGGER.debug(f'Root within one float of pole {pole}')

    return pole


def nonlocal_pair_eigenvalue(n: int, kappa_n: float, r1: float, r2: float,
                             alpha: float, include_nonradial: bool = True,
                             rtol: float = DEFAULT_RTOL) -> EigenResult:
    """Return the first eigenvalue of the nonlocal problem on W_R1 U W_R2.

    alpha = inf gives the twisted value. With `include_nonradial` the
    zero-average antisymmetric mode of the larger set, an eigenvalue for
    every alpha, caps the radial branch for alpha > 0; without it the
    result is the first radial eigenvalue only.
    """
    pair = WulffPair(n, r1, r2, kappa_n)
    volume = pair.volume
    large_ball = (bessel_j_first_zero(n / 2) / pair.r2) ** 2

    if math.isnan(alpha) or alpha == -math.inf:
        raise ValueError(f'Weight must be a real number or +inf, got {alpha}.')

    if pair.equal and alpha >= 0:
        return EigenResult(
            eigenvalue=saturated_level(n, kappa_n, volume),
            regime=SATURATED,
            zero_average=True)

    local = local_wulff_eigenvalue(n, kappa_n, pair.r2)
    negligible = abs(alpha) * volume <= NEGLIGIBLE_WEIGHT * local.eigenvalue
    if alpha == 0 or negligible:
        return local

    if alpha == math.inf:
        if include_nonradial:
            return twisted_pair_eigenvalue(n, pair.r1, pair.r2)
        theta = _radial_theta(pair)
        return EigenResult(
            eigenvalue=theta ** 2, regime=TWISTED_THETA, zero_average=True)

    pole = local.eigenvalue
    target = 1 / alpha

    def equation(eta: float) -> float:
        return _inverse_weight(pair, eta) - target

    if alpha > 0:
        ceiling = _radial_theta(pair) ** 2
        if equation(ceiling) >= 0:
            eta = ceiling
        else:
            eta = _solve_branch(equation, pole, ceiling, rtol)
    else:
        floor = 0.5 * pole
        step = pole
        for _ in range(MAX_EXPANSIONS):
            if equation(floor) > 0:
                break
            floor -= step
            step *= 2
        else:
            raise BracketError(
                f'No lower bracket for alpha = {alpha} below eta = {floor}.')
        eta = _solve_branch(equation, pole, floor, rtol)

    if include_nonradial and alpha > 0 and eta > large_ball:
        return EigenResult(
            eigenvalue=large_ball,
            regime=TWISTED_LARGE_BALL,
            c=0.0,
            zero_average=True)

    LOGGER.debug(f'alpha = {alpha} on {pair}: eta = {eta}')

    if eta > 0:
        c1, c2, c = _nonlocal_coefficients(pair, eta)
    else:
        c1 = c2 = c = None

    return EigenResult(
        eigenvalue=eta,
        regime=NONLOCAL,
        c1=c1,
        c2=c2,
        c=c,
        extended=alpha < 0)


#
# CRITICAL WEIGHT
#

def critical_alpha(n: int, kappa_n: float) -> float:
    """Return alpha_c, the weight where the optimal shape splits in two.

    alpha_c = t^3 kappa_n^(2/n) J_nu(t) / (t J_nu(t) - n J_(n/2)(t))
    with t = 2^(1/n) j_nu. The condition compares alpha |Omega|^(1+2/n)
    against alpha_c, so alpha_c does not depend on the volume.
    """
    if n < 2:
        raise ValueError(f'Dimension must be at least 2, got {n}.')

    nu = _nu(n)
    t = 2 ** (1 / n) * bessel_j_first_zero(nu)
    j_t = float(bessel_j(nu, t))
    denominator = t * j_t - n * float(bessel_j(n / 2, t))

    if abs(denominator) < 1e-12:
        raise SolverError(
            f'Critical weight denominator vanishes for n = {n}.')

    return t ** 3 * kappa_n ** (2 / n) * j_t / denominator


def critical_alpha_oracle(n: int, kappa_n: float,
                          split: float = ORACLE_SPLIT) -> float:
    """Return alpha_c as the limit of alpha_eta as the smaller set vanishes.

    Evaluates alpha_eta at the saturated level of volume 1 for the mass
    splits s & s/2, then removes the linear term by Richardson
    extrapolation.
    """
    eta = saturated_level(n, kappa_n, 1.0)

    def weight(s: float) -> float:
        pair = WulffPair.from_split(n, kappa_n, 1.0, s)
        return alpha_for_eta(
            n, kappa_n, pair.r1, pair.r2, eta, extended=True)

    coarse, fine = weight(split), weight(split / 2)
    LOGGER.debug(f'critical weight oracle: {coarse} at s, {fine} at s/2')

    return 2 * fine - coarse


#
# EIGENFUNCTIONS
#

def radial_eigenfunction_profile(n: int, r: float, eigenvalue: float,
                                 amplitude: float,
                                 grid_points: int) -> RadialProfile:
    """Sample amplitude (K(rho) - K(R)), K(rho) = rho^(1-n/2) J_nu(k rho).

    Uses a uniform grid on [0, R]; the value at rho = 0 is the finite limit
    (k/2)^nu / Gamma(n/2) & the value at R is exactly zero.
    """
    if grid_points < 2:
        raise ValueError(f'Need at least 2 grid points, got {grid_points}.')
    if not r > 0:
        raise ValueError(f'Radius must be positive, got {r}.')

    nu = _nu(n)
    k = math.sqrt(eigenvalue)
    rho = np.linspace(0.0, r, grid_points)
    values = amplitude * (
        np.asarray(scaled_bessel_j(nu, k, rho))
        - float(scaled_bessel_j(nu, k, r)))
    values[-1] = 0.0

    return RadialProfile(n=n, radius=r, rho=rho, values=values)


def pair_eigenfunction_profiles(
    n: int,
    r1: float,
    r2: float,
    eta: float,
    grid_points: int
) -> Tuple[Optional[RadialProfile], RadialProfile]:
    """Return the nonlocal eigenfunction at level eta on both sets.

    The first profile lives on W_R1 (None when r1 = 0), the second on
    W_R2; both solve the radial equation with the same constant c.
    """
    pair = WulffPair(n, r1, r2, 1.0)
    amplitude_small, amplitude_large, _ = _nonlocal_coefficients(pair, eta)

    large = radial_eigenfunction_profile(
        n, pair.r2, eta, amplitude_large, grid_points)

    if pair.r1 == 0:
        return None, large

    small = radial_eigenfunction_profile(
        n, pair.r1, eta, amplitude_small, grid_points)

    return small, large
