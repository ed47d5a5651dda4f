"""Bessel function kernel for the closed-form solvers.

Evaluation of J_nu is delegated to scipy.special; this module owns the
input contract (real order nu >= 0, argument x >= 0), zero location by sign
scan plus Brent refinement, and pole-aware ratios.
"""

from functools import lru_cache
import logging
import math
from typing import NamedTuple, Union

import numpy as np
from scipy import special  # type: ignore
from scipy.optimize import brentq  # type: ignore

from .errors import BracketError

LOGGER = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

# |J_den(x)| below this (past the first possible zero) marks a pole
POLE_THRESHOLD = 1e-13
ZERO_XTOL = 1e-14
# brentq refuses anything below 4 * machine epsilon
ZERO_RTOL = 1e-15
SCAN_STEP = 0.25
# j_{nu,1} < nu + 10 holds comfortably up to this order
MAX_BRACKETED_ORDER = 50.0


def _check_order(nu: float) -> None:
    if not math.isfinite(nu) or nu < 0:
        raise ValueError(f'Bessel order must be finite & >= 0, got {nu}.')


def bessel_j(nu: float, x: ArrayLike) -> ArrayLike:
    """Evaluate J_nu(x) for a real order nu >= 0 & x >= 0.

    Accepts a scalar or an array for `x`; returns the same shape.
    """
    _check_order(nu)
    x_arr = np.asarray(x, dtype=float)

    if np.any(x_arr < 0):
        raise ValueError('Bessel argument must be nonnegative.')

    value = special.jv(nu, x_arr)

    if value.ndim == 0:
        return float(value)

    return value


def scaled_bessel_j(nu: float, k: float, rho: ArrayLike) -> ArrayLike:
    """Evaluate rho^(-nu) J_nu(k rho), continuous at rho = 0.

    This is the radial kernel of every Wulff-set eigenfunction: with
    nu = n/2 - 1 it solves u'' + (n-1)/rho u' + k^2 u = 0.
    """
    _check_order(nu)
    rho_arr = np.asarray(rho, dtype=float)
    at_origin = (0.5 * k) ** nu / special.gamma(nu + 1.0)

    safe = np.where(rho_arr > 0, rho_arr, 1.0)
    value = np.where(
        rho_arr > 0,
        special.jv(nu, k * safe) * safe ** (-nu),
        at_origin)

    if value.ndim == 0:
        return float(value)

    return value


@lru_cache(maxsize=None)
def bessel_j_zero(nu: float, k: int = 1) -> float:
    """Return j_{nu,k}, the k-th positive zero of J_nu.

    Zeros are bracketed by scanning J_nu for sign changes from x = nu
    (no zero lies below the order) & refined with Brent's method.
    Results are memoized; the cache is safe under threads & does not change
    any returned value.
    """
    _check_order(nu)
    if k < 1:
        raise ValueError(f'Zero index must be >= 1, got {k}.')

    limit = nu + 10.0 + 4.0 * (k - 1)
    left = nu
    f_left = special.jv(nu, left)
    found = 0

    while left < limit:
        right = left + SCAN_STEP
        f_right = special.jv(nu, right)

        if f_right == 0.0:
            found += 1
            if found == k:
                return float(right)
        elif f_left * f_right < 0:
            found += 1
            if found == k:
                root = brentq(
                    lambda x: special.jv(nu, x),
                    left, right, xtol=ZERO_XTOL, rtol=ZERO_RTOL, maxiter=200)
                LOGGER.debug(f'j_({nu},{k}) = {root}')
                return float(root)

        left, f_left = right, f_right

    if nu > MAX_BRACKETED_ORDER:
        LOGGER.warning(
            f'Order {nu} is beyond the range where the zero bracket '
            'is known to hold.')

    raise BracketError(
        f'No sign change of J_{nu} found on [{nu}, {limit}] for zero {k}.')


def bessel_j_first_zero(nu: float) -> float:
    """Return j_{nu,1}, the first positive zero of J_nu."""
    return bessel_j_zero(nu, 1)


class BesselRatio(NamedTuple):
    """A ratio J_num(x)/J_den(x) together with its pole flag."""

    value: float
    pole: bool


def bessel_ratio(num_nu: float, den_nu: float, x: float) -> BesselRatio:
    """Evaluate J_num(x)/J_den(x), flagging proximity to a pole.

    The flag is set when |J_den(x)| < POLE_THRESHOLD at an x where J_den can
    vanish (x > den_nu); small-argument underflow is never a pole. Callers
    treat flagged values as singular.
    """
    if x <= 0:
        raise ValueError(f'Ratio argument must be positive, got {x}.')

    numerator = float(bessel_j(num_nu, x))
    denominator = float(bessel_j(den_nu, x))
    pole = abs(denominator) < POLE_THRESHOLD and x > den_nu

    if denominator == 0.0:
        return BesselRatio(math.copysign(math.inf, numerator), True)

    return BesselRatio(numerator / denominator, pole)
