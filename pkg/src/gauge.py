"""Anisotropic gauges H, their polars H°, & Wulff-set geometry.

Three closed-form families are supported: euclidean, p-norms with
1 < p < inf, & ellipses xi^T A xi. Each public gauge is normalized so that
K = {H < 1} has the measure omega_n of the Euclidean unit ball; its polar
(available through `Gauge.dual`) is a gauge of the same family that is
NOT normalized, since its unit ball is the Wulff set of measure kappa_n.
"""

from dataclasses import dataclass
import logging
import math
from typing import Optional, Tuple, Union

import numpy as np
from scipy import integrate, special  # type: ignore

from .errors import GaugeError

LOGGER = logging.getLogger(__name__)

EUCLIDEAN = 'euclidean'
P_NORM = 'p-norm'
ELLIPSE = 'ellipse'
KINDS = (EUCLIDEAN, P_NORM, ELLIPSE)

QUADRATURE_RTOL = 1e-10

Vector = Union[np.ndarray, Tuple[float, ...], list]


def unit_ball_volume(n: int) -> float:
    """Return omega_n, the volume of the Euclidean unit ball in R^n."""
    return float(math.pi ** (n / 2) / special.gamma(n / 2 + 1))


def _p_ball_volume(n: int, p: float) -> float:
    """Volume of the unit l^p ball in R^n."""
    return float(
        (2 * special.gamma(1 + 1 / p)) ** n / special.gamma(1 + n / p))


@dataclass(frozen=True, eq=False)
class Gauge:
    """A positively 1-homogeneous, strictly convex, C^1 gauge on R^n.

    `scale` multiplies the raw norm of the family; `p` is set for p-norms
    & `matrix` (symmetric positive definite) for ellipses. `bounds` holds
    (a_low, a_high) with a_low |xi| <= H(xi) <= a_high |xi|.
    """

    n: int
    kind: str
    scale: float
    bounds: Tuple[float, float]
    p: Optional[float] = None
    matrix: Optional[np.ndarray] = None

    def dual(self) -> 'Gauge':
        """Return the polar gauge H° as a gauge of the same family."""
        if self.kind == EUCLIDEAN:
            return _raw_gauge(self.n, EUCLIDEAN, 1 / self.scale)

        if self.kind == P_NORM:
            assert self.p is not None
            conjugate = self.p / (self.p - 1)
            return _raw_gauge(self.n, P_NORM, 1 / self.scale, p=conjugate)

        assert self.matrix is not None
        return _raw_gauge(
            self.n, ELLIPSE, 1 / self.scale,
            matrix=np.linalg.inv(self.matrix))

    @property
    def spec(self) -> str:
        """Return the CLI specification string this gauge was built from."""
        if self.kind == EUCLIDEAN:
            return EUCLIDEAN
        if self.kind == P_NORM:
            return f'p:{self.p:g}'

        assert self.matrix is not None
        a11, a12, a22 = (
            self.matrix[0, 0], self.matrix[0, 1], self.matrix[1, 1])
        return f'ellipse:{a11:g},{a12:g},{a22:g}'


@dataclass(frozen=True)
class PolarData:
    """Wulff-set constants of a gauge.

    `polar` is the closed-form descriptor of H°: for p-norms it carries the
    conjugate exponent q, for ellipses the inverse matrix, & for the
    euclidean gauge it is the gauge itself.
    """

    kappa_n: float
    gamma_n: float
    polar: Gauge


def _bounds(n: int, kind: str, scale: float, p: Optional[float],
            matrix: Optional[np.ndarray]) -> Tuple[float, float]:
    """Extremes of H over the Euclidean unit sphere, in closed form."""
    if kind == EUCLIDEAN:
        return scale, scale

    if kind == P_NORM:
        assert p is not None
        corner = n ** (1 / p - 1 / 2)
        if p >= 2:
            return scale * corner, scale
        return scale, scale * corner

    assert matrix is not None
    eigenvalues = np.linalg.eigvalsh(matrix)
    return (
        scale * math.sqrt(float(eigenvalues[0])),
        scale * math.sqrt(float(eigenvalues[-1])))


def _raw_gauge(n: int, kind: str, scale: float, p: Optional[float] = None,
               matrix: Optional[np.ndarray] = None) -> Gauge:
    return Gauge(
        n=n,
        kind=kind,
        scale=scale,
        bounds=_bounds(n, kind, scale, p, matrix),
        p=p,
        matrix=matrix)


def _check_dimension(n: int) -> None:
    if n < 2:
        raise GaugeError(f'Dimension must be at least 2, got {n}.')


def euclidean(n: int) -> Gauge:
    """Build the Euclidean gauge H(xi) = |xi| on R^n."""
    _check_dimension(n)
    return _raw_gauge(n, EUCLIDEAN, 1.0)


def p_norm(n: int, p: float) -> Gauge:
    """Build the normalized gauge H(xi) = s ||xi||_p on R^n.

    The scale s makes {H < 1} have measure omega_n.
    """
    _check_dimension(n)
    if not 1 < p < math.inf:
        raise GaugeError(
            f'p-norm gauges need 1 < p < inf (strict convexity), got {p}.')

    scale = (_p_ball_volume(n, p) / unit_ball_volume(n)) ** (1 / n)
    LOGGER.debug(f'p-norm gauge p={p}, n={n}: scale {scale}')

    return _raw_gauge(n, P_NORM, scale, p=p)


def ellipse(matrix: Vector) -> Gauge:
    """Build the normalized gauge H(xi) = s sqrt(xi^T A xi).

    `matrix` must be symmetric positive definite; s = det(A)^(-1/(2n)).
    """
    a = np.array(matrix, dtype=float)

    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise GaugeError(f'Ellipse matrix must be square, got {a.shape}.')
    _check_dimension(a.shape[0])
    if not np.allclose(a, a.T):
        raise GaugeError('Ellipse matrix must be symmetric.')
    if np.linalg.eigvalsh(a)[0] <= 0:
        raise GaugeError('Ellipse matrix must be positive definite.')

    n = a.shape[0]
    scale = float(np.linalg.det(a)) ** (-1 / (2 * n))

    return _raw_gauge(n, ELLIPSE, scale, matrix=a)


def parse_gauge(spec: str, n: int) -> Gauge:
    """Parse `euclidean`, `p:<float>` or `ellipse:<a11>,<a12>,<a22>`.

    Matching is case-insensitive; the ellipse form is two-dimensional.
    """
    text = spec.strip().lower()

    if text == EUCLIDEAN:
        return euclidean(n)

    name, _, argument = text.partition(':')

    try:
        if name == 'p':
            return p_norm(n, float(argument))

        if name == ELLIPSE:
            a11, a12, a22 = (float(part) for part in argument.split(','))
            if n != 2:
                raise GaugeError(
                    f'Ellipse specs describe 2-D gauges, got n = {n}.')
            return ellipse([[a11, a12], [a12, a22]])
    except ValueError as err:
        if isinstance(err, GaugeError):
            raise
        raise GaugeError(f'Malformed gauge spec `{spec}`.') from err

    raise GaugeError(
        f'Unknown gauge spec `{spec}`; expected `euclidean`, `p:<float>` '
        'or `ellipse:<a11>,<a12>,<a22>`.')


#
# EVALUATION
#

def _as_points(g: Gauge, x: Vector) -> np.ndarray:
    points = np.asarray(x, dtype=float)

    if points.shape[-1] != g.n:
        raise GaugeError(
            f'Expected vectors of dimension {g.n}, got shape {points.shape}.')

    return points


def _scalar_or_array(value: np.ndarray) -> Union[float, np.ndarray]:
    if value.ndim == 0:
        return float(value)
    return value


def _norm(g: Gauge, points: np.ndarray) -> np.ndarray:
    if g.kind == EUCLIDEAN:
        return g.scale * np.linalg.norm(points, axis=-1)

    if g.kind == P_NORM:
        assert g.p is not None
        # factor out the largest component so |x|^p never overflows
        biggest = np.max(np.abs(points), axis=-1)
        safe = np.where(biggest > 0, biggest, 1.0)
        ratio = np.abs(points) / safe[..., None]
        return g.scale * biggest * np.sum(ratio ** g.p, axis=-1) ** (1 / g.p)

    assert g.matrix is not None
    quadratic = np.einsum('...i,ij,...j->...', points, g.matrix, points)
    return g.scale * np.sqrt(np.maximum(quadratic, 0.0))


def _half_square_gradient(g: Gauge, points: np.ndarray) -> np.ndarray:
    """H(xi) grad H(xi), the gradient of H^2/2; zero at the origin."""
    if g.kind == EUCLIDEAN:
        return g.scale ** 2 * points

    if g.kind == ELLIPSE:
        assert g.matrix is not None
        return g.scale ** 2 * points @ g.matrix

    assert g.p is not None
    norm = _norm(g, points) / g.scale
    safe = np.where(norm > 0, norm, 1.0)
    scaled = np.abs(points) / safe[..., None]
    direction = np.sign(points) * scaled ** (g.p - 1)
    return g.scale ** 2 * norm[..., None] * direction


def gauge_value(g: Gauge, x: Vector) -> Union[float, np.ndarray]:
    """Return H(x); vectorized over leading axes of `x`."""
    return _scalar_or_array(_norm(g, _as_points(g, x)))


def gauge_gradient(g: Gauge, x: Vector) -> np.ndarray:
    """Return grad H(x), which satisfies <grad H(x), x> = H(x).

    The gradient is undefined at the origin; asking for it is an error.
    """
    points = _as_points(g, x)
    value = _norm(g, points)

    if np.any(value == 0):
        raise GaugeError('Gauge gradient is undefined at the origin.')

    return _half_square_gradient(g, points) / value[..., None]


def energy_density_gradient(g: Gauge, x: Vector) -> np.ndarray:
    """Return grad of H(x)^2, i.e. 2 H(x) grad H(x), continuous at 0."""
    return 2 * _half_square_gradient(g, _as_points(g, x))


def polar_value(g: Gauge, x: Vector) -> Union[float, np.ndarray]:
    """Return H°(x) = sup <x, xi> / H(xi), in closed form."""
    return gauge_value(g.dual(), x)


def polar_gradient(g: Gauge, x: Vector) -> np.ndarray:
    """Return grad H°(x); H(grad H°(x)) = 1 for every x != 0."""
    return gauge_gradient(g.dual(), x)


#
# MEASURES
#

def unit_ball_measure(g: Gauge) -> float:
    """Return the Lebesgue measure of {H < 1}, in closed form."""
    if g.kind == EUCLIDEAN:
        return unit_ball_volume(g.n) / g.scale ** g.n

    if g.kind == P_NORM:
        assert g.p is not None
        return _p_ball_volume(g.n, g.p) / g.scale ** g.n

    assert g.matrix is not None
    determinant = float(np.linalg.det(g.matrix))
    return unit_ball_volume(g.n) / (g.scale ** g.n * math.sqrt(determinant))


def wulff_measure(g: Gauge) -> PolarData:
    """Return kappa_n = |{H° < 1}|, gamma_n = n kappa_n & the polar."""
    polar = g.dual()
    kappa = unit_ball_measure(polar)

    return PolarData(kappa_n=kappa, gamma_n=g.n * kappa, polar=polar)


def measure_by_quadrature(g: Gauge) -> float:
    """Measure |{H < 1}| by quadrature of H^(-n) over the unit sphere.

    Independent of the closed forms above; available for n = 2 & n = 3.
    """
    def radial_power(direction: np.ndarray) -> float:
        return float(_norm(g, direction)) ** (-g.n)

    if g.n == 2:
        area, _ = integrate.quad(
            lambda t: radial_power(np.array([math.cos(t), math.sin(t)])),
            0, 2 * math.pi, epsabs=0, epsrel=QUADRATURE_RTOL, limit=200)
        return area / 2

    if g.n == 3:
        volume, _ = integrate.dblquad(
            lambda phi, t: radial_power(np.array([
                math.sin(phi) * math.cos(t),
                math.sin(phi) * math.sin(t),
                math.cos(phi)])) * math.sin(phi),
            0, 2 * math.pi, 0, math.pi,
            epsabs=0, epsrel=QUADRATURE_RTOL)
        return volume / 3

    raise GaugeError(
        f'Quadrature measure is implemented for n <= 3, not {g.n}.')


def identity_residuals(
        g: Gauge, x: Vector) -> Tuple[float, float, float, float]:
    """Return the residuals of the four polar identities at x != 0.

    In order: |H(grad H°(x)) - 1|, |H°(grad H(x)) - 1|,
    ||H°(x) grad H(grad H°(x)) - x||, ||H(x) grad H°(grad H(x)) - x||.
    """
    point = _as_points(g, x)
    polar = g.dual()

    grad_polar = gauge_gradient(polar, point)
    grad_gauge = gauge_gradient(g, point)

    first = abs(float(_norm(g, grad_polar)) - 1)
    second = abs(float(_norm(polar, grad_gauge)) - 1)
    third = float(np.linalg.norm(
        float(_norm(polar, point)) * gauge_gradient(g, grad_polar) - point))
    fourth = float(np.linalg.norm(
        float(_norm(g, point)) * gauge_gradient(polar, grad_gauge) - point))

    return first, second, third, fourth
