"""Discrete oracles for the first eigenvalue & rearrangement tools.

Radial problems on Wulff sets are discretized by finite volumes on a
vertex grid rho_j = j h, j = 0..N, with u(R) = 0 & zero flux at the
centre. Problems on general planar sets use a node mask on a uniform
Cartesian grid with forward differences per cell. Both reduce the
nonlocal term alpha (int u)^2 to a symmetric rank-one update b b^T of the
stiffness, solved in shift-invert mode with the update folded into the
factorization by the Sherman-Morrison formula.
"""

import csv
from dataclasses import dataclass, field
import logging
import math
from pathlib import Path
from typing import (
    Callable,
    List,
    NamedTuple,
    Optional,
    Tuple,
    Union,
)

import numpy as np
from scipy import sparse  # type: ignore
from scipy.optimize import minimize  # type: ignore
from scipy.sparse.linalg import (  # type: ignore
    ArpackNoConvergence,
    LinearOperator,
    eigsh,
    splu,
)

from .errors import ConvergenceError, SolverError
from .gauge import (
    ELLIPSE,
    EUCLIDEAN,
    Gauge,
    energy_density_gradient,
    gauge_value,
    polar_value,
    wulff_measure,
)

LOGGER = logging.getLogger(__name__)

MIN_RADIAL_NODES = 16
DEFAULT_SEED = 0
# relative Euler-Lagrange residual accepted as a stationary point
DEFAULT_STATIONARITY = 1e-5
DEFAULT_MAX_ITERATIONS = 20000

PathLike = Union[str, Path]


#
# RADIAL GRIDS
#

def _shell_measures(n: int, kappa_n: float, rho: np.ndarray,
                    radius: float) -> np.ndarray:
    """Measures of the dual shells [rho - h/2, rho + h/2] clipped to [0, R]."""
    h = rho[1] - rho[0]
    inner = np.clip(rho - h / 2, 0.0, radius)
    outer = np.clip(rho + h / 2, 0.0, radius)
    return kappa_n * (outer ** n - inner ** n)


@dataclass(frozen=True)
class RadialGrid:
    """Uniform vertex grid on [0, R] for H°-radial functions on W_R.

    The unknowns sit at rho_j = j h for j = 0..N; rho_(N+1) = R carries the
    Dirichlet condition. Each node owns the dual shell of half-width h/2,
    so the node measures plus the boundary half shell sum to kappa_n R^n.
    """

    n: int
    radius: float
    nodes: int
    kappa_n: float

    def __post_init__(self) -> None:
        if self.nodes < MIN_RADIAL_NODES:
            raise ValueError(
                f'Radial grids need at least {MIN_RADIAL_NODES} interior '
                f'nodes, got {self.nodes}.')
        if not self.radius > 0:
            raise ValueError(f'Radius must be positive, got {self.radius}.')

    @property
    def h(self) -> float:
        """Return the spacing R / (N + 1)."""
        return self.radius / (self.nodes + 1)

    @property
    def rho(self) -> np.ndarray:
        """Return the nodes including the boundary node R."""
        return np.arange(self.nodes + 2) * self.h

    @property
    def weights(self) -> np.ndarray:
        """Return the shell measure of each unknown node."""
        return _shell_measures(
            self.n, self.kappa_n, self.rho, self.radius)[:-1]

    @property
    def boundary_weight(self) -> float:
        """Return the measure of the half shell at the boundary node."""
        return float(self.kappa_n * (
            self.radius ** self.n - (self.radius - self.h / 2) ** self.n))

    def stiffness(self) -> sparse.csr_matrix:
        """Return the tridiagonal matrix of int n kappa rho^(n-1) |u'|^2."""
        h = self.h
        midpoints = (np.arange(self.nodes + 1) + 0.5) * h
        flux = self.n * self.kappa_n * midpoints ** (self.n - 1) / h

        diagonal = flux.copy()
        diagonal[1:] += flux[:-1]

        return sparse.diags(
            [-flux[:-1], diagonal, -flux[:-1]], [-1, 0, 1], format='csr')


@dataclass(frozen=True, eq=False)
class RadialProfile:
    """Values of a radial function on a uniform grid of [0, R].

    `rho` includes both endpoints; the value at R is zero.
    """

    n: int
    radius: float
    rho: np.ndarray
    values: np.ndarray

    def integral(self, kappa_n: float) -> float:
        """Return int_(W_R) u dx by dual-shell quadrature."""
        weights = _shell_measures(self.n, kappa_n, self.rho, self.radius)
        return float(weights @ self.values)

    def norm_squared(self, kappa_n: float) -> float:
        """Return int_(W_R) u^2 dx by dual-shell quadrature."""
        weights = _shell_measures(self.n, kappa_n, self.rho, self.radius)
        return float(weights @ self.values ** 2)


#
# EIGEN SOLVER
#

def _starting_vector(size: int, seed: int) -> np.ndarray:
    # random rather than constant, so antisymmetric modes are not missed
    return np.random.default_rng(seed).uniform(0.5, 1.5, size)


def _smallest_eigenpair(
    matrix: sparse.spmatrix,
    coupling: np.ndarray,
    alpha: float,
    seed: int = DEFAULT_SEED,
) -> Tuple[float, np.ndarray]:
    """Smallest eigenpair of matrix + alpha coupling coupling^T.

    `matrix` must be symmetric positive definite. The shift sits below the
    whole spectrum, so the largest eigenvalue of the shifted inverse is the
    one sought.
    """
    size = matrix.shape[0]
    shift = min(0.0, alpha * float(coupling @ coupling)) - 1.0
    identity = sparse.identity(size, format='csc')

    try:
        factor = splu((matrix - shift * identity).tocsc())
    except RuntimeError as err:
        raise SolverError(
            f'Shifted matrix is singular at shift {shift}.') from err

    solved_coupling = factor.solve(coupling)
    denominator = 1 + alpha * float(coupling @ solved_coupling)

    if denominator <= 0:
        raise SolverError(
            f'Indefinite shift {shift} for alpha = {alpha}.')

    def apply_inverse(x: np.ndarray) -> np.ndarray:
        y = factor.solve(np.asarray(x, dtype=float).ravel())
        return y - solved_coupling * (
            alpha * float(coupling @ y) / denominator)

    def apply(x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float).ravel()
        return matrix @ x + alpha * coupling * float(coupling @ x)

    operator = LinearOperator((size, size), matvec=apply, dtype=float)
    inverse = LinearOperator((size, size), matvec=apply_inverse, dtype=float)

    try:
        values, vectors = eigsh(
            operator, k=1, sigma=shift, which='LM', OPinv=inverse,
            v0=_starting_vector(size, seed), tol=0)
    except ArpackNoConvergence as err:
        raise ConvergenceError(
            f'Shift-invert iteration did not converge for alpha = {alpha}.'
        ) from err

    LOGGER.debug(f'smallest eigenvalue {values[0]} (size {size})')

    return float(values[0]), vectors[:, 0]


def _orient(vector: np.ndarray) -> np.ndarray:
    """Flip the sign so that the entry of largest magnitude is positive."""
    if vector[np.argmax(np.abs(vector))] < 0:
        return -vector
    return vector


def _radial_block(grid: RadialGrid) -> Tuple[sparse.spmatrix, np.ndarray]:
    """Symmetrized stiffness D^-1/2 K D^-1/2 & the scaled weights D^1/2."""
    root = np.sqrt(grid.weights)
    inverse_root = sparse.diags(1 / root)
    return inverse_root @ grid.stiffness() @ inverse_root, root


def _radial_profile(grid: RadialGrid, values: np.ndarray) -> RadialProfile:
    return RadialProfile(
        n=grid.n,
        radius=grid.radius,
        rho=grid.rho,
        values=np.append(values, 0.0))


def radial_local_solve(grid: RadialGrid) -> Tuple[float, RadialProfile]:
    """Return the first eigenvalue of -Delta_H on W_R & its profile.

    The eigenvector is positive & normalized to sum_j w_j u_j^2 = 1.
    """
    matrix, root = _radial_block(grid)
    eigenvalue, vector = _smallest_eigenpair(
        matrix, np.zeros_like(root), 0.0)

    values = _orient(vector) / root
    values /= math.sqrt(float(grid.weights @ values ** 2))

    return eigenvalue, _radial_profile(grid, values)


def radial_pair_nonlocal_solve(
    n: int,
    kappa_n: float,
    r1: float,
    r2: float,
    alpha: float,
    nodes: int,
) -> Tuple[float, Optional[RadialProfile], RadialProfile]:
    """Return the first radial eigenvalue of the nonlocal pair problem.

    Each nonempty Wulff set gets its own grid of `nodes` unknowns; the
    coupling alpha (int u + int v)^2 is the rank-one update built from
    both weight vectors. Profiles are returned smaller set first (None
    when r1 = 0), jointly normalized in L^2.
    """
    small_radius, large_radius = sorted((r1, r2))
    large = RadialGrid(n, large_radius, nodes, kappa_n)
    grids: List[RadialGrid] = [large]
    if small_radius > 0:
        grids.insert(0, RadialGrid(n, small_radius, nodes, kappa_n))

    blocks = [_radial_block(grid) for grid in grids]
    matrix = sparse.block_diag([block for block, _ in blocks], format='csr')
    root = np.concatenate([scale for _, scale in blocks])

    eigenvalue, vector = _smallest_eigenpair(matrix, root, alpha)
    values = _orient(vector) / root
    weights = np.concatenate([grid.weights for grid in grids])
    values /= math.sqrt(float(weights @ values ** 2))

    pieces = np.split(values, np.cumsum([grid.nodes + 1 for grid in grids]))
    profiles = [
        _radial_profile(grid, piece) for grid, piece in zip(grids, pieces)]

    LOGGER.debug(
        f'radial pair ({r1}, {r2}), alpha = {alpha}: {eigenvalue}')

    if len(profiles) == 1:
        return eigenvalue, None, profiles[0]

    return eigenvalue, profiles[0], profiles[1]


#
# CARTESIAN GRIDS
#

@dataclass(frozen=True, eq=False)
class CartesianGrid2D:
    """Uniform node grid with a mask of the nodes inside Omega.

    Node (i, j) sits at (x0 + i h, y0 + j h) & owns a cell of measure h^2.
    The outermost rows & columns are never masked, so forward differences
    of masked functions stay inside the array.
    """

    h: float
    x0: float
    y0: float
    mask: np.ndarray

    def __post_init__(self) -> None:
        mask = self.mask
        if mask.ndim != 2 or not mask.any():
            raise ValueError('Grid mask must be a nonempty 2-D array.')
        if (mask[0, :].any() or mask[-1, :].any()
                or mask[:, 0].any() or mask[:, -1].any()):
            raise ValueError('Grid mask must not touch the array border.')

    @property
    def shape(self) -> Tuple[int, int]:
        """Return (nx, ny)."""
        return self.mask.shape

    @property
    def area(self) -> float:
        """Return the masked measure count * h^2."""
        return float(self.mask.sum()) * self.h ** 2

    @property
    def unknowns(self) -> int:
        """Return the number of masked nodes."""
        return int(self.mask.sum())

    def coordinates(self) -> Tuple[np.ndarray, np.ndarray]:
        """Return the node coordinates as two (nx, ny) arrays."""
        nx, ny = self.shape
        x = self.x0 + self.h * np.arange(nx)
        y = self.y0 + self.h * np.arange(ny)
        return np.meshgrid(x, y, indexing='ij')


def _padded(mask: np.ndarray) -> np.ndarray:
    return np.pad(mask.astype(bool), 1, constant_values=False)


def mask_grid(mask: np.ndarray, h: float) -> CartesianGrid2D:
    """Build a grid centred at the origin from a node mask.

    A zero layer is added when the mask touches the array border.
    """
    mask = np.asarray(mask, dtype=bool)
    if (mask[0, :].any() or mask[-1, :].any()
            or mask[:, 0].any() or mask[:, -1].any()):
        LOGGER.debug('mask touches the border; padding by one node')
        mask = _padded(mask)

    nx, ny = mask.shape
    return CartesianGrid2D(
        h=h, x0=-(nx - 1) * h / 2, y0=-(ny - 1) * h / 2, mask=mask)


def _symmetric_axis(extent: float, h: float) -> Tuple[float, np.ndarray]:
    """Spacing dividing `extent` exactly & symmetric nodes covering it."""
    steps = max(1, math.ceil(extent / h - 1e-12))
    spacing = extent / steps
    axis = spacing * np.arange(-steps - 1, steps + 2)
    return spacing, axis


def disk_grid(area: float, h: float) -> CartesianGrid2D:
    """Mask the nodes strictly inside the disk of the given area.

    The spacing is reduced so the disk's axis points fall on nodes.
    """
    radius = math.sqrt(area / math.pi)
    spacing, axis = _symmetric_axis(radius, h)
    x, y = np.meshgrid(axis, axis, indexing='ij')
    mask = x ** 2 + y ** 2 < radius ** 2 * (1 - 1e-12)

    return CartesianGrid2D(h=spacing, x0=axis[0], y0=axis[0], mask=mask)


def square_grid(area: float, h: float) -> CartesianGrid2D:
    """Mask the interior nodes of the centred square of the given area."""
    half = math.sqrt(area) / 2
    spacing, axis = _symmetric_axis(half, h)
    x, y = np.meshgrid(axis, axis, indexing='ij')
    inside = half * (1 - 1e-12)
    mask = (np.abs(x) < inside) & (np.abs(y) < inside)

    return CartesianGrid2D(h=spacing, x0=axis[0], y0=axis[0], mask=mask)


def wulff_grid(g: Gauge, area: float, h: float) -> CartesianGrid2D:
    """Mask the nodes of the centred Wulff set {H° < r} of the given area."""
    if g.n != 2:
        raise ValueError(f'Cartesian grids are planar; gauge has n = {g.n}.')

    kappa = wulff_measure(g).kappa_n
    radius = math.sqrt(area / kappa)
    # H° >= a_low(H°) |x|, so the Wulff set fits in |x| <= r / a_low
    extent = radius / g.dual().bounds[0]
    steps = math.ceil(extent / h) + 1
    axis = h * np.arange(-steps, steps + 1)
    x, y = np.meshgrid(axis, axis, indexing='ij')
    mask = polar_value(g, np.stack([x, y], axis=-1)) < radius

    return CartesianGrid2D(h=h, x0=axis[0], y0=axis[0], mask=mask)


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Nodal values on a CartesianGrid2D, zero outside the mask."""

    grid: CartesianGrid2D
    values: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        if self.values.shape != self.grid.shape:
            raise ValueError(
                f'Values of shape {self.values.shape} do not match the grid '
                f'{self.grid.shape}.')
        # enforce the Dirichlet condition on a private copy
        values = np.where(self.grid.mask, self.values, 0.0)
        object.__setattr__(self, 'values', values)

    @classmethod
    def from_interior(cls, grid: CartesianGrid2D,
                      interior: np.ndarray) -> 'GridFunction':
        """Scatter the values of the masked nodes into a full array."""
        values = np.zeros(grid.shape)
        values[grid.mask] = interior
        return cls(grid, values)

    @classmethod
    def from_function(
        cls,
        grid: CartesianGrid2D,
        function: Callable[[np.ndarray, np.ndarray], np.ndarray]
    ) -> 'GridFunction':
        """Sample a function of (x, y) at the nodes."""
        x, y = grid.coordinates()
        return cls(grid, np.asarray(function(x, y), dtype=float))

    @property
    def interior(self) -> np.ndarray:
        """Return the values at masked nodes, in C order."""
        return self.values[self.grid.mask]

    def integral(self) -> float:
        """Return h^2 sum u."""
        return float(self.values.sum()) * self.grid.h ** 2

    def norm_squared(self) -> float:
        """Return h^2 sum u^2."""
        return float((self.values ** 2).sum()) * self.grid.h ** 2


def _forward_gradient(values: np.ndarray, h: float) -> np.ndarray:
    """Per-cell forward differences, stacked on the last axis."""
    dx = np.diff(values, axis=0, append=0.0) / h
    dy = np.diff(values, axis=1, append=0.0) / h
    return np.stack([dx, dy], axis=-1)


def _energy_gradient(values: np.ndarray, h: float, g: Gauge) -> np.ndarray:
    """Gradient of h^2 sum H(grad u)^2 with respect to the nodal values."""
    flux = energy_density_gradient(g, _forward_gradient(values, h))
    flux_x, flux_y = flux[..., 0], flux[..., 1]

    gradient = -flux_x - flux_y
    gradient[1:, :] += flux_x[:-1, :]
    gradient[:, 1:] += flux_y[:, :-1]

    return h * gradient


def anisotropic_energy(u: GridFunction, g: Gauge) -> float:
    """Return h^2 sum over cells of H(grad u)^2 (forward differences)."""
    gradient = _forward_gradient(u.values, u.grid.h)
    return float(np.sum(gauge_value(g, gradient) ** 2)) * u.grid.h ** 2


def rayleigh_quotient(u: GridFunction, g: Gauge, alpha: float) -> float:
    """Return (int H(grad u)^2 + alpha (int u)^2) / int u^2 on the grid."""
    denominator = u.norm_squared()
    if denominator == 0:
        raise ValueError('Rayleigh quotient of the zero function.')

    return (anisotropic_energy(u, g)
            + alpha * u.integral() ** 2) / denominator


def _difference_operators(
        grid: CartesianGrid2D) -> Tuple[sparse.spmatrix, sparse.spmatrix]:
    """Sparse forward differences from masked nodes to all cells."""
    nx, ny = grid.shape
    index = -np.ones(grid.shape, dtype=int)
    index[grid.mask] = np.arange(grid.unknowns)
    cells = np.arange(nx * ny).reshape(nx, ny)

    def operator(axis: int) -> sparse.spmatrix:
        neighbour = np.roll(index, -1, axis=axis)
        rows: List[np.ndarray] = []
        cols: List[np.ndarray] = []
        data: List[np.ndarray] = []

        for columns, sign in ((neighbour, 1.0), (index, -1.0)):
            present = columns >= 0
            rows.append(cells[present])
            cols.append(columns[present])
            data.append(np.full(present.sum(), sign / grid.h))

        return sparse.csr_matrix(
            (np.concatenate(data),
             (np.concatenate(rows), np.concatenate(cols))),
            shape=(nx * ny, grid.unknowns))

    return operator(0), operator(1)


def _quadratic_form(grid: CartesianGrid2D, g: Gauge) -> sparse.spmatrix:
    """Exact stiffness divided by h^2 for gauges with H^2 quadratic."""
    if g.kind == EUCLIDEAN:
        tensor = g.scale ** 2 * np.identity(2)
    elif g.kind == ELLIPSE:
        assert g.matrix is not None
        tensor = g.scale ** 2 * g.matrix
    else:
        raise ValueError(f'Gauge kind {g.kind} has no quadratic form.')

    dx, dy = _difference_operators(grid)

    return (tensor[0, 0] * dx.T @ dx
            + tensor[0, 1] * (dx.T @ dy + dy.T @ dx)
            + tensor[1, 1] * dy.T @ dy).tocsr()


@dataclass(frozen=True)
class MinimizeOptions:
    """Controls for minimize_rayleigh.

    `method` is `auto` (exact for quadratic gauges, descent otherwise),
    `exact` or `descent`.
    """

    method: str = 'auto'
    seed: int = DEFAULT_SEED
    stationarity: float = DEFAULT_STATIONARITY
    max_iterations: int = DEFAULT_MAX_ITERATIONS


@dataclass(frozen=True, eq=False)
class RayleighMinimum:
    """Result of minimize_rayleigh; `converged` flags the certificate."""

    eigenvalue: float
    u: GridFunction
    converged: bool
    stationarity: float


def _normalized(grid: CartesianGrid2D, interior: np.ndarray) -> GridFunction:
    interior = _orient(interior)
    u = GridFunction.from_interior(grid, interior)
    return GridFunction(u.grid, u.values / math.sqrt(u.norm_squared()))


def _minimize_exact(grid: CartesianGrid2D, g: Gauge, alpha: float,
                    options: MinimizeOptions) -> RayleighMinimum:
    matrix = _quadratic_form(grid, g)
    coupling = np.full(grid.unknowns, grid.h)

    eigenvalue, vector = _smallest_eigenpair(
        matrix, coupling, alpha, options.seed)

    return RayleighMinimum(
        eigenvalue=eigenvalue,
        u=_normalized(grid, vector),
        converged=True,
        stationarity=0.0)


def _quotient_and_gradient(
    grid: CartesianGrid2D,
    g: Gauge,
    alpha: float,
) -> Callable[[np.ndarray], Tuple[float, np.ndarray]]:
    h = grid.h
    area_element = h ** 2

    def evaluate(interior: np.ndarray) -> Tuple[float, np.ndarray]:
        values = np.zeros(grid.shape)
        values[grid.mask] = interior

        energy = float(np.sum(
            gauge_value(g, _forward_gradient(values, h)) ** 2)) * area_element
        average = area_element * float(interior.sum())
        mass = area_element * float(interior @ interior)
        quotient = (energy + alpha * average ** 2) / mass

        numerator_gradient = (
            _energy_gradient(values, h, g)[grid.mask]
            + 2 * alpha * average * area_element)
        gradient = (
            numerator_gradient - 2 * quotient * area_element * interior
        ) / mass

        return quotient, gradient

    return evaluate


def _positive_bump(grid: CartesianGrid2D) -> np.ndarray:
    x, y = grid.coordinates()
    cx, cy = x[grid.mask].mean(), y[grid.mask].mean()
    spread = grid.area
    bump = np.exp(-((x - cx) ** 2 + (y - cy) ** 2) / spread)
    return bump[grid.mask]


def _minimize_descent(grid: CartesianGrid2D, g: Gauge, alpha: float,
                      options: MinimizeOptions) -> RayleighMinimum:
    evaluate = _quotient_and_gradient(grid, g, alpha)
    rng = np.random.default_rng(options.seed)
    starts = [
        _positive_bump(grid),
        rng.standard_normal(grid.unknowns),
    ]

    best: Optional[Tuple[float, np.ndarray]] = None
    for start in starts:
        result = minimize(
            evaluate, start, jac=True, method='L-BFGS-B',
            options={
                'maxiter': options.max_iterations,
                'maxfun': 4 * options.max_iterations,
                'ftol': 1e-15,
                'gtol': 1e-14,
            })
        LOGGER.debug(
            f'descent from start: {result.fun} after {result.nit} '
            f'iterations ({result.message})')
        if best is None or result.fun < best[0]:
            best = (float(result.fun), np.asarray(result.x))

    assert best is not None
    quotient, interior = best
    if alpha <= 0:
        folded = np.abs(interior)
        folded_quotient, _ = evaluate(folded)
        if folded_quotient <= quotient:
            quotient, interior = folded_quotient, folded
    _, gradient = evaluate(interior)
    # scale-free residual of the Euler-Lagrange equation
    stationarity = float(
        np.linalg.norm(gradient) * np.linalg.norm(interior)
        / (2 * abs(quotient)))
    converged = stationarity < options.stationarity

    if not converged:
        LOGGER.warning(
            f'Descent stopped at relative residual {stationarity}, above '
            f'{options.stationarity}; returning best value {quotient}.')

    return RayleighMinimum(
        eigenvalue=quotient,
        u=_normalized(grid, interior),
        converged=converged,
        stationarity=stationarity)


def minimize_rayleigh(
    grid: CartesianGrid2D,
    g: Gauge,
    alpha: float,
    options: Optional[MinimizeOptions] = None,
) -> RayleighMinimum:
    """Return the minimum of the discrete Rayleigh quotient on the grid.

    Quadratic gauges (euclidean & ellipse) are solved exactly as a sparse
    eigenproblem. Other gauges minimize the 0-homogeneous quotient with
    L-BFGS from a positive bump & one seeded random start, keeping the
    best; the result carries a stationarity certificate.
    """
    options = options or MinimizeOptions()
    if g.n != 2:
        raise ValueError(f'Cartesian grids are planar; gauge has n = {g.n}.')

    method = options.method
    if method == 'auto':
        method = 'exact' if g.kind in (EUCLIDEAN, ELLIPSE) else 'descent'

    if method == 'exact':
        return _minimize_exact(grid, g, alpha, options)
    if method == 'descent':
        return _minimize_descent(grid, g, alpha, options)

    raise ValueError(f'Unknown minimization method `{options.method}`.')


#
# REARRANGEMENTS
#

@dataclass(frozen=True, eq=False)
class StepProfile:
    """Decreasing rearrangement u* as a step function of the measure s.

    `levels` holds |u| over the cells in decreasing order; the cell of
    rank k covers s in [k m, (k + 1) m) with m the cell measure.
    """

    levels: np.ndarray
    cell_measure: float

    @property
    def total_measure(self) -> float:
        """Return the measure of the rearranged domain."""
        return self.cell_measure * len(self.levels)

    def __call__(self, s: Union[float, np.ndarray]) -> np.ndarray:
        """Evaluate u*(s); zero for s at or beyond the total measure."""
        rank = np.floor(np.asarray(s, dtype=float) / self.cell_measure)
        inside = (rank >= 0) & (rank < len(self.levels))
        safe = np.where(inside, rank, 0).astype(int)
        return np.where(inside, self.levels[safe], 0.0)

    def distribution(self, t: Union[float, np.ndarray]) -> np.ndarray:
        """Return mu(t), the measure of {|u| > t}."""
        ascending = self.levels[::-1]
        above = len(ascending) - np.searchsorted(
            ascending, np.asarray(t, dtype=float), side='right')
        return above * self.cell_measure


class Rearrangement(NamedTuple):
    """Distribution function mu & decreasing rearrangement u*."""

    mu: Callable[[Union[float, np.ndarray]], np.ndarray]
    u_star: StepProfile


def decreasing_rearrangement(u: GridFunction) -> Rearrangement:
    """Return mu & u* of |u| over the masked cells.

    Equal values keep their lexicographic cell order.
    """
    magnitudes = np.abs(u.interior)
    if not np.all(np.isfinite(magnitudes)):
        raise ValueError('Cannot rearrange a function with non-finite values.')

    order = np.argsort(-magnitudes, kind='stable')
    profile = StepProfile(
        levels=magnitudes[order], cell_measure=u.grid.h ** 2)

    return Rearrangement(mu=profile.distribution, u_star=profile)


def convex_rearrangement(u: GridFunction, g: Gauge,
                         target_grid: CartesianGrid2D) -> GridFunction:
    """Return u#(x) = u*(kappa_n H°(x)^n) on the target Wulff-set grid.

    The target mask must have the measure of u's mask within twice the
    larger spacing times the perimeter n kappa_n r^(n-1).
    """
    kappa = wulff_measure(g).kappa_n
    source_area = u.grid.area
    radius = math.sqrt(source_area / kappa)
    slack = 2 * max(u.grid.h, target_grid.h) * 2 * kappa * radius

    if abs(target_grid.area - source_area) > slack:
        raise ValueError(
            f'Target measure {target_grid.area} differs from {source_area} '
            f'by more than {slack}.')

    _, u_star = decreasing_rearrangement(u)
    x, y = target_grid.coordinates()
    measure = kappa * polar_value(g, np.stack([x, y], axis=-1)) ** 2

    return GridFunction(target_grid, u_star(measure))


def polya_szego_gap(u: GridFunction, g: Gauge) -> Tuple[float, float]:
    """Return the energies of u & of its convex rearrangement.

    The rearrangement lives on the Wulff-set grid of the same spacing &
    measure as u's mask.
    """
    if u.norm_squared() == 0:
        raise ValueError('Polya-Szego gap of the zero function.')

    target = wulff_grid(g, u.grid.area, u.grid.h)
    rearranged = convex_rearrangement(u, g, target)

    return anisotropic_energy(u, g), anisotropic_energy(rearranged, g)


class SignSplit(NamedTuple):
    """Measures of {u > 0} & {u < 0}."""

    positive: float
    negative: float


def sign_split(u: GridFunction) -> SignSplit:
    """Return the measures of the positive & negative parts of u."""
    cell = u.grid.h ** 2
    interior = u.interior
    return SignSplit(
        positive=float(np.sum(interior > 0)) * cell,
        negative=float(np.sum(interior < 0)) * cell)


#
# FILES
#

def read_mask(path: PathLike) -> CartesianGrid2D:
    """Read a mask file: `nx ny h`, then nx * ny `0`/`1` characters.

    Characters run row by row (j outer, i inner); whitespace between them
    is ignored. The grid is centred at the origin.
    """
    text = Path(path).read_text()
    header, _, body = text.partition('\n')

    try:
        nx_text, ny_text, h_text = header.split()
        nx, ny, h = int(nx_text), int(ny_text), float(h_text)
    except ValueError as err:
        raise ValueError(
            f'Mask header must be `nx ny h`, got `{header}`.') from err

    cells = ''.join(body.split())
    if len(cells) != nx * ny or set(cells) - {'0', '1'}:
        raise ValueError(
            f'Mask body must hold {nx * ny} characters 0/1, '
            f'got {len(cells)}.')

    flat = np.frombuffer(cells.encode(), dtype=np.uint8) == ord('1')
    # rows are j, so transpose to index [i, j]
    mask = flat.reshape(ny, nx).T

    return mask_grid(mask, h)


def write_grid_function(u: GridFunction, path: PathLike) -> None:
    """Write u as CSV rows `i,j,x,y,u` over every node of the grid."""
    x, y = u.grid.coordinates()
    nx, ny = u.grid.shape

    with open(path, 'w', newline='') as stream:
        writer = csv.writer(stream)
        writer.writerow(['i', 'j', 'x', 'y', 'u'])
        for i in range(nx):
            for j in range(ny):
                writer.writerow([
                    i, j,
                    repr(float(x[i, j])),
                    repr(float(y[i, j])),
                    repr(float(u.values[i, j]))])
