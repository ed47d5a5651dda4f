"""Command line front end for wulff-spectra.

Commands:
    curve           minimum eigenvalue over Wulff pairs vs alpha, as CSV
    critical-alpha  critical weight alpha_c against its limit oracle
    twisted         zero-average eigenvalue of a Wulff pair
    eig-pair        nonlocal eigenvalue of a Wulff pair
    grid2d          discrete Rayleigh minimum on a planar domain
    verify          invariant suites

Exit codes: 0 ok, 1 verify failure, 2 configuration, 3 solver, 4 oracle
mismatch.
"""

# standard library imports
import argparse
import csv
from datetime import datetime, timezone
import hashlib
import io
import json
import logging
import math
import os
import sys
from typing import (
    Any,
    Callable,
    Dict,
    List,
    Optional,
    Sequence,
    Tuple,
)

# third party imports
import numpy as np

# internal dependencies
from . import __version__
from .closedform import (
    DEFAULT_RTOL,
    critical_alpha,
    critical_alpha_oracle,
    nonlocal_pair_eigenvalue,
    theta_star,
    twisted_pair_eigenvalue,
)
from .errors import ConfigError, OracleMismatch, SolverError
from .gauge import Gauge, parse_gauge, wulff_measure
from .models import (
    CURVE_HEADER,
    SCHEMA_VERSION,
    Metadata,
    OutputRecord,
    RunConfig,
    dumps,
)
from .runner import run_all
from .saturation import saturation_curve
from .variational import (
    DEFAULT_STATIONARITY,
    MIN_RADIAL_NODES,
    CartesianGrid2D,
    MinimizeOptions,
    RayleighMinimum,
    disk_grid,
    minimize_rayleigh,
    radial_pair_nonlocal_solve,
    read_mask,
    square_grid,
    write_grid_function,
    wulff_grid,
)
from .verify import SuiteContext, SUITES, suite_names

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_ORACLE = 4

ORACLE_TOLERANCE = 1e-6

#
# ENVIRONMENT
#


def get_mode() -> str:
    """Determine if running application in 'production' or 'development'.

    Uses `MODE` environment variable & falls back to 'development' if no
    variable exists. Requires mode to be set to either 'development' OR
    'production', raises an error if anything else is specified.
    """
    env = os.getenv('MODE', 'development')  # default to 'development'

    if env in ('development', 'production'):
        return env

    raise ConfigError(
        'MODE must be either `production`, `development`, or unset '
        '(defaults to `development`)')


#
# LOGGING
#

LOGGER = logging.getLogger(__name__)


def configure_logging(verbose: bool = False) -> None:
    """Set the root level from MODE; `verbose` lowers it to DEBUG."""
    if verbose:
        level = logging.DEBUG
    elif get_mode() == 'development':
        level = logging.INFO
    else:
        level = logging.ERROR

    logging.basicConfig(
        level=level,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')


#
# OUTPUT
#

def _metadata(config: RunConfig) -> Metadata:
    canonical = json.dumps(config, sort_keys=True)
    return {
        'version': __version__,
        'schema': SCHEMA_VERSION,
        'config_hash': hashlib.sha256(canonical.encode()).hexdigest(),
        'timestamp': datetime.now(timezone.utc).isoformat(),
    }


def _record(config: RunConfig, result: Dict[str, Any]) -> OutputRecord:
    return {
        'metadata': _metadata(config),
        'config': config,
        'result': result,
    }


def _emit(text: str, out: Optional[str]) -> None:
    """Write text to `out`, or to stdout when no path is given."""
    if out is None:
        sys.stdout.write(text)
        return

    with open(out, 'w', newline='') as stream:
        stream.write(text)


def _emit_result(args: argparse.Namespace, config: RunConfig,
                 result: Dict[str, Any]) -> None:
    """Scalar commands print the result, or the full record with --json."""
    document: Any = _record(config, result) if args.json else result
    _emit(dumps(document) + '\n', args.out)


def _csv_text(header: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    stream = io.StringIO()
    writer = csv.writer(stream, lineterminator='\n')
    writer.writerow(header)
    for row in rows:
        writer.writerow([
            repr(float(value)) if isinstance(value, float) else value
            for value in row])
    return stream.getvalue()


#
# CONFIGURATION
#

def _base_config(args: argparse.Namespace) -> RunConfig:
    return {
        'command': args.command,
        'n': args.n,
        'gauge': args.gauge,
        'seed': args.seed,
        'tol': args.tol,
        'out': args.out,
    }


def _gauge(args: argparse.Namespace) -> Tuple[Gauge, float]:
    """Parse the gauge & return it with kappa_n."""
    if args.n < 2:
        raise ConfigError(f'Dimension must be at least 2, got n = {args.n}.')

    g = parse_gauge(args.gauge, args.n)
    return g, wulff_measure(g).kappa_n


def _volume(text: str) -> Optional[float]:
    if text.strip().lower() == 'auto':
        return None

    try:
        volume = float(text)
    except ValueError as err:
        raise argparse.ArgumentTypeError(
            f'volume must be `auto` or a positive number, got `{text}`'
        ) from err

    if not volume > 0:
        raise argparse.ArgumentTypeError(
            f'volume must be positive, got {volume}')

    return volume


def _weights(text: str) -> List[float]:
    try:
        return [float(part) for part in text.split(',') if part.strip()]
    except ValueError as err:
        raise argparse.ArgumentTypeError(
            f'weights must be a comma separated list, got `{text}`') from err


#
# COMMANDS
#

Command = Callable[[argparse.Namespace], int]
COMMANDS: Dict[str, Command] = {}


def route(name: str) -> Callable[[Command], Command]:
    """Register a command handler under `name`."""
    def register(handler: Command) -> Command:
        COMMANDS[name] = handler
        return handler

    return register


@route('curve')
def cmd_curve(args: argparse.Namespace) -> int:
    """Tabulate the saturation curve as CSV, metadata in a JSON sidecar."""
    _, kappa = _gauge(args)
    if args.steps < 1:
        raise ConfigError(f'--steps must be at least 1, got {args.steps}.')
    if args.alpha_max < args.alpha_min:
        raise ConfigError('--alpha-max must not be below --alpha-min.')

    volume = kappa if args.volume is None else args.volume
    alphas = [float(a) for a in np.linspace(
        args.alpha_min, args.alpha_max, args.steps)]

    config = _base_config(args)
    config.update({
        'volume': args.volume,
        'alpha_min': args.alpha_min,
        'alpha_max': args.alpha_max,
        'steps': args.steps,
    })

    LOGGER.info(
        f'curve: n = {args.n}, V = {volume}, {args.steps} weights in '
        f'[{args.alpha_min}, {args.alpha_max}]')
    curve = saturation_curve(args.n, kappa, volume, alphas, rtol=args.tol)

    rows = [
        (sample.alpha, sample.lambda_min, sample.split, sample.regime)
        for sample in curve.samples]
    result: Dict[str, Any] = {
        'kappa_n': kappa,
        'volume': volume,
        'alpha_c': critical_alpha(args.n, kappa),
        'alpha_c_scaled': curve.critical_alpha_scaled,
        'transition_alpha': curve.transition_alpha,
        'invariants_ok': curve.invariants_ok,
        'errors': [
            {'alpha': sample.alpha, 'error': sample.error}
            for sample in curve.samples if sample.error is not None],
    }

    if args.json:
        result['rows'] = [dict(zip(CURVE_HEADER, row)) for row in rows]
        _emit(dumps(_record(config, result)) + '\n', args.out)
    else:
        _emit(_csv_text(CURVE_HEADER, rows), args.out)
        if args.out is not None:
            _emit(dumps(_record(config, result)) + '\n', f'{args.out}.json')

    if result['errors']:
        LOGGER.error(f'{len(result["errors"])} weights failed.')
        return EXIT_SOLVER

    return EXIT_OK


@route('critical-alpha')
def cmd_critical_alpha(args: argparse.Namespace) -> int:
    """Compare the closed-form alpha_c with its vanishing-set limit."""
    _, kappa = _gauge(args)

    formula = critical_alpha(args.n, kappa)
    oracle = critical_alpha_oracle(args.n, kappa)
    rel_diff = abs(formula - oracle) / abs(formula)

    _emit_result(args, _base_config(args), {
        'n': args.n,
        'kappa_n': kappa,
        'alpha_c': formula,
        'oracle_alpha_c': oracle,
        'rel_diff': rel_diff,
    })

    if rel_diff > ORACLE_TOLERANCE:
        raise OracleMismatch(
            f'alpha_c = {formula} & its limit oracle {oracle} differ by '
            f'{rel_diff:.3e} relative.')

    return EXIT_OK


@route('twisted')
def cmd_twisted(args: argparse.Namespace) -> int:
    """Zero-average eigenvalue of the pair W_r1 U W_r2."""
    _gauge(args)
    result = twisted_pair_eigenvalue(args.n, args.r1, args.r2)
    bound = theta_star(args.n)

    config = _base_config(args)
    config.update({'r1': args.r1, 'r2': args.r2})

    _emit_result(args, config, {
        'n': args.n,
        'r1': args.r1,
        'r2': args.r2,
        'eigenvalue': result,
        'theta_star': bound.theta_star,
        'c_n': bound.c_n,
    })

    return EXIT_OK


@route('eig-pair')
def cmd_eig_pair(args: argparse.Namespace) -> int:
    """First eigenvalue of the nonlocal problem on a Wulff pair."""
    _, kappa = _gauge(args)
    result = nonlocal_pair_eigenvalue(
        args.n, kappa, args.r1, args.r2, args.alpha,
        include_nonradial=not args.radial, rtol=args.tol)

    config = _base_config(args)
    config.update({'r1': args.r1, 'r2': args.r2, 'alpha': args.alpha})

    output: Dict[str, Any] = {
        'n': args.n,
        'kappa_n': kappa,
        'alpha': args.alpha,
        'eigenvalue': result,
    }

    if args.fd_nodes is not None:
        if args.fd_nodes < MIN_RADIAL_NODES:
            raise ConfigError(
                f'--fd-nodes must be at least {MIN_RADIAL_NODES}, got '
                f'{args.fd_nodes}.')
        if math.isinf(args.alpha):
            raise ConfigError('The radial check needs a finite --alpha.')
        output['fd_eigenvalue'], _, _ = radial_pair_nonlocal_solve(
            args.n, kappa, args.r1, args.r2, args.alpha, args.fd_nodes)

    _emit_result(args, config, output)

    return EXIT_OK


def _domain(args: argparse.Namespace, g: Gauge) -> CartesianGrid2D:
    domain: str = args.domain

    if domain.startswith('file:'):
        try:
            return read_mask(domain[len('file:'):])
        except OSError as err:
            raise ConfigError(f'Cannot read mask `{domain}`: {err}') from err
        except ValueError as err:
            raise ConfigError(f'Bad mask `{domain}`: {err}') from err

    if not args.h > 0 or not args.area > 0:
        raise ConfigError('--h & --area must be positive.')

    if domain == 'disk':
        return disk_grid(args.area, args.h)
    if domain == 'square':
        return square_grid(args.area, args.h)
    if domain == 'wulff':
        return wulff_grid(g, args.area, args.h)

    raise ConfigError(
        f'Unknown domain `{domain}`; expected disk, square, wulff or '
        'file:<path>.')


@route('grid2d')
def cmd_grid2d(args: argparse.Namespace) -> int:
    """Minimize the discrete Rayleigh quotient for each weight.

    With --eigenfunction, the minimizer of the first weight is written
    as CSV.
    """
    if args.n != 2:
        raise ConfigError(f'grid2d is planar, got n = {args.n}.')
    g, _ = _gauge(args)
    grid = _domain(args, g)
    if not args.alphas:
        raise ConfigError('--alphas must name at least one weight.')

    options = MinimizeOptions(
        seed=args.seed,
        stationarity=DEFAULT_STATIONARITY * args.tol / DEFAULT_RTOL)

    def job(alpha: float) -> Callable[[], RayleighMinimum]:
        return lambda: minimize_rayleigh(grid, g, alpha, options)

    minima: List[RayleighMinimum] = run_all(
        [job(alpha) for alpha in args.alphas])

    config = _base_config(args)
    config.update({
        'domain': args.domain,
        'h': grid.h,
        'alphas': args.alphas,
    })

    rows = [
        (alpha, minimum.eigenvalue, minimum.converged)
        for alpha, minimum in zip(args.alphas, minima)]

    if args.json:
        _emit(dumps(_record(config, {
            'area': grid.area,
            'rows': [
                {'alpha': a, 'lambda': value, 'converged': converged}
                for a, value, converged in rows],
        })) + '\n', args.out)
    else:
        _emit(_csv_text(('alpha', 'lambda', 'converged'), rows), args.out)

    if args.eigenfunction is not None:
        write_grid_function(minima[0].u, args.eigenfunction)

    if not all(minimum.converged for minimum in minima):
        LOGGER.error('Rayleigh minimization did not converge.')
        return EXIT_SOLVER

    return EXIT_OK


@route('verify')
def cmd_verify(args: argparse.Namespace) -> int:
    """Run the invariant suites & report one line per suite."""
    _, kappa = _gauge(args)
    names = args.suite or suite_names()
    context = SuiteContext(
        n=args.n, kappa_n=kappa, seed=args.seed,
        perturb_kappa=args.perturb_kappa)

    def job(name: str) -> Callable[[], Tuple[bool, str]]:
        return lambda: SUITES[name](context)

    outcomes = run_all([job(name) for name in names], return_exceptions=True)

    failed: List[str] = []
    lines = []
    for name, outcome in zip(names, outcomes):
        if isinstance(outcome, BaseException):
            if not isinstance(outcome, Exception):
                raise outcome
            passed, detail = False, f'{type(outcome).__name__}: {outcome}'
        else:
            passed, detail = outcome
        if not passed:
            failed.append(name)
        lines.append(f'{name}: {"PASS" if passed else "FAIL"} ({detail})\n')

    _emit(''.join(lines), args.out)

    if failed:
        sys.stderr.write(f'first failing suite: {failed[0]}\n')
        return EXIT_VERIFY

    return EXIT_OK


#
# PARSER
#

def build_parser() -> argparse.ArgumentParser:
    """Build the parser; global flags follow the command name."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--n', type=int, default=2, help='dimension')
    common.add_argument(
        '--gauge', default='euclidean',
        help='euclidean, p:<float> or ellipse:<a11>,<a12>,<a22>')
    common.add_argument('--out', default=None, help='output path')
    common.add_argument(
        '--tol', type=float, default=DEFAULT_RTOL,
        help='relative tolerance of the closed-form solvers')
    common.add_argument('--seed', type=int, default=0)
    common.add_argument(
        '--json', action='store_true',
        help='emit the full JSON record with metadata')
    common.add_argument('--verbose', action='store_true')

    parser = argparse.ArgumentParser(
        prog='wulff-spectra',
        description=__doc__,
        formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument(
        '--version', action='version', version=f'%(prog)s {__version__}')
    commands = parser.add_subparsers(dest='command', required=True)

    curve = commands.add_parser('curve', parents=[common])
    curve.add_argument('--volume', type=_volume, default=None,
                       help='`auto` (kappa_n) or a positive number')
    curve.add_argument('--alpha-min', type=float, default=0.0)
    curve.add_argument('--alpha-max', type=float, default=60.0)
    curve.add_argument('--steps', type=int, default=120)

    commands.add_parser('critical-alpha', parents=[common])

    twisted = commands.add_parser('twisted', parents=[common])
    twisted.add_argument('--r1', type=float, required=True)
    twisted.add_argument('--r2', type=float, required=True)

    pair = commands.add_parser('eig-pair', parents=[common])
    pair.add_argument('--r1', type=float, required=True)
    pair.add_argument('--r2', type=float, required=True)
    pair.add_argument('--alpha', type=float, required=True,
                      help='weight of the nonlocal term; `inf` allowed')
    pair.add_argument('--radial', action='store_true',
                      help='first radial eigenvalue only')
    pair.add_argument('--fd-nodes', type=int, default=None,
                      help='also solve the radial finite volume problem')

    grid = commands.add_parser('grid2d', parents=[common])
    grid.add_argument('--domain', default='disk',
                      help='disk, square, wulff or file:<path>')
    grid.add_argument('--area', type=float, default=math.pi)
    grid.add_argument('--h', type=float, default=1 / 64)
    grid.add_argument('--alphas', type=_weights, default=[0.0],
                      help='comma separated weights')
    grid.add_argument('--eigenfunction', default=None,
                      help='CSV path for the first minimizer')

    verify = commands.add_parser('verify', parents=[common])
    verify.add_argument('--suite', action='append', choices=suite_names(),
                        help='run only this suite; repeatable')
    verify.add_argument('--perturb-kappa', type=float, default=0.0,
                        help=argparse.SUPPRESS)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Parse argv, dispatch the command & map errors to exit codes."""
    parser = build_parser()

    try:
        args = parser.parse_args(argv)
    except SystemExit as err:
        # argparse exits 2 on usage errors & 0 for --help
        return int(err.code or 0)

    try:
        configure_logging(args.verbose)
        return COMMANDS[args.command](args)
    except (ConfigError, ValueError) as err:
        LOGGER.error(f'Configuration error: {err}')
        sys.stderr.write(f'error: {err}\n')
        return EXIT_CONFIG
    except SolverError as err:
        LOGGER.error(f'Solver failure: {err}')
        sys.stderr.write(f'solver error: {err}\n')
        return EXIT_SOLVER
    except OracleMismatch as err:
        LOGGER.error(f'Oracle mismatch: {err}')
        sys.stderr.write(f'oracle mismatch: {err}\n')
        return EXIT_ORACLE
