"""
Experiment runner for capacity sweeps, truncated Gaussian convergence,
greedy comparisons and strategy-letter bounds
"""

import logging
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .capacity import (
    ascent_capacity, brute_force_capacity, c_infinity, c_no_buffer,
    evaluate_policy, greedy_policy
)
from .constants import (
    APP_NAME, CONVERSE_TOL, EXIT_BAD_CONFIG, EXIT_BUDGET, EXIT_FAILURE,
    EXIT_INVARIANT, EXIT_OK, EXPERIMENT_CAPACITY_SWEEP, EXPERIMENT_GREEDY_COMPARE,
    EXPERIMENT_NO_BSIR, EXPERIMENT_TG_CONVERGENCE, HARVEST_PMF, ORDERING_TOL
)
from .ehmodel import ChannelModel, EnergyGrid, default_quantum, harvest_from_spec, harvest_kind
from .errors import BudgetExceededError, ConfigError, InvariantViolation
from .infotheory import power_bound
from .reporting import with_bits
from .shannonstrat import (
    bsir_alphabet_rate, build_order_m_channel, order_m_rate, strategy_alphabet
)
from .truncgauss import TGConfig, convergence_sweep, estimate_rate

logger = logging.getLogger(APP_NAME)

CAPACITY_COLUMNS = [
    'kind', 'gamma', 'ymax', 'mean_harvest',
    'c_gamma_nats', 'c_gamma_bits', 'r_greedy_nats', 'r_greedy_bits',
    'c_infinity_nats', 'c_infinity_bits', 'c_brute_nats', 'c_brute_bits',
    'r_tg_nats', 'r_tg_bits', 'r_tg_stderr', 'chosen_class', 'seed', 'status',
]

TG_COLUMNS = [
    'kind', 'gamma', 'rate_nats', 'rate_bits', 'stderr', 'clip_fraction',
    'epsilon', 'mean_harvest', 'sigma2', 'seed', 'status',
]

GREEDY_COLUMNS = [
    'gamma', 'ymax', 'mean_harvest', 'r_greedy_nats', 'r_greedy_bits',
    'c_gamma_nats', 'c_gamma_bits', 'greedy_gap_nats', 'greedy_gap_bits',
    'c_no_buffer_nats', 'c_no_buffer_bits', 'c_infinity_nats', 'c_infinity_bits',
    'seed', 'status',
]

NO_BSIR_COLUMNS = [
    'm', 'gamma', 'ymax', 'lower_bound_nats', 'lower_bound_bits',
    'bsir_capacity_nats', 'bsir_capacity_bits', 'bsir_alphabet_nats', 'bsir_alphabet_bits',
    'gap_nats', 'strategies', 'status',
]


def exit_code_for(errors):
    """Exit code of the most serious failure"""
    if not errors:
        return EXIT_OK
    for error_type, code in ((InvariantViolation, EXIT_INVARIANT),
                             (ConfigError, EXIT_BAD_CONFIG),
                             (BudgetExceededError, EXIT_BUDGET)):
        if any(isinstance(e, error_type) for e in errors):
            return code
    return EXIT_FAILURE


@dataclass
class ExperimentResult:
    """Rows of one experiment in emission order, with the failures met on the way"""

    experiment: str
    columns: list
    rows: list
    errors: list = field(default_factory=list)

    @property
    def exit_code(self):
        return exit_code_for(self.errors)


class ExperimentRunner:
    """
    Runs the configured experiment
    Rows execute concurrently up to the worker cap and are returned in sweep order
    """

    def __init__(self, config_manager):
        """Initialize the runner with a validated configuration manager"""
        self.config_manager = config_manager
        self.config = config_manager.config
        self.channel = ChannelModel(self.config['sigma2'])
        self.errors = []
        self.lock = threading.RLock()

    def run(self):
        """
        Run the experiment named in the configuration

        Returns:
            ExperimentResult
        """
        handlers = {
            EXPERIMENT_CAPACITY_SWEEP: self.run_capacity_sweep,
            EXPERIMENT_TG_CONVERGENCE: self.run_tg_convergence,
            EXPERIMENT_GREEDY_COMPARE: self.run_greedy_compare,
            EXPERIMENT_NO_BSIR: self.run_no_bsir,
        }
        experiment = self.config['experiment']
        if experiment not in handlers:
            raise ConfigError(f"Unsupported experiment: {experiment}")
        logger.info(f"Starting {experiment} (config {self.config_manager.config_hash()})")
        result = handlers[experiment]()
        logger.info(f"Finished {experiment}: {len(result.rows)} rows, {len(result.errors)} failures")
        return result

    @property
    def seed(self):
        return self.config['seeds'][0]

    def ymax_values(self):
        return list(self.config['ymax_list']) or [self.config['ymax']]

    def quantum_for(self, gamma, ymax):
        """
        Energy per quantum for one row

        An unset (zero) quantum keeps the chain within MAX_GRID_STATES states;
        harvest files then keep their own quantum.
        """
        c = self.config
        if c['quantum'] > 0:
            return c['quantum']
        if harvest_kind(c['harvest'].partition(':')[0]) == HARVEST_PMF:
            return None
        return default_quantum(gamma, ymax)

    def harvest_for(self, ymax, gamma=None):
        c = self.config
        gamma = c['gamma'] if gamma is None else gamma
        return harvest_from_spec(c['harvest'], quantum=self.quantum_for(gamma, ymax), ymax=ymax,
                                 mean=c['harvest_mean'], quantile=c['truncate_quantile'])

    def grid_for(self, harvest, gamma):
        quantum = harvest.quantum
        return EnergyGrid(quantum=quantum, gamma_q=int(round(gamma / quantum)), ymax_q=harvest.ymax_q)

    def tg_config(self, harvest, seed, gamma=0.0):
        c = self.config
        return TGConfig.from_harvest(
            harvest, epsilon=c['epsilon'] or None, gamma=gamma, burn_in=c['burn_in'],
            samples=c['samples'], seed=seed, replicas=c['replicas'])

    def handle_error(self, action, error):
        """
        Handle and log a failed row

        Args:
            action: Description of the row that failed
            error: Exception object

        Returns:
            str: Status text for the row
        """
        with self.lock:
            self.errors.append(error)
        if isinstance(error, BudgetExceededError):
            logger.warning(f"Skipping {action}: {error}")
            return f"skipped: {error}"
        logger.error(f"Experiment error during {action}: {type(error).__name__}: {error}")
        return f"error: {type(error).__name__}: {error}"

    def check_non_decreasing(self, rows, key, value):
        """
        Mark rows whose value falls more than ORDERING_TOL below a row with a smaller key

        Args:
            rows: Rows to compare; offending rows get an error status
            key: Column the value must not decrease along
            value: Column checked
        """
        ordered = sorted(rows, key=lambda r: r[key])
        best = None
        for row in ordered:
            if best is not None and row[value] < best[value] - ORDERING_TOL:
                error = InvariantViolation(
                    f"{value} {row[value]:.9g} at {key}={row[key]:g} is below "
                    f"{best[value]:.9g} at {key}={best[key]:g}")
                row['status'] = self.handle_error(f"monotonicity check on {value}", error)
            elif best is None or row[value] > best[value]:
                best = row

    def _map_rows(self, func, items, describe):
        """Apply func to every item, turning failures into status rows"""
        def guarded(item):
            try:
                return func(item)
            except Exception as e:
                row = describe(item)
                row['status'] = self.handle_error(f"row {row}", e)
                return [row]

        workers = self.config['workers']
        if workers > 1 and len(items) > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(guarded, items))
        else:
            results = [guarded(item) for item in items]
        return [row for rows in results for row in rows]

    def _result(self, experiment, columns, rows):
        return ExperimentResult(experiment, columns, rows, list(self.errors))

    def _ascent(self, harvest, grid):
        c = self.config
        return ascent_capacity(harvest, grid, self.channel, restarts=c['restarts'], seed=self.seed,
                               sweeps=c['sweeps'])

    def run_capacity_sweep(self):
        """
        One row per maximum harvest with C(gamma), the greedy rate and C(inf)

        A companion row at oracle_gamma, when set, adds the exhaustive oracle.
        """
        c = self.config

        def sweep_row(ymax):
            harvest = self.harvest_for(ymax)
            grid = self.grid_for(harvest, c['gamma'])
            ascent = self._ascent(harvest, grid)
            greedy = evaluate_policy(greedy_policy(grid, self.channel), harvest, grid, self.channel)
            row = {
                'kind': 'sweep',
                'gamma': grid.gamma,
                'ymax': ymax,
                'mean_harvest': harvest.mean_energy,
                'c_gamma_nats': ascent.value_nats,
                'r_greedy_nats': greedy.value_nats,
                'c_infinity_nats': c_infinity(harvest, self.channel),
                'chosen_class': ascent.chosen_class,
                'seed': self.seed,
                'status': 'ok',
            }
            if c['tg_compare'] and harvest.mean_energy > 0:
                estimate = estimate_rate(self.tg_config(harvest, self.seed, grid.gamma), harvest, self.channel)
                row['r_tg_nats'] = estimate.rate_nats
                row['r_tg_stderr'] = estimate.stderr
            _check_ordering(row)
            logger.info(f"ymax={ymax:g}: C={row['c_gamma_nats']:.6f}, greedy={row['r_greedy_nats']:.6f}, "
                        f"C(inf)={row['c_infinity_nats']:.6f}")
            return [with_bits(row, 'c_gamma', 'r_greedy', 'c_infinity', 'r_tg')]

        def oracle_row(ymax):
            harvest = self.harvest_for(ymax, c['oracle_gamma'])
            grid = self.grid_for(harvest, c['oracle_gamma'])
            ascent = self._ascent(harvest, grid)
            brute = brute_force_capacity(harvest, grid, self.channel)
            if ascent.value_nats < brute.value_nats - ORDERING_TOL:
                raise InvariantViolation(
                    f"ascent {ascent.value_nats:.9g} below oracle {brute.value_nats:.9g} at gamma={grid.gamma:g}")
            row = {
                'kind': 'oracle',
                'gamma': grid.gamma,
                'ymax': ymax,
                'mean_harvest': harvest.mean_energy,
                'c_gamma_nats': ascent.value_nats,
                'c_infinity_nats': c_infinity(harvest, self.channel),
                'c_brute_nats': brute.value_nats,
                'chosen_class': ascent.chosen_class,
                'seed': self.seed,
                'status': 'ok',
            }
            return [with_bits(row, 'c_gamma', 'c_infinity', 'c_brute', 'r_greedy', 'r_tg')]

        ymaxes = self.ymax_values()
        items = [('sweep', y) for y in ymaxes]
        if c['oracle_gamma'] >= 0:
            items.append(('oracle', ymaxes[-1]))
        rows = self._map_rows(
            lambda item: sweep_row(item[1]) if item[0] == 'sweep' else oracle_row(item[1]),
            items,
            lambda item: {'kind': item[0], 'ymax': item[1],
                          'gamma': c['gamma'] if item[0] == 'sweep' else c['oracle_gamma'], 'seed': self.seed})
        self.check_non_decreasing([r for r in rows if r.get('kind') == 'sweep' and r.get('status') == 'ok'],
                                  'mean_harvest', 'c_gamma_nats')
        return self._result(EXPERIMENT_CAPACITY_SWEEP, CAPACITY_COLUMNS, rows)

    def run_tg_convergence(self):
        """Truncated Gaussian rate over the configured buffer sizes, then the C(inf) reference"""
        c = self.config
        harvest = self.harvest_for(c['ymax'], gamma=0.0)
        gammas = list(c['gammas'])

        def seed_rows(seed):
            cfg = self.tg_config(harvest, seed)
            bound = power_bound(cfg.power, self.channel.sigma2)
            rows = []
            for estimate in convergence_sweep(gammas, cfg, harvest, self.channel):
                if estimate.rate_nats > bound + 3 * estimate.stderr + CONVERSE_TOL:
                    raise InvariantViolation(
                        f"TG rate {estimate.rate_nats:.9g} above its power bound {bound:.9g} at gamma={estimate.gamma:g}")
                row = estimate.as_row()
                row.update(kind='tg', clip_fraction=estimate.clip_fraction, status='ok')
                rows.append(row)
            _warn_if_decreasing(rows, 'gamma', 'rate_nats')
            return rows

        rows = self._map_rows(seed_rows, list(c['seeds']), lambda seed: {'kind': 'tg', 'seed': seed})
        reference = c_infinity(harvest, self.channel)
        epsilon = c['epsilon'] or None
        rows.append(with_bits({
            'kind': 'reference',
            'rate_nats': reference,
            'stderr': 0.0,
            'epsilon': epsilon if epsilon is not None else self.tg_config(harvest, self.seed).epsilon,
            'mean_harvest': harvest.mean_energy,
            'sigma2': self.channel.sigma2,
            'status': 'ok',
        }, 'rate'))
        return self._result(EXPERIMENT_TG_CONVERGENCE, TG_COLUMNS, rows)

    def run_greedy_compare(self):
        """Greedy rate against C(gamma), the no-buffer capacity and C(inf)"""
        c = self.config

        def compare_row(ymax):
            harvest = self.harvest_for(ymax)
            grid = self.grid_for(harvest, c['gamma'])
            ascent = self._ascent(harvest, grid)
            greedy = evaluate_policy(greedy_policy(grid, self.channel), harvest, grid, self.channel)
            row = {
                'gamma': grid.gamma,
                'ymax': ymax,
                'mean_harvest': harvest.mean_energy,
                'r_greedy_nats': greedy.value_nats,
                'c_gamma_nats': ascent.value_nats,
                'greedy_gap_nats': ascent.value_nats - greedy.value_nats,
                'c_no_buffer_nats': c_no_buffer(harvest, self.channel),
                'c_infinity_nats': c_infinity(harvest, self.channel),
                'seed': self.seed,
                'status': 'ok',
            }
            _check_ordering(row)
            return [with_bits(row, 'r_greedy', 'c_gamma', 'greedy_gap', 'c_no_buffer', 'c_infinity')]

        rows = self._map_rows(compare_row, self.ymax_values(),
                              lambda ymax: {'ymax': ymax, 'gamma': c['gamma'], 'seed': self.seed})
        return self._result(EXPERIMENT_GREEDY_COMPARE, GREEDY_COLUMNS, rows)

    def run_no_bsir(self):
        """
        Strategy-letter lower bounds against the capacity with buffer state at the receiver

        The reference is the best rate found with receiver state knowledge: the
        ascent value, or the same alphabets used with state knowledge if higher.
        """
        c = self.config
        ymax = c['ymax']
        base = {'gamma': c['gamma'], 'ymax': ymax}
        try:
            harvest = self.harvest_for(ymax)
            grid = self.grid_for(harvest, c['gamma'])
            alphabets, _ = strategy_alphabet(grid, harvest, self.channel)
            ascent = self._ascent(harvest, grid)
        except Exception as e:
            row = dict(base, status=self.handle_error(f"no-bsir setup {base}", e))
            return self._result(EXPERIMENT_NO_BSIR, NO_BSIR_COLUMNS, [row])

        def order_row(m):
            order_channel = build_order_m_channel(m, grid, harvest, self.channel, alphabets)
            bound = order_m_rate(order_channel, sigma2=self.channel.sigma2)
            alphabet_rate = bsir_alphabet_rate(order_channel, self.channel)
            bsir = max(ascent.value_nats, alphabet_rate)
            if bound.rate_nats > bsir + ORDERING_TOL:
                raise InvariantViolation(
                    f"order-{m} bound {bound.rate_nats:.9g} exceeds the state-aware rate {bsir:.9g}")
            row = dict(base, m=m, lower_bound_nats=bound.rate_nats, bsir_capacity_nats=bsir,
                       bsir_alphabet_nats=alphabet_rate, gap_nats=bound.gap,
                       strategies=bound.strategies, status='ok')
            return [with_bits(row, 'lower_bound', 'bsir_capacity', 'bsir_alphabet')]

        rows = self._map_rows(order_row, list(c['m_list']), lambda m: dict(base, m=m))
        return self._result(EXPERIMENT_NO_BSIR, NO_BSIR_COLUMNS, rows)


def _check_ordering(row):
    """R_greedy <= C(gamma) <= C(inf) within ORDERING_TOL"""
    greedy = row['r_greedy_nats']
    capacity = row['c_gamma_nats']
    bound = row['c_infinity_nats']
    if greedy > capacity + ORDERING_TOL or capacity > bound + ORDERING_TOL:
        raise InvariantViolation(
            f"ordering broken: greedy {greedy:.9g}, C {capacity:.9g}, C(inf) {bound:.9g}")


def _warn_if_decreasing(rows, key, value):
    """Log rows whose value drops by more than 3 combined standard errors"""
    ordered = sorted(rows, key=lambda r: r[key])
    for previous, current in zip(ordered, ordered[1:]):
        slack = 3 * (previous['stderr'] + current['stderr'])
        if current[value] < previous[value] - slack:
            logger.warning(f"{value} decreases from {previous[value]:.6g} at {key}={previous[key]:g} "
                           f"to {current[value]:.6g} at {key}={current[key]:g}")
