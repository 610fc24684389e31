"""
Strategy letters for the channel without buffer state at the receiver.

A strategy letter of order m maps the last m available-energy states to an
input amplitude. Coding with i.i.d. letters over blocks of m slots gives the
lower bound (1/m) I(U; W^m) on the capacity without receiver side information.
"""

import itertools
import logging
import math
from dataclasses import dataclass

import numpy as np

from .capacity import BruteForceSearch
from .capacity.utils import unit_vector
from .constants import (
    APP_NAME, BA_MAX_ITERATIONS, MAX_STRATEGY_ORDER, NODE_STEP, PMF_TOL,
    QUAD_RADIUS, STRATEGY_BUDGET, STRATEGY_GAP_TOL
)
from .errors import BudgetExceededError
from .infotheory import amplitude_grid, blahut_arimoto, capacity_iteration
from .markov import TransitionMatrix, stationary_vectors, transition_row

logger = logging.getLogger(APP_NAME)

STRATEGY_CHUNK = 1024


@dataclass(frozen=True)
class StrategyLetter:
    """Map from state m-tuples to amplitude indices in the final state's alphabet"""

    m: int
    tuples: tuple
    mapping: tuple

    def index(self, states):
        return self.mapping[self.tuples.index(tuple(states))]


@dataclass(frozen=True, eq=False)
class OrderMChannel:
    """
    Super-channel from strategy letters to blocks of m outputs

    paths holds state paths of length 2m - 1 starting in the stationary law;
    slot k of a block is driven by the window paths[:, k:k + m].
    """

    m: int
    alphabets: dict
    kernel: TransitionMatrix
    pi: np.ndarray
    tuples: tuple
    strategies: tuple
    paths: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        if abs(self.weights.sum() - 1.0) > PMF_TOL:
            raise ValueError(f"path weights sum to {self.weights.sum():.15g}")

    @property
    def states(self):
        return tuple(int(s) for s in np.flatnonzero(self.pi > 0))


@dataclass(frozen=True, eq=False)
class StrategyRate:
    """Lower bound per channel use with its capacity-iteration certificate"""

    m: int
    rate_nats: float
    gap: float
    iterations: int
    strategies: int
    probs: np.ndarray


def enumerate_strategies(m, states, amplitudes_per_state, tuples=None, budget=STRATEGY_BUDGET):
    """
    Every total map from state m-tuples to amplitudes, in lexicographic order

    Args:
        m: Order, 1 or 2
        states: States the tuples range over
        amplitudes_per_state: Mapping state -> allowed amplitudes
        tuples: Tuples needing a value, defaults to all m-tuples of states
        budget: Largest number of strategies to produce

    Returns:
        list of StrategyLetter

    Raises:
        BudgetExceededError: If the count exceeds the budget
    """
    if m not in range(1, MAX_STRATEGY_ORDER + 1):
        raise ValueError(f"order must be between 1 and {MAX_STRATEGY_ORDER}, got {m}")
    if tuples is None:
        tuples = list(itertools.product(sorted(states), repeat=m))
    tuples = tuple(tuple(int(s) for s in t) for t in tuples)
    sizes = [len(amplitudes_per_state[t[-1]]) for t in tuples]
    count = math.prod(sizes)
    if count > budget:
        raise BudgetExceededError(
            f"{count} order-{m} strategies over {len(tuples)} state tuples, budget is {budget}",
            size=count, budget=budget)
    return [StrategyLetter(m, tuples, mapping) for mapping in itertools.product(*(range(k) for k in sizes))]


def _consistent_row(state, amplitudes, grid, harvest):
    rows = []
    for x in amplitudes:
        t = int(round(x * x / grid.quantum))
        rows.append(transition_row(unit_vector(t, state + 1), state, harvest.pmf, grid.gamma_q, grid.n_states))
    for row in rows[1:]:
        if not np.allclose(row, rows[0], rtol=0.0, atol=PMF_TOL):
            raise ValueError(f"amplitudes at state {state} lead to different buffer dynamics")
    return rows[0]


def _alphabet_rate(amplitudes, state, grid, channel):
    x = np.sort(np.asarray(amplitudes, dtype=float))
    if x.size == 1:
        return 0.0
    if not np.allclose(x, -x[::-1]):
        raise ValueError(f"alphabet at state {state} is not sign-symmetric")
    return blahut_arimoto(x, state * grid.quantum, channel).rate


def build_order_m_channel(m, grid, harvest, channel, amplitudes_per_state, class_index=None):
    """
    Assemble the order-m channel for fixed per-state alphabets

    The buffer dynamics must not depend on which letter of a state's alphabet is
    sent, so that one kernel describes the state process for every strategy.

    Args:
        m: Order, 1 or 2
        grid: EnergyGrid
        harvest: HarvestModel
        channel: ChannelModel
        amplitudes_per_state: Mapping or sequence state -> amplitudes
        class_index: Ergodic class to use; by default the one with the highest
            rate when the receiver knows the state

    Returns:
        OrderMChannel

    Raises:
        ValueError: If an alphabet breaks the energy-consistency requirement
    """
    if m not in range(1, MAX_STRATEGY_ORDER + 1):
        raise ValueError(f"order must be between 1 and {MAX_STRATEGY_ORDER}, got {m}")
    alphabets = {s: np.asarray(amplitudes_per_state[s], dtype=float) for s in range(grid.n_states)}
    for s, x in alphabets.items():
        if np.any(x * x > s * grid.quantum * (1 + PMF_TOL) + PMF_TOL):
            raise ValueError(f"alphabet at state {s} exceeds its peak energy")

    kernel = TransitionMatrix(np.array([_consistent_row(s, alphabets[s], grid, harvest)
                                        for s in range(grid.n_states)]))
    classes = stationary_vectors(kernel)
    if class_index is None:
        scores = [sum(c.pi[s] * _alphabet_rate(alphabets[s], s, grid, channel) for s in c.states)
                  for c in classes]
        class_index = int(np.argmax(scores))
    pi = classes[class_index].pi

    paths = []
    weights = []
    for path in itertools.product(classes[class_index].states, repeat=2 * m - 1):
        w = pi[path[0]]
        for a, b in zip(path, path[1:]):
            w *= kernel.rows[a, b]
        if w > 0:
            paths.append(path)
            weights.append(w)
    paths = np.array(paths, dtype=np.int64)
    weights = np.array(weights)
    weights /= weights.sum()

    tuples = sorted({tuple(int(s) for s in p[k:k + m]) for p in paths for k in range(m)})
    strategies = enumerate_strategies(m, None, alphabets, tuples)
    logger.debug(f"Order-{m} channel: {len(tuples)} state tuples, {len(strategies)} strategies, {len(paths)} paths")
    return OrderMChannel(m, alphabets, kernel, pi, tuple(tuples), tuple(strategies), paths, weights)


def _path_weights(order_channel, pi):
    weights = np.array([pi[p[0]] * np.prod([order_channel.kernel.rows[a, b] for a, b in zip(p, p[1:])])
                        for p in order_channel.paths])
    total = weights.sum()
    if total <= 0:
        raise ValueError("stationary vector gives no weight to the channel's paths")
    return weights / total


def _mixture_coefficients(order_channel, weights):
    """Strategy-by-mean-vector weights of the Gaussian mixtures, and the mean vectors"""
    m = order_channel.m
    tuple_index = {t: i for i, t in enumerate(order_channel.tuples)}
    means = {}
    entries = []
    for f, letter in enumerate(order_channel.strategies):
        for path, w in zip(order_channel.paths, weights):
            mu = []
            for k in range(m):
                window = tuple(int(s) for s in path[k:k + m])
                mu.append(order_channel.alphabets[window[-1]][letter.mapping[tuple_index[window]]])
            key = tuple(mu)
            j = means.setdefault(key, len(means))
            entries.append((f, j, w))
    coefficients = np.zeros((len(order_channel.strategies), len(means)))
    for f, j, w in entries:
        coefficients[f, j] += w
    return coefficients, np.array(list(means.keys()))


def _node_grid(means, m, sigma):
    step = NODE_STEP[m] * sigma
    lo = means.min() - QUAD_RADIUS * sigma
    hi = means.max() + QUAD_RADIUS * sigma
    count = int(math.ceil((hi - lo) / step)) + 1
    axis = lo + step * np.arange(count)
    axis_weights = np.full(count, step)
    axis_weights[0] = axis_weights[-1] = 0.5 * step
    nodes = np.stack(np.meshgrid(*([axis] * m), indexing='ij'), axis=-1).reshape(-1, m)
    weights = np.prod(np.stack(np.meshgrid(*([axis_weights] * m), indexing='ij'), axis=-1).reshape(-1, m), axis=1)
    return nodes, weights


def order_m_rate(order_channel, pi=None, sigma2=1.0, tol=STRATEGY_GAP_TOL, max_iter=BA_MAX_ITERATIONS):
    """
    Lower bound (1/m) max I(U; W^m) over i.i.d. strategy letters

    Given U = f, the block output is a Gaussian mixture over state paths with
    stationary starting weights. The maximization is a capacity iteration whose
    gap certificate, per channel use, is at most tol.

    Args:
        order_channel: OrderMChannel
        pi: Stationary vector; defaults to the channel's own
        sigma2: Noise variance
        tol: Gap target in nats per channel use

    Returns:
        StrategyRate
    """
    m = order_channel.m
    sigma = math.sqrt(sigma2)
    weights = order_channel.weights if pi is None else _path_weights(order_channel, np.asarray(pi))
    coefficients, means = _mixture_coefficients(order_channel, weights)

    nodes, node_weights = _node_grid(means, m, sigma)
    diff = nodes[None, :, :] - means[:, None, :]
    log_phi = -(diff * diff).sum(axis=2) / (2.0 * sigma2) - 0.5 * m * math.log(2.0 * math.pi * sigma2)
    phi = np.exp(log_phi)

    # sum_w weight * p_f log p_f, one chunk of strategies at a time
    negentropy = np.empty(coefficients.shape[0])
    for start in range(0, coefficients.shape[0], STRATEGY_CHUNK):
        p = coefficients[start:start + STRATEGY_CHUNK] @ phi
        with np.errstate(divide='ignore', invalid='ignore'):
            plogp = np.where(p > 0, p * np.log(p), 0.0)
        negentropy[start:start + STRATEGY_CHUNK] = plogp @ node_weights

    def divergences(r):
        q = (r @ coefficients) @ phi
        with np.errstate(divide='ignore'):
            log_q = np.where(q > 0, np.log(np.where(q > 0, q, 1.0)), 0.0)
        cross = phi @ (node_weights * log_q)
        return negentropy - coefficients @ cross

    r, rate, gap, iterations, _ = capacity_iteration(divergences, coefficients.shape[0], tol * m, max_iter)
    logger.info(f"Order-{m} strategy bound: {rate / m:.9g} nats per use over {coefficients.shape[0]} strategies")
    return StrategyRate(m, max(rate, 0.0) / m, gap / m, iterations, coefficients.shape[0], r)


def strategy_alphabet(grid, harvest, channel, spend_map=None):
    """
    Energy-consistent alphabets for the strategy-letter bound

    Without a buffer the dynamics ignore spending, so each state gets its whole
    quantized amplitude grid. With a buffer each state s gets +/- sqrt(T(s));
    T defaults to the best antipodal spend map when exhaustive search fits its
    budget, else to spending everything.

    Returns:
        tuple: (dict state -> amplitudes, spend map or None)
    """
    if grid.gamma_q == 0:
        return {s: amplitude_grid(s * grid.quantum, quantum=grid.quantum) for s in range(grid.n_states)}, None

    if spend_map is None:
        try:
            report = BruteForceSearch(harvest, grid, channel, spend_options='antipodal').run()
            spend_map = [int(label.split(':')[1]) for label in report.diagnostics['spend_map']]
        except BudgetExceededError as e:
            logger.warning(f"{e}; using the spend-all map for strategy alphabets")
            spend_map = list(range(grid.n_states))

    alphabets = {}
    for s, t in enumerate(spend_map):
        if t == 0:
            alphabets[s] = np.zeros(1)
        else:
            a = math.sqrt(t * grid.quantum)
            alphabets[s] = np.array([-a, a])
    return alphabets, list(spend_map)


def bsir_alphabet_rate(order_channel, channel):
    """Rate over the same alphabets and state law when the receiver knows the state"""
    total = 0.0
    for s in order_channel.states:
        x = np.sort(order_channel.alphabets[s])
        if x.size > 1:
            peak = float(np.max(x * x))
            total += order_channel.pi[s] * blahut_arimoto(x, peak, channel).rate
    return total
