"""
Markov chain on available energy induced by a policy: transition kernel,
ergodic decomposition, stationary distributions and Cesaro occupation.
"""

import csv
import logging
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .constants import APP_NAME, BALANCE_TOL, ENERGY_GRID_TOL, MAX_POWER_ITERATIONS, PEAK_TOL, PMF_TOL
from .errors import ConvergenceError, EnergyCausalityError

logger = logging.getLogger(APP_NAME)


@dataclass(frozen=True, eq=False)
class TransitionMatrix:
    """Row-stochastic kernel over available-energy states"""

    rows: np.ndarray

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=float)
        if rows.ndim != 2 or rows.shape[0] != rows.shape[1]:
            raise ValueError(f"transition matrix must be square, got shape {rows.shape}")
        if np.any(rows < 0):
            raise ValueError("transition probabilities must be non-negative")
        sums = rows.sum(axis=1)
        if np.any(np.abs(sums - 1.0) > PMF_TOL):
            worst = int(np.argmax(np.abs(sums - 1.0)))
            raise ValueError(f"row {worst} sums to {sums[worst]:.15g}, not 1")
        rows.setflags(write=False)
        object.__setattr__(self, 'rows', rows)

    @property
    def n(self):
        return self.rows.shape[0]


@dataclass(frozen=True, eq=False)
class ErgodicClass:
    """Closed communicating set of states, with its stationary vector once solved"""

    states: tuple
    pi: np.ndarray = None

    def with_pi(self, pi):
        return ErgodicClass(self.states, pi)


def spend_distribution(input_dist, state, quantum):
    """
    Law of the spent energy T = X^2 in quanta at one state

    Args:
        input_dist: InputDistribution used at the state
        state: Available energy in quanta
        quantum: Energy per quantum

    Returns:
        np.ndarray: Probabilities over t in {0, ..., state}

    Raises:
        EnergyCausalityError: If an amplitude needs more than `state` quanta
        ValueError: If an amplitude's energy is not a whole number of quanta
    """
    pmf = np.zeros(state + 1)
    for x, p in zip(input_dist.amplitudes, input_dist.probs):
        energy = x * x / quantum
        t = int(round(energy))
        if abs(energy - t) > ENERGY_GRID_TOL * max(1.0, energy):
            raise ValueError(f"amplitude {x:.6g} at state {state} spends {energy:.9g} quanta, off the energy grid")
        if t > state and energy > state + PEAK_TOL:
            raise EnergyCausalityError(
                f"policy spends {t} quanta at state {state}", state=state)
        pmf[min(t, state)] += p
    return pmf


def transition_row(spend_pmf, state, harvest_pmf, gamma_q, n_states):
    """Next-state probabilities from one state given its spend law"""
    row = np.zeros(n_states)
    y = harvest_pmf.size
    for t, pt in enumerate(spend_pmf):
        if pt == 0.0:
            continue
        e_next = min(gamma_q, state - t)
        row[e_next:e_next + y] += pt * harvest_pmf
    return row


def build_transition(policy, harvest, grid):
    """
    Kernel of the available-energy chain under a Markov policy

    P[s][s'] = sum over (t, y) of Pr{T = t | s} Pr{Y = y} 1{min(gamma, s - t) + y = s'}

    Args:
        policy: Policy with one InputDistribution per state
        harvest: HarvestModel
        grid: EnergyGrid

    Returns:
        TransitionMatrix
    """
    n = grid.n_states
    if len(policy.per_state) != n:
        raise ValueError(f"policy covers {len(policy.per_state)} states, grid has {n}")
    if harvest.ymax_q > grid.ymax_q:
        raise ValueError(f"harvest reaches {harvest.ymax_q} quanta, grid allows {grid.ymax_q}")

    rows = np.empty((n, n))
    for s in range(n):
        spend = spend_distribution(policy.per_state[s], s, grid.quantum)
        rows[s] = transition_row(spend, s, harvest.pmf, grid.gamma_q, n)
    return TransitionMatrix(rows)


def ergodic_decomposition(P):
    """
    Closed communicating classes and transient states of a chain

    Args:
        P: TransitionMatrix

    Returns:
        tuple: (list of ErgodicClass ordered by smallest state, sorted list of transient states)
    """
    adjacency = csr_matrix(P.rows > 0)
    count, labels = connected_components(adjacency, directed=True, connection='strong')

    classes = []
    transient = []
    for label in range(count):
        members = np.flatnonzero(labels == label)
        outside = np.ones(P.n, dtype=bool)
        outside[members] = False
        leaving = P.rows[np.ix_(members, outside)].sum(axis=1) if outside.any() else np.zeros(1)
        if np.all(leaving <= PMF_TOL):
            classes.append(ErgodicClass(tuple(int(s) for s in members)))
        else:
            transient.extend(int(s) for s in members)

    classes.sort(key=lambda c: c.states[0])
    return classes, sorted(transient)


def stationary_distribution(P, ergodic_class, tol=BALANCE_TOL, max_iter=MAX_POWER_ITERATIONS):
    """
    Stationary vector of a closed class, zero off the class

    A direct linear solve seeds a lazy power iteration x <- (x + xP) / 2,
    which averages successive iterates and so also settles on periodic classes.

    Args:
        P: TransitionMatrix
        ergodic_class: Closed communicating class under P
        tol: Required l1 balance residual
        max_iter: Iteration cap

    Returns:
        np.ndarray: pi over all states

    Raises:
        ConvergenceError: If the residual stays above tol after max_iter iterations
    """
    idx = np.asarray(ergodic_class.states)
    K = P.rows[np.ix_(idx, idx)]
    K = K / K.sum(axis=1, keepdims=True)
    k = idx.size

    x = _direct_solve(K)
    residual = np.abs(x @ K - x).sum()
    iterations = 0
    while residual > tol and iterations < max_iter:
        x = 0.5 * (x + x @ K)
        x /= x.sum()
        residual = np.abs(x @ K - x).sum()
        iterations += 1

    if residual > tol:
        raise ConvergenceError(
            f"stationary solve on class of size {k} stopped at residual {residual:.3g}",
            residual=residual, iterations=iterations)
    if iterations:
        logger.debug(f"Stationary solve polished in {iterations} iterations, residual {residual:.3g}")

    pi = np.zeros(P.n)
    pi[idx] = x
    return pi


def _direct_solve(K):
    """Solve pi K = pi, sum(pi) = 1 by least squares"""
    k = K.shape[0]
    if k == 1:
        return np.ones(1)
    A = np.vstack([K.T - np.eye(k), np.ones((1, k))])
    b = np.zeros(k + 1)
    b[-1] = 1.0
    x, *_ = np.linalg.lstsq(A, b, rcond=None)
    x = np.clip(x, 0.0, None)
    total = x.sum()
    return x / total if total > 0 else np.full(k, 1.0 / k)


def stationary_vectors(P):
    """Every ergodic class of P with its stationary vector attached"""
    classes, _ = ergodic_decomposition(P)
    return [c.with_pi(stationary_distribution(P, c)) for c in classes]


def cesaro_occupation(P, initial, n):
    """
    Finite-horizon Cesaro average (1/n) sum_{k=1..n} initial P^k

    Args:
        P: TransitionMatrix
        initial: Initial probability vector
        n: Horizon, at least 1

    Returns:
        np.ndarray: Averaged occupation
    """
    if n < 1:
        raise ValueError(f"horizon must be at least 1, got {n}")
    x = np.asarray(initial, dtype=float)
    if x.shape != (P.n,) or abs(x.sum() - 1.0) > PMF_TOL or np.any(x < 0):
        raise ValueError("initial must be a probability vector over the chain's states")

    total = np.zeros(P.n)
    for _ in range(n):
        x = x @ P.rows
        total += x
    return total / n


def transition_to_csv(P, path, labels=None):
    """
    Write a kernel row-major with a header of state labels

    Args:
        P: TransitionMatrix
        path: Destination file
        labels: State labels, defaults to 0..n-1
    """
    labels = labels if labels is not None else list(range(P.n))
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f)
        writer.writerow(['state'] + [str(label) for label in labels])
        for label, row in zip(labels, P.rows):
            writer.writerow([str(label)] + [f"{v:.17g}" for v in row])
    logger.debug(f"Transition matrix written to {path}")
