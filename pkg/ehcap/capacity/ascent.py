"""
Multi-restart coordinate ascent over randomized spend policies
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..constants import (
    ACCEPT_TOL, APP_NAME, DEFAULT_RESTARTS, DEFAULT_SWEEPS, MIXTURE_WEIGHTS,
    POLICY_RANDOMIZED, SWEEP_TOL, WARM_START_BUDGET
)
from ..errors import EhcapError
from .brute_force import BruteForceSearch
from .search_base import PolicySearch
from .utils import better, optimal_spend_vector, pad, unit_vector

logger = logging.getLogger(APP_NAME)


@dataclass(frozen=True, eq=False)
class ClimbResult:
    """Final point of one restart with its accepted-value trace"""

    label: str
    vectors: list
    value: object
    trace: tuple
    sweeps: int


class AscentSearch(PolicySearch):
    """
    Coordinate ascent on per-state spend laws

    Each sweep visits every state and tries the library of pure spends, the
    optimal inputs under every smaller peak, and mixtures of the current law
    with each of those. A candidate is kept only if it raises the stationary
    rate. There are exactly `restarts` starts, the first from the greedy policy.
    A small enough exhaustive oracle takes the second when restarts > 1; random
    policies fill the remainder.
    """

    name = 'ascent'

    def __init__(self, harvest, grid, channel, restarts=DEFAULT_RESTARTS, sweeps=DEFAULT_SWEEPS,
                 seed=0, workers=1, warm_start=True):
        super().__init__(harvest, grid, channel)
        if restarts < 1:
            raise ValueError(f"restarts must be at least 1, got {restarts}")
        self.restarts = restarts
        self.sweeps = sweeps
        self.seed = seed
        self.workers = workers
        self.warm_start = warm_start
        self._library = [self._build_library(s) for s in range(grid.n_states)]

    def _build_library(self, state):
        library = [unit_vector(j, state + 1) for j in range(state + 1)]
        for j in range(1, state + 1):
            library.append(pad(optimal_spend_vector(j, self.grid.quantum, self.channel.sigma2), state + 1))
        return library

    def candidates(self, state, current):
        """Library spend laws and their mixtures with the current law"""
        for element in self._library[state]:
            if not np.array_equal(element, current):
                yield element
            for weight in MIXTURE_WEIGHTS:
                mixed = (1.0 - weight) * current + weight * element
                if not np.array_equal(mixed, current):
                    yield mixed / mixed.sum()

    def starts(self):
        """Labelled initial policies as spend vectors"""
        n = self.grid.n_states
        starts = [('greedy', [optimal_spend_vector(s, self.grid.quantum, self.channel.sigma2) for s in range(n)])]

        if self.warm_start and self.restarts > 1:
            oracle = BruteForceSearch(self.harvest, self.grid, self.channel)
            if oracle.enumeration_size() <= WARM_START_BUDGET:
                vectors, _, _ = oracle.search()
                starts.append(('oracle', vectors))

        children = np.random.SeedSequence(self.seed).spawn(self.restarts - len(starts))
        for i, child in enumerate(children, start=1):
            rng = np.random.default_rng(child)
            starts.append((f"random-{i}", [rng.dirichlet(np.ones(s + 1)) for s in range(n)]))
        return starts

    def climb(self, label, vectors):
        """
        Run sweeps from one start until a sweep gains less than SWEEP_TOL

        Returns:
            ClimbResult
        """
        vectors = [np.asarray(q, dtype=float) for q in vectors]
        current = self.objective.evaluate(vectors)
        trace = [current.value]
        sweep = 0
        for sweep in range(1, self.sweeps + 1):
            start_value = current.value
            for s in range(self.grid.n_states):
                for candidate in list(self.candidates(s, vectors[s])):
                    trial = list(vectors)
                    trial[s] = candidate
                    value = self.objective.evaluate(trial)
                    if value.value > current.value + ACCEPT_TOL:
                        vectors, current = trial, value
                        trace.append(value.value)
            if current.value - start_value <= SWEEP_TOL:
                break
        logger.debug(f"Restart {label}: {current.value:.9g} nats after {sweep} sweeps")
        return ClimbResult(label, vectors, current, tuple(trace), sweep)

    def _climb_safely(self, start):
        label, vectors = start
        try:
            return self.climb(label, vectors)
        except EhcapError as e:
            self.handle_error(f"restart {label}", e)
            return None

    def search(self):
        starts = self.starts()
        if self.workers > 1:
            with ThreadPoolExecutor(max_workers=self.workers) as pool:
                results = list(pool.map(self._climb_safely, starts))
        else:
            results = [self._climb_safely(start) for start in starts]

        finished = [r for r in results if r is not None]
        if not finished:
            raise EhcapError("every ascent restart failed")

        best = None
        for result in finished:
            if best is None or better(result.value, best.value):
                best = result
        logger.info(f"Ascent winner: restart {best.label} with {best.value.value:.9g} nats")

        diagnostics = {
            'restarts': len(starts),
            'failed_restarts': len(starts) - len(finished),
            'winner': best.label,
            'sweeps': {r.label: r.sweeps for r in finished},
            'restart_values': {r.label: r.value.value for r in finished},
            'trace': list(best.trace),
            'evaluations': self.objective.evaluations,
            'seed': self.seed,
        }
        return best.vectors, POLICY_RANDOMIZED, diagnostics


def ascent_capacity(harvest, grid, channel, restarts=DEFAULT_RESTARTS, seed=0, sweeps=DEFAULT_SWEEPS,
                    workers=1, warm_start=True):
    """
    Numerical capacity with buffer state information at the receiver

    Args:
        harvest: HarvestModel
        grid: EnergyGrid
        channel: ChannelModel
        restarts: Total number of starts, greedy and oracle included
        seed: Base seed for the random starts
        sweeps: Sweep cap per restart
        workers: Restarts run concurrently on this many threads
        warm_start: Let the exhaustive oracle take one start when it is small

    Returns:
        RateReport whose diagnostics carry the winning restart's monotone trace
    """
    return AscentSearch(harvest, grid, channel, restarts, sweeps, seed, workers, warm_start).run()
