"""
Exhaustive search over deterministic spend maps
"""

import itertools
import logging
import math

import numpy as np

from ..constants import APP_NAME, ENUMERATION_BUDGET, POLICY_DETERMINISTIC, POLICY_RANDOMIZED, SPEND_OPTIONS
from ..errors import BudgetExceededError
from .search_base import PolicySearch
from .utils import better, expected_spend, optimal_spend_vector, pad, unit_vector

logger = logging.getLogger(APP_NAME)


class BruteForceSearch(PolicySearch):
    """
    Enumerates every spend map T(s) in {0, ..., s}

    At a state spending T(s) quanta the input is either +/- sqrt(T(s)) with
    equal probability ('antipodal'), the optimal input under peak T(s)
    ('optimized'), or the better of the two ('both').
    """

    name = 'brute-force'

    def __init__(self, harvest, grid, channel, spend_options='both', budget=ENUMERATION_BUDGET):
        super().__init__(harvest, grid, channel)
        if spend_options not in SPEND_OPTIONS:
            raise ValueError(f"spend_options must be one of {SPEND_OPTIONS}, got {spend_options!r}")
        self.spend_options = spend_options
        self.budget = budget
        self._options = None

    def options(self, state):
        """Candidate (label, spend vector) pairs at one state, vectors of length state + 1"""
        if self._options is None:
            self._options = [self._build_options(s) for s in range(self.grid.n_states)]
        return self._options[state]

    def _build_options(self, state):
        out = []
        if self.spend_options in ('antipodal', 'both'):
            out.extend((f"antipodal:{j}", unit_vector(j, state + 1)) for j in range(state + 1))
        if self.spend_options in ('optimized', 'both'):
            for j in range(state + 1):
                q = pad(optimal_spend_vector(j, self.grid.quantum, self.channel.sigma2), state + 1)
                if not any(np.array_equal(q, existing) for _, existing in out):
                    out.append((f"optimized:{j}", q))
        return out

    def enumeration_size(self):
        return math.prod(len(self.options(s)) for s in range(self.grid.n_states))

    def search(self):
        """
        Score every combination of per-state options

        Raises:
            BudgetExceededError: If the number of combinations exceeds the budget
        """
        size = self.enumeration_size()
        if size > self.budget:
            raise BudgetExceededError(
                f"brute force needs {size} policies, budget is {self.budget}", size=size, budget=self.budget)

        n = self.grid.n_states
        options = [self.options(s) for s in range(n)]
        rows = [[self.objective.row(s, q) for _, q in opts] for s, opts in enumerate(options)]
        rates = [[self.objective.rate(q) for _, q in opts] for opts in options]
        spends = [[expected_spend(q) for _, q in opts] for opts in options]

        best = None
        best_choice = None
        for choice in itertools.product(*(range(len(opts)) for opts in options)):
            value = self.objective.evaluate_rows(
                np.array([rows[s][c] for s, c in enumerate(choice)]),
                np.array([rates[s][c] for s, c in enumerate(choice)]),
                np.array([spends[s][c] for s, c in enumerate(choice)]))
            if better(value, best):
                best, best_choice = value, choice

        vectors = [options[s][c][1] for s, c in enumerate(best_choice)]
        spend_map = [options[s][c][0] for s, c in enumerate(best_choice)]
        deterministic = all(np.count_nonzero(q) == 1 for q in vectors)
        logger.debug(f"Brute force scored {size} policies, best {best.value:.9g} nats")
        diagnostics = {
            'enumerated': size,
            'spend_options': self.spend_options,
            'spend_map': spend_map,
        }
        return vectors, POLICY_DETERMINISTIC if deterministic else POLICY_RANDOMIZED, diagnostics


def brute_force_capacity(harvest, grid, channel, spend_options='both', budget=ENUMERATION_BUDGET):
    """
    Best deterministic spend map and its stationary rate

    Args:
        harvest: HarvestModel
        grid: EnergyGrid
        channel: ChannelModel
        spend_options: 'antipodal', 'optimized' or 'both'
        budget: Largest number of policies to score

    Returns:
        RateReport

    Raises:
        BudgetExceededError: If the enumeration exceeds the budget
    """
    return BruteForceSearch(harvest, grid, channel, spend_options, budget).run()
