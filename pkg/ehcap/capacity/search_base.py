"""
Base class for capacity searches over Markov energy management policies
"""

import logging
from abc import ABC, abstractmethod

from ..constants import APP_NAME
from .policy import Policy, RateReport, evaluate_policy
from .utils import PolicyObjective

logger = logging.getLogger(APP_NAME)


class PolicySearch(ABC):
    """
    Abstract base class for all policy searches
    Defines the interface that search implementations must follow
    """

    name = 'search'

    def __init__(self, harvest, grid, channel):
        if harvest.ymax_q > grid.ymax_q:
            raise ValueError(f"harvest reaches {harvest.ymax_q} quanta, grid allows {grid.ymax_q}")
        self.harvest = harvest
        self.grid = grid
        self.channel = channel
        self.objective = PolicyObjective(harvest, grid, channel)

    @abstractmethod
    def search(self):
        """
        Look for the best policy

        Returns:
            tuple: (spend vectors per state, policy kind, diagnostics dict)
        """
        pass

    def run(self):
        """
        Search and evaluate the winner exactly

        Returns:
            RateReport
        """
        logger.info(f"Running {self.name} search on {self.grid.n_states} states "
                    f"(gamma={self.grid.gamma:g}, E[Y]={self.harvest.mean_energy:g})")
        vectors, kind, diagnostics = self.search()
        policy = Policy.from_spend_vectors(vectors, self.grid.quantum, kind)
        report = evaluate_policy(policy, self.harvest, self.grid, self.channel)

        diagnostics = dict(diagnostics)
        diagnostics.update(report.diagnostics)
        diagnostics['search'] = self.name
        diagnostics['evaluations'] = self.objective.evaluations
        metadata = {
            'gamma': self.grid.gamma,
            'quantum': self.grid.quantum,
            'mean_harvest': self.harvest.mean_energy,
            'sigma2': self.channel.sigma2,
        }
        logger.info(f"{self.name} search finished: {report.value_nats:.9g} nats")
        return RateReport(report.value_nats, report.per_class, report.chosen_class,
                          policy, diagnostics, metadata)

    def handle_error(self, action, error):
        """
        Handle and log search errors

        Args:
            action: Description of the action that failed
            error: Exception object or error message
        """
        error_msg = str(error)
        logger.error(f"Search error during {action}: {error_msg}")
        return error_msg
