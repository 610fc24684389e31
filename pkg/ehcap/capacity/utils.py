"""
Utility functions for policy search implementations
"""

import logging
import math
import threading
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ..constants import APP_NAME, TIE_TOL
from ..ehmodel import ChannelModel
from ..errors import EnergyCausalityError
from ..infotheory import InputDistribution, mutual_information, optimize_input
from ..markov import (
    TransitionMatrix, ergodic_decomposition, spend_distribution,
    stationary_distribution, transition_row
)

logger = logging.getLogger(APP_NAME)


def unit_vector(j, length):
    """Spend vector putting all mass on j quanta"""
    q = np.zeros(length)
    q[j] = 1.0
    return q


def pad(q, length):
    """Extend a spend vector with zeros"""
    out = np.zeros(length)
    out[:len(q)] = q
    return out


def spend_vector_to_input(q, state, quantum):
    """
    Sign-symmetric input spending j quanta with probability q[j]

    Args:
        q: Probabilities over spent quanta 0, 1, ...
        state: Available energy in quanta
        quantum: Energy per quantum

    Returns:
        InputDistribution with peak state * quantum
    """
    q = np.asarray(q, dtype=float)
    if q.size > state + 1 and np.any(q[state + 1:] > 0):
        raise EnergyCausalityError(f"spend vector reaches {q.size - 1} quanta at state {state}", state=state)

    amplitudes = []
    probs = []
    for j, p in enumerate(q[:state + 1]):
        if p <= 0:
            continue
        if j == 0:
            amplitudes.append(0.0)
            probs.append(p)
        else:
            a = math.sqrt(j * quantum)
            amplitudes.extend([-a, a])
            probs.extend([0.5 * p, 0.5 * p])
    probs = np.asarray(probs)
    if probs.size == 0:
        raise ValueError(f"spend vector at state {state} carries no mass")
    return InputDistribution(np.asarray(amplitudes), probs / probs.sum(), state * quantum)


@lru_cache(maxsize=None)
def optimal_input(j, quantum, sigma2):
    """Capacity-achieving input on the quantized amplitudes with peak j quanta"""
    return optimize_input(j * quantum, ChannelModel(sigma2), quantum=quantum)


def optimal_spend_vector(j, quantum, sigma2):
    """Spend law of optimal_input(j), length j + 1"""
    return spend_distribution(optimal_input(j, quantum, sigma2), j, quantum)


def expected_spend(q):
    return float(np.dot(np.arange(len(q)), q))


@dataclass(frozen=True)
class ObjectiveValue:
    """Policy value with the class decomposition behind it"""

    value: float
    chosen_class: int
    classes: tuple
    class_rates: tuple
    expected_spend: float


def better(candidate, incumbent):
    """
    Strict improvement, or a tie within TIE_TOL that spends less energy

    Args:
        candidate: ObjectiveValue
        incumbent: ObjectiveValue or None

    Returns:
        bool
    """
    if incumbent is None:
        return True
    if candidate.value > incumbent.value + TIE_TOL:
        return True
    if candidate.value >= incumbent.value - TIE_TOL:
        return candidate.expected_spend < incumbent.expected_spend - TIE_TOL
    return False


class PolicyObjective:
    """
    Fast evaluator of the stationary rate of spend-vector policies

    Transition rows are precomputed per (state, spent quanta), so a policy's
    kernel is a set of vector-matrix products. Per-input mutual information is
    cached on the spend vector's bytes.
    """

    def __init__(self, harvest, grid, channel):
        self.harvest = harvest
        self.grid = grid
        self.channel = channel
        n = grid.n_states
        self.bases = []
        for s in range(n):
            self.bases.append(np.array([
                transition_row(unit_vector(j, s + 1), s, harvest.pmf, grid.gamma_q, n)
                for j in range(s + 1)
            ]))
        self._rates = {}
        self._lock = threading.Lock()
        self.evaluations = 0

    @property
    def n_states(self):
        return self.grid.n_states

    def rate(self, q):
        """Mutual information in nats of the input defined by a spend vector"""
        q = np.trim_zeros(np.asarray(q, dtype=float), 'b')
        key = q.tobytes()
        value = self._rates.get(key)
        if value is None:
            dist = spend_vector_to_input(q, q.size - 1, self.grid.quantum)
            value = mutual_information(dist, self.channel).nats
            self._rates[key] = value
        return value

    def row(self, state, q):
        return np.asarray(q) @ self.bases[state]

    def evaluate(self, vectors):
        """
        Stationary value of a full policy

        Args:
            vectors: One spend vector per state, vectors[s] of length s + 1

        Returns:
            ObjectiveValue
        """
        rows = np.array([self.row(s, q) for s, q in enumerate(vectors)])
        rates = np.array([self.rate(q) for q in vectors])
        spends = np.array([expected_spend(q) for q in vectors])
        return self.evaluate_rows(rows, rates, spends)

    def evaluate_rows(self, rows, rates, spends):
        """Value from precomputed kernel rows, per-state rates and mean spends"""
        with self._lock:
            self.evaluations += 1
        P = TransitionMatrix(rows)
        classes, _ = ergodic_decomposition(P)
        solved = tuple(c.with_pi(stationary_distribution(P, c)) for c in classes)
        class_rates = tuple(float(c.pi @ rates) for c in solved)
        chosen = int(np.argmax(class_rates))
        return ObjectiveValue(
            value=class_rates[chosen],
            chosen_class=chosen,
            classes=solved,
            class_rates=class_rates,
            expected_spend=float(solved[chosen].pi @ spends))
