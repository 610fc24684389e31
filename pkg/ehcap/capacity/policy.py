"""
Markov energy management policies and their stationary rate
"""

import json
import logging
from dataclasses import dataclass, field

import numpy as np

from ..constants import (
    APP_NAME, CONVERSE_TOL, NATS_PER_BIT, PEAK_TOL, POLICY_DETERMINISTIC,
    POLICY_GREEDY, POLICY_RANDOMIZED, POLICY_ZERO
)
from ..errors import EnergyCausalityError, InvariantViolation
from ..infotheory import InputDistribution, mutual_information, power_bound
from ..markov import build_transition, spend_distribution, stationary_vectors
from .utils import optimal_input, spend_vector_to_input

logger = logging.getLogger(APP_NAME)


@dataclass(frozen=True, eq=False)
class Policy:
    """Input law per available-energy state, in quanta"""

    per_state: tuple
    kind: str = POLICY_RANDOMIZED
    quantum: float = 1.0

    def __post_init__(self):
        per_state = tuple(self.per_state)
        for s, dist in enumerate(per_state):
            peak = s * self.quantum
            top = float(np.max(dist.amplitudes ** 2))
            if top > peak + PEAK_TOL * max(1.0, peak):
                raise EnergyCausalityError(
                    f"{self.kind} policy uses energy {top:.9g} at state {s} (peak {peak:.9g})", state=s)
        object.__setattr__(self, 'per_state', per_state)

    @property
    def n_states(self):
        return len(self.per_state)

    @classmethod
    def from_spend_vectors(cls, vectors, quantum=1.0, kind=POLICY_RANDOMIZED):
        """Policy whose state s spends j quanta with probability vectors[s][j]"""
        return cls(tuple(spend_vector_to_input(q, s, quantum) for s, q in enumerate(vectors)),
                   kind, quantum)

    def spend_vectors(self):
        return [spend_distribution(dist, s, self.quantum) for s, dist in enumerate(self.per_state)]

    def to_dict(self):
        return {
            'kind': self.kind,
            'quantum': self.quantum,
            'per_state': [
                {'state': s,
                 'amplitudes': [float(x) for x in dist.amplitudes],
                 'probs': [float(p) for p in dist.probs]}
                for s, dist in enumerate(self.per_state)
            ],
        }


@dataclass(frozen=True, eq=False)
class ClassRate:
    """Stationary rate of one ergodic class"""

    states: tuple
    pi: np.ndarray
    rate: float


@dataclass(frozen=True, eq=False)
class RateReport:
    """Policy value as the best class rate, with its decomposition"""

    value_nats: float
    per_class: tuple
    chosen_class: int
    policy: Policy
    diagnostics: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    @property
    def value_bits(self):
        return self.value_nats / NATS_PER_BIT

    def to_dict(self):
        return {
            'value_nats': self.value_nats,
            'value_bits': self.value_bits,
            'chosen_class': self.chosen_class,
            'per_class': [
                {'states': list(c.states), 'pi': [float(p) for p in c.pi], 'rate_nats': c.rate}
                for c in self.per_class
            ],
            'policy': self.policy.to_dict(),
            'diagnostics': self.diagnostics,
            'metadata': self.metadata,
        }

    def to_json(self, indent=2):
        return json.dumps(self.to_dict(), indent=indent, sort_keys=True)


def c_infinity(harvest, channel):
    """Infinite-buffer capacity 0.5 * ln(1 + E[Y] / sigma2) in nats"""
    return power_bound(harvest.mean_energy, channel.sigma2)


def c_no_buffer(harvest, channel):
    """
    Capacity without a buffer: every slot spends at most its own harvest

    Returns:
        float: sum over y of Pr{Y = y} * C_peak(y) in nats
    """
    total = 0.0
    for y, p in enumerate(harvest.pmf):
        if p > 0 and y > 0:
            total += p * mutual_information(optimal_input(y, harvest.quantum, channel.sigma2), channel).nats
    return total


def evaluate_policy(policy, harvest, grid, channel):
    """
    Stationary rate of a Markov policy

    Builds the available-energy chain, splits it into ergodic classes and
    returns sum_s pi_s I(X(s); W) for each class; the value is the best class.

    Args:
        policy: Policy over all grid states
        harvest: HarvestModel
        grid: EnergyGrid
        channel: ChannelModel

    Returns:
        RateReport

    Raises:
        InvariantViolation: If the value exceeds the infinite-buffer capacity
    """
    P = build_transition(policy, harvest, grid)
    classes = stationary_vectors(P)

    rates = {}
    per_class = []
    for c in classes:
        for s in c.states:
            if s not in rates:
                rates[s] = mutual_information(policy.per_state[s], channel).nats
        idx = list(c.states)
        pi = c.pi[idx]
        per_class.append(ClassRate(c.states, pi, float(sum(pi[i] * rates[s] for i, s in enumerate(idx)))))

    chosen = int(np.argmax([c.rate for c in per_class]))
    value = per_class[chosen].rate
    bound = c_infinity(harvest, channel)
    if value > bound + CONVERSE_TOL:
        raise InvariantViolation(f"policy rate {value:.9g} exceeds C(inf) {bound:.9g}")

    transient = sorted(set(range(grid.n_states)) - {s for c in classes for s in c.states})
    logger.debug(f"{policy.kind} policy: {len(classes)} class(es), value {value:.9g} nats")
    return RateReport(
        value_nats=value,
        per_class=tuple(per_class),
        chosen_class=chosen,
        policy=policy,
        diagnostics={'classes': len(classes), 'transient': transient})


def greedy_policy(grid, channel):
    """Every state uses the input maximizing I(X; W) at its own peak"""
    per_state = tuple(optimal_input(s, grid.quantum, channel.sigma2) for s in range(grid.n_states))
    return Policy(per_state, POLICY_GREEDY, grid.quantum)


def zero_policy(grid):
    """X = 0 everywhere, so nothing is ever spent"""
    per_state = tuple(InputDistribution.point_mass(0.0, s * grid.quantum) for s in range(grid.n_states))
    return Policy(per_state, POLICY_ZERO, grid.quantum)


def antipodal_policy(grid, spend_map):
    """
    Deterministic spending with equiprobable +/- sqrt(T(s))

    Args:
        grid: EnergyGrid
        spend_map: T(s) in quanta per state, 0 <= T(s) <= s

    Returns:
        Policy
    """
    if len(spend_map) != grid.n_states:
        raise ValueError(f"spend map covers {len(spend_map)} states, grid has {grid.n_states}")
    per_state = []
    for s, t in enumerate(spend_map):
        if not 0 <= t <= s:
            raise EnergyCausalityError(f"spend map spends {t} quanta at state {s}", state=s)
        per_state.append(InputDistribution.antipodal(t * grid.quantum, s * grid.quantum))
    return Policy(tuple(per_state), POLICY_DETERMINISTIC, grid.quantum)


def spend_all_policy(grid):
    return antipodal_policy(grid, list(range(grid.n_states)))


def random_policy(grid, rng):
    """Spend laws drawn from a flat Dirichlet at every state"""
    vectors = [rng.dirichlet(np.ones(s + 1)) for s in range(grid.n_states)]
    return Policy.from_spend_vectors(vectors, grid.quantum, POLICY_RANDOMIZED)
