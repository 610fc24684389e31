"""
Tests for Markov policies, their stationary rates and the capacity searches
"""

import bisect
import json
import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest

from ehcap.capacity import (
    AscentSearch, BruteForceSearch, Policy, antipodal_policy, ascent_capacity,
    brute_force_capacity, c_infinity, c_no_buffer, evaluate_policy, greedy_policy,
    random_policy, spend_all_policy, zero_policy
)
from ehcap.capacity.utils import (
    ObjectiveValue, PolicyObjective, better, optimal_input, spend_vector_to_input
)
from ehcap.ehmodel import EnergyGrid, HarvestModel
from ehcap.errors import BudgetExceededError, EnergyCausalityError
from ehcap.infotheory import mutual_information

from .helpers import uniform_instance


def simulated_rate(policy, harvest, grid, channel, steps=200_000, batches=50, seed=0):
    """Long-run average of per-state mutual information along a simulated path"""
    rng = np.random.default_rng(seed)
    cdfs = [np.cumsum(q).tolist() for q in policy.spend_vectors()]
    rates = [mutual_information(dist, channel).nats for dist in policy.per_state]
    harvests = rng.choice(harvest.pmf.size, size=steps, p=harvest.pmf).tolist()
    uniforms = rng.random(steps).tolist()

    values = np.empty(steps)
    s = 0
    for k in range(steps):
        values[k] = rates[s]
        t = min(bisect.bisect_right(cdfs[s], uniforms[k]), s)
        s = min(grid.gamma_q, s - t) + harvests[k]

    values = values[steps // 10:]
    usable = (values.size // batches) * batches
    means = values[:usable].reshape(batches, -1).mean(axis=1)
    return float(values.mean()), float(means.std(ddof=1) / math.sqrt(batches))


class TestBounds:

    @pytest.mark.parametrize("mean_q, expected", [(1, 0.5 * math.log(2.0)), (3, math.log(2.0))])
    def test_c_infinity(self, channel, mean_q, expected):
        harvest = HarvestModel.point(mean_q)
        assert c_infinity(harvest, channel) == pytest.approx(expected, abs=1e-12)

    def test_c_infinity_without_harvest(self, channel):
        assert c_infinity(HarvestModel.point(0), channel) == 0.0

    def test_c_no_buffer_is_harvest_average(self, channel):
        harvest = HarvestModel.from_pmf([0.5, 0.0, 0.5])
        expected = 0.5 * mutual_information(optimal_input(2, 1.0, 1.0), channel).nats
        assert c_no_buffer(harvest, channel) == pytest.approx(expected, abs=1e-12)


class TestEvaluatePolicy:

    def test_zero_policy(self, channel):
        harvest, grid = uniform_instance(2, 2)
        report = evaluate_policy(zero_policy(grid), harvest, grid, channel)
        assert report.value_nats == 0.0

    def test_value_is_best_class(self, channel):
        harvest = HarvestModel.point(0)
        grid = EnergyGrid(1.0, 2, 0)
        report = evaluate_policy(zero_policy(grid), harvest, grid, channel)
        assert [c.states for c in report.per_class] == [(0,), (1,), (2,)]
        assert report.value_nats == max(c.rate for c in report.per_class)

    def test_class_max_consistency(self, channel, buffered_instance):
        harvest, grid = buffered_instance
        report = evaluate_policy(random_policy(grid, np.random.default_rng(3)), harvest, grid, channel)
        assert report.value_nats == max(c.rate for c in report.per_class)
        assert report.per_class[report.chosen_class].rate == report.value_nats

    def test_spend_all_weights_harvest(self, channel):
        harvest, grid = uniform_instance(2, 2)
        report = evaluate_policy(spend_all_policy(grid), harvest, grid, channel)
        expected = sum(mutual_information(d, channel).nats for d in spend_all_policy(grid).per_state[:3]) / 3
        assert report.value_nats == pytest.approx(expected, abs=1e-12)
        assert report.diagnostics['transient'] == [3, 4]

    def test_matches_simulation(self, channel):
        harvest, grid = uniform_instance(4, 2)
        policy = greedy_policy(grid, channel)
        report = evaluate_policy(policy, harvest, grid, channel)
        estimate, stderr = simulated_rate(policy, harvest, grid, channel)
        assert abs(estimate - report.value_nats) <= 3 * stderr + 1e-4

    def test_transient_inputs_do_not_matter(self, channel):
        harvest, grid = uniform_instance(2, 2)
        base = spend_all_policy(grid)
        per_state = list(base.per_state)
        per_state[4] = optimal_input(4, 1.0, 1.0)
        changed = Policy(tuple(per_state), base.kind, base.quantum)
        a = evaluate_policy(base, harvest, grid, channel).value_nats
        b = evaluate_policy(changed, harvest, grid, channel).value_nats
        assert a == b

    def test_objective_agrees(self, channel, buffered_instance):
        harvest, grid = buffered_instance
        policy = random_policy(grid, np.random.default_rng(8))
        objective = PolicyObjective(harvest, grid, channel)
        value = objective.evaluate(policy.spend_vectors())
        assert value.value == pytest.approx(evaluate_policy(policy, harvest, grid, channel).value_nats, abs=1e-12)
        assert objective.evaluations == 1

    def test_evaluation_count_under_threads(self, channel):
        harvest, grid = uniform_instance(2, 2)
        objective = PolicyObjective(harvest, grid, channel)
        vectors = greedy_policy(grid, channel).spend_vectors()
        with ThreadPoolExecutor(max_workers=4) as pool:
            list(pool.map(lambda _: objective.evaluate(vectors), range(200)))
        assert objective.evaluations == 200

    def test_report_serialization(self, channel):
        harvest, grid = uniform_instance(1, 1)
        report = evaluate_policy(greedy_policy(grid, channel), harvest, grid, channel)
        document = json.loads(report.to_json())
        assert document['value_nats'] == pytest.approx(report.value_nats)
        assert document['value_bits'] == pytest.approx(report.value_nats / math.log(2.0))
        assert document['policy']['kind'] == 'greedy'
        assert len(document['policy']['per_state']) == grid.n_states


class TestPolicies:

    def test_greedy_zero_state(self, channel):
        policy = greedy_policy(EnergyGrid(1.0, 2, 2), channel)
        assert policy.per_state[0].support.tolist() == [0.0]

    def test_antipodal_policy_rejects_overspend(self):
        grid = EnergyGrid(1.0, 1, 1)
        with pytest.raises(EnergyCausalityError):
            antipodal_policy(grid, [0, 2, 2])
        with pytest.raises(ValueError):
            antipodal_policy(grid, [0, 1])

    def test_random_policy_is_seeded(self):
        grid = EnergyGrid(1.0, 2, 2)
        a = random_policy(grid, np.random.default_rng(4)).spend_vectors()
        b = random_policy(grid, np.random.default_rng(4)).spend_vectors()
        for qa, qb in zip(a, b):
            np.testing.assert_array_equal(qa, qb)

    def test_spend_vector_round_trip(self):
        q = np.array([0.2, 0.3, 0.5])
        dist = spend_vector_to_input(q, 3, 1.0)
        np.testing.assert_allclose(dist.probs, [0.25, 0.15, 0.2, 0.15, 0.25])

    def test_spend_vector_errors(self):
        with pytest.raises(EnergyCausalityError):
            spend_vector_to_input([0.0, 0.0, 1.0], 1, 1.0)
        with pytest.raises(ValueError):
            spend_vector_to_input([0.0, 0.0], 1, 1.0)


class TestBetter:

    @staticmethod
    def value(v, spend):
        return ObjectiveValue(v, 0, (), (v,), spend)

    def test_strict_gain_wins(self):
        assert better(self.value(0.5, 2.0), self.value(0.4, 0.0))

    def test_tie_prefers_lower_spend(self):
        assert better(self.value(0.5, 1.0), self.value(0.5 + 1e-10, 2.0))
        assert not better(self.value(0.5, 2.0), self.value(0.5, 1.0))

    def test_anything_beats_nothing(self):
        assert better(self.value(0.0, 0.0), None)


class TestBruteForce:

    def test_no_buffer(self, channel):
        harvest, grid = uniform_instance(0, 2)
        report = brute_force_capacity(harvest, grid, channel)
        assert report.value_nats == pytest.approx(c_no_buffer(harvest, channel), abs=1e-6)

    def test_small_instance_enumeration(self, channel):
        harvest, grid = uniform_instance(1, 1)
        report = brute_force_capacity(harvest, grid, channel, spend_options='antipodal')
        assert report.diagnostics['enumerated'] == 6
        best = max(evaluate_policy(antipodal_policy(grid, [0, t1, t2]), harvest, grid, channel).value_nats
                   for t1 in range(2) for t2 in range(3))
        assert report.value_nats == pytest.approx(best, abs=1e-12)
        assert all(label.startswith('antipodal:') for label in report.diagnostics['spend_map'])

    def test_zero_harvest(self, channel):
        harvest = HarvestModel.point(0)
        grid = EnergyGrid(1.0, 2, 0)
        assert brute_force_capacity(harvest, grid, channel).value_nats == 0.0

    def test_budget(self, channel):
        harvest, grid = uniform_instance(1, 1)
        with pytest.raises(BudgetExceededError) as info:
            brute_force_capacity(harvest, grid, channel, spend_options='antipodal', budget=5)
        assert info.value.size == 6

    def test_options_are_distinct(self, channel):
        harvest, grid = uniform_instance(2, 2)
        search = BruteForceSearch(harvest, grid, channel)
        for s in range(grid.n_states):
            vectors = [q for _, q in search.options(s)]
            for i, a in enumerate(vectors):
                assert len(a) == s + 1
                assert not any(np.array_equal(a, b) for b in vectors[i + 1:])

    def test_rejects_unknown_option(self, channel):
        harvest, grid = uniform_instance(1, 1)
        with pytest.raises(ValueError):
            BruteForceSearch(harvest, grid, channel, spend_options='gaussian')

    def test_rejects_harvest_beyond_grid(self, channel):
        with pytest.raises(ValueError):
            BruteForceSearch(HarvestModel.uniform(3), EnergyGrid(1.0, 1, 2), channel)


class TestAscent:

    @pytest.mark.parametrize("gamma_q", [0, 1, 2])
    @pytest.mark.parametrize("ymax_q", [1, 2])
    def test_matches_oracle(self, channel, gamma_q, ymax_q):
        harvest, grid = uniform_instance(gamma_q, ymax_q)
        ascent = ascent_capacity(harvest, grid, channel, restarts=3, seed=0, warm_start=False)
        brute = brute_force_capacity(harvest, grid, channel)
        assert ascent.value_nats >= brute.value_nats - 1e-4
        assert ascent.value_nats <= c_infinity(harvest, channel) + 1e-6

    def test_trace_is_monotone(self, channel):
        harvest, grid = uniform_instance(2, 2)
        report = ascent_capacity(harvest, grid, channel, restarts=2, seed=1)
        trace = np.array(report.diagnostics['trace'])
        assert np.all(np.diff(trace) > 0)
        assert report.value_nats == pytest.approx(trace[-1], abs=1e-12)

    def test_constant_harvest(self, channel):
        harvest = HarvestModel.point(1)
        grid = EnergyGrid(1.0, 3, 1)
        report = ascent_capacity(harvest, grid, channel, restarts=2, seed=0)
        peak_rate = mutual_information(optimal_input(1, 1.0, 1.0), channel).nats
        assert report.value_nats >= peak_rate - 1e-4

    def test_zero_harvest(self, channel):
        harvest = HarvestModel.point(0)
        grid = EnergyGrid(1.0, 3, 0)
        assert ascent_capacity(harvest, grid, channel, restarts=2).value_nats == 0.0

    def test_buffer_helps(self, channel):
        harvest, _ = uniform_instance(0, 2)
        with_buffer = ascent_capacity(harvest, EnergyGrid(1.0, 2, 2), channel, restarts=2)
        assert with_buffer.value_nats >= c_no_buffer(harvest, channel) - 1e-4

    def test_greedy_never_beats_ascent(self, channel, buffered_instance):
        harvest, grid = buffered_instance
        greedy = evaluate_policy(greedy_policy(grid, channel), harvest, grid, channel)
        ascent = ascent_capacity(harvest, grid, channel, restarts=2, seed=0)
        assert greedy.value_nats <= ascent.value_nats + 1e-6
        assert ascent.value_nats <= c_infinity(harvest, channel) + 1e-6

    def test_deterministic_and_thread_safe(self, channel):
        harvest, grid = uniform_instance(2, 1)
        serial = ascent_capacity(harvest, grid, channel, restarts=3, seed=9)
        again = ascent_capacity(harvest, grid, channel, restarts=3, seed=9)
        threaded = ascent_capacity(harvest, grid, channel, restarts=3, seed=9, workers=3)
        assert serial.value_nats == again.value_nats == threaded.value_nats
        assert serial.diagnostics['winner'] == threaded.diagnostics['winner']
        assert serial.diagnostics['evaluations'] == threaded.diagnostics['evaluations']

    def test_starts(self, channel):
        harvest, grid = uniform_instance(1, 1)
        search = AscentSearch(harvest, grid, channel, restarts=4, seed=0)
        labels = [label for label, _ in search.starts()]
        assert labels == ['greedy', 'oracle', 'random-1', 'random-2']
        single = AscentSearch(harvest, grid, channel, restarts=1)
        assert [label for label, _ in single.starts()] == ['greedy']
        cold = AscentSearch(harvest, grid, channel, restarts=2, warm_start=False)
        assert [label for label, _ in cold.starts()] == ['greedy', 'random-1']

    def test_non_decreasing_in_buffer(self, channel):
        values = []
        for gamma_q in (0, 1, 2):
            harvest, grid = uniform_instance(gamma_q, 2)
            values.append(ascent_capacity(harvest, grid, channel, restarts=4, seed=0).value_nats)
        assert all(b >= a - 1e-4 for a, b in zip(values, values[1:]))

    def test_rejects_no_restarts(self, channel):
        harvest, grid = uniform_instance(1, 1)
        with pytest.raises(ValueError):
            AscentSearch(harvest, grid, channel, restarts=0)


@pytest.mark.slow
@pytest.mark.parametrize("ymax_q", [1, 2, 3, 4])
def test_ordering_chain(channel, ymax_q):
    harvest, grid = uniform_instance(4, ymax_q)
    greedy = evaluate_policy(greedy_policy(grid, channel), harvest, grid, channel).value_nats
    capacity = ascent_capacity(harvest, grid, channel, seed=0).value_nats
    assert greedy <= capacity + 1e-4
    assert capacity <= c_infinity(harvest, channel) + 1e-4


def test_greedy_rate_pinned(channel, buffered_instance, golden):
    harvest, grid = buffered_instance
    report = evaluate_policy(greedy_policy(grid, channel), harvest, grid, channel)
    golden.check('greedy_rate_gamma4_uniform4_nats', report.value_nats, tol=1e-6)
