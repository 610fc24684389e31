"""
Tests for the energy grid, harvest models and buffer dynamics
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ehcap.errors import ConfigError, EnergyCausalityError
from ehcap.ehmodel import (
    ChannelModel, EnergyGrid, HarvestModel, SlotState, available_states,
    buffer_step, default_quantum, harvest_from_spec, load_harvest_config,
    sample_harvest, sample_harvests
)


class TestBufferStep:

    @pytest.mark.parametrize("e, y, t, gamma, expected", [
        (3, 2, 1, 4, 4),
        (0, 0, 0, 4, 0),
        (2, 3, 5, 4, 0),
    ])
    def test_examples(self, e, y, t, gamma, expected):
        assert buffer_step(e, y, t, gamma) == expected

    def test_exhaustive_small_grid(self):
        for gamma in range(5):
            for e in range(gamma + 1):
                for y in range(5):
                    for t in range(e + y + 1):
                        assert buffer_step(e, y, t, gamma) == min(gamma, e + y - t)

    def test_causality_violation(self):
        with pytest.raises(EnergyCausalityError) as info:
            buffer_step(1, 1, 3, 4)
        assert info.value.state == 2

    @pytest.mark.parametrize("args", [(-1, 0, 0, 4), (0, -1, 0, 4), (0, 0, -1, 4), (5, 0, 0, 4)])
    def test_rejects_bad_inputs(self, args):
        with pytest.raises(ValueError):
            buffer_step(*args)

    @given(st.integers(0, 20), st.integers(0, 20), st.integers(0, 20), st.data())
    @settings(max_examples=200)
    def test_result_in_range(self, gamma, y, e_raw, data):
        e = min(e_raw, gamma)
        t = data.draw(st.integers(0, e + y))
        assert 0 <= buffer_step(e, y, t, gamma) <= gamma


class TestEnergyGrid:

    @pytest.mark.parametrize("gamma_q, ymax_q, expected", [
        (4, 4, list(range(9))),
        (0, 2, [0, 1, 2]),
        (4, 0, list(range(5))),
    ])
    def test_available_states(self, gamma_q, ymax_q, expected):
        assert available_states(EnergyGrid(1.0, gamma_q, ymax_q)) == expected

    def test_from_physical_uses_quantum(self):
        grid = EnergyGrid.from_physical(4.0, 2.0, quantum=0.5)
        assert (grid.gamma_q, grid.ymax_q) == (8, 4)
        assert grid.gamma == pytest.approx(4.0)
        assert grid.buffer_states() == list(range(9))

    def test_default_quantum_caps_states(self):
        assert default_quantum(4.0, 4.0) == 1.0
        q = default_quantum(300.0, 300.0)
        assert (300.0 + 300.0) / q <= 200

    def test_rejects_bad_grid(self):
        with pytest.raises(ValueError):
            EnergyGrid(0.0, 1, 1)
        with pytest.raises(ValueError):
            EnergyGrid(1.0, -1, 1)

    def test_slot_state(self):
        grid = EnergyGrid(1.0, 4, 2)
        assert SlotState(3, 2, grid).s_q == 5
        with pytest.raises(ValueError):
            SlotState(5, 0, grid)


class TestHarvestModel:

    def test_rejects_bad_pmf(self):
        with pytest.raises(ValueError):
            HarvestModel(np.array([0.5, 0.4]))
        with pytest.raises(ValueError):
            HarvestModel(np.array([1.5, -0.5]))

    def test_uniform_moments(self):
        model = HarvestModel.uniform(4)
        assert model.ymax_q == 4
        assert model.mean_energy == pytest.approx(2.0)
        assert model.second_moment == pytest.approx(6.0)

    def test_uniform_continuous_mean(self):
        model = HarvestModel.uniform_continuous(2.0, 0.25)
        assert model.mean_energy == pytest.approx(1.0)
        assert model.pmf.sum() == pytest.approx(1.0, abs=1e-12)

    def test_uniform_continuous_zero(self):
        model = HarvestModel.uniform_continuous(0.0, 1.0)
        assert model.mean_energy == 0.0

    def test_poisson_truncation(self):
        model = HarvestModel.poisson(2.0)
        assert model.pmf.sum() == pytest.approx(1.0, abs=1e-12)
        assert model.mean_energy == pytest.approx(2.0, abs=0.02)

    def test_pmf_is_read_only(self):
        model = HarvestModel.uniform(2)
        with pytest.raises(ValueError):
            model.pmf[0] = 1.0


class TestSampling:

    def test_point_mass_is_constant(self):
        rng = np.random.default_rng(1)
        model = HarvestModel.point(2)
        assert all(sample_harvest(model, rng) == 2 for _ in range(100))

    def test_same_seed_same_sequence(self):
        model = HarvestModel.uniform(4)
        a = sample_harvests(model, np.random.default_rng(7), 1000)
        b = sample_harvests(model, np.random.default_rng(7), 1000)
        np.testing.assert_array_equal(a, b)

    def test_uniform_frequencies(self):
        n = 1_000_000
        draws = sample_harvests(HarvestModel.uniform(4), np.random.default_rng(3), n)
        freq = np.bincount(draws, minlength=5) / n
        assert np.all(np.abs(freq - 0.2) <= 3 * np.sqrt(0.2 * 0.8 / n))


class TestHarvestFromSpec:

    def test_kinds(self):
        assert harvest_from_spec('point', ymax=3.0).pmf[-1] == 1.0
        assert harvest_from_spec('uniform', ymax=2.0).ymax_q == 2
        assert harvest_from_spec('poisson', mean=1.0).kind == 'poisson'

    def test_unknown_kind(self):
        with pytest.raises(ConfigError):
            harvest_from_spec('exponential', ymax=1.0)

    def test_pmf_file(self, tmp_path):
        path = tmp_path / "harvest.conf"
        path.write_text("# two-level harvest\nkind = pmf\npmf = 1, 0, 3\n")
        model = harvest_from_spec(f"pmf:{path}")
        np.testing.assert_allclose(model.pmf, [0.25, 0.0, 0.75])

    def test_file_with_model_kind(self, tmp_path):
        path = tmp_path / "harvest.conf"
        path.write_text("kind = uniform\nymax = 4\nquantum = 2\n")
        model = load_harvest_config(str(path))
        assert model.quantum == 2.0
        assert model.ymax_q == 2

    def test_long_kind_names(self, tmp_path):
        uniform = tmp_path / "uniform.conf"
        uniform.write_text("kind = uniform-discrete\nymax = 3\n")
        model = load_harvest_config(str(uniform))
        assert model.kind == 'uniform'
        np.testing.assert_allclose(model.pmf, [0.25] * 4)

        explicit = tmp_path / "explicit.conf"
        explicit.write_text("kind = explicit-pmf\nquantum = 0.5\npmf = 0.5, 0.5\n")
        model = load_harvest_config(str(explicit))
        assert model.kind == 'pmf'
        assert model.quantum == 0.5
        assert model.mean_energy == pytest.approx(0.25)

        assert harvest_from_spec(f"explicit-pmf:{explicit}").ymax_q == 1
        assert harvest_from_spec('uniform-discrete', ymax=2.0).ymax_q == 2

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_harvest_config(str(tmp_path / "absent.conf"))

    def test_bad_line(self, tmp_path):
        path = tmp_path / "harvest.conf"
        path.write_text("pmf 1, 2\n")
        with pytest.raises(ConfigError):
            load_harvest_config(str(path))


def test_channel_rejects_bad_noise():
    with pytest.raises(ValueError):
        ChannelModel(0.0)
    assert ChannelModel(4.0).sigma == 2.0
