"""
Tests for configuration defaults, key-value files and validation
"""

import pytest

from ehcap.config_manager import ConfigManager
from ehcap.constants import EXPERIMENT_CAPACITY_SWEEP
from ehcap.errors import ConfigError


def write(path, text):
    path.write_text(text)
    return str(path)


class TestDefaults:

    def test_defaults_validate(self):
        manager = ConfigManager()
        manager.validate()
        assert manager['experiment'] == EXPERIMENT_CAPACITY_SWEEP
        assert manager['seeds'] == [0]

    def test_defaults_not_shared(self):
        first = ConfigManager()
        first.config['seeds'].append(7)
        assert ConfigManager()['seeds'] == [0]

    def test_no_file_keeps_defaults(self):
        manager = ConfigManager()
        assert manager.load_config() == ConfigManager().config

    def test_get_setting(self):
        manager = ConfigManager()
        assert manager.get_setting('gamma') == 4.0
        assert manager.get_setting('missing', 'fallback') == 'fallback'


class TestLoadConfig:

    def test_key_value_file(self, tmp_path):
        path = write(tmp_path / "run.cfg", "# sweep settings\n"
                                           "gamma = 2   # quanta\n"
                                           "\n"
                                           "seeds = 1, 2\n"
                                           "tg_compare = yes\n"
                                           "samples = 1e4\n")
        manager = ConfigManager(path)
        manager.load_config()
        assert manager['gamma'] == 2.0
        assert manager['seeds'] == [1, 2]
        assert manager['tg_compare'] is True
        assert manager['samples'] == 10_000

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            ConfigManager(str(tmp_path / "absent.cfg")).load_config()

    def test_line_without_separator(self, tmp_path):
        path = write(tmp_path / "bad.cfg", "gamma 2\n")
        with pytest.raises(ConfigError, match="bad.cfg:1"):
            ConfigManager(path).load_config()

    def test_unknown_key(self, tmp_path):
        path = write(tmp_path / "bad.cfg", "battery = 2\n")
        with pytest.raises(ConfigError):
            ConfigManager(path).load_config()

    @pytest.mark.parametrize("line", ["gamma = abc", "seeds = 1, x", "tg_compare = maybe"])
    def test_bad_value(self, tmp_path, line):
        path = write(tmp_path / "bad.cfg", line + "\n")
        with pytest.raises(ConfigError):
            ConfigManager(path).load_config()

    def test_save_and_reload(self, tmp_path):
        manager = ConfigManager()
        manager.update({'gamma': 3.5, 'm_list': '1, 2', 'out': 'rates.csv'})
        path = manager.save_config(str(tmp_path / "nested" / "saved.cfg"))

        reloaded = ConfigManager(path)
        reloaded.load_config()
        assert reloaded.config == manager.config
        assert reloaded.config_hash() == manager.config_hash()


class TestUpdate:

    def test_none_values_ignored(self):
        manager = ConfigManager()
        manager.update({'gamma': None, 'ymax': 2})
        assert manager['gamma'] == 4.0
        assert manager['ymax'] == 2.0
        assert isinstance(manager['ymax'], float)

    def test_unknown_key(self):
        with pytest.raises(ConfigError):
            ConfigManager().update({'battery': 1.0})

    def test_list_values(self):
        manager = ConfigManager()
        manager.update({'ymax_list': [1, 2], 'seeds': 5})
        assert manager['ymax_list'] == [1.0, 2.0]
        assert manager['seeds'] == [5]


class TestValidate:

    @pytest.mark.parametrize("overrides", [
        {'experiment': 'capacity-scan'},
        {'harvest': 'gamma'},
        {'harvest': 'pmf'},
        {'quantum': -1.0},
        {'gamma': -1.0},
        {'ymax_list': '1, -2'},
        {'sigma2': 0.0},
        {'epsilon': -0.1},
        {'seeds': ''},
        {'restarts': 0},
        {'samples': 0},
        {'burn_in': -1},
        {'gammas': '4, 2'},
        {'m_list': '3'},
        {'truncate_quantile': 1.0},
        {'format': 'xml'},
    ])
    def test_rejects(self, overrides):
        manager = ConfigManager()
        manager.update(overrides)
        with pytest.raises(ConfigError):
            manager.validate()

    def test_pmf_with_path(self):
        manager = ConfigManager()
        manager.update({'harvest': 'pmf:harvest.cfg'})
        manager.validate()


class TestConfigHash:

    def test_stable(self):
        assert ConfigManager().config_hash() == ConfigManager().config_hash()
        assert len(ConfigManager().config_hash()) == 16
        int(ConfigManager().config_hash(), 16)

    def test_output_path_excluded(self):
        manager = ConfigManager()
        before = manager.config_hash()
        manager.update({'out': 'elsewhere.csv'})
        assert manager.config_hash() == before

    def test_values_change_hash(self):
        manager = ConfigManager()
        before = manager.config_hash()
        manager.update({'gamma': 8})
        assert manager.config_hash() != before

    def test_serialize_sorted(self):
        lines = ConfigManager().serialize().splitlines()
        keys = [line.split(' = ', 1)[0] for line in lines]
        assert keys == sorted(keys)
        assert "tg_compare = false" in lines
