"""
Configuration management for capacity experiments
"""

import hashlib
import logging
import os

from .constants import (
    APP_NAME, DEFAULT_BURN_IN, DEFAULT_RESTARTS,
    DEFAULT_SAMPLES, DEFAULT_SWEEPS, DEFAULT_TRUNCATE_QUANTILE,
    EXPERIMENT_CAPACITY_SWEEP, HARVEST_ALIASES, HARVEST_PMF, OUTPUT_FORMATS,
    SUPPORTED_EXPERIMENTS, SUPPORTED_HARVESTS
)
from .errors import ConfigError

logger = logging.getLogger(APP_NAME)

# Keys whose values are comma-separated lists, with their element type
LIST_KEYS = {
    'ymax_list': float,
    'seeds': int,
    'gammas': float,
    'm_list': int,
}

# Keys excluded from the config hash
UNHASHED_KEYS = ('out',)


class ConfigManager:
    """
    Manages experiment configuration: defaults, key-value files and
    command-line overrides. Handles loading and saving configuration to disk.
    """

    DEFAULTS = {
        'experiment': EXPERIMENT_CAPACITY_SWEEP,
        'gamma': 4.0,
        'quantum': 0.0,  # 0 keeps the chain within MAX_GRID_STATES states
        'ymax': 4.0,
        'ymax_list': [],
        'harvest': 'uniform',
        'harvest_mean': 1.0,
        'truncate_quantile': DEFAULT_TRUNCATE_QUANTILE,
        'sigma2': 1.0,
        'epsilon': 0.0,  # 0 means 5% of the mean harvest
        'seeds': [0],
        'restarts': DEFAULT_RESTARTS,
        'sweeps': DEFAULT_SWEEPS,
        'samples': DEFAULT_SAMPLES,
        'burn_in': DEFAULT_BURN_IN,
        'replicas': 1,
        'gammas': [1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0],
        'm_list': [1],
        'workers': 1,
        'oracle_gamma': -1.0,  # negative disables the companion oracle row
        'tg_compare': False,
        'out': '',
        'format': 'csv',
    }

    def __init__(self, config_file=None):
        """Initialize configuration manager with default settings"""
        self.config = {key: _copy(value) for key, value in self.DEFAULTS.items()}
        self.config_file = config_file

    def load_config(self, config_file=None):
        """
        Load configuration from a key-value file

        Args:
            config_file: Path to the file, defaults to the one given at construction

        Returns:
            dict: The merged configuration

        Raises:
            ConfigError: If the file is missing or a line cannot be parsed
        """
        path = config_file or self.config_file
        if path is None:
            logger.info("No configuration file given, using defaults")
            return self.config

        if not os.path.exists(path):
            raise ConfigError(f"Configuration file not found: {path}")

        try:
            with open(path, 'r') as f:
                lines = f.readlines()
        except OSError as e:
            raise ConfigError(f"Error reading configuration {path}: {e}") from e

        loaded = {}
        for number, raw in enumerate(lines, start=1):
            line = raw.split('#', 1)[0].strip()
            if not line:
                continue
            if '=' not in line:
                raise ConfigError(f"{path}:{number}: expected 'key = value', got {raw.strip()!r}")
            key, value = (part.strip() for part in line.split('=', 1))
            loaded[key] = value

        self.update(loaded)
        self.config_file = path
        logger.info(f"Configuration loaded from {path}")
        return self.config

    def save_config(self, config_file=None):
        """
        Save current configuration to disk

        Args:
            config_file: Destination path, defaults to the loaded file

        Returns:
            str: The path written
        """
        path = config_file or self.config_file
        if path is None:
            raise ConfigError("No path to save configuration to")

        directory = os.path.dirname(os.path.abspath(path))
        os.makedirs(directory, exist_ok=True)
        with open(path, 'w') as f:
            f.write(self.serialize())
        logger.info(f"Configuration saved to {path}")
        return path

    def serialize(self, exclude=()):
        """Canonical key-value text, one sorted key per line"""
        lines = []
        for key in sorted(self.config):
            if key in exclude:
                continue
            lines.append(f"{key} = {_format_value(self.config[key])}")
        return '\n'.join(lines) + '\n'

    def config_hash(self):
        """Short SHA-256 of the canonical serialization, output path excluded"""
        digest = hashlib.sha256(self.serialize(exclude=UNHASHED_KEYS).encode('utf-8'))
        return digest.hexdigest()[:16]

    def update(self, overrides):
        """
        Apply overrides, coercing each value to the type of its default

        Args:
            overrides: Mapping of key -> value (strings or already-typed values);
                None values are ignored so unset command-line flags fall through
        """
        for key, value in overrides.items():
            if value is None:
                continue
            if key not in self.DEFAULTS:
                raise ConfigError(f"Unknown configuration key: {key}")
            self.config[key] = _coerce(key, value, self.DEFAULTS[key])

    def get_setting(self, key, default=None):
        """
        Get a setting value from the configuration

        Args:
            key: The setting key to retrieve
            default: Default value to return if key not found

        Returns:
            The setting value or default if not found
        """
        return self.config.get(key, default)

    def validate(self):
        """
        Check values against module preconditions

        Raises:
            ConfigError: Describing the first invalid value
        """
        c = self.config
        if c['experiment'] not in SUPPORTED_EXPERIMENTS:
            raise ConfigError(f"Unsupported experiment: {c['experiment']}")
        kind = c['harvest'].split(':', 1)[0]
        kind = HARVEST_ALIASES.get(kind, kind)
        if kind not in SUPPORTED_HARVESTS:
            raise ConfigError(f"Unsupported harvest model: {c['harvest']}")
        if kind == HARVEST_PMF and ':' not in c['harvest']:
            raise ConfigError("Harvest 'pmf' needs a file: pmf:<path>")
        if c['quantum'] < 0:
            raise ConfigError(f"quantum must be non-negative, got {c['quantum']}")
        if c['gamma'] < 0 or c['ymax'] < 0:
            raise ConfigError("gamma and ymax must be non-negative")
        if any(y < 0 for y in c['ymax_list']):
            raise ConfigError("ymax_list entries must be non-negative")
        if c['sigma2'] <= 0:
            raise ConfigError(f"sigma2 must be positive, got {c['sigma2']}")
        if c['epsilon'] < 0:
            raise ConfigError(f"epsilon must be non-negative, got {c['epsilon']}")
        if not c['seeds']:
            raise ConfigError("At least one seed is required")
        for key in ('restarts', 'sweeps', 'samples', 'replicas', 'workers'):
            if c[key] < 1:
                raise ConfigError(f"{key} must be at least 1, got {c[key]}")
        if c['burn_in'] < 0:
            raise ConfigError(f"burn_in must be non-negative, got {c['burn_in']}")
        if list(c['gammas']) != sorted(c['gammas']):
            raise ConfigError("gammas must be ascending")
        if any(m not in (1, 2) for m in c['m_list']):
            raise ConfigError(f"m_list entries must be 1 or 2, got {c['m_list']}")
        if not 0.0 < c['truncate_quantile'] < 1.0:
            raise ConfigError("truncate_quantile must lie in (0, 1)")
        if c['format'] not in OUTPUT_FORMATS:
            raise ConfigError(f"Unsupported output format: {c['format']}")

    def __getitem__(self, key):
        return self.config[key]


def _copy(value):
    return list(value) if isinstance(value, list) else value


def _coerce(key, value, default):
    """Convert a raw value to the type of the default"""
    try:
        if key in LIST_KEYS:
            element = LIST_KEYS[key]
            if isinstance(value, str):
                items = [v.strip() for v in value.split(',') if v.strip()]
            else:
                items = list(value) if isinstance(value, (list, tuple)) else [value]
            return [element(v) for v in items]
        if isinstance(default, bool):
            if isinstance(value, str):
                lowered = value.strip().lower()
                if lowered not in ('true', 'false', '1', '0', 'yes', 'no'):
                    raise ValueError(f"not a boolean: {value!r}")
                return lowered in ('true', '1', 'yes')
            return bool(value)
        if isinstance(default, int):
            if isinstance(value, str):
                return int(float(value)) if 'e' in value.lower() else int(value)
            return int(value)
        if isinstance(default, float):
            return float(value)
        return str(value)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"Invalid value for {key}: {value!r} ({e})") from e


def _format_value(value):
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, list):
        return ', '.join(_format_value(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)
