"""
Physical model of the energy harvesting link: energy grid, harvest process,
AWGN channel and the buffer update law.

Energies are integers counted in quanta unless a name says otherwise. The
buffer update uses the reading

    available = buffer + harvest,  spent <= available,
    next buffer = min(capacity, available - spent)
"""

import logging
import math
import os
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .constants import (
    APP_NAME, DEFAULT_TRUNCATE_QUANTILE, HARVEST_ALIASES, HARVEST_PMF, HARVEST_POINT,
    HARVEST_POISSON, HARVEST_UNIFORM, HARVEST_UNIFORM_CONTINUOUS,
    MAX_GRID_STATES, PMF_TOL
)
from .errors import ConfigError, EnergyCausalityError

logger = logging.getLogger(APP_NAME)


@dataclass(frozen=True)
class EnergyGrid:
    """Quantized energy axis with buffer capacity and maximum harvest in quanta"""

    quantum: float
    gamma_q: int
    ymax_q: int

    def __post_init__(self):
        if not self.quantum > 0:
            raise ValueError(f"quantum must be positive, got {self.quantum}")
        if self.gamma_q < 0 or self.ymax_q < 0:
            raise ValueError(f"gamma_q and ymax_q must be non-negative, got {self.gamma_q}, {self.ymax_q}")

    @classmethod
    def from_physical(cls, gamma, ymax, quantum=None):
        """
        Build a grid from physical buffer size and maximum harvest

        Args:
            gamma: Buffer capacity in energy units
            ymax: Maximum harvest in energy units
            quantum: Energy per quantum; chosen by default_quantum() if None

        Returns:
            EnergyGrid
        """
        if quantum is None:
            quantum = default_quantum(gamma, ymax)
        return cls(quantum=float(quantum),
                   gamma_q=int(round(gamma / quantum)),
                   ymax_q=int(round(ymax / quantum)))

    @property
    def n_states(self):
        return self.gamma_q + self.ymax_q + 1

    @property
    def gamma(self):
        return self.gamma_q * self.quantum

    def buffer_states(self):
        return list(range(self.gamma_q + 1))


def default_quantum(gamma, ymax):
    """Smallest round quantum keeping (gamma + ymax) / quantum within MAX_GRID_STATES"""
    span = gamma + ymax
    if span <= MAX_GRID_STATES:
        return 1.0
    return float(math.ceil(span / MAX_GRID_STATES))


@dataclass(frozen=True, eq=False)
class HarvestModel:
    """Distribution of the per-slot harvest on {0, ..., ymax_q} quanta"""

    pmf: np.ndarray
    quantum: float = 1.0
    kind: str = HARVEST_PMF

    def __post_init__(self):
        pmf = np.asarray(self.pmf, dtype=float)
        if pmf.ndim != 1 or pmf.size == 0:
            raise ValueError("pmf must be a non-empty vector")
        if np.any(pmf < 0):
            raise ValueError("pmf entries must be non-negative")
        if abs(pmf.sum() - 1.0) > PMF_TOL:
            raise ValueError(f"pmf must sum to 1, sums to {pmf.sum():.15g}")
        if not self.quantum > 0:
            raise ValueError(f"quantum must be positive, got {self.quantum}")
        pmf.setflags(write=False)
        object.__setattr__(self, 'pmf', pmf)

    @classmethod
    def point(cls, y_q, quantum=1.0):
        pmf = np.zeros(int(y_q) + 1)
        pmf[-1] = 1.0
        return cls(pmf, quantum, HARVEST_POINT)

    @classmethod
    def uniform(cls, ymax_q, quantum=1.0):
        n = int(ymax_q) + 1
        return cls(np.full(n, 1.0 / n), quantum, HARVEST_UNIFORM)

    @classmethod
    def from_pmf(cls, pmf, quantum=1.0):
        pmf = np.asarray(pmf, dtype=float)
        return cls(pmf / pmf.sum(), quantum, HARVEST_PMF)

    @classmethod
    def uniform_continuous(cls, ymax, quantum):
        """
        Uniform[0, ymax] harvest binned to the nearest quantum

        Args:
            ymax: Upper end of the harvest interval in energy units
            quantum: Energy per quantum

        Returns:
            HarvestModel with mean ymax / 2 when ymax is a multiple of quantum
        """
        if ymax <= 0:
            return cls.point(0, quantum)
        top = int(math.floor(ymax / quantum + 0.5))
        edges = (np.arange(top + 2) - 0.5) * quantum
        edges = np.clip(edges, 0.0, ymax)
        pmf = np.diff(edges) / ymax
        pmf = pmf[:top + 1]
        pmf = pmf / pmf.sum()
        return cls(pmf, quantum, HARVEST_UNIFORM_CONTINUOUS)

    @classmethod
    def poisson(cls, mean, quantum=1.0, quantile=DEFAULT_TRUNCATE_QUANTILE):
        """
        Poisson harvest (mean in energy units) truncated at a quantile

        The mass above the quantile is dropped and the rest renormalized.
        """
        rate = mean / quantum
        top = int(stats.poisson.ppf(quantile, rate))
        pmf = stats.poisson.pmf(np.arange(top + 1), rate)
        logger.debug(f"Poisson harvest truncated at {top} quanta, dropped mass {1.0 - pmf.sum():.3g}")
        return cls(pmf / pmf.sum(), quantum, HARVEST_POISSON)

    @property
    def ymax_q(self):
        return self.pmf.size - 1

    @property
    def mean_quanta(self):
        return float(np.dot(np.arange(self.pmf.size), self.pmf))

    @property
    def mean_energy(self):
        return self.mean_quanta * self.quantum

    @property
    def second_moment(self):
        return float(np.dot(np.arange(self.pmf.size) ** 2, self.pmf)) * self.quantum ** 2


@dataclass(frozen=True)
class ChannelModel:
    """AWGN channel W = X + N with noise variance sigma2"""

    sigma2: float = 1.0

    def __post_init__(self):
        if not self.sigma2 > 0:
            raise ValueError(f"sigma2 must be positive, got {self.sigma2}")

    @property
    def sigma(self):
        return math.sqrt(self.sigma2)


@dataclass(frozen=True)
class SlotState:
    """Buffer level and current harvest of one slot, in quanta"""

    e_q: int
    y_q: int
    grid: EnergyGrid = field(repr=False)

    def __post_init__(self):
        if not 0 <= self.e_q <= self.grid.gamma_q:
            raise ValueError(f"buffer level {self.e_q} outside [0, {self.grid.gamma_q}]")
        if not 0 <= self.y_q <= self.grid.ymax_q:
            raise ValueError(f"harvest {self.y_q} outside [0, {self.grid.ymax_q}]")

    @property
    def s_q(self):
        return self.e_q + self.y_q


def buffer_step(e_q, y_q, t_q, gamma_q):
    """
    Advance the buffer by one slot

    Args:
        e_q: Buffer level in quanta
        y_q: Harvest in quanta
        t_q: Energy spent in quanta
        gamma_q: Buffer capacity in quanta

    Returns:
        int: Next buffer level min(gamma_q, e_q + y_q - t_q)

    Raises:
        EnergyCausalityError: If t_q exceeds the available energy
        ValueError: On negative inputs or a buffer level above capacity
    """
    if min(e_q, y_q, t_q, gamma_q) < 0:
        raise ValueError(f"negative energy in buffer_step(e={e_q}, y={y_q}, t={t_q}, gamma={gamma_q})")
    if e_q > gamma_q:
        raise ValueError(f"buffer level {e_q} exceeds capacity {gamma_q}")
    available = e_q + y_q
    if t_q > available:
        raise EnergyCausalityError(
            f"spending {t_q} quanta with only {available} available", state=available)
    return min(gamma_q, available - t_q)


def available_states(grid):
    """All available-energy states {0, ..., gamma_q + ymax_q} in ascending order"""
    return list(range(grid.n_states))


def sample_harvest(model, rng):
    """
    Draw one harvest value in quanta

    Args:
        model: HarvestModel
        rng: numpy Generator; the draw sequence is fixed by its seed

    Returns:
        int: Harvest in quanta
    """
    return int(rng.choice(model.pmf.size, p=model.pmf))


def sample_harvests(model, rng, size):
    """Vectorized i.i.d. harvest draws in quanta"""
    return rng.choice(model.pmf.size, size=size, p=model.pmf)


def harvest_kind(name):
    """Canonical harvest kind, mapping long names such as explicit-pmf"""
    name = name.strip()
    return HARVEST_ALIASES.get(name, name)


def harvest_from_spec(spec, quantum=None, ymax=0.0, mean=1.0,
                      quantile=DEFAULT_TRUNCATE_QUANTILE):
    """
    Build a harvest model from its command-line/config description

    Args:
        spec: point | uniform | uniform-continuous | poisson | pmf:<path>;
            uniform-discrete and explicit-pmf are accepted for uniform and pmf
        quantum: Energy per quantum; None keeps a pmf file's own quantum, else 1
        ymax: Maximum harvest in energy units (point, uniform, uniform-continuous)
        mean: Mean harvest in energy units (poisson)
        quantile: Truncation quantile for unbounded models

    Returns:
        HarvestModel
    """
    kind, _, argument = spec.partition(':')
    kind = harvest_kind(kind)
    if kind == HARVEST_PMF:
        return load_harvest_config(argument, quantum=quantum)
    quantum = 1.0 if quantum is None else quantum
    ymax_q = int(round(ymax / quantum))
    if kind == HARVEST_POINT:
        return HarvestModel.point(ymax_q, quantum)
    if kind == HARVEST_UNIFORM:
        return HarvestModel.uniform(ymax_q, quantum)
    if kind == HARVEST_UNIFORM_CONTINUOUS:
        return HarvestModel.uniform_continuous(ymax, quantum)
    if kind == HARVEST_POISSON:
        return HarvestModel.poisson(mean, quantum, quantile)
    raise ConfigError(f"Unsupported harvest model: {spec}")


def load_harvest_config(path, quantum=None):
    """
    Load a harvest model from a key-value file

    Recognized keys: kind, ymax, quantum, mean, quantile, pmf (comma list).

    Args:
        path: File path
        quantum: Overrides the file's quantum when given

    Returns:
        HarvestModel
    """
    if not os.path.exists(path):
        raise ConfigError(f"Harvest file not found: {path}")

    values = {}
    with open(path, 'r') as f:
        for raw in f:
            line = raw.split('#', 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition('=')
            if not sep:
                raise ConfigError(f"{path}: expected 'key = value', got {raw.strip()!r}")
            values[key.strip()] = value.strip()

    try:
        q = float(quantum if quantum is not None else values.get('quantum', 1.0))
        kind = harvest_kind(values.get('kind', HARVEST_PMF))
        if kind == HARVEST_PMF:
            if 'pmf' not in values:
                raise ConfigError(f"{path}: explicit-pmf harvest needs a 'pmf' line")
            pmf = [float(v) for v in values['pmf'].split(',') if v.strip()]
            model = HarvestModel.from_pmf(pmf, q)
        else:
            model = harvest_from_spec(
                kind, quantum=q,
                ymax=float(values.get('ymax', 0.0)),
                mean=float(values.get('mean', 1.0)),
                quantile=float(values.get('quantile', DEFAULT_TRUNCATE_QUANTILE)))
    except ConfigError:
        raise
    except ValueError as e:
        raise ConfigError(f"{path}: {e}") from e

    logger.info(f"Harvest model loaded from {path}: kind={model.kind}, mean={model.mean_energy:.6g}")
    return model
