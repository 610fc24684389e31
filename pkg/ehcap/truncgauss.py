"""
Truncated Gaussian signalling: buffer simulation, Monte Carlo rate estimation
and stochastic comparisons across buffer sizes.

Simulated quantities are in physical energy units; the buffer is continuous.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from .capacity import Policy
from .constants import (
    APP_NAME, DEFAULT_ATOM_GRID, DEFAULT_BATCHES, DEFAULT_BURN_IN,
    DEFAULT_EPSILON_FRACTION, DEFAULT_SAMPLES, DKW_ALPHA, ENERGY_GRID_TOL,
    MEMO_FRACTION, NATS_PER_BIT, PEAK_TOL, POLICY_TRUNCATED_GAUSSIAN
)
from .ehmodel import ChannelModel, sample_harvests
from .errors import InvariantViolation
from .infotheory import InputDistribution, mutual_information, truncated_gaussian_input

logger = logging.getLogger(APP_NAME)


@dataclass(frozen=True)
class TGConfig:
    """Truncated Gaussian scheme with power P = E[Y] - epsilon and its simulation budget"""

    power: float
    epsilon: float
    gamma: float = 0.0
    burn_in: int = DEFAULT_BURN_IN
    samples: int = DEFAULT_SAMPLES
    seed: int = 0
    replicas: int = 1
    batches: int = DEFAULT_BATCHES
    atom_grid: int = DEFAULT_ATOM_GRID
    workers: int = 1

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if not self.power > 0:
            raise ValueError(f"power must be positive, got {self.power}")
        if self.gamma < 0:
            raise ValueError(f"gamma must be non-negative, got {self.gamma}")
        if self.burn_in < 0 or self.samples < 1:
            raise ValueError(f"need burn_in >= 0 and samples >= 1, got {self.burn_in}, {self.samples}")
        if self.replicas < 1 or self.batches < 2:
            raise ValueError(f"need replicas >= 1 and batches >= 2, got {self.replicas}, {self.batches}")

    @classmethod
    def from_harvest(cls, harvest, epsilon=None, **kwargs):
        """
        Config for a harvest model, epsilon defaulting to 5% of E[Y]

        Raises:
            ValueError: Unless 0 < epsilon < E[Y]
        """
        mean = harvest.mean_energy
        if epsilon is None or epsilon == 0:
            epsilon = DEFAULT_EPSILON_FRACTION * mean
        if not 0 < epsilon < mean:
            raise ValueError(f"epsilon must lie in (0, E[Y] = {mean:g}), got {epsilon}")
        return cls(power=mean - epsilon, epsilon=epsilon, **kwargs)


@dataclass(frozen=True, eq=False)
class ChainTrace:
    """Post-burn-in samples of one simulated trajectory"""

    gamma: float
    available: np.ndarray
    buffer: np.ndarray
    clipped: np.ndarray
    x: np.ndarray

    @property
    def clip_fraction(self):
        return float(self.clipped.mean())


@dataclass(frozen=True)
class RateEstimate:
    """Monte Carlo rate with its standard error"""

    gamma: float
    rate_nats: float
    stderr: float
    clip_fraction: float
    epsilon: float
    mean_harvest: float
    sigma2: float
    seed: int
    samples: int

    @property
    def rate_bits(self):
        return self.rate_nats / NATS_PER_BIT

    def as_row(self):
        return {
            'gamma': self.gamma,
            'rate_nats': self.rate_nats,
            'rate_bits': self.rate_bits,
            'stderr': self.stderr,
            'epsilon': self.epsilon,
            'mean_harvest': self.mean_harvest,
            'sigma2': self.sigma2,
            'seed': self.seed,
        }


def tg_step(e, y, x_prime, gamma):
    """
    One slot of truncated Gaussian signalling

    Args:
        e: Buffer level, 0 <= e <= gamma
        y: Harvest, y >= 0
        x_prime: Gaussian draw
        gamma: Buffer capacity

    Returns:
        tuple: (x, e_next) with x = sgn(x') min(sqrt(e + y), |x'|) and
            e_next = min(gamma, e + y - x^2)
    """
    if not 0 <= e <= gamma or y < 0:
        raise ValueError(f"need 0 <= e <= gamma and y >= 0, got e={e}, y={y}, gamma={gamma}")
    available = e + y
    if x_prime == 0 or available <= 0:
        x = 0.0
    else:
        x = math.copysign(min(math.sqrt(available), abs(x_prime)), x_prime)
    return x, min(gamma, max(0.0, available - x * x))


def _replica_seeds(cfg):
    return np.random.SeedSequence(cfg.seed).spawn(cfg.replicas)


def simulate_chain(cfg, harvest, gamma=None, seed=None):
    """
    Simulate the buffer under truncated Gaussian signalling, starting empty

    Harvests are drawn first and Gaussian draws second from one generator,
    so runs with the same seed share both sequences whatever gamma is.

    Args:
        cfg: TGConfig
        harvest: HarvestModel
        gamma: Buffer capacity, defaults to cfg.gamma
        seed: Seed or SeedSequence, defaults to cfg.seed

    Returns:
        ChainTrace
    """
    gamma = cfg.gamma if gamma is None else gamma
    if gamma < 0:
        raise ValueError(f"gamma must be non-negative, got {gamma}")
    rng = np.random.default_rng(cfg.seed if seed is None else seed)
    total = cfg.burn_in + cfg.samples
    y = (sample_harvests(harvest, rng, total) * harvest.quantum).tolist()
    x_prime = rng.normal(0.0, math.sqrt(cfg.power), total).tolist()

    available = np.empty(total)
    buffer = np.empty(total)
    x = np.empty(total)
    e = 0.0
    # tg_step inlined; preconditions hold by construction
    for k in range(total):
        s = e + y[k]
        xp = x_prime[k]
        root = math.sqrt(s)
        if xp == 0 or s <= 0:
            xk = 0.0
        elif abs(xp) > root:
            xk = math.copysign(root, xp)
        else:
            xk = xp
        buffer[k] = e
        available[k] = s
        x[k] = xk
        e = min(gamma, max(0.0, s - xk * xk))

    keep = slice(cfg.burn_in, total)
    trace = ChainTrace(
        gamma=gamma,
        available=available[keep],
        buffer=buffer[keep],
        clipped=np.abs(np.asarray(x_prime[cfg.burn_in:])) > np.sqrt(available[keep]),
        x=x[keep])
    if logger.isEnabledFor(logging.DEBUG):
        _check_trace(trace)
    return trace


def _check_trace(trace):
    if np.any(trace.x ** 2 > trace.available * (1 + PEAK_TOL) + PEAK_TOL):
        raise InvariantViolation("simulated input exceeded the available energy")
    if np.any(trace.buffer < 0) or np.any(trace.buffer > trace.gamma):
        raise InvariantViolation(f"simulated buffer left [0, {trace.gamma}]")


@lru_cache(maxsize=None)
def _tg_state_rate(key, step, power, atom_grid, sigma2):
    dist = truncated_gaussian_input(key * step, power, atom_grid)
    return mutual_information(dist, ChannelModel(sigma2)).nats


def state_rates(available, cfg, harvest, channel):
    """
    Per-sample I(X(s); W) of the truncated Gaussian input

    States are floored to a grid of MEMO_FRACTION quanta and memoized.
    """
    step = MEMO_FRACTION * harvest.quantum
    keys = np.floor(available / step + ENERGY_GRID_TOL).astype(np.int64)
    unique, inverse = np.unique(keys, return_inverse=True)
    values = np.array([_tg_state_rate(int(k), step, cfg.power, cfg.atom_grid, channel.sigma2) for k in unique])
    logger.debug(f"Per-state rates for {unique.size} distinct states")
    return values[inverse]


def _batch_means(values, batches):
    usable = (values.size // batches) * batches
    if usable == 0:
        return np.array([values.mean()] * 2)
    return values[:usable].reshape(batches, -1).mean(axis=1)


def estimate_rate(cfg, harvest, channel, gamma=None):
    """
    Monte Carlo rate of truncated Gaussian signalling with buffer state at the receiver

    The estimate is the post-burn-in average of per-state mutual information.
    Each replica runs on its own spawned seed; the standard error is the
    batch-means error pooled over replicas.

    Args:
        cfg: TGConfig
        harvest: HarvestModel
        channel: ChannelModel
        gamma: Buffer capacity, defaults to cfg.gamma

    Returns:
        RateEstimate
    """
    gamma = cfg.gamma if gamma is None else gamma

    def replica(seed):
        trace = simulate_chain(cfg, harvest, gamma, seed)
        values = state_rates(trace.available, cfg, harvest, channel)
        means = _batch_means(values, cfg.batches)
        return float(values.mean()), float(means.std(ddof=1) / math.sqrt(means.size)), trace.clip_fraction

    seeds = _replica_seeds(cfg)
    if cfg.workers > 1 and len(seeds) > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(replica, seeds))
    else:
        results = [replica(s) for s in seeds]

    rates, errors, clips = (np.array(v) for v in zip(*results))
    estimate = RateEstimate(
        gamma=float(gamma),
        rate_nats=float(rates.mean()),
        stderr=float(np.sqrt(np.sum(errors ** 2)) / errors.size),
        clip_fraction=float(clips.mean()),
        epsilon=cfg.epsilon,
        mean_harvest=harvest.mean_energy,
        sigma2=channel.sigma2,
        seed=cfg.seed,
        samples=cfg.samples * cfg.replicas)
    logger.info(f"TG rate at gamma={gamma:g}: {estimate.rate_nats:.6f} +/- {estimate.stderr:.2g} nats")
    return estimate


class EmpiricalCDF:
    """Right-continuous step CDF of a sample"""

    def __init__(self, samples, unit='energy'):
        self.points = np.sort(np.asarray(samples, dtype=float).ravel())
        if self.points.size == 0:
            raise ValueError("empirical CDF needs at least one sample")
        self.unit = unit

    @property
    def n(self):
        return self.points.size

    def __call__(self, x):
        return np.searchsorted(self.points, x, side='right') / self.n

    @classmethod
    def from_trace(cls, trace):
        return cls(trace.available, unit='energy')


@dataclass(frozen=True)
class DominanceResult:
    passed: bool
    max_violation: float
    tol: float


def dkw_band(n, m, alpha=DKW_ALPHA):
    """Two-sample Dvoretzky-Kiefer-Wolfowitz band at level 1 - alpha"""
    return math.sqrt(math.log(2.0 / alpha) / 2.0 * (n + m) / (n * m))


def dominance_check(samples_small, samples_large, tol=None):
    """
    Check that the second sample is stochastically at least the first

    Verifies F_large(x) <= F_small(x) + tol on the merged sample points.

    Args:
        samples_small: EmpiricalCDF expected to be stochastically smaller
        samples_large: EmpiricalCDF expected to be stochastically larger
        tol: Allowed violation, defaults to dkw_band of the two sizes

    Returns:
        DominanceResult with the largest F_large - F_small

    Raises:
        ValueError: If the samples carry different units
    """
    if samples_small.unit != samples_large.unit:
        raise ValueError(f"cannot compare {samples_small.unit!r} with {samples_large.unit!r} samples")
    if tol is None:
        tol = dkw_band(samples_small.n, samples_large.n)
    grid = np.union1d(samples_small.points, samples_large.points)
    violation = float(np.max(samples_large(grid) - samples_small(grid)))
    return DominanceResult(violation <= tol, violation, tol)


def convergence_sweep(gammas, cfg, harvest, channel):
    """
    Rate estimates over ascending buffer sizes, all on the same seed

    Returns:
        list of RateEstimate in the order of gammas
    """
    gammas = list(gammas)
    if gammas != sorted(gammas):
        raise ValueError(f"gammas must be ascending, got {gammas}")
    return [estimate_rate(cfg, harvest, channel, gamma) for gamma in gammas]


def epsilon_sweep(epsilons, cfg, harvest, channel, gamma=None):
    """Rate at a fixed buffer as the power backoff epsilon shrinks"""
    mean = harvest.mean_energy
    rows = []
    for epsilon in epsilons:
        if not 0 < epsilon < mean:
            raise ValueError(f"epsilon must lie in (0, {mean:g}), got {epsilon}")
        rows.append(estimate_rate(replace(cfg, power=mean - epsilon, epsilon=epsilon), harvest, channel, gamma))
    return rows


@dataclass(frozen=True)
class RegenerationStats:
    """Returns of the buffer to full capacity"""

    hit_fraction: float
    mean_cycle: float
    stderr: float
    cycles: int


def regeneration_stats(cfg, harvest, gamma=None, seed=None):
    """
    Frequency of full-buffer slots and the mean time between them

    Returns:
        RegenerationStats; mean_cycle is inf when fewer than two full slots occur
    """
    trace = simulate_chain(cfg, harvest, gamma, seed)
    hits = np.flatnonzero(trace.buffer >= trace.gamma)
    cycles = np.diff(hits)
    if cycles.size == 0:
        return RegenerationStats(float(hits.size / trace.buffer.size), math.inf, math.inf, 0)
    stderr = float(cycles.std(ddof=1) / math.sqrt(cycles.size)) if cycles.size > 1 else math.inf
    return RegenerationStats(float(hits.size / trace.buffer.size), float(cycles.mean()), stderr, int(cycles.size))


def quantized_tg_input(state, quantum, power, atom_grid=DEFAULT_ATOM_GRID):
    """Truncated Gaussian input at state quanta with energies floored to whole quanta"""
    dist = truncated_gaussian_input(state * quantum, power, atom_grid)
    levels = np.floor(dist.amplitudes ** 2 / quantum + ENERGY_GRID_TOL).astype(np.int64)
    levels = np.minimum(levels, state)
    keys = np.sign(dist.amplitudes).astype(np.int64) * levels
    unique, inverse = np.unique(keys, return_inverse=True)
    probs = np.bincount(inverse, weights=dist.probs)
    amplitudes = np.sign(unique) * np.sqrt(np.abs(unique) * quantum)
    return InputDistribution(amplitudes, probs / probs.sum(), state * quantum)


def quantized_tg_policy(grid, power, atom_grid=DEFAULT_ATOM_GRID):
    """Markov policy using quantized_tg_input at every state"""
    per_state = tuple(quantized_tg_input(s, grid.quantum, power, atom_grid) for s in range(grid.n_states))
    return Policy(per_state, POLICY_TRUNCATED_GAUSSIAN, grid.quantum)
