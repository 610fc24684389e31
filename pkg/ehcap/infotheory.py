"""
Information-theoretic kernels for the AWGN channel with finite-support inputs:
mutual information by quadrature, peak-constrained input optimization and the
discretized truncated Gaussian input.
"""

import csv
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp
from scipy.stats import norm

from .constants import (
    APP_NAME, BA_GAP_TOL, BA_MAX_ITERATIONS, DEFAULT_ATOM_GRID,
    DEFAULT_GRID_POINTS, ENERGY_GRID_TOL, GRADIENT_STEP, MI_TOL, NATS_PER_BIT,
    PEAK_TOL, PMF_TOL, QUAD_RADIUS, QUAD_STEPS_PER_SIGMA
)
from .errors import ConvergenceError, InvariantViolation, QuadratureError

logger = logging.getLogger(APP_NAME)

MONOTONE_SLACK = 1e-12


@dataclass(frozen=True, eq=False)
class InputDistribution:
    """Finite-support law of the channel input under a peak energy constraint"""

    amplitudes: np.ndarray
    probs: np.ndarray
    peak_energy: float

    def __post_init__(self):
        x = np.atleast_1d(np.asarray(self.amplitudes, dtype=float))
        p = np.atleast_1d(np.asarray(self.probs, dtype=float))
        if x.shape != p.shape:
            raise ValueError(f"{x.size} amplitudes but {p.size} probabilities")
        if np.any(p < 0) or abs(p.sum() - 1.0) > PMF_TOL:
            raise ValueError(f"probabilities must be non-negative and sum to 1, sum is {p.sum():.15g}")
        if self.peak_energy < 0:
            raise ValueError(f"peak energy must be non-negative, got {self.peak_energy}")
        order = np.argsort(x, kind='stable')
        x, p = x[order], p[order]
        if np.any(np.diff(x) == 0):
            raise ValueError("amplitudes must be distinct")
        if np.max(x * x) > self.peak_energy + PEAK_TOL:
            raise ValueError(f"amplitude energy {np.max(x * x):.12g} exceeds peak {self.peak_energy:.12g}")
        x.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, 'amplitudes', x)
        object.__setattr__(self, 'probs', p)

    @classmethod
    def point_mass(cls, x=0.0, peak_energy=None):
        return cls(np.array([x]), np.array([1.0]), x * x if peak_energy is None else peak_energy)

    @classmethod
    def antipodal(cls, energy, peak_energy=None):
        """Equiprobable +/- sqrt(energy); a point mass at 0 when energy is 0"""
        peak = energy if peak_energy is None else peak_energy
        if energy <= 0:
            return cls.point_mass(0.0, peak)
        a = math.sqrt(energy)
        return cls(np.array([-a, a]), np.array([0.5, 0.5]), peak)

    @property
    def mean_energy(self):
        return float(np.dot(self.probs, self.amplitudes ** 2))

    @property
    def support(self):
        return self.amplitudes[self.probs > 0]

    def is_symmetric(self, tol=1e-12):
        flipped = InputDistribution(-self.amplitudes, self.probs, self.peak_energy)
        return (np.allclose(flipped.amplitudes, self.amplitudes, atol=tol)
                and np.allclose(flipped.probs, self.probs, atol=tol))


@dataclass(frozen=True)
class MIResult:
    """Mutual information with the quadrature used to compute it"""

    nats: float
    step: float
    radius: float

    @property
    def bits(self):
        return self.nats / NATS_PER_BIT


@dataclass(frozen=True, eq=False)
class BAResult:
    """Outcome of a capacity iteration on a fixed amplitude grid"""

    input: InputDistribution
    rate: float
    gap: float
    iterations: int
    trace: tuple


def power_bound(energy, sigma2):
    """Gaussian-input rate 0.5 * ln(1 + energy / sigma2) in nats"""
    return 0.5 * math.log1p(energy / sigma2)


def entropy(input_dist):
    """Entropy of the input in nats"""
    p = input_dist.probs[input_dist.probs > 0]
    return float(-np.dot(p, np.log(p)))


def output_grid(amplitudes, sigma, steps_per_sigma=QUAD_STEPS_PER_SIGMA, radius=QUAD_RADIUS):
    """
    Trapezoid nodes and weights covering the channel output

    Args:
        amplitudes: Input support
        sigma: Noise standard deviation
        steps_per_sigma: Nodes per noise standard deviation
        radius: Coverage beyond the extreme amplitudes, in standard deviations

    Returns:
        tuple: (nodes, weights)
    """
    step = sigma / steps_per_sigma
    lo = float(np.min(amplitudes)) - radius * sigma
    hi = float(np.max(amplitudes)) + radius * sigma
    count = int(math.ceil((hi - lo) / step)) + 1
    w = lo + step * np.arange(count)
    weights = np.full(count, step)
    weights[0] = weights[-1] = 0.5 * step
    return w, weights


def _log_kernel(amplitudes, w, sigma2):
    diff = w[None, :] - np.asarray(amplitudes)[:, None]
    return -diff * diff / (2.0 * sigma2) - 0.5 * math.log(2.0 * math.pi * sigma2)


def mutual_information(input_dist, channel, steps_per_sigma=QUAD_STEPS_PER_SIGMA, radius=QUAD_RADIUS):
    """
    I(X; W) for W = X + N, N ~ Gaussian(0, sigma2)

    Computed as h(W) - 0.5 * ln(2 pi e sigma2) with h(W) the differential entropy
    of the Gaussian mixture output, integrated by the trapezoid rule.

    Args:
        input_dist: InputDistribution
        channel: ChannelModel
        steps_per_sigma: Quadrature resolution
        radius: Quadrature truncation in noise standard deviations

    Returns:
        MIResult

    Raises:
        QuadratureError: If the integrand is not finite or the result leaves its bounds
    """
    sigma = channel.sigma
    step = sigma / steps_per_sigma
    keep = input_dist.probs > 0
    x = input_dist.amplitudes[keep]
    p = input_dist.probs[keep]
    if x.size == 1:
        return MIResult(0.0, step, radius)

    w, weights = output_grid(x, sigma, steps_per_sigma, radius)
    log_f = logsumexp(_log_kernel(x, w, channel.sigma2) + np.log(p)[:, None], axis=0)
    integrand = np.exp(log_f) * log_f
    if not np.all(np.isfinite(integrand)):
        raise QuadratureError("non-finite output log-density in mutual information quadrature")

    h_w = -float(np.dot(weights, integrand))
    nats = h_w - 0.5 * math.log(2.0 * math.pi * math.e * channel.sigma2)

    bound = min(entropy(input_dist), power_bound(input_dist.mean_energy, channel.sigma2))
    if nats < -MI_TOL or nats > bound + MI_TOL:
        raise QuadratureError(f"mutual information {nats:.9g} outside [0, {bound:.9g}]")
    return MIResult(max(nats, 0.0), step, radius)


def amplitude_grid(peak_energy, grid_points=DEFAULT_GRID_POINTS, quantum=None):
    """
    Sorted sign-symmetric amplitudes allowed under a peak energy

    Quantized systems use +/- sqrt(j * quantum) for j * quantum <= peak; otherwise
    +/- sqrt(j * peak / grid_points) for j = 0..grid_points.
    """
    if peak_energy < 0:
        raise ValueError(f"peak energy must be non-negative, got {peak_energy}")
    if peak_energy == 0:
        return np.zeros(1)
    if quantum is not None:
        top = int(math.floor(peak_energy / quantum + ENERGY_GRID_TOL))
        energies = quantum * np.arange(top + 1)
    else:
        energies = peak_energy * np.arange(grid_points + 1) / grid_points
    positive = np.sqrt(np.minimum(energies, peak_energy))
    return np.concatenate([-positive[:0:-1], positive])


def blahut_arimoto(amplitudes, peak_energy, channel, tol=BA_GAP_TOL, max_iter=BA_MAX_ITERATIONS,
                   steps_per_sigma=QUAD_STEPS_PER_SIGMA, radius=QUAD_RADIUS):
    """
    Capacity-achieving law on a fixed sign-symmetric amplitude grid

    Iterates r <- r exp(D) / Z, where D(x) is the divergence between the output
    law given x and the current output mixture. The gap max D - sum r D bounds
    the distance to the grid-constrained capacity.

    Args:
        amplitudes: Sorted amplitudes, symmetric about 0
        peak_energy: Peak constraint carried by the result
        channel: ChannelModel
        tol: Target gap in nats
        max_iter: Iteration cap

    Returns:
        BAResult

    Raises:
        ConvergenceError: If the gap is still above tol at the cap
        InvariantViolation: If the rate decreases between iterations
    """
    x = np.asarray(amplitudes, dtype=float)
    if x.size == 1:
        return BAResult(InputDistribution(x, np.ones(1), peak_energy), 0.0, 0.0, 0, (0.0,))

    w, weights = output_grid(x, channel.sigma, steps_per_sigma, radius)
    log_k = _log_kernel(x, w, channel.sigma2)
    k = np.exp(log_k) * weights[None, :]

    r, rate, gap, iterations, trace = capacity_iteration(
        lambda r: _divergences(log_k, k, r), x.size, tol, max_iter, symmetric=True)
    logger.debug(f"Capacity iteration on {x.size} amplitudes: rate {rate:.9g}, gap {gap:.2g}, {iterations} iterations")
    return BAResult(InputDistribution(x, r, peak_energy), max(rate, 0.0), gap, iterations, trace)


def capacity_iteration(divergences, size, tol=BA_GAP_TOL, max_iter=BA_MAX_ITERATIONS, symmetric=False):
    """
    Blahut-Arimoto iteration over a finite input alphabet

    Args:
        divergences: Maps input probabilities r to the vector D with
            D[i] = KL(output law given input i || output law under r)
        size: Alphabet size
        tol: Target gap max D - r.D in nats
        max_iter: Iteration cap
        symmetric: Average r with its reverse after every update

    Returns:
        tuple: (r, rate, gap, iterations, trace of rates)

    Raises:
        ConvergenceError: If the gap is still above tol at the cap
        InvariantViolation: If the rate decreases between iterations
    """
    r = np.full(size, 1.0 / size)
    previous = -math.inf
    trace = []
    for iteration in range(1, max_iter + 1):
        d = divergences(r)
        rate = float(np.dot(r, d))
        gap = float(d.max()) - rate
        if rate < previous - MONOTONE_SLACK:
            raise InvariantViolation(f"capacity iteration decreased from {previous:.15g} to {rate:.15g}")
        previous = rate
        trace.append(rate)
        if gap <= tol:
            return r, rate, gap, iteration, tuple(trace)
        r = r * np.exp(d - d.max())
        r /= r.sum()
        if symmetric:
            r = 0.5 * (r + r[::-1])
    raise ConvergenceError(
        f"capacity iteration stopped with gap {gap:.3g} after {max_iter} iterations",
        residual=gap, iterations=max_iter)


def _divergences(log_k, k, r):
    with np.errstate(divide='ignore'):
        log_q = logsumexp(log_k + np.log(r)[:, None], axis=0)
    return (k * (log_k - log_q[None, :])).sum(axis=1)


def _project_simplex(v):
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    ind = np.arange(1, v.size + 1)
    rho = np.nonzero(u - css / ind > 0)[0][-1]
    theta = css[rho] / (rho + 1)
    return np.maximum(v - theta, 0.0)


def projected_gradient(amplitudes, peak_energy, channel, tol=BA_GAP_TOL, max_iter=BA_MAX_ITERATIONS,
                       step=GRADIENT_STEP):
    """Projected gradient ascent of I over the simplex, with the same gap certificate"""
    x = np.asarray(amplitudes, dtype=float)
    if x.size == 1:
        return BAResult(InputDistribution(x, np.ones(1), peak_energy), 0.0, 0.0, 0, (0.0,))

    w, weights = output_grid(x, channel.sigma)
    log_k = _log_kernel(x, w, channel.sigma2)
    k = np.exp(log_k) * weights[None, :]

    r = np.full(x.size, 1.0 / x.size)
    trace = []
    for iteration in range(1, max_iter + 1):
        d = _divergences(log_k, k, r)
        rate = float(np.dot(r, d))
        gap = float(d.max()) - rate
        trace.append(rate)
        if gap <= tol:
            break
        r = _project_simplex(r + step * (d - rate))
        r = 0.5 * (r + r[::-1])
    else:
        raise ConvergenceError(
            f"gradient ascent stopped with gap {gap:.3g} after {max_iter} iterations",
            residual=gap, iterations=max_iter)

    return BAResult(InputDistribution(x, r / r.sum(), peak_energy), max(rate, 0.0), gap, iteration, tuple(trace))


def optimize_input_result(peak_energy, channel, grid_points=DEFAULT_GRID_POINTS, quantum=None,
                          method='blahut-arimoto', tol=BA_GAP_TOL, max_iter=BA_MAX_ITERATIONS):
    """optimize_input() with its rate, gap certificate and iteration trace"""
    if peak_energy < 0:
        raise ValueError(f"peak energy must be non-negative, got {peak_energy}")
    if grid_points < 1:
        raise ValueError(f"grid_points must be at least 1, got {grid_points}")
    amplitudes = amplitude_grid(peak_energy, grid_points, quantum)
    if method == 'blahut-arimoto':
        return blahut_arimoto(amplitudes, peak_energy, channel, tol, max_iter)
    if method == 'gradient':
        return projected_gradient(amplitudes, peak_energy, channel, tol, max_iter)
    raise ValueError(f"Unknown optimization method: {method}")


def optimize_input(peak_energy, channel, grid_points=DEFAULT_GRID_POINTS, quantum=None,
                   method='blahut-arimoto', tol=BA_GAP_TOL, max_iter=BA_MAX_ITERATIONS):
    """
    Input law maximizing I(X; W) subject to X^2 <= peak_energy

    Args:
        peak_energy: Peak energy s in energy units
        channel: ChannelModel
        grid_points: Resolution of the continuous amplitude grid
        quantum: Use the quantized amplitudes +/- sqrt(j * quantum) instead
        method: 'blahut-arimoto' or 'gradient'

    Returns:
        InputDistribution, sign-symmetric
    """
    return optimize_input_result(peak_energy, channel, grid_points, quantum, method, tol, max_iter).input


def truncated_gaussian_input(peak_energy, power, atom_grid=DEFAULT_ATOM_GRID):
    """
    Law of sgn(X') min(sqrt(s), |X'|) with X' ~ Gaussian(0, power), discretized

    Gaussian mass inside (-sqrt(s), sqrt(s)) is binned into atom_grid equal bins,
    each placed at its conditional mean; the clipped tails become exact atoms of
    mass Q(sqrt(s / power)) at +/- sqrt(s). Bins stop at QUAD_RADIUS standard
    deviations, beyond which the leftover mass is added to the outer bins
    without moving them from their in-range conditional means.
    """
    if peak_energy < 0 or not power > 0:
        raise ValueError(f"need peak >= 0 and power > 0, got {peak_energy}, {power}")
    if peak_energy == 0:
        return InputDistribution.point_mass(0.0, 0.0)

    root = math.sqrt(peak_energy)
    sd = math.sqrt(power)
    c = min(root, QUAD_RADIUS * sd)
    edges = np.linspace(-c, c, atom_grid + 1) / sd
    lower, upper = edges[:-1], edges[1:]
    # upper tail through sf so outer bins keep their precision
    mass = np.where(lower >= 0, norm.sf(lower) - norm.sf(upper), norm.cdf(upper) - norm.cdf(lower))
    pdf = norm.pdf(edges)
    with np.errstate(invalid='ignore', divide='ignore'):
        centroid = sd * (pdf[:-1] - pdf[1:]) / mass
    centroid = np.clip(centroid, lower * sd, upper * sd)

    # centroids use the in-range mass only; the folded mass sits at them
    tail = float(norm.sf(root / sd))
    if root > c:
        extra = float(norm.sf(c / sd)) - tail
        mass[0] += extra
        mass[-1] += extra

    keep = mass > 0

    amplitudes = centroid[keep]
    probs = mass[keep]
    if tail > 0:
        amplitudes = np.concatenate([[-root], amplitudes, [root]])
        probs = np.concatenate([[tail], probs, [tail]])
    return InputDistribution(amplitudes, probs / probs.sum(), peak_energy)


def input_to_csv(input_dist, path):
    """Write (amplitude, probability) rows"""
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f)
        writer.writerow(['amplitude', 'probability'])
        for x, p in zip(input_dist.amplitudes, input_dist.probs):
            writer.writerow([f"{x:.17g}", f"{p:.17g}"])
