"""Entropy, histogram-volume, typicality, and maximum-entropy inference.

All entropies are in nats and all quadrature is trapezoidal, matching the
coordinate-map construction. The discrete convention 0*ln(0) = 0 applies
throughout.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np
from scipy.stats import chi2 as _chi2

from .grid_wave import Wavefunction
from .qmap import build_qmap

__all__ = [
    "Histogram",
    "MaxEntProblem",
    "NonRealizableMomentsError",
    "discrete_entropy",
    "histogram_entropy",
    "sequence_count",
    "log_sequence_count",
    "volume_law_ratio",
    "relative_entropy",
    "coarse_H",
    "typicality",
    "maxent_solve",
    "kl_from_counts",
    "kl_floor",
    "chi_square_gof",
]

SEQUENCE_COUNT_LIMIT = 64


def discrete_entropy(p) -> float:
    """Shannon entropy -sum p_i ln p_i of a probability vector."""
    p = np.asarray(p, dtype=float)
    if np.any(p < 0):
        raise ValueError("probabilities must be non-negative")
    total = p.sum()
    if abs(total - 1.0) > 1e-9:
        raise ValueError(f"probabilities must sum to 1 (got {total!r})")
    pos = p[p > 0]
    return float(-np.sum(pos * np.log(pos)))


@dataclass(frozen=True)
class Histogram:
    """Counts over adjacent equal-width bins covering [0, length)."""

    counts: np.ndarray
    edges: np.ndarray

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        edges = np.asarray(self.edges, dtype=float)
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "edges", edges)
        if counts.ndim != 1 or counts.size == 0:
            raise ValueError("counts must be a non-empty 1D array")
        if np.any(counts < 0):
            raise ValueError("counts must be non-negative")
        if edges.shape != (counts.size + 1,):
            raise ValueError("edges must have one more entry than counts")
        widths = np.diff(edges)
        if not np.allclose(widths, widths[0], rtol=1e-9, atol=0.0):
            raise ValueError("bins must have equal width")

    @classmethod
    def regular(cls, counts, length: float) -> "Histogram":
        counts = np.asarray(counts, dtype=np.int64)
        return cls(counts=counts, edges=np.linspace(0.0, length, counts.size + 1))

    @classmethod
    def from_samples(cls, xs, n_bins: int, length: float) -> "Histogram":
        counts, edges = np.histogram(np.asarray(xs), bins=n_bins, range=(0.0, length))
        return cls(counts=counts, edges=edges)

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def histogram_entropy(h: Histogram) -> float:
    """Frequency entropy -(1/M) sum m_i ln(m_i / M)."""
    m_total = h.total
    if m_total == 0:
        raise ValueError("histogram is empty")
    pos = h.counts[h.counts > 0].astype(float)
    return float(-np.sum(pos * np.log(pos / m_total)) / m_total)


def _multinomial(counts) -> int:
    counts = [int(c) for c in counts]
    out = math.factorial(sum(counts))
    for c in counts:
        out //= math.factorial(c)
    return out


def sequence_count(h: Histogram) -> int:
    """Exact number of length-M sequences with this histogram (M <= 64)."""
    if h.total > SEQUENCE_COUNT_LIMIT:
        raise ValueError(
            f"sequence_count is limited to M <= {SEQUENCE_COUNT_LIMIT}; use log_sequence_count"
        )
    return _multinomial(h.counts)


def log_sequence_count(h: Histogram) -> float:
    """ln of the exact multinomial count, computed in integer arithmetic."""
    return math.log(_multinomial(h.counts))


def volume_law_ratio(h: Histogram) -> float:
    """ln W / (M * S_h); tends to 1 from below as M grows at fixed composition."""
    if h.total < 2:
        raise ValueError("volume-law ratio needs at least two observations")
    s_h = histogram_entropy(h)
    if s_h == 0.0:
        warnings.warn("degenerate histogram: single occupied bin, ratio fixed to 1 by convention")
        return 1.0
    return log_sequence_count(h) / (h.total * s_h)


def relative_entropy(rho: np.ndarray, measure: np.ndarray, dx: float) -> float:
    """Continuous entropy -int rho ln(rho/measure) dx on a periodic grid.

    With measure = omega = L*|psi|^2 this is bounded by ln L, with equality
    exactly at rho = |psi|^2. Support violations (rho > 0 where the measure
    vanishes) are flagged and return -inf.
    """
    rho = np.asarray(rho, dtype=float)
    measure = np.asarray(measure, dtype=float)
    if rho.shape != measure.shape:
        raise ValueError("density and measure must share a grid")
    if np.any(rho < 0) or np.any(measure < 0):
        raise ValueError("density and measure must be non-negative")
    mask = rho > 0
    if np.any(measure[mask] <= 0):
        warnings.warn("support violation: density positive where the measure vanishes")
        return float("-inf")
    return float(-np.sum(rho[mask] * np.log(rho[mask] / measure[mask])) * dx)


def coarse_H(rho: np.ndarray, psi_density: np.ndarray, cell: float, dx: float) -> float:
    """Coarse-grained relative entropy between cell averages, >= 0.

    `cell` must be an integer multiple of dx and divide the domain evenly.
    Zero exactly when the cell averages agree.
    """
    rho = np.asarray(rho, dtype=float)
    psi_density = np.asarray(psi_density, dtype=float)
    if rho.shape != psi_density.shape:
        raise ValueError("densities must share a grid")
    per_cell = cell / dx
    if abs(per_cell - round(per_cell)) > 1e-9 or round(per_cell) < 1:
        raise ValueError("cell width must be an integer multiple of the grid spacing")
    per_cell = int(round(per_cell))
    if rho.size % per_cell != 0:
        raise ValueError("cell width must divide the domain evenly")
    rho_bar = rho.reshape(-1, per_cell).mean(axis=1)
    psi_bar = psi_density.reshape(-1, per_cell).mean(axis=1)
    mask = rho_bar > 0
    if np.any(psi_bar[mask] <= 0):
        warnings.warn("coarse support violation: ensemble mass in a cell of zero reference mass")
        return float("inf")
    return float(np.sum(rho_bar[mask] * np.log(rho_bar[mask] / psi_bar[mask])) * cell)


def _merged_intervals(intervals, length: float):
    out = []
    for a, b in sorted((float(a), float(b)) for a, b in intervals):
        if not (0.0 <= a < b <= length):
            raise ValueError(f"malformed interval ({a}, {b}); need 0 <= a < b <= L")
        if out and a <= out[-1][1]:
            out[-1] = (out[-1][0], max(out[-1][1], b))
        else:
            out.append((a, b))
    return out


def typicality(psi: Wavefunction, intervals) -> float:
    """|psi|^2 mass of a union of intervals; equal to its q-volume fraction."""
    qmap = build_qmap(psi)
    total = 0.0
    for a, b in _merged_intervals(intervals, psi.grid.length):
        total += qmap.interval_volume(a, b)
    return total / psi.grid.length


class NonRealizableMomentsError(RuntimeError):
    """The requested moments cannot be met by any density on the measure's support."""


@dataclass(frozen=True)
class MaxEntProblem:
    """Moment-constrained inference over a non-negative base measure.

    x and measure sample the support; moment k of the solution must equal
    moments[k-1] for k = 1..K. After solving, multipliers, partition, and
    density are populated and the density integrates to 1 on x.
    """

    x: np.ndarray
    measure: np.ndarray
    moments: np.ndarray
    multipliers: np.ndarray | None = None
    partition: float | None = None
    density: np.ndarray | None = None

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        measure = np.asarray(self.measure, dtype=float)
        moments = np.asarray(self.moments, dtype=float)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "measure", measure)
        object.__setattr__(self, "moments", moments)
        if x.ndim != 1 or x.size < 3 or np.any(np.diff(x) <= 0):
            raise ValueError("x must be a strictly increasing 1D sample of the support")
        if measure.shape != x.shape:
            raise ValueError("measure must be sampled on x")
        if np.any(measure < 0) or not np.any(measure > 0):
            raise ValueError("measure must be non-negative and not identically zero")
        if moments.size > 4:
            raise ValueError("at most four moment constraints are supported")

    @property
    def order(self) -> int:
        return int(self.moments.size)


def _moments_of(problem: MaxEntProblem, weights: np.ndarray) -> np.ndarray:
    k = problem.order
    powers = np.stack([problem.x**j for j in range(1, k + 1)]) if k else np.empty((0, problem.x.size))
    return np.trapezoid(powers * weights, problem.x)


def maxent_solve(problem: MaxEntProblem, tol: float = 1e-10, max_iter: int = 200) -> MaxEntProblem:
    """Damped Newton iteration on the convex dual of the moment problem.

    Minimizes ln Z(lam) + lam . f starting from lam = 0, halving the step up
    to 30 times until the objective decreases. With no constraints the
    solution is the normalized measure itself. Non-realizable moments show
    up as multiplier blow-up and raise NonRealizableMomentsError.
    """
    x = problem.x
    k = problem.order
    powers = np.stack([x**j for j in range(1, k + 1)]) if k else np.empty((0, x.size))
    lam = np.zeros(k)

    def dual_parts(lam_vec):
        expo = powers.T @ lam_vec if k else np.zeros(x.size)
        shift = expo.min() if k else 0.0
        weights = problem.measure * np.exp(-(expo - shift))
        z_shifted = float(np.trapezoid(weights, x))
        if not math.isfinite(z_shifted) or z_shifted <= 0:
            raise NonRealizableMomentsError("partition integral degenerated during the solve")
        objective = math.log(z_shifted) - shift + float(lam_vec @ problem.moments)
        return objective, weights / z_shifted, shift, z_shifted

    obj, dens, shift, z_shifted = dual_parts(lam)
    for _ in range(max_iter):
        if k == 0:
            break
        mom = _moments_of(problem, dens)
        grad = problem.moments - mom
        if np.max(np.abs(grad)) < tol:
            break
        centered = powers - mom[:, None]
        hess = np.trapezoid(centered[:, None, :] * centered[None, :, :] * dens, x)
        try:
            step = np.linalg.solve(hess + 1e-14 * np.eye(k), grad)
        except np.linalg.LinAlgError as exc:
            raise NonRealizableMomentsError("singular dual Hessian") from exc
        # minimize: Newton direction on the dual is -H^{-1} grad with our sign convention
        scale = 1.0
        for _halving in range(30):
            trial = lam - scale * step
            try:
                trial_obj, trial_dens, shift, z_shifted = dual_parts(trial)
            except NonRealizableMomentsError:
                scale *= 0.5
                continue
            if trial_obj <= obj + 1e-15:
                lam, obj, dens = trial, trial_obj, trial_dens
                break
            scale *= 0.5
        else:
            raise NonRealizableMomentsError("line search failed to decrease the dual objective")
        if np.max(np.abs(lam)) > 1e8:
            raise NonRealizableMomentsError("multiplier norm blow-up: moments not realizable")
    else:
        raise NonRealizableMomentsError("Newton iteration did not converge")

    if k:
        residual = np.max(np.abs(_moments_of(problem, dens) - problem.moments))
        if residual > 1e-8:
            raise NonRealizableMomentsError(f"moment residual {residual:.3e} above 1e-8 after convergence")
    z_true = z_shifted * math.exp(-shift)
    return replace(problem, multipliers=lam, partition=z_true, density=dens)


def kl_from_counts(counts, probs) -> float:
    """KL divergence of empirical bin frequencies from reference bin masses."""
    counts = np.asarray(counts, dtype=float)
    probs = np.asarray(probs, dtype=float)
    total = counts.sum()
    if total <= 0:
        raise ValueError("empty sample")
    p_hat = counts / total
    mask = p_hat > 0
    if np.any(probs[mask] <= 0):
        return float("inf")
    return float(np.sum(p_hat[mask] * np.log(p_hat[mask] / probs[mask])))


def kl_floor(n_bins: int, n_samples: int) -> float:
    """Expected KL of a multinomial sample from its own law, (n-1)/(2M)."""
    return (n_bins - 1) / (2.0 * n_samples)


def chi_square_gof(counts, probs, min_expected: float = 5.0) -> tuple[float, int, float]:
    """Pearson chi-square test with low-expectation bins pooled.

    Bins whose expected count falls below `min_expected` are merged into
    their left neighbour (cyclically for the first bin) before the test.
    Returns (statistic, dof, p_value).
    """
    counts = np.asarray(counts, dtype=float)
    probs = np.asarray(probs, dtype=float)
    total = counts.sum()
    expected = probs * total
    merged_obs, merged_exp = [], []
    for obs, exp in zip(counts, expected):
        if merged_exp and merged_exp[-1] < min_expected:
            merged_obs[-1] += obs
            merged_exp[-1] += exp
        else:
            merged_obs.append(float(obs))
            merged_exp.append(float(exp))
    if len(merged_exp) > 1 and merged_exp[-1] < min_expected:
        merged_obs[-2] += merged_obs[-1]
        merged_exp[-2] += merged_exp[-1]
        merged_obs.pop()
        merged_exp.pop()
    obs = np.array(merged_obs)
    exp = np.array(merged_exp)
    if exp.size < 2:
        raise ValueError("too few usable bins for a chi-square test")
    stat = float(np.sum((obs - exp) ** 2 / exp))
    dof = exp.size - 1
    return stat, dof, float(_chi2.sf(stat, dof))
