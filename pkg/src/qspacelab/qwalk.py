"""Stochastic motion in the uniform auxiliary coordinate.

Walkers carry a transported-frame coordinate label; between samples the
label only accumulates kernel noise, and positions are read off through
the current map. Increment laws are translation invariant with zero
circular mean, so the uniform label density is stationary and an ensemble
seeded from |psi|^2 stays |psi|^2-distributed. With the zero kernel the
update reduces to pure transport, i.e. the deterministic trajectories.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import ndtr

from . import streams
from .grid_wave import Potential, Wavefunction, density, evolve, flux, wrap
from .qmap import QMap, build_qmap

__all__ = [
    "KERNEL_KINDS",
    "DegenerateKernelError",
    "TransitionKernel",
    "WalkerState",
    "EnsembleTrace",
    "step",
    "evolve_ensemble",
    "conditional_density_predicted",
    "conditional_interval_probabilities",
]

KERNEL_KINDS = ("wrapped-gaussian", "uniform-jump", "zero", "uniform-velocity")


class DegenerateKernelError(ValueError):
    """Kernel has no usable closed-form increment density."""


@dataclass(frozen=True)
class TransitionKernel:
    """Translation-invariant, zero-mean increment law for the label coordinate.

    d_q is the diffusion scale (length^2/time); for the default recipe
    d_q = alpha * hbar / mass**mass_exponent with alpha = 0.5 and exponent 1,
    which matches the comparator diffusion hbar/2m. `speed` only matters for
    the uniform-velocity kind, where each walker keeps one random +/- speed.
    """

    kind: str = "wrapped-gaussian"
    d_q: float = 0.5
    speed: float = 1.0

    def __post_init__(self):
        if self.kind not in KERNEL_KINDS:
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if self.d_q < 0:
            raise ValueError("d_q must be non-negative")

    @classmethod
    def for_state(cls, kind: str, psi: Wavefunction, alpha: float = 0.5,
                  mass_exponent: float = 1.0, speed: float = 1.0) -> "TransitionKernel":
        return cls(kind=kind, d_q=alpha * psi.hbar / psi.mass**mass_exponent, speed=speed)

    def sample(self, rng: np.random.Generator, n: int, dt: float, length: float) -> np.ndarray:
        """n label increments over one step of duration dt."""
        if self.kind == "wrapped-gaussian":
            return math.sqrt(2.0 * self.d_q * dt) * rng.standard_normal(n)
        if self.kind == "uniform-jump":
            return rng.uniform(0.0, length, n)
        if self.kind == "zero":
            return np.zeros(n)
        raise ValueError("uniform-velocity increments are per-walker state; use step/evolve_ensemble")


@dataclass
class WalkerState:
    """One walker: transported-frame label, physical position, own stream."""

    q: float
    x: float
    walker_id: int
    stream: np.random.Generator
    velocity: float | None = None

    @classmethod
    def at(cls, x: float, qmap0: QMap, walker_id: int, stream: np.random.Generator) -> "WalkerState":
        return cls(q=float(qmap0.label_of(x)), x=float(wrap(x, qmap0.grid.length)),
                   walker_id=walker_id, stream=stream)


def step(walker: WalkerState, kernel: TransitionKernel, map_next: QMap, dt: float) -> WalkerState:
    """One advect-then-diffuse update; map_next is the map at t + dt."""
    length = map_next.grid.length
    if kernel.kind == "uniform-velocity":
        vel = walker.velocity
        if vel is None:
            vel = float(walker.stream.choice((-kernel.speed, kernel.speed)))
        dq = vel * dt
    else:
        vel = walker.velocity
        dq = float(kernel.sample(walker.stream, 1, dt, length)[0])
    q_new = float(wrap(walker.q + dq, length))
    return replace(walker, q=q_new, x=float(map_next.position_of(q_new)), velocity=vel)


@dataclass(frozen=True)
class EnsembleTrace:
    """Positions and labels of all walkers at the requested sample times."""

    times: np.ndarray      # (S,)
    positions: np.ndarray  # (S, M)
    labels: np.ndarray     # (S, M)


def _sample_steps(sample_times, T: float, dt: float) -> dict[int, float]:
    out = {}
    for ts in sample_times:
        if ts < -1e-12 or ts > T + 1e-12:
            raise ValueError("sample times must lie in [0, T]")
        k = int(round(ts / dt))
        if abs(k * dt - ts) > 1e-9 * max(1.0, T):
            raise ValueError("sample times must sit on the step grid")
        out[k] = ts
    return out


def evolve_ensemble(x0s, kernel: TransitionKernel, psi0: Wavefunction, pot: Potential,
                    T: float, dt: float, sample_times, seed: int,
                    wave_substeps: int = 1, chunk_steps: int = 512) -> EnsembleTrace:
    """Co-evolve the wave, rebuild maps, and step all walkers.

    Per-walker increment blocks are pre-drawn in chunks from each walker's
    own stream, so results match walker-by-walker stepping and do not
    depend on batching.
    """
    x0s = np.asarray(x0s, dtype=float)
    m = x0s.size
    n_steps = int(round(T / dt))
    if abs(n_steps * dt - T) > 1e-9 * max(1.0, T):
        raise ValueError("T must be an integer multiple of dt")
    wanted = _sample_steps(sample_times, T, dt)
    gens = streams.walker_streams(seed, m)
    length = psi0.grid.length
    qmap0 = build_qmap(psi0)
    labels = np.asarray(qmap0.label_of(x0s), dtype=float)

    if kernel.kind == "uniform-velocity":
        vels = np.array([g.choice((-kernel.speed, kernel.speed)) for g in gens])
    sqrt_step = math.sqrt(2.0 * kernel.d_q * dt)

    psi = psi0
    phi = 0.0
    anchor_flux = length * float(flux(psi)[0])
    out_t, out_x, out_q = [], [], []

    def record(t, qmap_t):
        out_t.append(t)
        out_q.append(labels.copy())
        out_x.append(np.asarray(qmap_t.position_of(labels), dtype=float))

    if 0 in wanted:
        record(0.0, qmap0)

    done = 0
    while done < n_steps:
        todo = min(chunk_steps, n_steps - done)
        if kernel.kind == "wrapped-gaussian":
            incs = sqrt_step * streams.normal_block(gens, todo)
        elif kernel.kind == "uniform-jump":
            incs = streams.uniform_block(gens, todo, length)
        elif kernel.kind == "uniform-velocity":
            incs = np.broadcast_to(vels * dt, (todo, m))
        else:
            incs = np.zeros((todo, m))
        for i in range(todo):
            sub_dt = dt / wave_substeps
            for _ in range(wave_substeps):
                psi = evolve(psi, pot, sub_dt, 1)
                new_flux = length * float(flux(psi)[0])
                phi += 0.5 * (anchor_flux + new_flux) * sub_dt
                anchor_flux = new_flux
            labels = wrap(labels + incs[i], length)
            k = done + i + 1
            if k in wanted:
                qmap_t = replace(build_qmap(psi), offset=phi)
                record(k * dt, qmap_t)
        done += todo

    return EnsembleTrace(times=np.array(out_t), positions=np.array(out_x), labels=np.array(out_q))


def _wrapped_normal_pdf(delta, sigma: float, length: float) -> np.ndarray:
    delta = np.asarray(delta, dtype=float)
    images = int(np.ceil(6.0 * sigma / length)) + 1
    out = np.zeros_like(delta)
    norm = 1.0 / (sigma * math.sqrt(2.0 * math.pi))
    for mm in range(-images, images + 1):
        out += norm * np.exp(-0.5 * ((delta + mm * length) / sigma) ** 2)
    return out


def _wrapped_normal_interval(lo, hi, sigma: float, length: float) -> np.ndarray:
    """Probability mass of a wrapped N(0, sigma^2) between label offsets lo < hi."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    images = int(np.ceil(6.0 * sigma / length)) + 1
    out = np.zeros(np.broadcast(lo, hi).shape)
    for mm in range(-images, images + 1):
        out += ndtr((hi + mm * length) / sigma) - ndtr((lo + mm * length) / sigma)
    return out


def conditional_density_predicted(map1: QMap, map2: QMap, psi2: Wavefunction, x1: float,
                                  kernel: TransitionKernel, dt: float) -> np.ndarray:
    """Predicted transition density to every grid point, one step of duration dt.

    The physical-space law is the state volume factor L*|psi|^2 at arrival
    times the label-increment density evaluated at the label difference;
    its integral over the circle is 1 by construction.
    """
    grid = psi2.grid
    if map2.grid != grid or map1.grid != grid:
        raise ValueError("maps and arrival state must share one grid")
    q1 = float(map1.label_of(x1))
    labels2 = np.asarray(map2.label_of(grid.x), dtype=float)
    delta = wrap(labels2 - q1 + 0.5 * grid.length, grid.length) - 0.5 * grid.length
    if kernel.kind == "wrapped-gaussian":
        sigma = math.sqrt(2.0 * kernel.d_q * dt)
        if sigma <= 0:
            raise DegenerateKernelError("wrapped-gaussian with zero variance has a degenerate density")
        rho_q = _wrapped_normal_pdf(delta, sigma, grid.length)
    elif kernel.kind == "uniform-jump":
        rho_q = np.full(grid.points, 1.0 / grid.length)
    else:
        raise DegenerateKernelError(f"kernel kind {kernel.kind!r} has no closed-form increment density")
    return grid.length * density(psi2) * rho_q


def conditional_interval_probabilities(map1: QMap, map2: QMap, x1: float,
                                       kernel: TransitionKernel, dt: float,
                                       edges: np.ndarray) -> np.ndarray:
    """Exact arrival probabilities for position bins [edges[i], edges[i+1]).

    Integrates the predicted transition density by substituting the map,
    which turns each bin into a label interval of the increment law.
    """
    length = map2.grid.length
    q1 = float(map1.label_of(x1))
    edge_labels = np.asarray(map2.cumulative(np.asarray(edges, dtype=float))) - map2.offset - q1
    lo = edge_labels[:-1]
    hi = edge_labels[1:]
    if kernel.kind == "wrapped-gaussian":
        sigma = math.sqrt(2.0 * kernel.d_q * dt)
        if sigma <= 0:
            raise DegenerateKernelError("wrapped-gaussian with zero variance has a degenerate density")
        return _wrapped_normal_interval(lo, hi, sigma, length)
    if kernel.kind == "uniform-jump":
        return (hi - lo) / length
    raise DegenerateKernelError(f"kernel kind {kernel.kind!r} has no closed-form increment density")
