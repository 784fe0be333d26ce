"""Wavefunctions on a uniform periodic 1D grid.

The domain is the half-open interval [0, L) with periodic identification,
so the configuration space is a circle and there are no surface terms.
Time stepping uses a second-order split-step scheme (half potential kick,
full kinetic step in spectral space, half potential kick). Every factor is
a pure phase, so the grid norm is conserved to rounding, and free momentum
eigenstates acquire exactly their analytic dispersion phase.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

__all__ = [
    "Grid1D",
    "Wavefunction",
    "Potential",
    "make_state",
    "make_potential",
    "evolve",
    "evolve_step",
    "density",
    "flux",
    "continuity_residual",
    "energy",
    "spectral_derivative",
    "wrap",
    "circular_difference",
]

NORM_TOL = 1e-6


def wrap(x, length):
    """Map positions onto the fundamental domain [0, length)."""
    return np.mod(x, length)


def circular_difference(a, b, length):
    """Signed circular offset a - b, reduced to [-length/2, length/2)."""
    return np.mod(a - b + 0.5 * length, length) - 0.5 * length


@dataclass(frozen=True)
class Grid1D:
    """Uniform periodic grid on [0, length) with a power-of-two point count."""

    length: float = 1.0
    points: int = 512

    def __post_init__(self):
        if self.length <= 0:
            raise ValueError("grid length must be positive")
        if self.points <= 0 or (self.points & (self.points - 1)) != 0:
            raise ValueError("grid points must be a positive power of two")

    @property
    def dx(self) -> float:
        return self.length / self.points

    @cached_property
    def x(self) -> np.ndarray:
        return np.arange(self.points) * self.dx

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        return 2.0 * np.pi * np.fft.fftfreq(self.points, d=self.dx)


@dataclass(frozen=True)
class Wavefunction:
    """Complex amplitudes sampled on a Grid1D, with a time stamp.

    Snapshots are treated as immutable values: evolution returns new
    instances, so they are safe to share read-only across walkers.
    """

    grid: Grid1D
    amplitudes: np.ndarray
    t: float = 0.0
    hbar: float = 1.0
    mass: float = 1.0

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        object.__setattr__(self, "amplitudes", amps)
        if amps.shape != (self.grid.points,):
            raise ValueError("amplitude array does not match the grid")
        if self.hbar <= 0 or self.mass <= 0:
            raise ValueError("hbar and mass must be positive")
        n = self.norm()
        if not math.isfinite(n) or abs(n - 1.0) > NORM_TOL:
            raise ValueError(f"state is not normalized on its grid (norm {n!r})")

    def norm(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2) * self.grid.dx)


@dataclass(frozen=True)
class Potential:
    """Static real potential sampled on the grid."""

    grid: Grid1D
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", vals)
        if vals.shape != (self.grid.points,):
            raise ValueError("potential array does not match the grid")
        if not np.all(np.isfinite(vals)):
            raise ValueError("potential entries must be finite")


def _mode(grid: Grid1D, n: int) -> np.ndarray:
    """Periodic-box momentum eigenstate exp(2*pi*i*n*x/L)/sqrt(L)."""
    return np.exp(2j * np.pi * n * grid.x / grid.length) / math.sqrt(grid.length)


def _normalized(grid: Grid1D, amps: np.ndarray, **kwargs) -> Wavefunction:
    nrm = math.sqrt(float(np.sum(np.abs(amps) ** 2) * grid.dx))
    if nrm <= 0 or not math.isfinite(nrm):
        raise ValueError("state parameters give zero or non-finite norm")
    return Wavefunction(grid=grid, amplitudes=amps / nrm, **kwargs)


def make_state(kind: str, grid: Grid1D, hbar: float = 1.0, mass: float = 1.0, **params) -> Wavefunction:
    """Build a normalized initial state at t = 0.

    Kinds:
        uniform                 constant amplitude.
        momentum (mode)         single momentum eigenstate, integer mode index.
        two-mode (modes, amplitudes)
                                a*phi_j + b*phi_k for two mode indices.
        superposition (modes, amplitudes)
                                arbitrary finite combination of modes.
        gaussian (center, width, mode)
                                periodically wrapped Gaussian envelope times
                                an integer-mode carrier phase.
    """
    common = dict(t=0.0, hbar=hbar, mass=mass)
    if kind == "uniform":
        amps = np.full(grid.points, 1.0 / math.sqrt(grid.length), dtype=complex)
        return Wavefunction(grid=grid, amplitudes=amps, **common)
    if kind == "momentum":
        n = int(params["mode"])
        return Wavefunction(grid=grid, amplitudes=_mode(grid, n), **common)
    if kind in ("two-mode", "superposition"):
        modes = [int(n) for n in params["modes"]]
        coeffs = [complex(c) for c in params["amplitudes"]]
        if kind == "two-mode" and len(modes) != 2:
            raise ValueError("two-mode states take exactly two mode indices")
        if len(modes) != len(coeffs):
            raise ValueError("modes and amplitudes must have equal length")
        if len(set(modes)) != len(modes):
            raise ValueError("mode indices must be distinct")
        amps = np.zeros(grid.points, dtype=complex)
        for n, c in zip(modes, coeffs):
            amps += c * _mode(grid, n)
        return _normalized(grid, amps, **common)
    if kind == "gaussian":
        x0 = float(params["center"])
        sigma = float(params["width"])
        n = int(params.get("mode", 0))
        if sigma <= 0:
            raise ValueError("gaussian width must be positive")
        envelope = np.zeros(grid.points)
        images = int(np.ceil(6.0 * sigma / grid.length)) + 1
        for m in range(-images, images + 1):
            envelope += np.exp(-((grid.x - x0 + m * grid.length) ** 2) / (4.0 * sigma**2))
        amps = envelope * np.exp(2j * np.pi * n * grid.x / grid.length)
        return _normalized(grid, amps, **common)
    raise ValueError(f"unknown state kind {kind!r}")


def make_potential(kind: str, grid: Grid1D, **params) -> Potential:
    """Static potential factory: zero, constant (value), cosine (amplitude, mode)."""
    if kind == "zero":
        return Potential(grid, np.zeros(grid.points))
    if kind == "constant":
        return Potential(grid, np.full(grid.points, float(params["value"])))
    if kind == "cosine":
        v0 = float(params["amplitude"])
        n = int(params.get("mode", 1))
        return Potential(grid, v0 * np.cos(2.0 * np.pi * n * grid.x / grid.length))
    raise ValueError(f"unknown potential kind {kind!r}")


def evolve(psi: Wavefunction, pot: Potential, dt: float, steps: int) -> Wavefunction:
    """Advance the state by `steps` split-step steps of size dt."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    if steps < 0:
        raise ValueError("steps must be non-negative")
    if pot.grid != psi.grid:
        raise ValueError("potential grid does not match the state grid")
    if steps == 0:
        return psi
    k = psi.grid.wavenumbers
    half_kick = np.exp(-0.5j * pot.values * dt / psi.hbar)
    kinetic = np.exp(-0.5j * psi.hbar * k * k * dt / psi.mass)
    amps = psi.amplitudes
    for _ in range(steps):
        amps = half_kick * amps
        amps = np.fft.ifft(kinetic * np.fft.fft(amps))
        amps = half_kick * amps
    return Wavefunction(grid=psi.grid, amplitudes=amps, t=psi.t + steps * dt,
                        hbar=psi.hbar, mass=psi.mass)


def evolve_step(psi: Wavefunction, pot: Potential, dt: float) -> Wavefunction:
    """Single split-step update; norm-preserving, time stamp advanced by dt."""
    return evolve(psi, pot, dt, 1)


def density(psi: Wavefunction) -> np.ndarray:
    """Pointwise |psi|^2 on the grid."""
    a = psi.amplitudes
    return a.real**2 + a.imag**2


def spectral_derivative(values: np.ndarray, length: float) -> np.ndarray:
    """d/dx of a periodic grid function via its Fourier interpolant."""
    values = np.asarray(values)
    k = 2.0 * np.pi * np.fft.fftfreq(values.size, d=length / values.size)
    out = np.fft.ifft(1j * k * np.fft.fft(values))
    return out.real if not np.iscomplexobj(values) else out


def flux(psi: Wavefunction) -> np.ndarray:
    """Probability current (hbar/2im)(psi* dpsi - psi dpsi*), spectral derivative."""
    dpsi = spectral_derivative(psi.amplitudes, psi.grid.length)
    return (psi.hbar / psi.mass) * np.imag(np.conj(psi.amplitudes) * dpsi)


def continuity_residual(psi_before: Wavefunction, psi_after: Wavefunction,
                        pot: Potential, dt: float) -> float:
    """Max-norm defect of the discrete continuity balance over one step.

    Compares the density difference quotient against the divergence of the
    current at the midpoint state; second order in dt for smooth states.
    """
    if psi_before.grid != psi_after.grid:
        raise ValueError("states live on different grids")
    psi_mid = evolve(psi_before, pot, 0.5 * dt, 1)
    drho_dt = (density(psi_after) - density(psi_before)) / dt
    div_flux = spectral_derivative(flux(psi_mid), psi_mid.grid.length)
    return float(np.max(np.abs(drho_dt + div_flux)))


def energy(psi: Wavefunction, pot: Potential) -> float:
    """Total energy <psi|H|psi>; kinetic part evaluated in spectral space."""
    k = psi.grid.wavenumbers
    spec = np.fft.fft(psi.amplitudes)
    kinetic = np.sum(0.5 * psi.hbar**2 * k * k / psi.mass * np.abs(spec) ** 2)
    kinetic *= psi.grid.dx / psi.grid.points
    potential = np.sum(pot.values * density(psi)) * psi.grid.dx
    return float(kinetic.real + potential)
