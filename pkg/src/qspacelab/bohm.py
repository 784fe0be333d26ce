"""Deterministic trajectories along the streamlines of the wavefunction.

The velocity field is the probability current divided by the density,
evaluated off-grid with periodic cubic splines. The guidance law is
singular at nodes; evaluation below a relative density floor raises
NodeProximityError instead of returning huge numbers, since exact
trajectories never reach nodes and such a hit always means numerical
trouble.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .grid_wave import Potential, Wavefunction, density, evolve, flux, wrap

__all__ = ["NodeProximityError", "GuidanceField", "Trajectory", "velocity", "integrate", "drive"]

NODE_FLOOR_FRACTION = 1e-12


class NodeProximityError(RuntimeError):
    """Raised when the guidance field is evaluated too close to a node."""

    def __init__(self, position, dens, floor):
        self.position = position
        self.density = dens
        self.floor = floor
        super().__init__(
            f"density {dens:.3e} at x={position:.6f} is below the node floor {floor:.3e}"
        )


class GuidanceField:
    """Periodic cubic interpolants of density and current for one snapshot."""

    def __init__(self, psi: Wavefunction):
        grid = psi.grid
        x_ext = np.append(grid.x, grid.length)
        rho = density(psi)
        cur = flux(psi)
        self.length = grid.length
        self._rho = CubicSpline(x_ext, np.append(rho, rho[0]), bc_type="periodic")
        self._cur = CubicSpline(x_ext, np.append(cur, cur[0]), bc_type="periodic")
        self._drho = self._rho.derivative()
        self.floor = NODE_FLOOR_FRACTION * float(rho.max())

    def density(self, x):
        return self._rho(wrap(x, self.length))

    def _checked_density(self, x):
        rho = self._rho(wrap(x, self.length))
        bad = rho <= self.floor
        if np.any(bad):
            i = int(np.argmax(np.atleast_1d(bad)))
            xa = np.atleast_1d(x)
            ra = np.atleast_1d(rho)
            raise NodeProximityError(float(xa[i]), float(ra[i]), self.floor)
        return rho

    def velocity(self, x):
        rho = self._checked_density(x)
        return self._cur(wrap(x, self.length)) / rho

    def log_density_gradient(self, x):
        rho = self._checked_density(x)
        return self._drho(wrap(x, self.length)) / rho


def velocity(psi: Wavefunction, x):
    """Guidance velocity at x; raises NodeProximityError near nodes."""
    return GuidanceField(psi).velocity(x)


@dataclass(frozen=True)
class Trajectory:
    """Sampled positions of one walker; positions are wrapped to [0, L)."""

    times: np.ndarray
    positions: np.ndarray
    unwrapped: np.ndarray
    walker_id: int = 0


def _step_count(T: float, dt: float) -> int:
    if dt <= 0:
        raise ValueError("dt must be positive")
    if T < 0:
        raise ValueError("T must be non-negative")
    n = int(round(T / dt))
    if abs(n * dt - T) > 1e-9 * max(1.0, abs(T)):
        raise ValueError("T must be an integer multiple of dt")
    return n


def drive(psi0: Wavefunction, pot: Potential, x0s: np.ndarray, T: float, dt: float):
    """Co-evolve the wave and an array of trajectories; yields every step.

    Yields (t, wrapped, unwrapped, psi) starting at t = 0. Positions follow
    classic RK4 on dx/dt = v(x, t) with the wave advanced in half steps so
    the midpoint stage sees the midpoint field. The unwrapped coordinate
    keeps the winding, which is what makes the non-crossing property
    checkable on a circle.
    """
    n = _step_count(T, dt)
    xu = np.array(np.atleast_1d(x0s), dtype=float)
    psi = psi0
    field = GuidanceField(psi)
    yield psi.t, wrap(xu, psi.grid.length), xu.copy(), psi
    for _ in range(n):
        psi_half = evolve(psi, pot, 0.5 * dt, 1)
        psi_full = evolve(psi_half, pot, 0.5 * dt, 1)
        f_half = GuidanceField(psi_half)
        f_full = GuidanceField(psi_full)
        k1 = field.velocity(xu)
        k2 = f_half.velocity(xu + 0.5 * dt * k1)
        k3 = f_half.velocity(xu + 0.5 * dt * k2)
        k4 = f_full.velocity(xu + dt * k3)
        xu = xu + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        psi, field = psi_full, f_full
        yield psi.t, wrap(xu, psi.grid.length), xu.copy(), psi


def integrate(psi0: Wavefunction, pot: Potential, x0: float, T: float, dt: float,
              walker_id: int = 0) -> Trajectory:
    """Integrate one trajectory from x0 over [0, T] and sample every step."""
    times, wrapped, unwrapped = [], [], []
    for t, xw, xu, _psi in drive(psi0, pot, np.array([float(x0)]), T, dt):
        times.append(t)
        wrapped.append(xw[0])
        unwrapped.append(xu[0])
    return Trajectory(times=np.array(times), positions=np.array(wrapped),
                      unwrapped=np.array(unwrapped), walker_id=walker_id)
