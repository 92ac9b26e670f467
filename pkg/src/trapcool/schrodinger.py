"""Wavefunction-level check of frictionless expansion.

Units are hbar = m = w0 = 1, so the trap potential is ``u(t) x**2 / 2`` with
``u`` the schedule's control, and the target trap has ``w_T = 1/gamma**2``.
Propagation uses second-order Strang splitting on a periodic grid.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import integrate

from .phase import propagate_constant
from .synthesis import START, Schedule

#: Largest probability tolerated in the outer band of the grid.
LEAK_TOL = 1e-8
#: Fraction of the half-span counted as the outer band.
EDGE_FRACTION = 0.1
#: Largest Gaussian amplitude allowed at the grid edge.
TAIL_TOL = 1e-12


class GridSpanError(ValueError):
    """The grid is too narrow for the wavepacket."""


@dataclass(frozen=True)
class SpatialGrid:
    """Periodic grid ``x_min + j*dx``, ``j = 0 .. n_points-1``."""

    n_points: int
    x_min: float
    x_max: float

    def __post_init__(self):
        n = self.n_points
        if n < 2 or n & (n - 1):
            raise ValueError(f"n_points must be a power of two, got {n!r}")
        if not self.x_max > 0 or not math.isclose(self.x_min, -self.x_max):
            raise ValueError("grid must be symmetric about 0")

    @classmethod
    def for_expansion(cls, gamma: float, n_points: int = 4096, span: float = 8.0) -> "SpatialGrid":
        """Grid on ``[-span*gamma, span*gamma]``, wide enough for both traps."""
        half = span * max(1.0, gamma)
        return cls(n_points, -half, half)

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.n_points

    @property
    def x(self) -> np.ndarray:
        return self.x_min + self.dx * np.arange(self.n_points)

    @property
    def k(self) -> np.ndarray:
        return 2 * np.pi * np.fft.fftfreq(self.n_points, d=self.dx)


@dataclass
class WaveState:
    grid: SpatialGrid
    amplitudes: np.ndarray
    t: float = 0.0

    def norm(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2) * self.grid.dx)

    def density(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def edge_probability(self) -> float:
        return _edge_probability(self.grid, self.amplitudes)

    def moment(self, power: int = 2) -> float:
        return float(np.sum(self.grid.x**power * self.density()) * self.grid.dx)


def _normalized(grid, psi):
    return psi / math.sqrt(np.sum(np.abs(psi) ** 2) * grid.dx)


def _edge_probability(grid, psi):
    band = np.abs(grid.x) > (1 - EDGE_FRACTION) * grid.x_max
    return float(np.sum(np.abs(psi[band]) ** 2) * grid.dx)


def eigenstate(n: int, omega: float, grid: SpatialGrid) -> WaveState:
    """``n``-th harmonic-oscillator eigenfunction of frequency ``omega``.

    Built with the normalized Hermite-function recurrence, which avoids the
    overflow of explicit Hermite polynomials.
    """
    if omega <= 0:
        raise ValueError(f"omega must be positive, got {omega!r}")
    if n < 0:
        raise ValueError(f"n must be non-negative, got {n!r}")
    edge = (omega / math.pi) ** 0.25 * math.exp(-omega * grid.x_max**2 / 2)
    if edge >= TAIL_TOL:
        raise GridSpanError(
            f"grid half-span {grid.x_max!r} too small for omega={omega!r} (edge amplitude {edge:.2e})"
        )
    xi = math.sqrt(omega) * grid.x
    prev = np.zeros_like(xi)
    cur = (omega / math.pi) ** 0.25 * np.exp(-xi**2 / 2)
    for j in range(n):
        prev, cur = cur, math.sqrt(2 / (j + 1)) * xi * cur - math.sqrt(j / (j + 1)) * prev
    return WaveState(grid, _normalized(grid, cur.astype(complex)))


def ground_state(omega: float, grid: SpatialGrid) -> WaveState:
    """Gaussian ``(omega/pi)**0.25 * exp(-omega x**2 / 2)``, normalized on the grid."""
    return eigenstate(0, omega, grid)


def scaling_solution(gamma: float, b: float, bdot: float, grid: SpatialGrid, phase: float = 0.0) -> WaveState:
    """Dilated ground state with width ``b`` and velocity ``bdot``.

    ``b**-0.5 (1/pi)**0.25 exp(i bdot x**2/(2b)) exp(-x**2/(2 b**2))``, times
    ``exp(-i phase)``. ``gamma`` only sizes the span check.
    """
    if not b > 0:
        raise ValueError(f"b must be positive, got {b!r}")
    if grid.x_max < 4 * max(b, gamma):
        raise GridSpanError(f"grid half-span {grid.x_max!r} too small for width {max(b, gamma)!r}")
    x = grid.x
    psi = (
        (1 / math.pi) ** 0.25
        / math.sqrt(b)
        * np.exp(1j * bdot * x**2 / (2 * b) - x**2 / (2 * b * b) - 1j * phase)
    )
    return WaveState(grid, _normalized(grid, psi))


def scaling_phase(schedule: Schedule, t: Optional[float] = None) -> float:
    """Dynamical phase ``int_0^t dt' / (2 b(t')**2)`` of the dilated ground state."""
    t = schedule.total_time if t is None else t
    total, t0, state = 0.0, 0.0, START
    for seg in schedule.segments:
        if t0 >= t:
            break
        span = min(seg.duration, t - t0)
        u = seg.control.value
        if span > 0:
            val, _ = integrate.quad(
                lambda s, st=state, uu=u: 0.5 / propagate_constant(st, uu, s).x1 ** 2,
                0.0, span, epsabs=1e-14, epsrel=1e-13, limit=200,
            )
            total += val
        state = seg.end
        t0 += seg.duration
    return total


def exact_state(schedule: Schedule, grid: SpatialGrid, t: Optional[float] = None) -> WaveState:
    """Exact evolved ground state at time ``t`` (default: end of schedule), phase included."""
    t = schedule.total_time if t is None else t
    state, t0 = START, 0.0
    for seg in schedule.segments:
        if t0 + seg.duration >= t:
            state = propagate_constant(seg.start, seg.control.value, max(0.0, t - t0))
            break
        t0 += seg.duration
        state = seg.end
    ws = scaling_solution(schedule.gamma, state.x1, state.x2, grid, scaling_phase(schedule, t))
    ws.t = t
    return ws


def split_step_propagate(
    psi: WaveState,
    schedule: Schedule,
    dt: float,
    leak_tol: float = LEAK_TOL,
    on_step: Optional[Callable[[float, np.ndarray], None]] = None,
) -> WaveState:
    """Strang-split evolution through the schedule's piecewise-constant trap.

    Each segment is cut into equal steps no longer than ``dt``, so switching
    instants fall on step boundaries. Adjacent kinetic half-steps are fused.

    Raises
    ------
    GridSpanError
        If more than ``leak_tol`` probability reaches the outer band.
    """
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt!r}")
    grid = psi.grid
    x2 = grid.x**2
    k2 = grid.k**2
    amp = np.array(psi.amplitudes, dtype=complex)
    kin_cache: dict[float, np.ndarray] = {}

    def kick(a, tau):
        if tau == 0:
            return a
        prop = kin_cache.get(tau)
        if prop is None:
            prop = kin_cache[tau] = np.exp(-0.5j * tau * k2)
        return np.fft.ifft(prop * np.fft.fft(a))

    t = psi.t
    pending = 0.0
    for seg in schedule.segments:
        if seg.duration == 0:
            continue
        nsteps = max(1, math.ceil(seg.duration / dt - 1e-9))
        h = seg.duration / nsteps
        pot = np.exp(-0.5j * h * seg.control.value * x2)
        for i in range(nsteps):
            amp = kick(amp, pending + h / 2) * pot
            pending = h / 2
            t += h
            if on_step is not None:
                on_step(t, amp)
            if i % 64 == 63 and _edge_probability(grid, amp) > leak_tol:
                raise GridSpanError(f"wavepacket reached the grid edge at t={t:.6g}")
    amp = kick(amp, pending)
    if _edge_probability(grid, amp) > leak_tol:
        raise GridSpanError("wavepacket reached the grid edge")
    return WaveState(grid, amp, t)


def fidelity(a: WaveState, b: WaveState) -> float:
    """Phase-insensitive overlap ``|<a|b>|**2``."""
    if a.grid != b.grid:
        raise ValueError("states live on different grids")
    ov = np.sum(np.conj(a.amplitudes) * b.amplitudes) * a.grid.dx
    return float(min(1.0, abs(ov) ** 2))


def l2_distance(a: WaveState, b: WaveState) -> float:
    if a.grid != b.grid:
        raise ValueError("states live on different grids")
    return float(np.sqrt(np.sum(np.abs(a.amplitudes - b.amplitudes) ** 2) * a.grid.dx))
