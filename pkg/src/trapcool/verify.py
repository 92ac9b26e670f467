"""Independent numerical checks of synthesized schedules.

Schedules are re-integrated with a fixed-step RK4 scheme that never looks at
the closed-form flow. Step sizes are shrunk per segment so that every
switching instant is hit exactly.
"""
from __future__ import annotations

import math
import re
from dataclasses import asdict, dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .phase import DomainError, PhaseState
from .synthesis import START, Schedule, SynthesisSolution

ENDPOINT_TOL = 1e-6
DRIFT_TOL = 1e-8
RATIO_TOL = 1e-6
RESIDUAL_TOL = 1e-8
#: Minimum separation of consecutive switching abscissae.
MIRROR_TOL = 1e-6

_STRUCTURE = re.compile(r"XY|Y(XY)+")


class TrajectorySample(NamedTuple):
    t: float
    state: PhaseState
    u: float
    segment: int


def _rk4_segment(x1, x2, u, h, nsteps):
    out = []
    for _ in range(nsteps):
        k1a, k1b = x2, -u * x1 + 1.0 / x1**3
        y1 = x1 + 0.5 * h * k1a
        if y1 <= 0:
            raise DomainError(f"RK4 stage left the domain (x1={y1!r})")
        k2a, k2b = x2 + 0.5 * h * k1b, -u * y1 + 1.0 / y1**3
        y1 = x1 + 0.5 * h * k2a
        if y1 <= 0:
            raise DomainError(f"RK4 stage left the domain (x1={y1!r})")
        k3a, k3b = x2 + 0.5 * h * k2b, -u * y1 + 1.0 / y1**3
        y1 = x1 + h * k3a
        if y1 <= 0:
            raise DomainError(f"RK4 stage left the domain (x1={y1!r})")
        k4a, k4b = x2 + h * k3b, -u * y1 + 1.0 / y1**3
        x1 = x1 + h / 6.0 * (k1a + 2 * k2a + 2 * k3a + k4a)
        x2 = x2 + h / 6.0 * (k1b + 2 * k2b + 2 * k3b + k4b)
        if x1 <= 0:
            raise DomainError(f"RK4 step left the domain (x1={x1!r})")
        out.append((x1, x2))
    return out


def integrate_schedule(schedule: Schedule, dt: float, start=START) -> list[TrajectorySample]:
    """Fixed-step RK4 samples covering ``[0, T]``, ending exactly at ``T``.

    Each segment of duration ``d`` is split into ``ceil(d/dt)`` equal steps.
    The first sample is the start state at ``t = 0``; every later sample is
    tagged with the segment whose step produced it.
    """
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt!r}")
    x1, x2 = start
    first_u = schedule.segments[0].control.value if schedule.segments else schedule.boundary_u_initial
    samples = [TrajectorySample(0.0, PhaseState(x1, x2), first_u, 0)]
    t0 = 0.0
    for k, seg in enumerate(schedule.segments):
        if seg.duration == 0:
            continue
        nsteps = max(1, math.ceil(seg.duration / dt - 1e-9))
        h = seg.duration / nsteps
        u = seg.control.value
        pts = _rk4_segment(x1, x2, u, h, nsteps)
        for i, (y1, y2) in enumerate(pts, 1):
            t = t0 + seg.duration if i == nsteps else t0 + i * h
            samples.append(TrajectorySample(t, PhaseState(y1, y2), u, k))
        x1, x2 = pts[-1]
        t0 += seg.duration
    return samples


def _segment_blocks(samples):
    """Per-segment ``(index, u, t, x1, x2)`` arrays, each starting at the switching sample."""
    blocks = []
    prev = samples[0]
    current = None
    for smp in samples[1:]:
        if current is None or smp.segment != current[0]:
            if current is not None:
                blocks.append(current)
            current = (smp.segment, smp.u, [prev])
        current[2].append(smp)
        prev = smp
    if current is not None:
        blocks.append(current)
    out = []
    for k, u, pts in blocks:
        t = np.array([p.t for p in pts])
        x1 = np.array([p.state.x1 for p in pts])
        x2 = np.array([p.state.x2 for p in pts])
        out.append((k, u, t, x1, x2))
    return out


def ermakov_residual(samples, schedule: Optional[Schedule] = None, omega0: float = 1.0) -> float:
    """Max of ``|b'' + w(t)**2 b - w0**2 / b**3|`` over the sampled trajectory.

    ``b = x1`` and ``b' = w0 * x2`` are read off the samples and ``b''`` is a
    five-point central difference of ``b'`` in physical time. The control is
    discontinuous at switchings, so the two samples on either side of each
    switching instant are skipped. The result is divided by ``w0**2``, i.e.
    reported in rescaled units. Controls are read from the samples, so
    ``schedule`` is optional.
    """
    if omega0 <= 0:
        raise ValueError("omega0 must be positive")
    worst = 0.0
    for _, u, t, x1, x2 in _segment_blocks(samples):
        if len(t) < 5:
            continue
        h = (t[-1] - t[0]) / (len(t) - 1) / omega0
        bdot = omega0 * x2
        bddot = (bdot[:-4] - 8 * bdot[1:-3] + 8 * bdot[3:-1] - bdot[4:]) / (12 * h)
        b = x1[2:-2]
        res = bddot + u * omega0**2 * b - omega0**2 / b**3
        worst = max(worst, float(np.max(np.abs(res))) / omega0**2)
    return worst


def segment_drifts(samples) -> list[float]:
    """Largest first-integral change within each segment."""
    drifts = []
    for _, u, _, x1, x2 in _segment_blocks(samples):
        inv = x2 * x2 + u * x1 * x1 + 1.0 / (x1 * x1)
        drifts.append(float(np.max(np.abs(inv - inv[0]))))
    return drifts


@dataclass
class VerificationReport:
    endpoint_error: tuple[float, float]
    max_integral_drift: float
    max_ermakov_residual: float
    ratio_deviation: float
    ratio_check: bool
    structure_check: bool
    switching_count: int
    segment_drifts: list[float] = field(default_factory=list)
    dt: float = 0.0

    @property
    def endpoint_check(self) -> bool:
        return max(self.endpoint_error) <= ENDPOINT_TOL

    @property
    def drift_check(self) -> bool:
        return self.max_integral_drift < DRIFT_TOL

    @property
    def residual_check(self) -> bool:
        return self.max_ermakov_residual <= RESIDUAL_TOL

    @property
    def passed(self) -> bool:
        # the residual is a finite-difference diagnostic and stays out of the verdict
        return self.endpoint_check and self.drift_check and self.ratio_check and self.structure_check

    def to_dict(self) -> dict:
        d = asdict(self)
        d["endpoint_error"] = list(self.endpoint_error)
        d.update(
            endpoint_check=self.endpoint_check,
            drift_check=self.drift_check,
            residual_check=self.residual_check,
            passed=self.passed,
        )
        return d


def structure_ok(schedule: Schedule) -> bool:
    """``XY`` or ``Y(XY)^n`` with junctions in the right half-planes."""
    if not _STRUCTURE.fullmatch(schedule.kinds):
        return False
    for seg in schedule.segments[:-1]:
        x2 = seg.end.x2
        if seg.control.kind == "X" and not x2 > 0:
            return False
        if seg.control.kind == "Y" and not x2 < 0:
            return False
    return True


def switching_ratio_deviation(points, s: Optional[float] = None) -> float:
    """Deviation of ``x2/x1`` at switchings from ``-r, +r, -r, ...``.

    ``r = sqrt(s)`` when ``s`` is known, otherwise the mean magnitude of the
    observed ratios. Returns ``inf`` if two consecutive points are mirror
    images of each other.
    """
    if len(points) < 2:
        return 0.0
    ratios = [p[1] / p[0] for p in points]
    r = math.sqrt(s) if s is not None else float(np.mean(np.abs(ratios)))
    dev = max(abs(q - (-r if j % 2 == 0 else r)) for j, q in enumerate(ratios))
    for a, b in zip(points, points[1:]):
        if abs(b[0] - a[0]) <= MIRROR_TOL:
            return math.inf
    return dev


def check_schedule(schedule: Schedule, dt: float = 1e-4, s: Optional[float] = None,
                   omega0: float = 1.0) -> VerificationReport:
    samples = integrate_schedule(schedule, dt)
    end = samples[-1].state
    # RK4 states at the switching instants: last sample of each inner segment
    last = {}
    for smp in samples[1:]:
        last[smp.segment] = smp.state
    points = [last[k] for k in range(len(schedule.segments) - 1) if k in last]
    drifts = segment_drifts(samples)
    dev = switching_ratio_deviation(points, s)
    return VerificationReport(
        endpoint_error=(abs(end.x1 - schedule.gamma), abs(end.x2)),
        max_integral_drift=max(drifts, default=0.0),
        max_ermakov_residual=ermakov_residual(samples, schedule, omega0),
        ratio_deviation=dev,
        ratio_check=dev <= RATIO_TOL,
        structure_check=structure_ok(schedule),
        switching_count=len(points),
        segment_drifts=drifts,
        dt=dt,
    )


def check_solution(solution: SynthesisSolution, dt: float = 1e-4) -> VerificationReport:
    """RK4 re-integration report for a synthesized solution."""
    return check_schedule(solution.schedule, dt, solution.s)


def rk4_terminal_errors(schedule: Schedule, dts) -> list[float]:
    """Max-norm distance between the RK4 and closed-form terminal states."""
    ref = schedule.final_state
    errs = []
    for dt in dts:
        end = integrate_schedule(schedule, dt)[-1].state
        errs.append(max(abs(end.x1 - ref.x1), abs(end.x2 - ref.x2)))
    return errs


def convergence_slope(steps, errors) -> float:
    """Least-squares slope of ``log(error)`` against ``log(step)``."""
    return float(np.polyfit(np.log(steps), np.log(errors), 1)[0])
