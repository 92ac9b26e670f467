"""Minimum-time bang-bang synthesis for the expansion ``(1, 0) -> (gamma, 0)``.

Two families of candidates compete:

* the single-switch path ``XY`` (zero turns), and
* spirals ``Y (X Y)^n`` with ``2n`` switchings, all lying on the two lines
  ``x2 = -/+ sqrt(s) * x1``. The switching ratio ``s`` solves a scalar
  transcendental equation in ``(u1, (u2 - 1)**2 / 4]``.

:func:`synthesize` evaluates every admissible candidate and returns the
fastest one together with its schedule.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

from .phase import (
    BangControl,
    ControlBounds,
    PhaseState,
    first_integral,
    inter_switching_time,
    propagate_constant,
)

START = PhaseState(1.0, 0.0)
#: Absolute bisection tolerance on the switching ratio.
RATIO_XTOL = 1e-12
#: Residual the ratio solver must reach.
RATIO_RESIDUAL_TOL = 1e-10
#: Chaining tolerance between consecutive segments.
CHAIN_TOL = 1e-9


def _check_gamma(gamma: float) -> float:
    gamma = float(gamma)
    if not (math.isfinite(gamma) and gamma > 1):
        raise ValueError(f"gamma must exceed 1, got {gamma!r}")
    return gamma


@dataclass(frozen=True)
class Segment:
    control: BangControl
    duration: float
    start: PhaseState
    end: PhaseState


@dataclass(frozen=True)
class Schedule:
    """Ordered constant-control segments from ``(1, 0)``.

    The boundary controls ``u(0) = 1`` and ``u(T) = 1/gamma**4`` are
    instantaneous jumps recorded as metadata; they take no time.
    """

    bounds: ControlBounds
    gamma: float
    segments: tuple[Segment, ...]
    boundary_u_initial: float = 1.0
    boundary_u_final: float = float("nan")
    total_time: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))
        if math.isnan(self.boundary_u_final):
            object.__setattr__(self, "boundary_u_final", self.gamma**-4)
        object.__setattr__(self, "total_time", math.fsum(s.duration for s in self.segments))

    @property
    def kinds(self) -> str:
        return "".join(seg.control.kind for seg in self.segments)

    @property
    def switching_points(self) -> tuple[PhaseState, ...]:
        return tuple(seg.end for seg in self.segments[:-1])

    @property
    def switching_times(self) -> tuple[float, ...]:
        out, t = [], 0.0
        for seg in self.segments[:-1]:
            t += seg.duration
            out.append(t)
        return tuple(out)

    @property
    def final_state(self) -> PhaseState:
        return self.segments[-1].end if self.segments else START

    def control_at(self, t: float) -> float:
        """Control value active at time ``t`` (right-continuous)."""
        acc = 0.0
        for seg in self.segments:
            acc += seg.duration
            if t < acc:
                return seg.control.value
        return self.segments[-1].control.value if self.segments else self.boundary_u_initial

    def to_dict(self) -> dict:
        return {
            "u1": self.bounds.u1,
            "u2": self.bounds.u2,
            "gamma": self.gamma,
            "segments": [
                {"kind": seg.control.kind, "u": seg.control.value, "duration": seg.duration}
                for seg in self.segments
            ],
            "boundary_u_initial": self.boundary_u_initial,
            "boundary_u_final": self.boundary_u_final,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Schedule":
        """Rebuild a schedule from its interchange form, re-deriving the states."""
        try:
            bounds = ControlBounds(data["u1"], data["u2"])
            gamma = _check_gamma(data["gamma"])
            raw = data["segments"]
            pieces = []
            for item in raw:
                ctrl = bounds.control(item["kind"])
                if "u" in item and not math.isclose(float(item["u"]), ctrl.value, rel_tol=1e-12):
                    raise ValueError(f"segment control {item['u']!r} inconsistent with kind {item['kind']!r}")
                duration = float(item["duration"])
                if not (math.isfinite(duration) and duration >= 0):
                    raise ValueError(f"bad segment duration {item['duration']!r}")
                pieces.append((ctrl, duration))
            extra = {k: float(data[k]) for k in ("boundary_u_initial", "boundary_u_final") if k in data}
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed schedule: {exc!r}") from None
        return chain_segments(bounds, gamma, pieces, **extra)


def chain_segments(bounds: ControlBounds, gamma: float, pieces, start=START, **kw) -> Schedule:
    """Build a schedule by propagating ``(control, duration)`` pairs from ``start``."""
    segs = []
    state = PhaseState(*start)
    for ctrl, duration in pieces:
        end = propagate_constant(state, ctrl.value, duration)
        segs.append(Segment(ctrl, duration, state, end))
        state = end
    return Schedule(bounds, gamma, tuple(segs), **kw)


class ZeroTurnTime(NamedTuple):
    total: float
    x_time: float
    y_time: float
    switch: PhaseState


class TurnTime(NamedTuple):
    total: float
    s: float
    T_I: float
    T_X: float
    T_Y: float
    T_F: float


@dataclass(frozen=True)
class SynthesisSolution:
    bounds: ControlBounds
    gamma: float
    n_turns: int
    s: Optional[float]
    time_breakdown: dict
    switching_points: tuple[PhaseState, ...]
    schedule: Schedule
    candidates: tuple[tuple[int, float], ...]

    @property
    def total_time(self) -> float:
        return self.schedule.total_time

    def to_dict(self) -> dict:
        return {
            "schema": 1,
            "u1": self.bounds.u1,
            "u2": self.bounds.u2,
            "gamma": self.gamma,
            "n_turns": self.n_turns,
            "s": self.s,
            "total_time": self.total_time,
            "time_breakdown": dict(self.time_breakdown),
            "switching_points": [{"x1": p.x1, "x2": p.x2} for p in self.switching_points],
            "segments": [
                {
                    "kind": seg.control.kind,
                    "u": seg.control.value,
                    "duration": seg.duration,
                    "start": {"x1": seg.start.x1, "x2": seg.start.x2},
                    "end": {"x1": seg.end.x1, "x2": seg.end.x2},
                }
                for seg in self.schedule.segments
            ],
            "boundary_u_initial": self.schedule.boundary_u_initial,
            "boundary_u_final": self.schedule.boundary_u_final,
            "candidates": [{"n": n, "T": t} for n, t in self.candidates],
        }


# ---------------------------------------------------------------- zero turns


def time_zero_turns(bounds: ControlBounds, gamma: float) -> ZeroTurnTime:
    """Transfer time of the one-switch ``XY`` path and its switching point."""
    gamma = _check_gamma(gamma)
    u1, u2 = bounds.u1, bounds.u2
    g2 = gamma * gamma
    x_arg = u1 * (g2 - 1) * (u2 * g2 - 1) / (g2 * (u1 + u2) * (u1 + 1))
    x_time = math.asinh(math.sqrt(x_arg)) / math.sqrt(u1)
    # asin(sqrt(r)) written as atan2 with 1 - r factored exactly; stays
    # accurate when r is close to 1.
    num = u2 * (g2 - 1) * (u1 * g2 + 1)
    rest = (u2 * g2 - 1) * (u2 * g2 + u1)
    y_time = math.atan2(math.sqrt(num), math.sqrt(rest)) / math.sqrt(u2)
    k2 = (u2 * g2 * g2 + 1 + g2 * (u1 - 1)) / (g2 * (u1 + u2))
    mu = math.sqrt((k2 - 1) * (u1 * k2 + 1) / k2)
    return ZeroTurnTime(x_time + y_time, x_time, y_time, PhaseState(math.sqrt(k2), mu))


# ------------------------------------------------------------------- n turns


def s_plus(bounds: ControlBounds) -> float:
    """Upper end ``(u2 - 1)**2 / 4`` of the switching-ratio interval."""
    return (bounds.u2 - 1) ** 2 / 4


def y_constant_first(bounds: ControlBounds) -> float:
    return bounds.u2 + 1


def y_constant_last(bounds: ControlBounds, gamma: float) -> float:
    return bounds.u2 * gamma**2 + 1 / gamma**2


def _branch(c: float, q: float) -> float:
    # c + sqrt(c^2 - 4q); the clamp absorbs rounding at s = s_plus.
    return c + math.sqrt(max(0.0, c * c - 4 * q))


def ratio_sides(bounds: ControlBounds, gamma: float, n: int, s: float) -> tuple[float, float]:
    """Left and right sides of the switching-ratio equation at ``s``."""
    u1, u2 = bounds.u1, bounds.u2
    q = s + u2
    lhs = _branch(y_constant_first(bounds), q) / _branch(y_constant_last(bounds, gamma), q)
    rhs = ((s - u1) / q) ** n
    return lhs, rhs


def ratio_residual(bounds: ControlBounds, gamma: float, n: int, s: float) -> float:
    lhs, rhs = ratio_sides(bounds, gamma, n, s)
    return lhs - rhs


def _residual_slope(bounds, gamma, n, s):
    u1, u2 = bounds.u1, bounds.u2
    q = s + u2
    c1, cn = y_constant_first(bounds), y_constant_last(bounds, gamma)
    d1 = math.sqrt(max(0.0, c1 * c1 - 4 * q))
    dn = math.sqrt(max(0.0, cn * cn - 4 * q))
    if d1 == 0 or dn == 0:
        return None
    a1, an = c1 + d1, cn + dn
    dlhs = (-2 / d1 * an + 2 / dn * a1) / (an * an)
    r = (s - u1) / q
    drhs = n * r ** (n - 1) * (u1 + u2) / (q * q)
    return dlhs - drhs


def solve_ratio(bounds: ControlBounds, gamma: float, n: int) -> Optional[float]:
    """Switching ratio ``s`` of the ``n``-turn spiral, or ``None`` if infeasible.

    The left side decreases and the right side increases with ``s``, so a
    root in ``(u1, s_plus]`` is unique when it exists. Bisection to
    :data:`RATIO_XTOL` followed by one guarded Newton step.
    """
    gamma = _check_gamma(gamma)
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n!r}")
    lo, hi = bounds.u1, s_plus(bounds)
    if hi <= lo:
        return None
    g_hi = ratio_residual(bounds, gamma, n, hi)
    if g_hi > 0:
        return None
    if g_hi == 0:
        return hi
    # residual at lo is lhs(lo) - 0 > 0
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        if hi - lo <= RATIO_XTOL or mid in (lo, hi):
            break
        if ratio_residual(bounds, gamma, n, mid) > 0:
            lo = mid
        else:
            hi = mid
    s = 0.5 * (lo + hi)
    g = ratio_residual(bounds, gamma, n, s)
    slope = _residual_slope(bounds, gamma, n, s)
    if slope:
        cand = s - g / slope
        if lo <= cand <= hi and abs(ratio_residual(bounds, gamma, n, cand)) < abs(g):
            s = cand
    return s


def turn_times(bounds: ControlBounds, s: float) -> tuple[float, float]:
    """Durations of the intermediate ``X`` and ``Y`` arcs for ratio ``s``."""
    r = math.sqrt(s)
    t_x = inter_switching_time(PhaseState(1.0, -r), bounds.X)
    t_y = inter_switching_time(PhaseState(1.0, r), bounds.Y)
    return t_x, t_y


def y_constants(bounds: ControlBounds, gamma: float, n: int, s: float) -> list[float]:
    """First integrals ``c_1 .. c_{n+1}`` of the successive ``Y`` arcs.

    Consecutive arcs satisfy ``A_i / A_{i+1} = (s - u1)/(s + u2)`` with
    ``A = c + sqrt(c**2 - 4(s + u2))``; the end values are pinned exactly.
    """
    q = s + bounds.u2
    ratio = (s - bounds.u1) / q
    c = [y_constant_first(bounds)]
    a = _branch(c[0], q)
    for _ in range(n - 1):
        a /= ratio
        c.append((a * a + 4 * q) / (2 * a))
    c.append(y_constant_last(bounds, gamma))
    return c


def spiral_switching_points(bounds: ControlBounds, gamma: float, n: int, s: float) -> list[PhaseState]:
    """Switching points of the ``n``-turn spiral from the ``Y``-arc constants.

    Odd points (``Y -> X``) take the inner root of their arc and lie on
    ``x2 = -sqrt(s) x1``; even points (``X -> Y``) take the outer root of the
    next arc and lie on ``x2 = +sqrt(s) x1``.
    """
    q = s + bounds.u2
    r = math.sqrt(s)
    cs = y_constants(bounds, gamma, n, s)
    pts = []
    for i in range(n):
        k_in = math.sqrt(2 / _branch(cs[i], q))
        k_out = math.sqrt(_branch(cs[i + 1], q) / (2 * q))
        pts.append(PhaseState(k_in, -r * k_in))
        pts.append(PhaseState(k_out, r * k_out))
    return pts


def spiral_times(bounds: ControlBounds, gamma: float, n: int, s: float) -> TurnTime:
    """Arc durations of the ``n``-turn spiral with switching ratio ``s``."""
    u2 = bounds.u2
    q = s + u2
    w = 2 * math.sqrt(u2)
    c1, cn = y_constant_first(bounds), y_constant_last(bounds, gamma)
    d1 = math.sqrt(max(0.0, c1 * c1 - 4 * q))
    dn = math.sqrt(max(0.0, cn * cn - 4 * q))
    # Arc angles from (cos, sin) pairs; cos matches the closed arccos forms,
    # sin > 0 places them in (0, pi) without arccos conditioning loss near +-1.
    k1 = 2 / (c1 + d1)
    cos_i = -(s * c1 + u2 * d1) / (q * (u2 - 1))
    sin_i = 2 * math.sqrt(s * u2) * k1 / (u2 - 1)
    t_i = math.atan2(sin_i, cos_i) / w
    amp_f = math.sqrt(cn * cn - 4 * u2)
    kn = (cn + dn) / (2 * q)
    cos_f = (-s * cn + u2 * dn) / (q * amp_f)
    sin_f = 2 * math.sqrt(s * u2) * kn / amp_f
    t_f = math.atan2(sin_f, cos_f) / w
    t_x, t_y = turn_times(bounds, s)
    total = t_i + n * t_x + (n - 1) * t_y + t_f
    return TurnTime(total, s, t_i, t_x, t_y, t_f)


def time_n_turns(bounds: ControlBounds, gamma: float, n: int) -> Optional[TurnTime]:
    """Transfer time ``T_I + n T_X + (n-1) T_Y + T_F`` of the ``n``-turn spiral."""
    s = solve_ratio(bounds, gamma, n)
    if s is None:
        return None
    return spiral_times(bounds, gamma, n, s)


def max_turns(bounds: ControlBounds, gamma: float) -> int:
    """Upper bound on useful turns: ``floor(T_0 / T_X(s_plus))``."""
    sp = s_plus(bounds)
    if sp <= bounds.u1:
        return 0
    t_x, _ = turn_times(bounds, sp)
    return int(math.floor(time_zero_turns(bounds, gamma).total / t_x))


def candidate_times(bounds: ControlBounds, gamma: float) -> dict:
    """``{n: T_n}`` for zero turns and every feasible ``n <= max_turns``."""
    out = {0: time_zero_turns(bounds, gamma).total}
    for n in range(1, max_turns(bounds, gamma) + 1):
        tn = time_n_turns(bounds, gamma, n)
        if tn is not None:
            out[n] = tn.total
    return out


def build_schedule(bounds: ControlBounds, gamma: float, n: int, s: Optional[float] = None) -> Schedule:
    """Schedule ``XY`` for ``n == 0`` or ``Y (X Y)^n`` for the given ratio."""
    gamma = _check_gamma(gamma)
    if n == 0:
        if s is not None:
            raise ValueError("zero-turn schedule takes no switching ratio")
        z = time_zero_turns(bounds, gamma)
        return chain_segments(bounds, gamma, [(bounds.X, z.x_time), (bounds.Y, z.y_time)])
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n!r}")
    if s is None:
        s = solve_ratio(bounds, gamma, n)
        if s is None:
            raise ValueError(f"no {n}-turn solution for {bounds}, gamma={gamma!r}")
    if not (bounds.u1 < s <= s_plus(bounds) * (1 + 1e-12)):
        raise ValueError(f"switching ratio {s!r} outside ({bounds.u1}, {s_plus(bounds)}]")
    tt = spiral_times(bounds, gamma, n, s)
    pieces = [(bounds.Y, tt.T_I)]
    for i in range(n):
        pieces.append((bounds.X, tt.T_X))
        pieces.append((bounds.Y, tt.T_Y if i < n - 1 else tt.T_F))
    return chain_segments(bounds, gamma, pieces)


def synthesize(bounds: ControlBounds, gamma: float) -> SynthesisSolution:
    """Globally fastest candidate; ties go to the smaller number of turns."""
    gamma = _check_gamma(gamma)
    zero = time_zero_turns(bounds, gamma)
    best_n, best = 0, None
    cands = [(0, zero.total)]
    for n in range(1, max_turns(bounds, gamma) + 1):
        tn = time_n_turns(bounds, gamma, n)
        if tn is None:
            continue
        cands.append((n, tn.total))
        if tn.total < (best.total if best else zero.total):
            best_n, best = n, tn
    if best_n == 0:
        schedule = build_schedule(bounds, gamma, 0)
        breakdown = {"T_X0": zero.x_time, "T_Y0": zero.y_time}
        s = None
    else:
        schedule = build_schedule(bounds, gamma, best_n, best.s)
        breakdown = {"T_I": best.T_I, "T_X": best.T_X, "T_Y": best.T_Y, "T_F": best.T_F}
        s = best.s
    return SynthesisSolution(
        bounds=bounds,
        gamma=gamma,
        n_turns=best_n,
        s=s,
        time_breakdown=breakdown,
        switching_points=schedule.switching_points,
        schedule=schedule,
        candidates=tuple(cands),
    )


def segment_integral_drift(schedule: Schedule) -> float:
    """Largest first-integral mismatch between segment ends (closed-form check)."""
    worst = 0.0
    for seg in schedule.segments:
        u = seg.control.value
        worst = max(worst, abs(first_integral(seg.end, u) - first_integral(seg.start, u)))
    return worst
