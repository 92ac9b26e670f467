"""Gamma sweeps, cut-locus crossovers and switching-curve extraction."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .phase import ControlBounds, first_integral
from .synthesis import candidate_times, synthesize

CROSSOVER_XTOL = 1e-10


@dataclass
class SweepRow:
    gamma: float
    T0: float
    times: dict = field(default_factory=dict)  # n -> T_n for feasible n >= 1
    optimal_n: int = 0
    optimal_T: float = math.nan

    def T(self, n: int) -> Optional[float]:
        return self.T0 if n == 0 else self.times.get(n)


@dataclass
class Crossover:
    gamma: float
    from_n: int
    to_n: int
    time: float
    gap: float  # |T_from - T_to| at the refined gamma


def _best(cands: dict) -> tuple[int, float]:
    n = min(cands, key=lambda k: (cands[k], k))
    return n, cands[n]


def sweep_row(bounds: ControlBounds, gamma: float) -> SweepRow:
    cands = candidate_times(bounds, gamma)
    n, t = _best(cands)
    return SweepRow(gamma, cands[0], {k: v for k, v in cands.items() if k}, n, t)


def gamma_grid(gamma_min: float, gamma_max: float, step: float) -> np.ndarray:
    if not gamma_min > 1:
        raise ValueError(f"gamma must exceed 1, got gamma_min={gamma_min!r}")
    if not gamma_max >= gamma_min:
        raise ValueError("gamma_max must be >= gamma_min")
    if not step > 0:
        raise ValueError(f"gamma step must be positive, got {step!r}")
    count = int(math.floor((gamma_max - gamma_min) / step + 1e-9)) + 1
    # integer multiples keep the grid free of accumulated drift
    return gamma_min + step * np.arange(count)


def sweep(bounds: ControlBounds, gamma_min: float, gamma_max: float, step: float = 0.01) -> list[SweepRow]:
    return [sweep_row(bounds, float(g)) for g in gamma_grid(gamma_min, gamma_max, step)]


def _candidate_time(bounds, gamma, n):
    return candidate_times(bounds, gamma).get(n)


def refine_crossover(bounds: ControlBounds, lo: float, hi: float, old_n: int, new_n: int,
                     xtol: float = CROSSOVER_XTOL) -> Crossover:
    """Bisect ``T_new - T_old`` on ``[lo, hi]``; ``old_n`` wins at ``lo``."""

    def old_wins(g):
        cands = candidate_times(bounds, g)
        t_old, t_new = cands.get(old_n), cands.get(new_n)
        if t_new is None:
            return True
        if t_old is None:
            return False
        return t_old <= t_new

    while hi - lo > xtol:
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if old_wins(mid):
            lo = mid
        else:
            hi = mid
    g = 0.5 * (lo + hi)
    cands = candidate_times(bounds, g)
    t_old, t_new = cands.get(old_n, math.inf), cands.get(new_n, math.inf)
    return Crossover(g, old_n, new_n, min(t_old, t_new), abs(t_old - t_new))


def find_crossovers(bounds: ControlBounds, rows: list[SweepRow], xtol: float = CROSSOVER_XTOL) -> list[Crossover]:
    """One refined crossover per change of the optimal turn count between rows."""
    out = []
    for a, b in zip(rows, rows[1:]):
        if a.optimal_n != b.optimal_n:
            out.append(refine_crossover(bounds, a.gamma, b.gamma, a.optimal_n, b.optimal_n, xtol))
    return out


def switching_curve_rows(bounds: ControlBounds, gammas) -> list[dict]:
    """Switching points of the optimal trajectory for each gamma.

    ``kind`` is the control of the arc arriving at the point; ``invariant``
    is that arc's first integral evaluated at the point.
    """
    rows = []
    for g in gammas:
        sol = synthesize(bounds, float(g))
        for j, seg in enumerate(sol.schedule.segments[:-1], 1):
            p = seg.end
            rows.append({
                "gamma": float(g),
                "n_turns": sol.n_turns,
                "j": j,
                "x1": p.x1,
                "x2": p.x2,
                "kind": seg.control.kind,
                "invariant": first_integral(p, seg.control.value),
            })
    return rows
