"""Phase-plane dynamics of the scaled trap width.

The state ``(x1, x2)`` is the scaled width ``b`` and its velocity ``b'/w0`` in
rescaled time ``w0 * t``. Under a constant control ``u`` the flow is

    x1' = x2
    x2' = -u * x1 + 1 / x1**3

and ``I = x2**2 + u*x1**2 + 1/x1**2`` is conserved. Writing ``rho = x1**2``
turns the flow into the linear equation ``rho'' + 4*u*rho = 2*I``, which is
what :func:`propagate_constant` solves exactly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

#: Relative tolerance used by invariant checks on the closed-form flow.
INTEGRAL_RTOL = 1e-10
#: Absolute tolerance for exact-conservation examples.
CONSERVATION_ATOL = 1e-12


class DomainError(ValueError):
    """Raised when a state leaves the half-plane ``x1 > 0``."""


class NoSwitchingError(ValueError):
    """Raised when a bang arc has no further switching point."""


@dataclass(frozen=True)
class ControlBounds:
    """Admissible control interval ``[-u1, u2]`` with ``u1, u2 >= 1``."""

    u1: float
    u2: float

    def __post_init__(self):
        for name in ("u1", "u2"):
            v = getattr(self, name)
            try:
                v = float(v)
            except (TypeError, ValueError):
                raise ValueError(f"{name} must be a number, got {v!r}") from None
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite, got {v!r}")
            object.__setattr__(self, name, v)
            if v < 1:
                raise ValueError(f"{name} must be >= 1, got {v!r}")

    def control(self, kind: str) -> "BangControl":
        if kind == "X":
            return BangControl("X", -float(self.u1))
        if kind == "Y":
            return BangControl("Y", float(self.u2))
        raise ValueError(f"unknown control kind {kind!r}")

    @property
    def X(self) -> "BangControl":
        return self.control("X")

    @property
    def Y(self) -> "BangControl":
        return self.control("Y")


class PhaseState(NamedTuple):
    x1: float
    x2: float


@dataclass(frozen=True)
class BangControl:
    """Extreme control value: ``X`` is ``-u1`` (expulsive), ``Y`` is ``+u2``."""

    kind: str
    value: float

    def __post_init__(self):
        if self.kind not in ("X", "Y"):
            raise ValueError(f"kind must be 'X' or 'Y', got {self.kind!r}")
        if (self.kind == "X") != (self.value < 0):
            raise ValueError(f"{self.kind} control cannot take value {self.value!r}")


def _check_domain(x1: float) -> None:
    if not x1 > 0:
        raise DomainError(f"x1 must be positive, got {x1!r}")


def vector_field(state, u: float) -> PhaseState:
    """Right-hand side ``(x2, -u*x1 + 1/x1**3)``."""
    x1, x2 = state
    _check_domain(x1)
    return PhaseState(x2, -u * x1 + 1.0 / x1**3)


def first_integral(state, u: float) -> float:
    """Conserved quantity ``x2**2 + u*x1**2 + 1/x1**2`` of the constant-``u`` flow."""
    x1, x2 = state
    _check_domain(x1)
    return x2 * x2 + u * x1 * x1 + 1.0 / (x1 * x1)


def propagate_constant(state, u: float, t: float) -> PhaseState:
    """Exact state after time ``t`` under the constant control ``u``.

    Solves ``rho'' + 4*u*rho = 2*I`` for ``rho = x1**2`` in trigonometric
    (``u > 0``), hyperbolic (``u < 0``) or polynomial (``u == 0``) form.
    The velocity follows from ``rho' = 2*x1*x2``, so its sign needs no
    separate bookkeeping.
    """
    x1, x2 = state
    _check_domain(x1)
    if t < 0:
        raise ValueError(f"t must be non-negative, got {t!r}")
    if t == 0:
        return PhaseState(float(x1), float(x2))
    rho0 = x1 * x1
    drho0 = 2.0 * x1 * x2
    energy = first_integral(state, u)
    # cos/sin (u > 0), cosh/sinh (u < 0) or polynomial (u == 0) evolution,
    # written through sinc factors so that it stays exact as u -> 0
    a = math.sqrt(abs(u)) * t
    if a == 0:
        c, s, half = 1.0, 1.0, 1.0
    elif u > 0:
        c, s, half = math.cos(2 * a), math.sin(2 * a) / (2 * a), math.sin(a) / a
    else:
        c, s, half = math.cosh(2 * a), math.sinh(2 * a) / (2 * a), math.sinh(a) / a
    rho = rho0 * c + drho0 * t * s + energy * t * t * half * half
    drho = -4.0 * u * rho0 * t * s + drho0 * c + 2.0 * energy * t * s
    if not rho > 0:
        # rho > 0 holds analytically; this only trips on overflow.
        raise DomainError(f"propagation left the domain (rho={rho!r})")
    y1 = math.sqrt(rho)
    return PhaseState(y1, drho / (2.0 * y1))


def inter_switching_time(state, control: BangControl, bounds: ControlBounds | None = None) -> float:
    """Time from a switching point to the next one along a bang arc.

    Depends on the state only through ``x2/x1``. A ``Y`` arc always switches
    again within one period ``pi/sqrt(u2)``; an ``X`` arc does so only when it
    leaves the point heading inward fast enough, ``x2 < -sqrt(u1)*x1``.

    Parameters
    ----------
    state : PhaseState
        Current switching point.
    control : BangControl
        Arc kind and value. ``bounds`` is only used to cross-check the value.
    bounds : ControlBounds, optional

    Raises
    ------
    NoSwitchingError
        For an ``X`` arc with ``x2**2 <= u1*x1**2`` or ``x2 >= 0``.
    """
    x1, x2 = state
    _check_domain(x1)
    if bounds is not None and control != bounds.control(control.kind):
        raise ValueError(f"control {control!r} does not match bounds {bounds!r}")
    if control.kind == "Y":
        u2 = control.value
        r = math.sqrt(u2)
        den = x2 * x2 + u2 * x1 * x1
        theta = math.atan2(-2.0 * r * x1 * x2 / den, (x2 * x2 - u2 * x1 * x1) / den)
        if theta <= 0:
            theta += 2.0 * math.pi
        return theta / (2.0 * r)
    u1 = -control.value
    r = math.sqrt(u1)
    den = x2 * x2 - u1 * x1 * x1
    if den <= 0 or x2 >= 0:
        raise NoSwitchingError(
            f"X arc from ({x1!r}, {x2!r}) never reaches another switching point"
        )
    return math.acosh((x2 * x2 + u1 * x1 * x1) / den) / (2.0 * r)
