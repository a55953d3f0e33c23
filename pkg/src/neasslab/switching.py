"""Smooth scalar switching functions with exact derivatives.

All time dependence of Hamiltonians enters through these scalars, so the
generator recursion gets analytic time derivatives for free.  The default
ramp is the integral of the C-infinity bump exp(-1/u)exp(-1/(1-u)) on
(0, 1), normalized to rise from 0 to 1; it is constant outside the ramp
window, hence flat to all orders at both ends.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.integrate import quad


class Switching:
    """Scalar function of time with derivatives of any order."""

    def value(self, t: float) -> float:
        raise NotImplementedError

    def derivative(self, t: float, order: int = 1) -> float:
        raise NotImplementedError

    def __call__(self, t: float) -> float:
        return self.value(t)


class Constant(Switching):
    def __init__(self, c: float = 1.0):
        self.c = float(c)

    def value(self, t):
        return self.c

    def derivative(self, t, order=1):
        return 0.0

    def describe(self):
        return f"constant {self.c}"


def _bump_derivs(u: float, max_order: int) -> list[float]:
    """Derivatives 0..max_order of b(u) = exp(-1/u - 1/(1-u)) on (0,1).

    Uses the recurrence b^(m+1) = sum_j C(m,j) g^(j+1) b^(m-j) for
    b = exp(g), with g^(m) in closed form.
    """
    if u <= 0.0 or u >= 1.0:
        return [0.0] * (max_order + 1)
    g = [-1.0 / u - 1.0 / (1.0 - u)]
    for m in range(1, max_order + 1):
        fact = math.factorial(m)
        g.append(-((-1.0) ** m) * fact * u ** (-m - 1)
                 - fact * (1.0 - u) ** (-m - 1))
    b = [math.exp(g[0])]
    for m in range(max_order):
        s = sum(math.comb(m, j) * g[j + 1] * b[m - j] for j in range(m + 1))
        b.append(s)
    return b


class Bump(Switching):
    """Normalized bump supported on (t0, t1), peak value 1."""

    _PEAK = math.exp(-4.0)  # value of exp(-1/u-1/(1-u)) at u = 1/2

    def __init__(self, t0: float = 0.0, t1: float = 1.0, amplitude: float = 1.0):
        if not t1 > t0:
            raise ValueError("need t1 > t0")
        self.t0, self.t1 = float(t0), float(t1)
        self.width = self.t1 - self.t0
        self.amplitude = float(amplitude)

    def _u(self, t):
        return (t - self.t0) / self.width

    def value(self, t):
        u = self._u(t)
        if u <= 0.0 or u >= 1.0:
            return 0.0
        return self.amplitude * math.exp(-1.0 / u - 1.0 / (1.0 - u)) / self._PEAK

    def derivative(self, t, order=1):
        d = _bump_derivs(self._u(t), order)[order]
        return self.amplitude * d / self._PEAK / self.width ** order

    def describe(self):
        return f"bump {self.t0} {self.t1} amplitude {self.amplitude}"


class Ramp(Switching):
    """Smooth monotone ramp 0 -> 1 across [t0, t1] (bump integral)."""

    def __init__(self, t0: float = 0.0, t1: float = 1.0):
        if not t1 > t0:
            raise ValueError("need t1 > t0")
        self.t0, self.t1 = float(t0), float(t1)
        self.width = self.t1 - self.t0
        self._z, _ = quad(lambda u: math.exp(-1.0 / u - 1.0 / (1.0 - u)), 0.0, 1.0)

    def _u(self, t):
        return (t - self.t0) / self.width

    def value(self, t):
        u = self._u(t)
        if u <= 0.0:
            return 0.0
        if u >= 1.0:
            return 1.0
        val, _ = quad(lambda s: math.exp(-1.0 / s - 1.0 / (1.0 - s)), 0.0, u)
        return val / self._z

    def derivative(self, t, order=1):
        u = self._u(t)
        if u <= 0.0 or u >= 1.0:
            return 0.0
        d = _bump_derivs(u, order - 1)[order - 1]
        return d / self._z / self.width ** order

    def describe(self):
        return f"ramp {self.t0} {self.t1}"


def parse_switching(spec: str) -> Switching:
    """Parse 'constant c' / 'ramp t0 t1' / 'bump t0 t1 [amp]' descriptors."""
    parts = spec.split()
    kind = parts[0].lower()
    args = [float(p) for p in parts[1:]]
    if kind == "constant":
        return Constant(*args) if args else Constant()
    if kind == "ramp":
        return Ramp(*args) if args else Ramp()
    if kind == "bump":
        return Bump(*args) if args else Bump()
    raise ValueError(f"unknown switching kind {kind!r}")


def self_test_derivatives(sw: Switching, t: float, order: int = 1,
                          h: float = 1e-5) -> float:
    """|analytic - central difference| for a quick sanity check."""
    if order == 1:
        fd = (sw.value(t + h) - sw.value(t - h)) / (2 * h)
    else:
        fd = (sw.derivative(t + h, order - 1)
              - sw.derivative(t - h, order - 1)) / (2 * h)
    return abs(sw.derivative(t, order) - fd)
