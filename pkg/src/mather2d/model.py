"""Magnetic Lagrangian model on the flat two-torus.

The configuration space is T^2 = R^2/Z^2 with the flat metric.  The
Lagrangian is

    L(x, y, v1, v2) = |v|^2 / 2 + a * cos(2*pi*x) * v2,

i.e. kinetic energy plus an exact magnetic one-form A(x) = a*cos(2*pi*x) dy
paired with the velocity.  Everything downstream (flow integration, loop
minimization, the average-action tables) is phrased in terms of this module.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "TorusPoint",
    "LiftedPoint",
    "TangentVec",
    "CotangentVec",
    "CohomologyClass",
    "HomologyClass",
    "MagneticModel",
    "sin_two_pi",
    "cos_two_pi",
    "lagrangian",
    "energy",
    "legendre",
    "inverse_legendre",
    "hamiltonian",
    "pairing",
    "constant_form_eval",
]

TWO_PI = 2.0 * math.pi


def sin_two_pi(x):
    """sin(2*pi*x) with the argument folded to a quarter period first.

    Plain sin(2*pi*x) returns ~1.2e-16 instead of 0 at half-integer x because
    pi itself is rounded.  Here that matters: x = 1/2 carries a hyperbolic
    vertical orbit, and a 1e-16 residue in the force seeds its unstable mode,
    which the flow amplifies by e^(lambda*t).  Folding makes the zeros exact
    and also tightens accuracy near them.
    """
    r = np.mod(2.0 * np.asarray(x, float), 2.0)
    t = np.where(r <= 0.5, r, np.where(r <= 1.5, 1.0 - r, r - 2.0))
    return np.sin(np.pi * t)


def cos_two_pi(x):
    """cos(2*pi*x) via the quarter-period fold of sin_two_pi."""
    return sin_two_pi(np.asarray(x, float) + 0.25)


def _check_finite(*vals: float) -> None:
    for v in vals:
        if not math.isfinite(v):
            raise ValueError(f"non-finite component {v!r}")


@dataclass(frozen=True)
class TorusPoint:
    """Point on T^2; coordinates stored reduced to [0, 1)."""

    x: float
    y: float

    def __post_init__(self):
        _check_finite(self.x, self.y)
        object.__setattr__(self, "x", self.x % 1.0)
        object.__setattr__(self, "y", self.y % 1.0)


@dataclass(frozen=True)
class LiftedPoint:
    """Point in the universal cover R^2, tracking winding."""

    X: float
    Y: float

    def __post_init__(self):
        _check_finite(self.X, self.Y)

    def project(self) -> TorusPoint:
        return TorusPoint(self.X, self.Y)


@dataclass(frozen=True)
class TangentVec:
    v1: float
    v2: float

    def __post_init__(self):
        _check_finite(self.v1, self.v2)

    def norm(self) -> float:
        return math.hypot(self.v1, self.v2)

    def as_array(self) -> np.ndarray:
        return np.array([self.v1, self.v2])


@dataclass(frozen=True)
class CotangentVec:
    p1: float
    p2: float

    def __post_init__(self):
        _check_finite(self.p1, self.p2)

    def as_array(self) -> np.ndarray:
        return np.array([self.p1, self.p2])


@dataclass(frozen=True)
class CohomologyClass:
    """Class [c1 dx + c2 dy] in H^1(T^2; R), identified with (c1, c2)."""

    c1: float
    c2: float

    def as_array(self) -> np.ndarray:
        return np.array([self.c1, self.c2])


@dataclass(frozen=True)
class HomologyClass:
    """Real homology class (rotation vector) in H_1(T^2; R) ~ R^2."""

    h1: float
    h2: float

    def as_array(self) -> np.ndarray:
        return np.array([self.h1, self.h2])

    def norm(self) -> float:
        return math.hypot(self.h1, self.h2)


@dataclass(frozen=True)
class MagneticModel:
    """Torus Lagrangian with magnetic one-form a*cos(2*pi*x) dy."""

    amplitude: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.amplitude) and self.amplitude > 0):
            raise ValueError(f"amplitude must be finite and > 0, got {self.amplitude!r}")

    def vector_potential(self, x):
        """Second component of the magnetic form at x (first is zero)."""
        return self.amplitude * cos_two_pi(x)


def lagrangian(model: MagneticModel, x: float, v1: float, v2: float) -> float:
    """L(x, v) = |v|^2/2 + a*cos(2*pi*x)*v2.  Independent of y."""
    return 0.5 * (v1 * v1 + v2 * v2) + model.amplitude * float(cos_two_pi(x)) * v2


def energy(model: MagneticModel, v1: float, v2: float) -> float:
    """Kinetic energy E = |v|^2/2, conserved along the flow."""
    return 0.5 * (v1 * v1 + v2 * v2)


def legendre(model: MagneticModel, x: float, v: TangentVec) -> CotangentVec:
    """Fiberwise Legendre transform p = dL/dv = (v1, v2 + a*cos(2*pi*x))."""
    c = model.amplitude * float(cos_two_pi(x))
    return CotangentVec(v.v1, v.v2 + c)


def inverse_legendre(model: MagneticModel, x: float, p: CotangentVec) -> TangentVec:
    """Inverse transform v = (p1, p2 - a*cos(2*pi*x))."""
    c = model.amplitude * float(cos_two_pi(x))
    return TangentVec(p.p1, p.p2 - c)


def hamiltonian(model: MagneticModel, x: float, p: CotangentVec) -> float:
    """H(x, p) = (p1^2 + (p2 - a*cos(2*pi*x))^2) / 2, the Fenchel dual of L."""
    c = model.amplitude * float(cos_two_pi(x))
    return 0.5 * (p.p1 * p.p1 + (p.p2 - c) * (p.p2 - c))


def pairing(c: CohomologyClass, h: HomologyClass) -> float:
    """Duality pairing <[c], [h]> = c1*h1 + c2*h2."""
    return c.c1 * h.h1 + c.c2 * h.h2


def constant_form_eval(c: CohomologyClass, v: TangentVec) -> float:
    """Evaluate the constant representative c1 dx + c2 dy on a tangent vector."""
    return c.c1 * v.v1 + c.c2 * v.v2
