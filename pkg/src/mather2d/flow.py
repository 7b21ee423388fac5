"""Euler-Lagrange flow of the magnetic model, integrated with classical RK4.

States live in the universal cover (positions are lifts, velocities plain
vectors), so winding numbers and rotation vectors fall out of the endpoint
displacement.  The equations of motion are

    xdot = v,
    vdot = -2*pi*a*sin(2*pi*x) * J v,     J(v1, v2) = (v2, -v1),

which is what d/dt(dL/dv) = dL/dx gives for this Lagrangian.  Besides the
energy, the flow conserves a*cos(2*pi*x) + sqrt(2E)*sin(phi) where phi is the
velocity angle; both are monitored here as integrator diagnostics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import HomologyClass, LiftedPoint, MagneticModel, TangentVec, TWO_PI, cos_two_pi, sin_two_pi

__all__ = [
    "NonFiniteState",
    "ZeroVelocity",
    "FlowState",
    "Trajectory",
    "vector_field",
    "rk4_path",
    "integrate",
    "first_integral_drift",
    "rotation_vector_estimate",
    "omega_limit_batch",
    "omega_limit_estimate",
    "cloud_distance",
]


class NonFiniteState(RuntimeError):
    """Integration produced an overflow/NaN state."""


class ZeroVelocity(ValueError):
    """Velocity angle requested at a zero-velocity state."""


@dataclass(frozen=True)
class FlowState:
    q: LiftedPoint
    v: TangentVec


@dataclass(frozen=True)
class Trajectory:
    """Fixed-step trajectory: times[k] = k*dt, positions as lifts."""

    times: np.ndarray        # (n,)
    positions: np.ndarray    # (n, 2) lifted
    velocities: np.ndarray   # (n, 2)

    def __len__(self) -> int:
        return len(self.times)

    def state(self, k: int) -> FlowState:
        return FlowState(
            LiftedPoint(float(self.positions[k, 0]), float(self.positions[k, 1])),
            TangentVec(float(self.velocities[k, 0]), float(self.velocities[k, 1])),
        )

    @property
    def final(self) -> FlowState:
        return self.state(len(self) - 1)

    def energies(self) -> np.ndarray:
        return 0.5 * np.sum(self.velocities**2, axis=1)

    def first_integrals(self, model: MagneticModel) -> np.ndarray:
        """a*cos(2*pi*x) + sqrt(2E)*sin(phi) per sample; nan where v = 0."""
        speed = np.hypot(self.velocities[:, 0], self.velocities[:, 1])
        with np.errstate(invalid="ignore", divide="ignore"):
            sin_phi = np.where(speed > 0.0, self.velocities[:, 1] / speed, np.nan)
        return model.amplitude * cos_two_pi(self.positions[:, 0]) + speed * sin_phi


def vector_field(model: MagneticModel, q: LiftedPoint, v: TangentVec):
    """Right-hand side (qdot, vdot) of the Euler-Lagrange equations."""
    s = TWO_PI * model.amplitude * float(sin_two_pi(q.X))
    return TangentVec(v.v1, v.v2), TangentVec(-s * v.v2, s * v.v1)


def _rhs(amplitude: float, state: np.ndarray) -> np.ndarray:
    """Vectorized field on stacked states (..., 4) = (X, Y, v1, v2)."""
    out = np.empty_like(state)
    s = TWO_PI * amplitude * sin_two_pi(state[..., 0])
    out[..., 0] = state[..., 2]
    out[..., 1] = state[..., 3]
    out[..., 2] = -s * state[..., 3]
    out[..., 3] = s * state[..., 2]
    return out


def _rk4_step(a: float, s: np.ndarray, dt: float) -> np.ndarray:
    k1 = _rhs(a, s)
    k2 = _rhs(a, s + 0.5 * dt * k1)
    k3 = _rhs(a, s + 0.5 * dt * k2)
    k4 = _rhs(a, s + dt * k3)
    return s + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def rk4_path(model: MagneticModel, state0: np.ndarray, n_steps: int, dt: float) -> np.ndarray:
    """Classical RK4 on a batch of states (m, 4); returns (n_steps+1, m, 4)."""
    a = model.amplitude
    out = np.empty((n_steps + 1,) + state0.shape)
    out[0] = state0
    s = state0.astype(float, copy=True)
    for k in range(n_steps):
        s = _rk4_step(a, s, dt)
        out[k + 1] = s
    return out


def _advance(a: float, state: np.ndarray, n_steps: int, dt: float) -> np.ndarray:
    """n_steps of RK4 keeping only the endpoint (no path storage)."""
    s = state.astype(float, copy=True)
    for _ in range(n_steps):
        s = _rk4_step(a, s, dt)
    return s


def integrate(
    model: MagneticModel,
    s0: FlowState,
    T: float,
    dt: float,
    reverse: bool = False,
) -> Trajectory:
    """Integrate for ceil(T/dt) uniform RK4 steps (last time lands in [T, T+dt)).

    With reverse=True the time-reversed field is used, so running `integrate`
    on the endpoint of a forward run for the same T retraces the orbit.
    """
    if not (T > 0.0 and dt > 0.0 and dt <= T):
        raise ValueError(f"need 0 < dt <= T, got dt={dt}, T={T}")
    n = math.ceil(T / dt - 1e-12)
    state0 = np.array([s0.q.X, s0.q.Y, s0.v.v1, s0.v.v2])
    step = -dt if reverse else dt
    path = rk4_path(model, state0, n, step)
    if not np.all(np.isfinite(path)):
        raise NonFiniteState("integration produced non-finite state")
    times = dt * np.arange(n + 1)
    return Trajectory(times, path[:, :2].copy(), path[:, 2:].copy())


def first_integral_drift(model: MagneticModel, traj: Trajectory) -> tuple[float, float]:
    """Max |E(t)-E(0)| and |F(t)-F(0)| over the trajectory samples.

    Raises ZeroVelocity if any sample has v = 0 (the velocity angle, and with
    it the first integral, is undefined there).
    """
    speed = np.hypot(traj.velocities[:, 0], traj.velocities[:, 1])
    if np.any(speed == 0.0):
        raise ZeroVelocity("first integral undefined at zero velocity")
    en = traj.energies()
    fi = traj.first_integrals(model)
    return float(np.max(np.abs(en - en[0]))), float(np.max(np.abs(fi - fi[0])))


def rotation_vector_estimate(traj: Trajectory) -> HomologyClass:
    """Endpoint displacement over elapsed time, (q(T) - q(0)) / T."""
    T = float(traj.times[-1])
    if T < 1.0:
        raise ValueError(f"need total time >= 1 for a meaningful estimate, got {T}")
    d = traj.positions[-1] - traj.positions[0]
    return HomologyClass(float(d[0]) / T, float(d[1]) / T)


def omega_limit_batch(
    model: MagneticModel,
    states0: np.ndarray,
    T_transient: float,
    T_sample: float,
    dt: float,
    stride: int = 8,
) -> np.ndarray:
    """Omega-limit sampling for a whole batch of (m, 4) start states at once.

    Returns (m, k, 4) clouds of (x mod 1, y mod 1, v1, v2).  Per-orbit results
    are bit-identical to single-state runs (all step arithmetic is
    elementwise), so batching is purely a speed choice.
    """
    if not (T_transient >= 0.0 and T_sample > 0.0 and dt > 0.0):
        raise ValueError(f"need T_transient >= 0, T_sample > 0, dt > 0, got "
                         f"{T_transient}, {T_sample}, {dt}")
    states0 = np.atleast_2d(np.asarray(states0, float))
    a = model.amplitude
    n = math.ceil((T_transient + T_sample) / dt - 1e-12)
    k0 = int(math.floor(T_transient / dt))
    s = _advance(a, states0, k0, dt)
    samples = [s]
    k = k0
    while k + stride <= n:
        s = _advance(a, s, stride, dt)
        k += stride
        samples.append(s)
    cloud = np.stack(samples, axis=1)
    if not np.all(np.isfinite(cloud)):
        raise NonFiniteState("omega-limit sampling produced non-finite state")
    cloud[..., :2] %= 1.0
    return cloud


def omega_limit_estimate(
    model: MagneticModel,
    s0: FlowState,
    T_transient: float,
    T_sample: float,
    dt: float,
    stride: int = 8,
) -> np.ndarray:
    """Sample the orbit on [T_transient, T_transient + T_sample].

    Returns an (m, 4) cloud of (x mod 1, y mod 1, v1, v2) rows, a surrogate
    for the omega-limit set.  `stride` thins the stored samples.
    """
    state0 = np.array([s0.q.X, s0.q.Y, s0.v.v1, s0.v.v2])
    return omega_limit_batch(model, state0[None, :], T_transient, T_sample, dt, stride)[0]


def cloud_distance(dists: np.ndarray, quantile: float = 0.5) -> float:
    """Robust cloud-to-set distance: quantile of pointwise distances.

    The default median measures where the orbit spends the majority of its
    time, which is the stable finite-time surrogate for "the omega-limit lies
    in the set": shadowing near saddle connections produces brief, measure-
    poor excursions that a sup-distance would latch onto.
    """
    if not 0.0 < quantile <= 1.0:
        raise ValueError(f"quantile must lie in (0, 1], got {quantile}")
    return float(np.quantile(np.asarray(dists), quantile))
