"""Discrete closed-loop action and minimizers for estimating Mather's beta.

A loop with winding h0 in Z^2 and period T is a polygon of N lifted nodes
with the closure node[N] = node[0] + h0.  The action uses midpoint segment
velocities and a position trapezoid,

    S = sum_k dt * ( [L(q_k, v_k) + L(q_{k+1}, v_k)] / 2 - <c, v_k> + offset ),

so the magnetic coupling is second-order accurate and the constant-form term
telescopes to exactly <c, h0>.  beta_estimate minimizes S/T over loops whose
winding/period approximate a prescribed rotation vector; brute_force_beta is
a deliberately separate optimizer (momentum descent with backtracking, dense
random restarts) used to cross-check it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.optimize import minimize as _scipy_minimize

from .model import CohomologyClass, MagneticModel, TWO_PI, cos_two_pi, sin_two_pi

__all__ = [
    "NoConvergence",
    "DiscreteLoop",
    "MinimizeReport",
    "discrete_action",
    "action_gradient",
    "minimize_loop",
    "beta_estimate",
    "beta_candidates",
    "brute_force_beta",
]


class NoConvergence(RuntimeError):
    """No restart reached the gradient tolerance."""


@dataclass(frozen=True)
class DiscreteLoop:
    """Closed polygonal loop in the cover: nodes (N, 2), winding h0, period T."""

    nodes: np.ndarray
    h0: tuple[int, int]
    T: float

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        if nodes.ndim != 2 or nodes.shape[1] != 2 or nodes.shape[0] < 8:
            raise ValueError(f"nodes must be (N>=8, 2), got shape {nodes.shape}")
        if not np.all(np.isfinite(nodes)):
            raise ValueError("non-finite loop nodes")
        if not (self.T > 0.0 and math.isfinite(self.T)):
            raise ValueError(f"period must be positive, got {self.T}")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "h0", (int(self.h0[0]), int(self.h0[1])))

    @property
    def N(self) -> int:
        return self.nodes.shape[0]

    def velocities(self) -> np.ndarray:
        dq = np.roll(self.nodes, -1, axis=0) - self.nodes
        dq[-1] += self.h0
        return dq * (self.N / self.T)


@dataclass(frozen=True)
class MinimizeReport:
    action: float
    grad_norm: float
    iterations: int
    converged: bool
    restarts: int


def _action_and_grad(
    model: MagneticModel, q: np.ndarray, h0: np.ndarray, T: float,
    c: np.ndarray, offset: float,
) -> tuple[float, np.ndarray]:
    """Discrete action and its exact gradient with respect to the nodes."""
    N = q.shape[0]
    dt = T / N
    dq = np.roll(q, -1, axis=0) - q
    dq[-1] += h0
    v = dq / dt
    a = model.amplitude
    A = a * cos_two_pi(q[:, 0])
    A_seg = 0.5 * (A + np.roll(A, -1))
    L_seg = 0.5 * np.sum(v * v, axis=1) + A_seg * v[:, 1]
    action = dt * float(np.sum(L_seg)) - float(c[0] * h0[0] + c[1] * h0[1]) + offset * T

    W = dt * v
    W[:, 1] += dt * A_seg
    grad = (np.roll(W, 1, axis=0) - W) / dt
    dA = -TWO_PI * a * sin_two_pi(q[:, 0])
    grad[:, 0] += dt * dA * 0.5 * (v[:, 1] + np.roll(v[:, 1], 1))
    return action, grad


def discrete_action(
    model: MagneticModel,
    loop: DiscreteLoop,
    c: CohomologyClass | None = None,
    offset: float = 0.0,
) -> float:
    """Action of the loop for L - <c, .> + offset; <c, .> contributes -<c, h0>."""
    cv = np.zeros(2) if c is None else c.as_array()
    val, _ = _action_and_grad(model, loop.nodes, np.asarray(loop.h0, float), loop.T, cv, offset)
    return val


def action_gradient(
    model: MagneticModel,
    loop: DiscreteLoop,
    c: CohomologyClass | None = None,
) -> np.ndarray:
    """Gradient of discrete_action in the node positions, shape (N, 2)."""
    cv = np.zeros(2) if c is None else c.as_array()
    _, g = _action_and_grad(model, loop.nodes, np.asarray(loop.h0, float), loop.T, cv, 0.0)
    return g


def _straight_init(h0: np.ndarray, N: int, rng: np.random.Generator, noise: float) -> np.ndarray:
    base = rng.uniform(0.0, 1.0, size=2)
    k = np.arange(N)[:, None] / N
    return base + h0 * k + noise * rng.standard_normal((N, 2))


def _canonical_shift(q: np.ndarray) -> np.ndarray:
    return q - np.floor(q[0])


def minimize_loop(
    model: MagneticModel,
    h0: tuple[int, int],
    T: float,
    N: int = 128,
    restarts: int = 2,
    seed: int = 0,
    grad_tol: float = 1e-6,
    max_iters: int = 500,
    noise: float = 0.05,
) -> tuple[DiscreteLoop, MinimizeReport]:
    """Locally minimize the c = 0 discrete action over loops (h0, T).

    Starts each restart from a straight cover segment plus seeded noise and
    polishes with L-BFGS.  Returns the best loop found; raises NoConvergence
    if no restart reaches grad_tol (Euclidean norm of the full gradient).
    """
    if T <= 0.0:
        raise ValueError(f"period must be positive, got {T}")
    if N < 8:
        raise ValueError(f"need at least 8 nodes, got {N}")
    h0v = np.asarray(h0, dtype=float)
    zero = np.zeros(2)

    def fun(flat: np.ndarray) -> tuple[float, np.ndarray]:
        val, g = _action_and_grad(model, flat.reshape(-1, 2), h0v, T, zero, 0.0)
        return val, g.ravel()

    best = None  # (not converged, action, grad_norm, nodes)
    total_it = 0
    for r in range(max(1, restarts)):
        ss = np.random.SeedSequence(entropy=seed, spawn_key=(r,))
        rng = np.random.default_rng(ss)
        x = _straight_init(h0v, N, rng, noise).ravel()
        gn = math.inf
        # L-BFGS tends to stall on its ftol just shy of tight gradient
        # tolerances; restarting it with fresh curvature memory fixes that.
        for _ in range(3):
            res = _scipy_minimize(
                fun, x, jac=True, method="L-BFGS-B",
                options={"maxiter": max_iters, "maxfun": 4 * max_iters,
                         "ftol": 1e-16, "gtol": 1e-12},
            )
            total_it += int(res.nit)
            x, gn = res.x, float(np.linalg.norm(res.jac))
            if gn <= 0.1 * grad_tol:
                break
        key = (gn > grad_tol, float(res.fun), gn)
        if best is None or key < (best[0], best[1] - 1e-15, best[2]):
            best = (key[0], key[1], gn, x.reshape(-1, 2))
    failed, action, grad_norm, q = best
    if failed:
        raise NoConvergence(
            f"gradient norm {grad_norm:.3e} above tolerance {grad_tol:.3e} "
            f"for h0={tuple(int(t) for t in h0)}, T={T}"
        )
    loop = DiscreteLoop(_canonical_shift(q), (int(h0[0]), int(h0[1])), T)
    report = MinimizeReport(action, grad_norm, total_it, True, max(1, restarts))
    return loop, report


def _convergent_directions(h: np.ndarray, q_max: int) -> list[tuple[int, int]]:
    """Primitive integer directions approximating h, from continued fractions."""
    h1, h2 = float(h[0]), float(h[1])
    if h1 == 0.0 and h2 == 0.0:
        return [(0, 0)]
    if h1 == 0.0:
        return [(0, int(math.copysign(1, h2)))]
    if h2 == 0.0:
        return [(int(math.copysign(1, h1)), 0)]
    s1, s2 = int(math.copysign(1, h1)), int(math.copysign(1, h2))
    slope = abs(h2 / h1)
    out: list[tuple[int, int]] = []
    for d in range(1, q_max + 1):
        fr = Fraction(slope).limit_denominator(d)
        p, q = fr.numerator, fr.denominator
        if p == 0:
            cand = (s1, 0)
        elif max(p, q) > q_max:
            continue
        else:
            cand = (s1 * q, s2 * p)
        if cand not in out:
            out.append(cand)
    # steep directions: approximate the reciprocal slope as well
    for d in range(1, q_max + 1):
        fr = Fraction(1.0 / slope).limit_denominator(d)
        p, q = fr.numerator, fr.denominator
        if p == 0:
            cand = (0, s2)
        elif max(p, q) > q_max:
            continue
        else:
            cand = (s1 * p, s2 * q)
        if cand not in out:
            out.append(cand)
    return out


def _exact_denominator(h: np.ndarray, q_max: int, tol: float = 1e-9) -> int | None:
    """Smallest d <= q_max such that d*h is an integer vector, or None."""
    for d in range(1, q_max + 1):
        r1 = d * h[0]
        r2 = d * h[1]
        if abs(r1 - round(r1)) <= tol and abs(r2 - round(r2)) <= tol:
            return d
    return None


def beta_candidates(h, q_max: int, period_scale: float) -> list[tuple[tuple[int, int], float]]:
    """Candidate (h0, T) pairs whose loops realize rotation vectors at or near h.

    If h is rational with denominator d <= q_max, the candidates are the exact
    representations h0 = k*d*h, T = period_scale*k*d for k*d <= q_max, whose
    loops have rotation vector exactly h (at period_scale 1); every candidate
    action is then a genuine upper bound for beta(h).  Otherwise the windings
    are multiples of continued-fraction convergents of the direction of h with
    components bounded by q_max and T = period_scale * |h0| / |h|, so the loop
    speed matches |h| but the realized rotation only approximates h; no upper
    bound is claimed off the rational set.  For h = 0 the winding is (0, 0)
    and T runs through an increasing schedule.
    """
    hv = np.asarray(h, dtype=float)
    norm = float(np.hypot(hv[0], hv[1]))
    out: list[tuple[tuple[int, int], float]] = []
    if norm == 0.0:
        for k in range(1, q_max + 1):
            out.append(((0, 0), period_scale * 2.0 * k))
        return out
    d = _exact_denominator(hv, q_max)
    if d is not None:
        m = d
        while m <= q_max:
            h0 = (int(round(m * hv[0])), int(round(m * hv[1])))
            out.append((h0, period_scale * m))
            m += d
        return out
    for base in _convergent_directions(hv, q_max):
        b = max(abs(base[0]), abs(base[1]))
        k = 1
        while k * b <= q_max:
            h0 = (k * base[0], k * base[1])
            T = period_scale * math.hypot(*h0) / norm
            if (h0, T) not in out:
                out.append((h0, T))
            k += 1
    return out


def _candidate_seed(seed: int, h0: tuple[int, int], T: float) -> np.random.SeedSequence:
    key = (h0[0] + 1024, h0[1] + 1024, int(round(T * 4096)) & 0x7FFFFFFF)
    return np.random.SeedSequence(entropy=seed, spawn_key=key)


def beta_estimate(
    model: MagneticModel,
    h,
    q_max: int = 3,
    period_scale: float = 1.0,
    N: int = 96,
    restarts: int = 2,
    seed: int = 0,
    grad_tol: float = 1e-6,
    max_iters: int = 500,
    nodes_per_time: int = 24,
) -> float:
    """Upper estimate of beta(h) by loop minimization over rational candidates.

    Monotonically non-increasing in restarts, and in q_max as long as the
    candidate family does not switch branches (it always holds for integer h;
    for other h, raising q_max past the exact denominator replaces direction
    approximants with exact representations and the value may move either
    way).  Per-candidate seeds depend only on the candidate, so enlarging the
    search keeps every value already tried.  Ties are broken toward the
    smallest winding, then the smallest period.  No exactness is claimed; see
    brute_force_beta for the independent cross-check.
    """
    results = []
    for h0, T in beta_candidates(h, q_max, period_scale):
        n_nodes = int(max(N, min(1024, math.ceil(T * nodes_per_time))))
        ss = _candidate_seed(seed, h0, T)
        cand_seed = int(ss.generate_state(1)[0])
        try:
            _, rep = minimize_loop(
                model, h0, T, n_nodes, restarts, cand_seed,
                grad_tol=grad_tol, max_iters=max_iters,
            )
        except NoConvergence:
            continue
        results.append((rep.action / T, max(abs(h0[0]), abs(h0[1])), T))
    if not results:
        raise NoConvergence(f"no candidate minimization converged for h={h}")
    best = min(v for v, _, _ in results)
    ties = sorted((q, T, v) for v, q, T in results if v <= best + 1e-12)
    return float(ties[0][2])


def _fourier_init(
    h0: np.ndarray, N: int, rng: np.random.Generator, modes: int = 3, amp: float = 0.35
) -> np.ndarray:
    t = np.arange(N)[:, None] / N
    q = rng.uniform(0.0, 1.0, size=2) + h0 * t
    for m in range(1, modes + 1):
        coef = (amp / m) * rng.standard_normal((2, 2))
        q = q + coef[0] * np.cos(TWO_PI * m * t) + coef[1] * np.sin(TWO_PI * m * t)
    return q


def _momentum_descent(
    model: MagneticModel, q0: np.ndarray, h0: np.ndarray, T: float,
    max_iters: int, grad_tol: float,
) -> tuple[float, np.ndarray, float]:
    """Plain momentum descent with backtracking; no shared optimizer code."""
    zero = np.zeros(2)
    q = q0.copy()
    lr = 0.05
    mom = 0.85
    buf = np.zeros_like(q)
    action, grad = _action_and_grad(model, q, h0, T, zero, 0.0)
    for _ in range(max_iters):
        gn = float(np.linalg.norm(grad))
        if gn <= grad_tol:
            break
        buf = mom * buf - lr * grad
        trial = q + buf
        new_action, new_grad = _action_and_grad(model, trial, h0, T, zero, 0.0)
        if new_action <= action - 1e-14 * abs(action):
            q, action, grad = trial, new_action, new_grad
            lr = min(lr * 1.05, 0.5)
        else:
            lr *= 0.5
            buf[:] = 0.0
            if lr < 1e-12:
                break
    return action, q, float(np.linalg.norm(grad))


def brute_force_beta(
    model: MagneticModel,
    h0: tuple[int, int],
    T: float,
    N_coarse: int = 64,
    dense_restarts: int = 12,
    seed: int = 0,
    max_iters: int = 4000,
    grad_tol: float = 1e-7,
) -> float:
    """Reference minimization of the (h0, T) loop problem, action per time.

    Independent code path from minimize_loop: momentum descent with
    backtracking over dense random restarts (straight segments and random
    Fourier loops).  Slower but with a wider search; used to cross-check
    beta_estimate.
    """
    if T <= 0.0:
        raise ValueError(f"period must be positive, got {T}")
    h0v = np.asarray(h0, dtype=float)
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(77,)))
    best = math.inf
    for r in range(dense_restarts):
        if r % 3 == 0:
            q0 = _straight_init(h0v, N_coarse, rng, noise=0.02 + 0.08 * (r % 2))
        else:
            q0 = _fourier_init(h0v, N_coarse, rng)
        action, _, _ = _momentum_descent(model, q0, h0v, T, max_iters, grad_tol)
        best = min(best, action)
    return best / T
