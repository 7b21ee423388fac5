"""Scratch: pin oracle constants and check physics numerically (not shipped)."""
import math
import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from mather2d.model import MagneticModel, LiftedPoint, TangentVec
from mather2d import flow, graphs, loops

model = MagneticModel()

# --- 1. gamma_1 integrates straight, rotation vector, drift magnitudes ------
s0 = flow.FlowState(LiftedPoint(0.5, 0.0), TangentVec(0.0, math.sqrt(2.0)))
traj = flow.integrate(model, s0, 50.0, 1e-3)
eD, fD = flow.first_integral_drift(model, traj)
rot = flow.rotation_vector_estimate(traj)
print("gamma1 rot:", rot, " drifts:", eD, fD)

# generic orbit drift at E=1, dt=1e-3 vs 5e-4
rng = np.random.default_rng(0)
x, y = rng.uniform(0, 1, 2)
phi = rng.uniform(0, 2 * math.pi)
v = math.sqrt(2.0) * np.array([math.cos(phi), math.sin(phi)])
s1 = flow.FlowState(LiftedPoint(x, y), TangentVec(*v))
for dt in (1e-3, 5e-4):
    tr = flow.integrate(model, s1, 50.0, dt)
    print(f"dt={dt}: drifts {flow.first_integral_drift(model, tr)}")

# reversibility
tr_f = flow.integrate(model, s1, 10.0, 1e-3)
back = flow.integrate(model, tr_f.final, 10.0, 1e-3, reverse=True)
d = np.hypot(*(back.positions[-1] - np.array([x, y])))
print("reversibility:", d, np.abs(back.velocities[-1] - v).max())

# --- 2. closed-form constants ------------------------------------------------
def c1(E, F):
    return graphs.cohomology_class(graphs.GraphParams(E, F, 1)).c1

print("c1(2,0) =", repr(c1(2.0, 0.0)))
print("c1(1,0) =", repr(c1(1.0, 0.0)))
crit1 = math.sqrt(2.0) - 1.0
print("c1*(1)  =", repr(c1(1.0, crit1)))
E12 = 0.72
print("c1*(0.72) =", repr(c1(E12, math.sqrt(2 * E12) - 1.0)), " gap:", 2 * c1(E12, math.sqrt(2 * E12) - 1.0))
sc = graphs.saddle_class(1.0)
print("saddle_class(1) extrapolated:", repr(sc.c1), " direct:", repr(c1(1.0, crit1)))

# --- 3. integrable-structure oracle ------------------------------------------
def period_T(E, F):
    f = lambda x: 1.0 / math.sqrt(max(1e-300, 2 * E - (F - math.cos(2 * math.pi * x)) ** 2))
    val, _ = quad(f, 0, 1, limit=200)
    return val

def drift_A(E, F):
    f = lambda x: (F - math.cos(2 * math.pi * x)) / math.sqrt(max(1e-300, 2 * E - (F - math.cos(2 * math.pi * x)) ** 2))
    val, _ = quad(f, 0, 1, limit=200)
    return val

def action_per_T(E, F):
    T = period_T(E, F)
    f = lambda x: math.cos(2 * math.pi * x) * (F - math.cos(2 * math.pi * x)) / math.sqrt(max(1e-300, 2 * E - (F - math.cos(2 * math.pi * x)) ** 2))
    mag, _ = quad(f, 0, 1, limit=200)
    return (E * T + mag) / T, T

a10, T10 = action_per_T(1.0, 0.0)
print("orbit (E=1,F=0): T =", repr(T10), " h* = (", 1/T10, ", 0)  action/T =", a10)

# wavy orbit with winding (1,0), period exactly 1
Estar = brentq(lambda E: period_T(E, 0.0) - 1.0, 0.55, 3.0, xtol=1e-14)
aw, Tw = action_per_T(Estar, 0.0)
print("h0=(1,0),T=1: E* =", repr(Estar), " action/T =", repr(aw))

# --- 4. loop minimization cross-check ----------------------------------------
loop, rep = loops.minimize_loop(model, (1, 0), 1.0, N=128, restarts=2, seed=5)
print("minimize_loop (1,0),T=1:", rep.action, " vs oracle", aw, " it:", rep.iterations, rep.grad_norm)

loop2, rep2 = loops.minimize_loop(model, (0, 1), 1 / math.sqrt(2.0), N=128, restarts=2, seed=5)
print("minimize_loop (0,1),T=1/sqrt2:", rep2.action * math.sqrt(2.0), " expected", 1 - math.sqrt(2.0),
      " x-spread:", loop2.nodes[:, 0].std(), loop2.nodes[0, 0] % 1.0)

bf = loops.brute_force_beta(model, (1, 0), 1.0, N_coarse=64, dense_restarts=8, seed=3)
print("brute_force (1,0),T=1:", bf)

val = loops.beta_estimate(model, (1.0, 0.0), q_max=3, N=96, restarts=2, seed=9)
print("beta_estimate((1,0)):", val)

v2 = loops.beta_estimate(model, (0.0, math.sqrt(2.0)), q_max=3, N=96, restarts=2, seed=9)
print("beta_estimate((0,sqrt2)):", v2, " expected", 1 - math.sqrt(2.0))

v3 = loops.beta_estimate(model, (0.0, 0.0), q_max=3, N=96, restarts=2, seed=9)
print("beta_estimate((0,0)):", v3)

# gamma1 discrete action exactness
N = 256
T = 1 / math.sqrt(2.0)
nodes = np.column_stack([np.full(N, 0.5), np.arange(N) / N])
dl = loops.DiscreteLoop(nodes, (0, 1), T)
print("gamma1 discrete action/T:", loops.discrete_action(model, dl) / T, 1 - math.sqrt(2.0))

# gradient finite-difference check
rng = np.random.default_rng(11)
q = rng.standard_normal((16, 2)) * 0.3
dlr = loops.DiscreteLoop(q, (1, 1), 2.0)
g = loops.action_gradient(model, dlr)
eps = 1e-6
gfd = np.zeros_like(g)
for i in range(16):
    for j in range(2):
        qp = q.copy(); qp[i, j] += eps
        qm = q.copy(); qm[i, j] -= eps
        gfd[i, j] = (loops.discrete_action(model, loops.DiscreteLoop(qp, (1, 1), 2.0))
                     - loops.discrete_action(model, loops.DiscreteLoop(qm, (1, 1), 2.0))) / (2 * eps)
print("grad FD max err:", np.abs(g - gfd).max())
