"""
The beta table, its convex envelope, and the conjugate alpha
============================================================

This builds a small grid of upper estimates of beta(h), takes the lower
convex envelope (finite-period loops overshoot inside the flat on the
vertical axis, and the envelope repairs exactly that strip), and conjugates
to alpha.  On the vertical axis beta is known in closed form, which makes a
sharp section test:

    beta(0, s) = -1/2          for |s| <= 1
    beta(0, s) = s^2/2 - |s|   for |s| >= 1

Expect a minute or two of loop minimizations.
"""
import math
import time

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from mather2d.convex import alpha_from_beta, build_beta_table, convexify
from mather2d.model import CohomologyClass, MagneticModel

model = MagneticModel()

t0 = time.perf_counter()
raw = build_beta_table(model, box=((-1.5, 1.5), (-1.5, 1.5)), steps=13,
                       q_max=4, N=64, max_iters=300, seed=0)
env = convexify(raw)
print(f"13 x 13 table built in {time.perf_counter() - t0:.1f} s")

fig, (ax0, ax1) = plt.subplots(1, 2, figsize=(11, 4.4))
im = ax0.pcolormesh(env.h1, env.h2, env.values.T, shading="nearest")
fig.colorbar(im, ax=ax0, label="beta")
ax0.set_xlabel("h1")
ax0.set_ylabel("h2")
ax0.set_title("lower convex envelope of the estimates")

# --- axis section against the closed form ----------------------------------
i0 = int(np.argmin(np.abs(env.h1)))
s = env.h2
closed = np.where(np.abs(s) <= 1.0, -0.5, 0.5 * s**2 - np.abs(s))
ax1.plot(s, raw.values[i0], "o", ms=4, label="raw estimates")
ax1.plot(s, env.values[i0], "s", ms=4, mfc="none", label="envelope")
ax1.plot(s, closed, "k-", lw=1, label="closed form")
ax1.set_xlabel("h2 (on the axis h1 = 0)")
ax1.set_ylabel("beta(0, h2)")
ax1.set_title("the envelope lands on the closed form")
ax1.legend()
fig.tight_layout()
fig.savefig("beta_table.png", dpi=150)

print(f"axis error, raw estimates: {np.max(np.abs(raw.values[i0] - closed)):.2e}")
print(f"axis error, envelope:      {np.max(np.abs(env.values[i0] - closed)):.2e}")

# --- conjugating to alpha ---------------------------------------------------
# alpha(0) = -min beta = 1/2, and alpha grows along the vertical classes
for c in [(0.0, 0.0), (0.1, 0.0), (0.0, 0.1), (0.0, 0.2)]:
    a = alpha_from_beta(env, CohomologyClass(*c))
    print(f"alpha({c[0]:+.2f}, {c[1]:+.2f}) = {a:.6f}")
print("wrote beta_table.png")
