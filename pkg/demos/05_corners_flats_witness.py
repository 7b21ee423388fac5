"""
Corners of beta, radial flats of alpha, and the absorbing-graph witness
=======================================================================

Three fingerprints of the singular directions:

* beta has a corner across h1 = 0: the one-sided slopes along e1 jump by a
  positive gap, detected from the table by Richardson one-sided differences.
* the argmax set of <c, .> - beta at the limit class of the saddle graphs is
  an elongated radial flat pointing at (0, sqrt(2E)); at the class of a
  foliated graph it is essentially a point.
* the saddle-connection graph is not absorbing: an orbit started on it (away
  from the vertical orbit gamma_1) has its omega-limit inside the OTHER
  branch, accumulating on gamma_1.
"""
import math
import time

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from mather2d.convex import (build_beta_table, convexify, corner_scan,
                             flat_detect_alpha, slope_profile)
from mather2d.graphs import absorbing_witness, saddle_class
from mather2d.model import CohomologyClass, MagneticModel

model = MagneticModel()
ROOT2 = math.sqrt(2.0)

t0 = time.perf_counter()
env = convexify(build_beta_table(model, box=((-1.5, 1.5), (-1.5, 1.5)),
                                 steps=13, q_max=4, N=64, max_iters=300,
                                 seed=0))
print(f"table built in {time.perf_counter() - t0:.1f} s")

# --- corner across the vertical axis ---------------------------------------
seg = ((-0.4, 1.25), (0.4, 1.25))
prof = slope_profile(env, *seg, samples=161)
corners = corner_scan(env, *seg, samples=161)
fig, (ax0, ax1) = plt.subplots(1, 2, figsize=(11, 4.2))
ax0.plot(prof[:, 1], prof[:, 3], label="left slope")
ax0.plot(prof[:, 1], prof[:, 4], label="right slope")
for c in corners:
    ax0.axvline(c.location.h1, color="k", ls=":", lw=1)
    print(f"corner at h1 = {c.location.h1:+.4f}, slope gap {c.gap:.3f}")
ax0.set_xlabel("h1 along the segment h2 = 1.25")
ax0.set_ylabel("one-sided slope of beta")
ax0.set_title("slope jump across h1 = 0")
ax0.legend()

# --- flats of the conjugate ------------------------------------------------
sigma1 = saddle_class(1.0)
eta1_like = CohomologyClass(1.2160067234249796, 0.0)
flat_s = flat_detect_alpha(env, CohomologyClass(sigma1.c1, sigma1.c2))
flat_e = flat_detect_alpha(env, eta1_like)
ax1.plot([f.h1 for f in flat_s], [f.h2 for f in flat_s], "C3s", ms=7,
         label="argmax set at the saddle-limit class")
ax1.plot([f.h1 for f in flat_e], [f.h2 for f in flat_e], "C0o", ms=7,
         label="argmax set at a foliated-graph class")
ax1.plot(0.0, ROOT2, "k*", ms=12, label="(0, sqrt 2)")
ax1.set_xlim(env.h1[0], env.h1[-1])
ax1.set_ylim(env.h2[0], env.h2[-1])
ax1.set_xlabel("h1")
ax1.set_ylabel("h2")
ax1.set_title("radial flat vs point flat")
ax1.legend(loc="lower left")
fig.tight_layout()
fig.savefig("corners_and_flats.png", dpi=150)
print(f"saddle-limit flat: {len(flat_s)} nodes; foliated flat: {len(flat_e)} nodes")

# --- the witness orbit ------------------------------------------------------
rep = absorbing_witness(model, 1.0, ROOT2 - 1.0, seed=0)
print(f"witness at E = 1, level F = sqrt2 - 1: start (x, phi) = "
      f"({rep.x:.3f}, {rep.phi:+.3f})")
print(f"  distance of the start point from the other branch: "
      f"{rep.point_to_other_graph:.3f}")
print(f"  omega-limit cloud distance to gamma_1:             "
      f"{rep.cloud_to_gamma1:.2e}")
print("wrote corners_and_flats.png")
