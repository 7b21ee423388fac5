"""Grid tables for Mather's beta and everything convex-analytic on top:
lower convex envelope, Legendre-Fenchel conjugation to alpha, subdifferentials,
corner detection, and flats of alpha.

A ConvexTable holds beta estimates on a uniform rectangular grid of rotation
vectors.  Conjugation is a direct sup over the grid, the envelope comes from
the lower hull of the lifted point cloud, and one-sided derivatives use
Richardson-refined finite differences so that smooth curvature does not
masquerade as a corner.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .loops import NoConvergence, beta_estimate
from .model import CohomologyClass, HomologyClass, MagneticModel

__all__ = [
    "BoundaryAttained",
    "ConvexTable",
    "CornerReport",
    "build_beta_table",
    "convexify",
    "alpha_from_beta",
    "fenchel_residual",
    "double_conjugate",
    "subdifferential_beta",
    "slope_profile",
    "corner_scan",
    "flat_detect_alpha",
]


class BoundaryAttained(RuntimeError):
    """Conjugation sup attained on the grid boundary; box too small for c."""


@dataclass(frozen=True)
class ConvexTable:
    """beta values on a uniform grid; values[i, j] belongs to (h1[i], h2[j])."""

    h1: np.ndarray
    h2: np.ndarray
    values: np.ndarray
    convexified: bool = False

    def __post_init__(self):
        h1 = np.asarray(self.h1, float)
        h2 = np.asarray(self.h2, float)
        vals = np.asarray(self.values, float)
        if h1.size < 8 or h2.size < 8:
            raise ValueError(f"need at least 8 nodes per axis, got {h1.size}x{h2.size}")
        if vals.shape != (h1.size, h2.size):
            raise ValueError(f"values shape {vals.shape} != grid {h1.size}x{h2.size}")
        object.__setattr__(self, "h1", h1)
        object.__setattr__(self, "h2", h2)
        object.__setattr__(self, "values", vals)

    @property
    def cell(self) -> tuple[float, float]:
        return float(self.h1[1] - self.h1[0]), float(self.h2[1] - self.h2[0])

    def nearest_node(self, h) -> tuple[int, int]:
        i = int(np.clip(np.rint((h[0] - self.h1[0]) / self.cell[0]), 0, self.h1.size - 1))
        j = int(np.clip(np.rint((h[1] - self.h2[0]) / self.cell[1]), 0, self.h2.size - 1))
        return i, j

    def node(self, i: int, j: int) -> tuple[HomologyClass, float]:
        return HomologyClass(float(self.h1[i]), float(self.h2[j])), float(self.values[i, j])

    def interpolate(self, pts: np.ndarray) -> np.ndarray:
        """Bilinear interpolation at (m, 2) points inside the box."""
        pts = np.atleast_2d(np.asarray(pts, float))
        d1, d2 = self.cell
        u = (pts[:, 0] - self.h1[0]) / d1
        w = (pts[:, 1] - self.h2[0]) / d2
        if np.any(u < -1e-9) or np.any(u > self.h1.size - 1 + 1e-9) or \
           np.any(w < -1e-9) or np.any(w > self.h2.size - 1 + 1e-9):
            raise ValueError("interpolation point outside the table box")
        i = np.clip(np.floor(u).astype(int), 0, self.h1.size - 2)
        j = np.clip(np.floor(w).astype(int), 0, self.h2.size - 2)
        fu = u - i
        fw = w - j
        v = self.values
        return ((1 - fu) * (1 - fw) * v[i, j] + fu * (1 - fw) * v[i + 1, j]
                + (1 - fu) * fw * v[i, j + 1] + fu * fw * v[i + 1, j + 1])


def _node_seed(seed: int, i: int, j: int) -> int:
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(i, j))
    return int(ss.generate_state(1)[0])


def _estimate_node(args):
    model, h, kwargs, node_seed = args
    try:
        return beta_estimate(model, h, seed=node_seed, **kwargs)
    except NoConvergence:
        return math.nan


def build_beta_table(
    model: MagneticModel,
    box=((-2.0, 2.0), (-2.0, 2.0)),
    steps: int | tuple[int, int] = 33,
    q_max: int = 8,
    period_scale: float = 1.0,
    N: int = 96,
    restarts: int = 2,
    seed: int = 0,
    grad_tol: float = 1e-5,
    max_iters: int = 500,
    workers: int = 1,
    max_invalid_frac: float = 0.05,
) -> ConvexTable:
    """Estimate beta on the grid; raw values, not yet convexified.

    The default q_max of 8 covers the denominators of every node of the
    default 33-step dyadic grid, so each node value comes from loops whose
    rotation vector is exactly the node (a valid upper bound there); coarser
    q_max silently degrades off-axis nodes to directional approximations.
    Every node gets its own seed derived from (seed, i, j), so results do not
    depend on evaluation order or worker count.  Nodes whose estimate fails
    are filled from the neighbor envelope afterwards; more than
    max_invalid_frac of them aborts the build.
    """
    (a1, b1), (a2, b2) = box
    n1, n2 = (steps, steps) if isinstance(steps, int) else steps
    if n1 < 8 or n2 < 8:
        raise ValueError(f"need at least 8 nodes per axis, got {n1}x{n2}")
    h1 = np.linspace(a1, b1, n1)
    h2 = np.linspace(a2, b2, n2)
    kwargs = dict(q_max=q_max, period_scale=period_scale, N=N,
                  restarts=restarts, grad_tol=grad_tol, max_iters=max_iters)
    tasks = [
        (model, (float(h1[i]), float(h2[j])), kwargs, _node_seed(seed, i, j))
        for i in range(n1) for j in range(n2)
    ]
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as ex:
            flat = list(ex.map(_estimate_node, tasks, chunksize=8))
    else:
        flat = [_estimate_node(t) for t in tasks]
    values = np.array(flat).reshape(n1, n2)
    bad = ~np.isfinite(values)
    if bad.mean() > max_invalid_frac:
        raise RuntimeError(
            f"{bad.sum()} of {values.size} nodes failed ({bad.mean():.1%} > "
            f"{max_invalid_frac:.0%}); aborting table build"
        )
    while np.any(bad):
        vals = np.where(bad, np.nan, values)
        padded = np.pad(vals, 1, constant_values=np.nan)
        stacks = [padded[1 + di:1 + di + n1, 1 + dj:1 + dj + n2]
                  for di in (-1, 0, 1) for dj in (-1, 0, 1) if (di, dj) != (0, 0)]
        with np.errstate(invalid="ignore"):
            neighbor_mean = np.nanmean(np.stack(stacks), axis=0)
        fill = bad & np.isfinite(neighbor_mean)
        if not np.any(fill):
            raise RuntimeError("isolated invalid region could not be filled")
        values = np.where(fill, neighbor_mean, values)
        bad &= ~fill
    return ConvexTable(h1, h2, values)


def convexify(table: ConvexTable) -> ConvexTable:
    """Lower convex envelope of the table values on its own grid.

    Exact for the piecewise-linear envelope: builds the convex hull of the
    lifted points (h, value) and takes the max over lower-facet planes.
    Idempotent, never increases a value.
    """
    H1, H2 = np.meshgrid(table.h1, table.h2, indexing="ij")
    pts = np.column_stack([H1.ravel(), H2.ravel(), table.values.ravel()])
    # affine data has a degenerate hull; fit a plane first
    A = np.column_stack([pts[:, 0], pts[:, 1], np.ones(len(pts))])
    coef, *_ = np.linalg.lstsq(A, pts[:, 2], rcond=None)
    if np.max(np.abs(A @ coef - pts[:, 2])) < 1e-12:
        return replace(table, values=table.values.copy(), convexified=True)
    try:
        hull = ConvexHull(pts)
    except QhullError:
        hull = ConvexHull(pts, qhull_options="QJ")
    eq = hull.equations  # a1*x + a2*y + az*z + b <= 0 inside
    lower = eq[eq[:, 2] < -1e-12]
    # z >= (-b - a1*x - a2*y) / az for every lower facet (az < 0)
    plane_z = (-lower[:, 3, None] - lower[:, 0, None] * pts[None, :, 0]
               - lower[:, 1, None] * pts[None, :, 1]) / lower[:, 2, None]
    env = np.max(plane_z, axis=0)
    env = np.minimum(env, pts[:, 2])
    return replace(table, values=env.reshape(table.values.shape), convexified=True)


def alpha_from_beta(table: ConvexTable, c: CohomologyClass) -> float:
    """alpha(c) = max over grid nodes of <c, h> - beta(h).

    Raises BoundaryAttained when every maximizer sits on the box boundary,
    i.e. the sup escapes the table and the value would be spurious.
    """
    gains = (c.c1 * table.h1[:, None] + c.c2 * table.h2[None, :]) - table.values
    best = float(np.max(gains))
    idx = np.argwhere(gains >= best - 1e-12)
    n1, n2 = table.values.shape
    interior = (idx[:, 0] > 0) & (idx[:, 0] < n1 - 1) & (idx[:, 1] > 0) & (idx[:, 1] < n2 - 1)
    if not np.any(interior):
        raise BoundaryAttained(f"conjugation argmax on box boundary for c=({c.c1}, {c.c2})")
    return best


def fenchel_residual(table: ConvexTable, c: CohomologyClass, h: HomologyClass) -> float:
    """alpha(c) + beta(h) - <c, h> at the grid node nearest to h (>= 0)."""
    i, j = table.nearest_node((h.h1, h.h2))
    hn, val = table.node(i, j)
    return alpha_from_beta(table, c) + val - (c.c1 * hn.h1 + c.c2 * hn.h2)


def double_conjugate(table: ConvexTable, c_steps: int = 257, pad: float = 1.0) -> ConvexTable:
    """Numerical biconjugate beta** through an auto-sized grid of classes.

    The c-box covers every one-sided slope of the table plus a margin, so on
    the grid beta** reproduces the lower convex envelope up to O(dc^2).
    """
    d1, d2 = table.cell
    s1 = np.diff(table.values, axis=0) / d1
    s2 = np.diff(table.values, axis=1) / d2
    c1 = np.linspace(s1.min() - pad, s1.max() + pad, c_steps)
    c2 = np.linspace(s2.min() - pad, s2.max() + pad, c_steps)
    H1, H2 = np.meshgrid(table.h1, table.h2, indexing="ij")
    hflat = np.column_stack([H1.ravel(), H2.ravel()])
    vflat = table.values.ravel()
    alpha = np.empty((c_steps, c_steps))
    for k in range(c_steps):
        gains = c1[k] * hflat[:, 0][None, :] + c2[:, None] * hflat[:, 1][None, :] - vflat[None, :]
        alpha[k, :] = gains.max(axis=1)
    out = np.empty_like(table.values)
    cflat1 = np.repeat(c1, c_steps)
    cflat2 = np.tile(c2, c_steps)
    aflat = alpha.ravel()
    for i in range(table.h1.size):
        gains = (table.h1[i] * cflat1)[None, :] + np.outer(table.h2, cflat2) - aflat[None, :]
        out[i, :] = gains.max(axis=1)
    return replace(table, values=out, convexified=False)


_DIRS = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)]


def _one_sided(table: ConvexTable, i: int, j: int, di: int, dj: int) -> float:
    """Richardson-refined one-sided derivative along (di, dj) at node (i, j)."""
    d1, d2 = table.cell
    step = math.hypot(di * d1, dj * d2)
    f0 = table.values[i, j]
    f1 = table.values[i + di, j + dj]
    f2 = table.values[i + 2 * di, j + 2 * dj]
    s1 = (f1 - f0) / step
    s2 = (f2 - f0) / (2.0 * step)
    return 2.0 * s1 - s2


def subdifferential_beta(table: ConvexTable, h, tol: float = 0.05) -> list[CohomologyClass]:
    """Extreme points of the numerical subdifferential at the node nearest h.

    Combines one-sided axis slopes into candidate supporting classes and keeps
    those consistent with all eight compass directional derivatives (within
    tol).  A singleton means beta is numerically differentiable at h.
    """
    i, j = table.nearest_node((h[0], h[1]) if not isinstance(h, HomologyClass) else (h.h1, h.h2))
    n1, n2 = table.values.shape
    if not (2 <= i <= n1 - 3 and 2 <= j <= n2 - 3):
        raise ValueError(f"node ({i}, {j}) too close to the box edge for stencils")
    d1, d2 = table.cell
    dplus = {d: _one_sided(table, i, j, *d) for d in _DIRS}
    cands = [
        (cx, cy)
        for cx in (-dplus[(-1, 0)], dplus[(1, 0)])
        for cy in (-dplus[(0, -1)], dplus[(0, 1)])
    ]
    kept = []
    for g in cands:
        ok = True
        for (di, dj), dv in dplus.items():
            ux, uy = di * d1, dj * d2
            norm = math.hypot(ux, uy)
            if g[0] * ux / norm + g[1] * uy / norm > dv + tol:
                ok = False
                break
        if ok:
            kept.append(g)
    out: list[CohomologyClass] = []
    for g in kept:
        if not any(math.hypot(g[0] - o.c1, g[1] - o.c2) <= tol for o in out):
            out.append(CohomologyClass(g[0], g[1]))
    return out


@dataclass(frozen=True)
class CornerReport:
    t: float
    location: HomologyClass
    left_slope: float
    right_slope: float
    gap: float


def slope_profile(table: ConvexTable, h_start, h_end, samples: int = 101) -> np.ndarray:
    """One-sided slopes along a segment: rows (t, h1, h2, left, right, gap).

    Slopes are directional derivatives along the segment direction from
    Richardson-refined differences of the bilinear interpolant; the step is
    one grid cell, so the segment (padded by two steps) must stay in the box.
    """
    p0 = np.asarray(h_start, float)
    p1 = np.asarray(h_end, float)
    u = p1 - p0
    length = float(np.hypot(*u))
    if length == 0.0:
        raise ValueError("degenerate scan segment")
    u = u / length
    d1, d2 = table.cell
    step = math.hypot(u[0] * d1, u[1] * d2)
    ts = np.linspace(0.0, 1.0, samples)
    pts = p0[None, :] + ts[:, None] * (p1 - p0)
    out = np.empty((samples, 6))
    for k, (t, p) in enumerate(zip(ts, pts)):
        stencil = p[None, :] + np.outer([-2, -1, 0, 1, 2], u * step)
        f = table.interpolate(stencil)
        sp1 = (f[3] - f[2]) / step
        sp2 = (f[4] - f[2]) / (2 * step)
        right = 2 * sp1 - sp2
        sm1 = (f[2] - f[1]) / step
        sm2 = (f[2] - f[0]) / (2 * step)
        left = 2 * sm1 - sm2
        out[k] = (t, p[0], p[1], left, right, right - left)
    return out


def _report_at(prof: np.ndarray, k: int) -> CornerReport:
    return CornerReport(
        float(prof[k, 0]),
        HomologyClass(float(prof[k, 1]), float(prof[k, 2])),
        float(prof[k, 3]), float(prof[k, 4]), float(prof[k, 5]),
    )


def corner_scan(table: ConvexTable, h_start, h_end, samples: int = 101,
                gap_tol: float = 0.05) -> list[CornerReport]:
    """Corners of beta along a segment: clustered above-tolerance slope gaps.

    Consecutive samples whose one-sided slope gap exceeds gap_tol merge into
    one corner, then a local rescan at 64x finer spacing lands a sample close
    enough to the kink that the Richardson slopes on its two sides stay
    uncontaminated.  The gap is measured, not assumed: callers decide what
    magnitude is meaningful.
    """
    prof = slope_profile(table, h_start, h_end, samples)
    p0 = np.asarray(h_start, float)
    p1 = np.asarray(h_end, float)
    dt = 1.0 / (samples - 1)
    corners: list[CornerReport] = []

    def flush(run):
        kbest = max(run, key=lambda m: prof[m, 5])
        t = prof[kbest, 0]
        lo, hi = max(t - dt, 0.0), min(t + dt, 1.0)
        local = slope_profile(table, p0 + lo * (p1 - p0), p0 + hi * (p1 - p0), 129)
        kloc = int(np.argmax(local[:, 5]))
        rep = _report_at(local, kloc)
        corners.append(replace(rep, t=lo + rep.t * (hi - lo)))

    run: list[int] = []
    for k in range(prof.shape[0]):
        if prof[k, 5] > gap_tol:
            run.append(k)
        elif run:
            flush(run)
            run = []
    if run:
        flush(run)
    return corners


def flat_detect_alpha(table: ConvexTable, c: CohomologyClass, tol: float = 0.01) -> list[HomologyClass]:
    """Grid nodes within tol of attaining alpha(c) = sup <c, .> - beta.

    The returned set is the numerical subdifferential of alpha at c; a flat
    of beta dual to c shows up as an extended, typically radial, cluster.
    The default tol sits above the node estimation noise of default-budget
    tables but below the curvature of beta across one cell at unit scale, so
    genuine flats stay connected while strictly convex points stay small.
    """
    gains = (c.c1 * table.h1[:, None] + c.c2 * table.h2[None, :]) - table.values
    best = float(np.max(gains))
    idx = np.argwhere(gains >= best - tol)
    return [HomologyClass(float(table.h1[i]), float(table.h2[j])) for i, j in idx]
