"""Region partition, slice Taylor approximants and the edge-straightening
twist map used to probe curvelet coefficients near an edge.

The plane is split, in frames anchored at the point Q where the curvelet's
major axis meets the edge, into:

* ``R_0``   a slab of half-height h around the tangent line (the twist
  domain; the edge stays inside it by construction),
* ``R_+-1`` annular sectors of opening beta around the edge direction,
  radii d..s, seen from Q,
* ``R_+-2`` half-strips of half-height h beyond the +-d flanks along the
  major axis,
* ``R_3``   everything else.

Membership is decided by predicate precedence, so the regions are pairwise
disjoint and cover the plane exactly.  Scalings follow
``d = c_d sqrt(a)/|k|`` and ``h = c_h a |k|^-eps`` with the constants
recorded on the layout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .cartoons import CartoonFunction, EdgeGeometry, LocalEdge, edge_geometry
from .frame import AtomEvaluator, CurveletParams, FrameSpec
from .numerics import GridSpec

REGION_INDICES = (-2, -1, 0, 1, 2, 3)


class DegenerateGeometryError(ValueError):
    """Raised when the layout scales (h, d) under-resolve the grid."""


class SliceCrossesEdgeError(ValueError):
    """Raised when a Taylor slice inside R_1/R_2 intersects the edge."""


@dataclass(frozen=True)
class RegionSpec:
    """Geometry record for one region, in the curvelet-aligned frame."""

    index: int
    kind: str
    center: tuple[float, float]
    axis_lengths: tuple[float, float]
    sector: tuple[float, float] | None
    d: float
    h: float
    epsilon: float
    k: float


@dataclass
class PartitionLayout:
    """Anchored frames plus the classified region family."""

    params: CurveletParams
    geom: EdgeGeometry
    Q: np.ndarray                 # world anchor on the edge
    e_maj: np.ndarray
    e_min: np.ndarray
    tau: np.ndarray               # edge tangent at Q
    nu: np.ndarray
    epsilon: float
    c_d: float
    c_h: float
    k: float
    d: float
    h: float
    s_sector: float
    beta: float
    w0: float                     # slab half-width along the tangent
    x2_cap: float                 # far cut of the R_2 half-strips
    edge_dir: float               # edge direction in the curvelet frame
    local_edge: LocalEdge | None
    aligned: bool
    regions: list[RegionSpec] = field(default_factory=list)

    # -- frames ------------------------------------------------------------
    def to_curvelet(self, pts: np.ndarray) -> np.ndarray:
        d = np.asarray(pts, dtype=float) - self.Q
        return np.stack([d @ self.e_maj, d @ self.e_min], axis=-1)

    def to_tangent(self, pts: np.ndarray) -> np.ndarray:
        d = np.asarray(pts, dtype=float) - self.Q
        return np.stack([d @ self.tau, d @ self.nu], axis=-1)

    def tangent_to_world(self, loc: np.ndarray) -> np.ndarray:
        loc = np.asarray(loc, dtype=float)
        return self.Q + loc[..., :1] * self.tau + loc[..., 1:2] * self.nu

    def curvelet_to_world(self, loc: np.ndarray) -> np.ndarray:
        loc = np.asarray(loc, dtype=float)
        return self.Q + loc[..., :1] * self.e_maj + loc[..., 1:2] * self.e_min

    # -- membership ----------------------------------------------------------
    def _masks(self, pts: np.ndarray) -> dict[int, np.ndarray]:
        pts = np.asarray(pts, dtype=float)
        tan = self.to_tangent(pts)
        in_slab = (np.abs(tan[..., 0]) <= self.w0) & (np.abs(tan[..., 1]) <= self.h)
        masks = {0: in_slab}
        cv = self.to_curvelet(pts)
        if self.aligned:
            for i in (-2, -1, 1, 2):
                masks[i] = np.zeros_like(in_slab)
        else:
            r = np.hypot(cv[..., 0], cv[..., 1])
            alpha = np.arctan2(cv[..., 1], cv[..., 0])
            taken = in_slab
            for i, center in ((1, self.edge_dir), (-1, self.edge_dir + np.pi)):
                dang = np.mod(alpha - center + np.pi, 2.0 * np.pi) - np.pi
                sector = (r >= self.d) & (r <= self.s_sector) & (np.abs(dang) <= self.beta)
                masks[i] = sector & ~taken
                taken = taken | masks[i]
            band = np.abs(cv[..., 1]) <= self.h
            for i, sgn in ((2, 1.0), (-2, -1.0)):
                halfstrip = band & (sgn * cv[..., 0] >= self.d) & (sgn * cv[..., 0] <= self.x2_cap)
                masks[i] = halfstrip & ~taken
                taken = taken | masks[i]
        masks[3] = ~np.logical_or.reduce([masks[i] for i in (-2, -1, 0, 1, 2)])
        return masks

    def classify(self, pts: np.ndarray) -> np.ndarray:
        """Region index in {-2..3} for each point; exactly one per point."""
        masks = self._masks(pts)
        out = np.full(np.asarray(pts).shape[:-1], 3, dtype=int)
        for i in (2, -2, 1, -1, 0):
            out[masks[i]] = i
        return out

    def contains(self, index: int, pts: np.ndarray) -> np.ndarray:
        return self.classify(pts) == index

    def companion(self, index: int, pts: np.ndarray) -> np.ndarray:
        """Membership in the companion region R~_i: the set completing R_i
        to a full family of lines (half-strips) or rays (sectors), minus
        R_i itself."""
        pts = np.asarray(pts, dtype=float)
        masks = self._masks(pts)
        if index == 0:
            tan = self.to_tangent(pts)
            band = np.abs(tan[..., 1]) <= self.h
            return band & ~masks[0]
        cv = self.to_curvelet(pts)
        if index in (1, -1):
            r = np.hypot(cv[..., 0], cv[..., 1])
            center = self.edge_dir + (0.0 if index == 1 else np.pi)
            dang = np.mod(np.arctan2(cv[..., 1], cv[..., 0]) - center + np.pi, 2 * np.pi) - np.pi
            double = (r <= self.s_sector) & (
                (np.abs(dang) <= self.beta)
                | (np.abs(np.mod(dang + np.pi, 2 * np.pi) - np.pi) <= self.beta)
            )
            return double & ~masks[index]
        if index in (2, -2):
            sgn = 1.0 if index == 2 else -1.0
            band = (sgn * cv[..., 0] >= self.d) & (sgn * cv[..., 0] <= self.x2_cap)
            return band & ~masks[index]
        raise ValueError(f"companion undefined for region {index}")

    # -- shells of R_1 -------------------------------------------------------
    def l_max(self) -> int:
        if self.aligned:
            return 0
        return max(int(math.floor(abs(self.k) ** (1.0 - self.epsilon / 2.0))), 1)

    def shell(self, l: int, pts: np.ndarray, index: int = 1) -> np.ndarray:
        """Membership in R_{1,l}: the radial slice of R_1 at radii l d..(l+1) d."""
        if l < 1 or l > self.l_max():
            raise ValueError(f"shell index {l} outside 1..{self.l_max()}")
        cv = self.to_curvelet(np.asarray(pts, dtype=float))
        r = np.hypot(cv[..., 0], cv[..., 1])
        ring = (r >= l * self.d) & (r < (l + 1) * self.d)
        return ring & (self.classify(pts) == index)

    def shell_bbox(self, l: int, index: int = 1) -> tuple[tuple[float, float], tuple[float, float]]:
        rmax = min((l + 1) * self.d, self.s_sector)
        center = self.edge_dir if index == 1 else self.edge_dir + np.pi
        angs = np.linspace(center - self.beta, center + self.beta, 65)
        xs = np.concatenate([l * self.d * np.cos(angs), rmax * np.cos(angs)])
        ys = np.concatenate([l * self.d * np.sin(angs), rmax * np.sin(angs)])
        pts = np.stack([xs, ys], axis=-1)
        world = self.curvelet_to_world(pts)
        pad = 1e-9 + 0.01 * self.d
        return ((world[:, 0].min() - pad, world[:, 0].max() + pad),
                (world[:, 1].min() - pad, world[:, 1].max() + pad))


def slab_halfwidth(local_edge, h: float, span: float, margin: float = 0.9) -> float:
    """Largest half-width w with |g| <= margin * h on [-w, w]."""
    w_limit = span
    for sgn in (1.0, -1.0):
        t_test = sgn * np.linspace(0.0, span, 2049)[1:]
        gvals = np.abs(np.asarray(local_edge(t_test)))
        bad = np.flatnonzero(gvals > margin * h)
        if bad.size:
            w_limit = min(w_limit, abs(t_test[bad[0] - 1]) if bad[0] > 0 else 0.0)
    return w_limit


def halved_strip_map(twist: TwistMap, span: float | None = None) -> TwistMap:
    """Twist map with half the strip height and a compatible half-width."""
    span = span if span is not None else 4.0 * twist.half_width
    w = min(twist.half_width, slab_halfwidth(twist.g, 0.5 * twist.h, span))
    return TwistMap(g=twist.g, h=0.5 * twist.h, half_width=w)


def _find_axis_intersection(model: CartoonFunction, params: CurveletParams) -> float | None:
    """Signed offset s with b + s e_maj on the edge, nearest to b."""
    edge = model.edge
    emaj = np.array(params.major_axis)
    b = np.array(params.b)
    span = 2.0 * (edge.x_interval[1] - edge.x_interval[0])
    s = np.linspace(-span, span, 8193)
    pts = b[None, :] + s[:, None] * emaj[None, :]
    resid = pts[:, 1] - edge.g(pts[:, 0])
    sign = np.sign(resid)
    flips = np.flatnonzero(np.diff(sign) != 0)
    if flips.size == 0:
        return None
    # bisect the crossing closest to b
    mid = 0.5 * (s[flips] + s[flips + 1])
    j = int(np.argmin(np.abs(mid)))
    lo, hi = s[flips[j]], s[flips[j] + 1]
    flo = resid[flips[j]]
    for _ in range(200):
        m = 0.5 * (lo + hi)
        pm = b + m * emaj
        fm = float(pm[1] - edge.g(pm[0]))
        if fm == 0.0 or hi - lo < 1e-15:
            return m
        if (fm > 0) == (flo > 0):
            lo, flo = m, fm
        else:
            hi = m
    return 0.5 * (lo + hi)


def build_partition(
    model: CartoonFunction,
    params: CurveletParams,
    epsilon: float = 1.0,
    c_d: float = 1.0,
    c_h: float = 1.0,
    c_align: float = 1.0,
    grid: GridSpec | None = None,
    geom: EdgeGeometry | None = None,
) -> PartitionLayout:
    """Build the region family for one curvelet against one edge.

    Tilted regime (|theta'| > c_align sqrt(a) and the major axis meets the
    edge): full six-region layout anchored at the intersection Q.  Aligned
    regime: the layout degenerates to the slab R_0 plus complement R_3.
    """
    if not 0.0 < epsilon < 2.0:
        raise ValueError(f"epsilon must lie in (0, 2), got {epsilon}")
    if model.edge is None:
        raise ValueError("partition requires a model with an edge")
    if geom is None:
        geom = edge_geometry(model, params)
    a = params.a
    sqa = math.sqrt(a)
    theta_prime = geom.theta_prime
    k = geom.k

    s_axis = None
    aligned = abs(theta_prime) <= c_align * sqa
    if not aligned:
        s_axis = _find_axis_intersection(model, params)
        aligned = s_axis is None

    emaj = np.array(params.major_axis)
    emin = np.array(params.minor_axis)
    if aligned:
        Q = np.array(geom.p)
        h = c_h * a
        d = float("nan")
        s_sector = beta = 0.0
        x2_cap = 0.0
        k_eff = 0.0
    else:
        Q = np.array(params.b) + s_axis * emaj
        k_eff = k
        d = c_d * sqa / abs(k)
        h = c_h * a * abs(k) ** (-epsilon)
        s_sector = d * abs(k) ** (1.0 - epsilon / 2.0)

    # tangent frame at Q
    edge = model.edge
    tang = float(edge.tangent_angle(Q[0]))
    tau = np.array([math.cos(tang), math.sin(tang)])
    nu = np.array([-math.sin(tang), math.cos(tang)])
    local = LocalEdge(edge, (float(Q[0]), float(edge.g(Q[0]))))

    # slab half-width: keep the edge within 0.9 h inside the slab (both sides)
    span = edge.x_interval[1] - edge.x_interval[0]
    w_limit = slab_halfwidth(local, h, span)
    if aligned:
        w0 = min(w_limit, 0.5 * span)
        if w0 <= 0.0:
            raise DegenerateGeometryError("edge exits the slab immediately: h too small")
    else:
        w0 = min(w_limit, s_sector)
        if w0 <= 0.0:
            raise DegenerateGeometryError("edge exits the slab immediately: h too small")
        s_sector = min(s_sector, w0)

    if grid is not None:
        cell = max(grid.dx, grid.dy)
        if h < 2.0 * cell or (not aligned and d < 2.0 * cell):
            raise DegenerateGeometryError(
                f"layout under-resolves the grid: h={h:g}, d={d:g}, cell={cell:g}"
            )

    if aligned:
        edge_dir = 0.0
        beta = 0.0
        x2_cap = 0.0
    else:
        # edge direction seen from Q in the curvelet frame
        edge_dir = math.atan2(tau @ emin, tau @ emaj)
        beta = 0.5 * abs(theta_prime)
        # far cut of the half-strips: stop before a curved edge can re-enter
        g2 = edge.derivative_bounds[1]
        x2_cap = min(2.0 * span, 0.5 * abs(theta_prime) / g2) if g2 > 1e-12 else 2.0 * span
        if x2_cap <= d:
            raise DegenerateGeometryError("R_2 band collapses: curvature too strong")

    layout = PartitionLayout(
        params=params, geom=geom, Q=Q, e_maj=emaj, e_min=emin, tau=tau, nu=nu,
        epsilon=epsilon, c_d=c_d, c_h=c_h, k=k_eff, d=d, h=h,
        s_sector=s_sector, beta=beta, w0=w0, x2_cap=x2_cap,
        edge_dir=0.0 if aligned else edge_dir,
        local_edge=local, aligned=aligned,
    )
    layout.regions = _region_specs(layout)
    return layout


def _region_specs(layout: PartitionLayout) -> list[RegionSpec]:
    common = dict(d=layout.d, h=layout.h, epsilon=layout.epsilon, k=layout.k)
    specs = [RegionSpec(0, "slab", (0.0, 0.0), (2 * layout.w0, 2 * layout.h), None, **common)]
    if not layout.aligned:
        for i in (1, -1):
            center = layout.edge_dir + (0.0 if i == 1 else math.pi)
            specs.append(RegionSpec(i, "sector", (0.0, 0.0),
                                    (layout.d, layout.s_sector),
                                    (center - layout.beta, center + layout.beta), **common))
        for i in (2, -2):
            sgn = 1.0 if i == 2 else -1.0
            specs.append(RegionSpec(i, "half_strip",
                                    (sgn * 0.5 * (layout.d + layout.x2_cap), 0.0),
                                    (layout.x2_cap - layout.d, 2 * layout.h), None, **common))
    specs.append(RegionSpec(3, "complement", (0.0, 0.0), (math.inf, math.inf), None, **common))
    return specs


def layout_to_dict(layout: PartitionLayout) -> dict:
    """JSON-ready record of the layout (for export and manifests)."""
    return {
        "Q": [float(layout.Q[0]), float(layout.Q[1])],
        "aligned": layout.aligned,
        "epsilon": layout.epsilon,
        "constants": {"c_d": layout.c_d, "c_h": layout.c_h},
        "k": layout.k,
        "d": None if layout.aligned else layout.d,
        "h": layout.h,
        "beta": layout.beta,
        "s_sector": layout.s_sector,
        "w0": layout.w0,
        "x2_cap": layout.x2_cap,
        "regions": [
            {
                "index": r.index,
                "kind": r.kind,
                "center": list(r.center),
                "axis_lengths": [float(x) for x in r.axis_lengths],
                "sector": list(r.sector) if r.sector else None,
            }
            for r in layout.regions
        ],
    }


# ---------------------------------------------------------------------------
# Region measures
# ---------------------------------------------------------------------------

def region_measure(membership, bbox, n_samples: int = 200_000, seed: int = 0) -> float:
    """Monte-Carlo area of ``membership`` within ``bbox``; deterministic for
    a fixed seed."""
    rng = np.random.default_rng(seed)
    (x0, x1), (y0, y1) = bbox
    pts = np.empty((n_samples, 2))
    pts[:, 0] = rng.uniform(x0, x1, n_samples)
    pts[:, 1] = rng.uniform(y0, y1, n_samples)
    frac = float(np.mean(membership(pts)))
    return frac * (x1 - x0) * (y1 - y0)


def subregion_measure(layout: PartitionLayout, l: int, index: int = 1,
                      n_samples: int = 200_000, seed: int = 0) -> float:
    """Monte-Carlo area of the shell R_{1,l} (or R_{-1,l})."""
    if layout.aligned:
        raise ValueError("aligned layouts have no sector shells")
    if l < 1 or l > layout.l_max():
        raise ValueError(f"shell index {l} outside 1..{layout.l_max()}")
    bbox = layout.shell_bbox(l, index)
    return region_measure(lambda p: layout.shell(l, p, index), bbox, n_samples, seed)


# ---------------------------------------------------------------------------
# Slice Taylor approximants
# ---------------------------------------------------------------------------

def _fd_derivs(fn, t0: np.ndarray, step: float, order: int = 2):
    """Value and first ``order`` derivatives of fn at t0 by 5-point stencils."""
    f = [fn(t0 + m * step) for m in range(-2, 3)]
    c0 = f[2]
    c1 = (f[0] - 8 * f[1] + 8 * f[3] - f[4]) / (12.0 * step)
    c2 = (-f[0] + 16 * f[1] - 30 * f[2] + 16 * f[3] - f[4]) / (12.0 * step**2)
    return c0, c1, c2


class SliceTaylor:
    """Order-2 Taylor polynomial per slice of a region.

    direction "minor": slices run along the curvelet minor axis, anchored on
    the major axis at each major-offset.  direction "radial": slices are
    rays from Q, anchored just off the apex (one-sided development).
    """

    def __init__(self, func, layout: PartitionLayout, region_index: int,
                 direction: str = "minor", order: int = 2,
                 anchor_offset: float | None = None, fd_step: float | None = None,
                 model: CartoonFunction | None = None):
        if order != 2:
            raise ValueError("only order-2 slices are supported")
        if direction not in ("minor", "radial"):
            raise ValueError(f"unknown slice direction {direction!r}")
        self.func = func
        self.layout = layout
        self.region_index = region_index
        self.direction = direction
        self.model = model
        scale = layout.d if not layout.aligned else layout.w0
        self.anchor_offset = anchor_offset if anchor_offset is not None else scale / 8.0
        self.fd_step = fd_step if fd_step is not None else self.anchor_offset / 4.0
        self._check_no_edge_in_slices()

    def _check_no_edge_in_slices(self):
        """Slices inside R_1/R_2 must not meet the edge."""
        if self.model is None or self.model.edge is None:
            return
        if self.region_index not in (1, -1, 2, -2):
            return
        edge = self.model.edge
        xs = np.linspace(*edge.x_interval, 4097)
        pts = np.stack([xs, edge.g(xs)], axis=-1)
        if np.any(self.layout.classify(pts) == self.region_index):
            raise SliceCrossesEdgeError(
                f"edge intersects region {self.region_index}: slices are not smooth"
            )

    def _eval_world(self, pts: np.ndarray) -> np.ndarray:
        return np.asarray(self.func(pts), dtype=float)

    def evaluate(self, pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        if self.direction == "minor":
            cv = self.layout.to_curvelet(pts)
            c1, t = cv[..., 0], cv[..., 1]

            def slice_fn(tv):
                loc = np.stack([c1, tv], axis=-1)
                return self._eval_world(self.layout.curvelet_to_world(loc))

            a0, a1, a2 = _fd_derivs(slice_fn, np.zeros_like(t), self.fd_step)
            return a0 + a1 * t + 0.5 * a2 * t**2
        cv = self.layout.to_curvelet(pts)
        r = np.hypot(cv[..., 0], cv[..., 1])
        alpha = np.arctan2(cv[..., 1], cv[..., 0])
        ca, sa = np.cos(alpha), np.sin(alpha)
        r0 = self.anchor_offset

        def ray_fn(rv):
            loc = np.stack([rv * ca, rv * sa], axis=-1)
            return self._eval_world(self.layout.curvelet_to_world(loc))

        a0, a1, a2 = _fd_derivs(ray_fn, np.full_like(r, r0), self.fd_step)
        dr = r - r0
        return a0 + a1 * dr + 0.5 * a2 * dr**2

    def residual(self, pts: np.ndarray) -> np.ndarray:
        return self._eval_world(np.asarray(pts, dtype=float)) - self.evaluate(pts)


# ---------------------------------------------------------------------------
# Twisting operator
# ---------------------------------------------------------------------------

@dataclass
class TwistMap:
    """Edge-straightening change of variables on the slab R_0.

    ``apply`` maps (x1, x2) to (x1, x2 + ((h - |x2|)/h) g(x1)) inside the
    slab and is the identity outside and on |x2| = h; it carries the line
    x2 = 0 onto the edge.  ``g`` is the edge in the slab's local frame
    (g(0) = 0, g'(0) = 0) and must satisfy |g| < h on the slab.
    """

    g: object                  # callable t1 -> t2
    h: float
    half_width: float

    def _inside(self, pts: np.ndarray) -> np.ndarray:
        return (np.abs(pts[..., 0]) <= self.half_width) & (np.abs(pts[..., 1]) <= self.h)

    def apply(self, pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        out = pts.copy()
        inside = self._inside(pts)
        x1 = pts[..., 0][inside]
        x2 = pts[..., 1][inside]
        out[..., 1][inside] = x2 + (self.h - np.abs(x2)) / self.h * np.asarray(self.g(x1))
        return out

    def invert(self, pts: np.ndarray) -> np.ndarray:
        """Closed-form inverse: the map is piecewise linear in x2."""
        pts = np.asarray(pts, dtype=float)
        out = pts.copy()
        inside = self._inside(pts)
        x1 = pts[..., 0][inside]
        x2 = pts[..., 1][inside]
        gv = np.asarray(self.g(x1))
        upper = (x2 - gv) / (1.0 - gv / self.h)
        lower = (x2 - gv) / (1.0 + gv / self.h)
        out[..., 1][inside] = np.where(x2 >= gv, upper, lower)
        return out

    def jacobian(self, pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """det J = dx2/dy2 of ``apply``: 1 - sign(y2) g(y1)/h inside the
        slab, 1 outside.  Returns (values, flags); flagged points sit
        exactly on y2 = 0 where the value is the upper one-sided limit.
        """
        pts = np.asarray(pts, dtype=float)
        vals = np.ones(pts.shape[:-1])
        inside = self._inside(pts)
        y1 = pts[..., 0][inside]
        y2 = pts[..., 1][inside]
        gv = np.asarray(self.g(y1))
        sgn = np.where(y2 >= 0.0, 1.0, -1.0)
        vals[inside] = 1.0 - sgn * gv / self.h
        flags = np.zeros(pts.shape[:-1], dtype=bool)
        flags[inside] = y2 == 0.0
        return vals, flags


def twist_for(layout: PartitionLayout) -> TwistMap:
    """Twist map of a layout's slab."""
    return TwistMap(g=layout.local_edge, h=layout.h, half_width=layout.w0)


def _gauss_panels(lo: float, hi: float, n_panels: int, order: int):
    nodes, weights = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(lo, hi, n_panels + 1)
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * np.diff(edges)
    x = (mid[:, None] + half[:, None] * nodes[None, :]).ravel()
    w = (half[:, None] * weights[None, :]).ravel()
    return x, w


def change_of_variables_check(
    model: CartoonFunction,
    spec: FrameSpec,
    params: CurveletParams,
    layout: PartitionLayout,
    twist: TwistMap | None = None,
    resolution: int = 2048,
    gl_order: int = 12,
) -> tuple[float, float]:
    """Both sides of the substitution identity on the slab.

    lhs: integral over R_0 of f(x) gamma(x) dx.
    rhs: integral over R_0 of f(T y) det J(y) gamma(T y) dy.

    Quadrature is panelized Gauss-Legendre with the x2 (resp. y2) integral
    split at the discontinuity (the edge for lhs, the line y2 = 0 for rhs);
    node spacing is kept below extent/resolution.
    """
    if twist is None:
        twist = twist_for(layout)
    gamma = AtomEvaluator(spec, params)
    w0, h = twist.half_width, twist.h
    n1 = max(int(math.ceil(2.0 * w0 * resolution / min(spec.grid.extent))), 8)
    n2 = max(int(math.ceil(2.0 * h * resolution / min(spec.grid.extent) / gl_order)), 2)
    x1, wx1 = _gauss_panels(-w0, w0, max(n1 // gl_order, 8), gl_order)
    gvals = np.asarray(twist.g(x1))
    if np.abs(gvals).max() >= h:
        raise ValueError("twist map not invertible: |g| reaches h on the slab")

    def integrate_side(split: np.ndarray, integrand) -> float:
        nodes, weights = np.polynomial.legendre.leggauss(gl_order)
        edges = np.linspace(0.0, 1.0, n2 + 1)
        total = 0.0
        for lo, hi in ((np.full_like(split, -h), split), (split, np.full_like(split, h))):
            for p in range(n2):
                a0 = lo + (hi - lo) * edges[p]
                b0 = lo + (hi - lo) * edges[p + 1]
                mid = 0.5 * (a0 + b0)
                half = 0.5 * (b0 - a0)
                for q in range(gl_order):
                    x2 = mid + half * nodes[q]
                    w = half * weights[q]
                    total += float(np.sum(wx1 * w * integrand(x1, x2)))
        return total

    def lhs_integrand(t1, t2):
        pts = layout.tangent_to_world(np.stack([t1, t2], axis=-1))
        return model.evaluate(pts[..., 0], pts[..., 1]) * gamma(pts)

    def rhs_integrand(y1, y2):
        loc = np.stack([y1, y2], axis=-1)
        mapped = twist.apply(loc)
        pts = layout.tangent_to_world(mapped)
        det, _ = twist.jacobian(loc)
        return model.evaluate(pts[..., 0], pts[..., 1]) * det * gamma(pts)

    lhs = integrate_side(gvals, lhs_integrand)
    rhs = integrate_side(np.zeros_like(x1), rhs_integrand)
    return lhs, rhs


def straightened_jump_confined(model: CartoonFunction, layout: PartitionLayout,
                               twist: TwistMap | None = None, n: int = 4001) -> bool:
    """Check that f(T y) changes sides only across y2 = 0 inside the slab."""
    if twist is None:
        twist = twist_for(layout)
    y1 = np.linspace(-twist.half_width, twist.half_width, 129)
    y2 = np.linspace(-twist.h, twist.h, n)
    y2 = y2[y2 != 0.0]
    Y1, Y2 = np.meshgrid(y1, y2)
    loc = np.stack([Y1.ravel(), Y2.ravel()], axis=-1)
    pts = layout.tangent_to_world(twist.apply(loc))
    edge = model.edge
    side = pts[..., 1] >= edge.g(pts[..., 0])
    return bool(np.all(side == (loc[..., 1] >= 0.0)))


def twisted_integrand_bounds(
    model: CartoonFunction,
    layout: PartitionLayout,
    twist: TwistMap | None = None,
    n_y1: int = 48,
    n_y2: int = 16,
    y1_range: tuple[float, float] | None = None,
    fd_step: float | None = None,
) -> dict:
    """Finite-difference sup-norms of the twisted integrand
    ``h(y) = f(T y) det J(y)`` and its first three y1-derivatives.

    Returns per-|y1| sups of |dh/dy1| (for the linear-growth fit) plus
    global sups of the second and third derivatives, measured off y2 = 0.
    """
    if twist is None:
        twist = twist_for(layout)
    w0, hh = twist.half_width, twist.h
    if y1_range is None:
        y1_range = (0.05 * w0, 0.9 * w0)
    step = fd_step if fd_step is not None else w0 / 400.0
    y1s = np.linspace(*y1_range, n_y1)
    y1s = np.concatenate([-y1s[::-1], y1s])
    y2s = np.linspace(-0.9 * hh, 0.9 * hh, n_y2)
    y2s = y2s[np.abs(y2s) > 1e-12 * hh]

    def h_fn(y1, y2):
        loc = np.stack([np.broadcast_to(y1, np.broadcast(y1, y2).shape),
                        np.broadcast_to(y2, np.broadcast(y1, y2).shape)], axis=-1)
        det, _ = twist.jacobian(loc)
        pts = layout.tangent_to_world(twist.apply(loc))
        return model.evaluate(pts[..., 0], pts[..., 1]) * det

    Y1, Y2 = np.meshgrid(y1s, y2s, indexing="ij")
    stencil = [h_fn(Y1 + m * step, Y2) for m in range(-3, 4)]
    f3m, f2m, f1m, f0, f1p, f2p, f3p = stencil
    d1 = (f3m - 9 * f2m + 45 * f1m - 45 * f1p + 9 * f2p - f3p) / (-60.0 * step)
    d2 = (2 * f3m - 27 * f2m + 270 * f1m - 490 * f0 + 270 * f1p - 27 * f2p + 2 * f3p) / (180.0 * step**2)
    d3 = (f3m - 8 * f2m + 13 * f1m - 13 * f1p + 8 * f2p - f3p) / (-8.0 * step**3)
    return {
        "y1": y1s,
        "sup_h": float(np.abs(f0).max()),
        "d1_by_y1": np.abs(d1).max(axis=1),
        "sup_d1": float(np.abs(d1).max()),
        "sup_d2": float(np.abs(d2).max()),
        "sup_d3": float(np.abs(d3).max()),
        "h": hh,
        "step": step,
    }
