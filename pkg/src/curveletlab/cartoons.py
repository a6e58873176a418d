"""Cartoon-class test functions: two smooth sides joined along an edge curve.

Sides are sums of closed-form terms (polynomial-Gaussian bumps, compact
plateau envelopes, fractional-power kinks) so smoothness classes are exact:
a ``|t|^3.5`` kink is C^3 but not C^4, giving honest N=3 witnesses.  Edges
are graphs ``y = g(x)`` with ``|g'| <= 1`` on their interval.

The module also computes the anisotropic edge geometry of a curvelet
against a model: nearest edge point p, normalized distance
``L = |D_a R_theta (b - p)|`` with ``D_a = diag(1/a, 1/sqrt(a))`` acting in
the curvelet frame (first coordinate along the minor axis), the tangent
mismatch angle ``theta'`` and its index ``k = theta' / sqrt(a)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .frame import CurveletParams, smoothstep
from .numerics import GridSpec, SampledField


class ModelError(ValueError):
    """Raised for malformed cartoon models or edge curves."""


def _step_inf(t: np.ndarray) -> np.ndarray:
    """C-infinity step: 0 for t <= 0, 1 for t >= 1 (exp-type bump glue)."""
    t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        lo = np.where(t > 0.0, np.exp(-1.0 / np.where(t > 0.0, t, 1.0)), 0.0)
        hi = np.where(t < 1.0, np.exp(-1.0 / np.where(t < 1.0, 1.0 - t, 1.0)), 0.0)
    return lo / (lo + hi)


def _plateau(dist: np.ndarray, r0: float, r1: float) -> np.ndarray:
    """1 for dist <= r0, C-infinity fall to exactly 0 at r1.

    Infinitely smooth so envelope roll-offs never compete with the
    finite-smoothness features the witness models are built around.
    """
    t = (np.asarray(dist, dtype=float) - r0) / (r1 - r0)
    return 1.0 - _step_inf(t)


# ---------------------------------------------------------------------------
# Side terms
# ---------------------------------------------------------------------------

@dataclass
class SideTerm:
    """One additive term of a smooth side.

    kind:
        const        value
        poly         sum of coeffs[i][j] * u^i * v^j
        radial_kink  amp * r^power           (C^floor(power) at the center)
        ridge_kink   amp * |v'|^power        (kink line through the center)
        disc         value inside r <= radius (sharp; rasterization tests only)

    ``u, v`` are coordinates relative to ``center`` rotated by ``angle``;
    every term is multiplied by an optional per-axis Gaussian and an optional
    per-axis compact plateau envelope (1 up to r0, 0 beyond r1).
    """

    kind: str
    center: tuple[float, float] = (0.0, 0.0)
    value: float = 1.0
    coeffs: list | None = None
    amp: float = 1.0
    power: float = 3.5
    radius: float = 0.25
    angle: float = 0.0
    gauss_sigma: tuple[float, float] | None = None
    plateau_x: tuple[float, float] | None = None
    plateau_y: tuple[float, float] | None = None

    def __call__(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        u = np.asarray(x, dtype=float) - self.center[0]
        v = np.asarray(y, dtype=float) - self.center[1]
        if self.angle != 0.0:
            ca, sa = math.cos(self.angle), math.sin(self.angle)
            ur, vr = ca * u + sa * v, -sa * u + ca * v
        else:
            ur, vr = u, v
        if self.kind == "const":
            core = np.full(np.broadcast(u, v).shape, self.value)
        elif self.kind == "poly":
            core = np.zeros(np.broadcast(u, v).shape)
            for i, row in enumerate(self.coeffs):
                for j, c in enumerate(row):
                    if c != 0.0:
                        core = core + c * ur**i * vr**j
        elif self.kind == "radial_kink":
            core = self.amp * np.hypot(ur, vr) ** self.power
        elif self.kind == "ridge_kink":
            core = self.amp * np.abs(vr) ** self.power
        elif self.kind == "disc":
            core = self.value * (np.hypot(ur, vr) <= self.radius)
        else:
            raise ModelError(f"unknown side term kind {self.kind!r}")
        # envelopes act in the unrotated frame about the center
        env = np.ones_like(core, dtype=float)
        if self.gauss_sigma is not None:
            sx, sy = self.gauss_sigma
            if sx:
                env = env * np.exp(-(u**2) / (2.0 * sx**2))
            if sy:
                env = env * np.exp(-(v**2) / (2.0 * sy**2))
        if self.plateau_x is not None:
            env = env * _plateau(np.abs(u), *self.plateau_x)
        if self.plateau_y is not None:
            env = env * _plateau(np.abs(v), *self.plateau_y)
        return core * env

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "center": list(self.center)}
        if self.kind == "const":
            out["value"] = self.value
        elif self.kind == "poly":
            out["coeffs"] = self.coeffs
        elif self.kind in ("radial_kink", "ridge_kink"):
            out.update(amp=self.amp, power=self.power)
            if self.angle:
                out["angle"] = self.angle
        elif self.kind == "disc":
            out.update(value=self.value, radius=self.radius)
        if self.gauss_sigma is not None:
            out["gauss_sigma"] = list(self.gauss_sigma)
        if self.plateau_x is not None:
            out["plateau_x"] = list(self.plateau_x)
        if self.plateau_y is not None:
            out["plateau_y"] = list(self.plateau_y)
        return out

    @staticmethod
    def from_dict(d: dict) -> "SideTerm":
        kw = dict(d)
        kw["center"] = tuple(kw.get("center", (0.0, 0.0)))
        for key in ("gauss_sigma", "plateau_x", "plateau_y"):
            if kw.get(key) is not None:
                kw[key] = tuple(kw[key])
        return SideTerm(**kw)


def _eval_terms(terms, x, y):
    out = np.zeros(np.broadcast(np.asarray(x), np.asarray(y)).shape)
    for t in terms:
        out = out + t(x, y)
    return out


# ---------------------------------------------------------------------------
# Edge curves
# ---------------------------------------------------------------------------

@dataclass
class EdgeCurve:
    """Graph edge ``y = g(x)`` over ``x_interval``.

    kind "poly": ``g = sum coeffs[m] x^m``; kind "trig":
    ``g = coeffs[0] + sum amp * sin(2 pi freq x + phase)`` over triples in
    ``waves``.  Slope is capped at 1 on the interval so nearest-point search
    stays single-valued; sup-norms of g', g'', g''' are sampled at
    construction and stored.
    """

    kind: str = "poly"
    coeffs: list = field(default_factory=lambda: [0.0])
    waves: list = field(default_factory=list)
    x_interval: tuple[float, float] = (-0.5, 0.5)
    n: int = 3
    derivative_bounds: tuple[float, float, float] = field(init=False)

    def __post_init__(self):
        xs = np.linspace(*self.x_interval, 4097)
        d1 = float(np.abs(self.g1(xs)).max())
        d2 = float(np.abs(self.g2(xs)).max())
        d3 = float(np.abs(self.g3(xs)).max())
        self.derivative_bounds = (d1, d2, d3)
        if d1 > 1.0 + 1e-12:
            raise ModelError(f"edge slope sup {d1:.3f} exceeds 1 on the interval")

    def _clamp(self, x):
        return np.clip(x, self.x_interval[0], self.x_interval[1])

    def _poly_deriv(self, x, order):
        c = np.polynomial.polynomial.polyder(np.asarray(self.coeffs, dtype=float), order) \
            if order else np.asarray(self.coeffs, dtype=float)
        return np.polynomial.polynomial.polyval(np.asarray(x, dtype=float), c)

    def _trig_deriv(self, x, order):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        if order == 0 and self.coeffs:
            out = out + self.coeffs[0]
        for amp, freq, phase in self.waves:
            w = 2.0 * np.pi * freq
            out = out + amp * w**order * np.sin(w * x + phase + order * np.pi / 2.0)
        return out

    def _deriv(self, x, order):
        if self.kind == "poly":
            return self._poly_deriv(x, order)
        if self.kind == "trig":
            return self._trig_deriv(x, order)
        raise ModelError(f"unknown edge kind {self.kind!r}")

    def g(self, x):
        return self._deriv(self._clamp(x), 0)

    def g1(self, x):
        return self._deriv(self._clamp(x), 1)

    def g2(self, x):
        return self._deriv(self._clamp(x), 2)

    def g3(self, x):
        return self._deriv(self._clamp(x), 3)

    def tangent_angle(self, x) -> np.ndarray:
        return np.arctan2(self.g1(x), 1.0)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "coeffs": list(self.coeffs),
            "waves": [list(w) for w in self.waves],
            "x_interval": list(self.x_interval),
            "n": self.n,
        }

    @staticmethod
    def from_dict(d: dict) -> "EdgeCurve":
        return EdgeCurve(
            kind=d.get("kind", "poly"),
            coeffs=list(d.get("coeffs", [0.0])),
            waves=[tuple(w) for w in d.get("waves", [])],
            x_interval=tuple(d.get("x_interval", (-0.5, 0.5))),
            n=d.get("n", 3),
        )


# ---------------------------------------------------------------------------
# Cartoon functions
# ---------------------------------------------------------------------------

@dataclass
class CartoonFunction:
    """Function equal to the plus side on ``y >= g(x)`` and the minus side
    below; points on the edge take the plus side.  ``edge=None`` means the
    model is globally smooth (plus side everywhere)."""

    name: str
    plus: list
    minus: list
    edge: EdgeCurve | None
    N: int = 3
    support_box: tuple[tuple[float, float], tuple[float, float]] = ((-0.5, 0.5), (-0.5, 0.5))

    @property
    def n(self) -> int:
        return self.edge.n if self.edge is not None else self.N

    def evaluate(self, x, y) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        plus = _eval_terms(self.plus, x, y)
        if self.edge is None:
            return plus
        minus = _eval_terms(self.minus, x, y)
        return np.where(y >= self.edge.g(x), plus, minus)

    def jump(self, x) -> np.ndarray:
        """Plus-minus difference along the edge."""
        if self.edge is None:
            return np.zeros_like(np.asarray(x, dtype=float))
        y = self.edge.g(x)
        return _eval_terms(self.plus, x, y) - _eval_terms(self.minus, x, y)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "plus": [t.to_dict() for t in self.plus],
            "minus": [t.to_dict() for t in self.minus],
            "edge": self.edge.to_dict() if self.edge is not None else None,
            "N": self.N,
            "box": [list(self.support_box[0]), list(self.support_box[1])],
        }

    @staticmethod
    def from_dict(d: dict) -> "CartoonFunction":
        return CartoonFunction(
            name=d.get("name", "model"),
            plus=[SideTerm.from_dict(t) for t in d.get("plus", [])],
            minus=[SideTerm.from_dict(t) for t in d.get("minus", [])],
            edge=EdgeCurve.from_dict(d["edge"]) if d.get("edge") else None,
            N=d.get("N", 3),
            support_box=tuple(tuple(b) for b in d.get("box", ((-0.5, 0.5), (-0.5, 0.5)))),
        )


def save_model(model: CartoonFunction, path) -> None:
    with open(path, "w") as fh:
        json.dump(model.to_dict(), fh, indent=2, sort_keys=True)


def load_model(path) -> CartoonFunction:
    with open(path) as fh:
        return CartoonFunction.from_dict(json.load(fh))


def rasterize(model: CartoonFunction, grid: GridSpec, supersample: int = 1) -> SampledField:
    """Sample the model at cell centers; ``supersample=s`` box-averages an
    s x s subgrid per cell (antialiased rasterization)."""
    if supersample <= 1:
        X, Y = grid.meshgrid()
        vals = model.evaluate(X, Y)
        return SampledField(grid, vals.astype(np.complex128), real=True)
    s = int(supersample)
    fine = GridSpec(grid.rows * s, grid.cols * s, grid.extent, grid.origin)
    FX, FY = fine.meshgrid()
    vals = model.evaluate(FX, FY)
    vals = vals.reshape(grid.rows, s, grid.cols, s).mean(axis=(1, 3))
    return SampledField(grid, vals.astype(np.complex128), real=True)


# ---------------------------------------------------------------------------
# Edge geometry
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EdgeGeometry:
    """Nearest-point geometry of one curvelet against one edge."""

    p: tuple[float, float]
    L: float
    theta_prime: float
    k: float
    tangent_angle: float
    multiplicity: int = 1


def _wrap_halfpi(angle: float) -> float:
    """Wrap a line-angle difference into (-pi/2, pi/2]."""
    a = (angle + 0.5 * math.pi) % math.pi - 0.5 * math.pi
    if a == -0.5 * math.pi:
        a = 0.5 * math.pi
    return a


def edge_geometry(model: CartoonFunction, params: CurveletParams,
                  n_coarse: int = 4096) -> EdgeGeometry | None:
    """Minimize ``|D_a R_theta (b - p)|`` over the edge by dense sampling
    plus golden-section refinement; returns None for edgeless models."""
    if model.edge is None:
        return None
    edge = model.edge
    a = params.a
    emin = np.array(params.minor_axis)
    emaj = np.array(params.major_axis)
    b = np.array(params.b)

    def l2_of(x):
        p = np.stack([x, edge.g(x)], axis=-1)
        d = b - p
        cmin = d @ emin
        cmaj = d @ emaj
        return cmin**2 / a**2 + cmaj**2 / a

    xs = np.linspace(*edge.x_interval, n_coarse)
    vals = l2_of(xs)
    i = int(np.argmin(vals))
    vmin = vals[i]
    # multiplicity: distinct coarse clusters within relative 1e-8 of the min
    near = vals <= vmin * (1.0 + 1e-8) + 1e-300
    multiplicity = int(np.sum(np.diff(np.flatnonzero(near)) > 1) + 1) if near.any() else 1

    lo = xs[max(i - 1, 0)]
    hi = xs[min(i + 1, n_coarse - 1)]
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c = hi - invphi * (hi - lo)
    d_ = lo + invphi * (hi - lo)
    fc, fd = float(l2_of(np.array([c]))[0]), float(l2_of(np.array([d_]))[0])
    for _ in range(200):
        if hi - lo < 1e-14 * max(1.0, abs(hi) + abs(lo)):
            break
        if fc < fd:
            hi, d_, fd = d_, c, fc
            c = hi - invphi * (hi - lo)
            fc = float(l2_of(np.array([c]))[0])
        else:
            lo, c, fc = c, d_, fd
            d_ = lo + invphi * (hi - lo)
            fd = float(l2_of(np.array([d_]))[0])
    px = 0.5 * (lo + hi)
    py = float(edge.g(px))
    L = math.sqrt(float(l2_of(np.array([px]))[0]))
    tang = float(edge.tangent_angle(px))
    theta_prime = _wrap_halfpi(params.theta - tang)
    return EdgeGeometry(
        p=(float(px), py),
        L=L,
        theta_prime=theta_prime,
        k=theta_prime / math.sqrt(a),
        tangent_angle=tang,
        multiplicity=multiplicity,
    )


class LocalEdge:
    """Edge re-expressed in the tangent frame at a point p on the curve:
    ``t2 = G(t1)`` with ``G(0) = 0`` and ``G'(0) = 0``."""

    def __init__(self, edge: EdgeCurve, p: tuple[float, float]):
        self.edge = edge
        self.p = (float(p[0]), float(p[1]))
        alpha = float(edge.tangent_angle(p[0]))
        self.alpha = alpha
        self.tau = (math.cos(alpha), math.sin(alpha))
        self.nu = (-math.sin(alpha), math.cos(alpha))

    def __call__(self, t1) -> np.ndarray:
        """Newton solve for the curve point with tangent coordinate t1."""
        t1 = np.asarray(t1, dtype=float)
        ca, sa = self.tau
        px, py = self.p
        x = px + t1 * ca
        for _ in range(60):
            r = (x - px) * ca + (self.edge.g(x) - py) * sa - t1
            dr = ca + self.edge.g1(x) * sa
            step = r / dr
            x = x - step
            if np.abs(step).max(initial=0.0) < 1e-14:
                break
        return -(x - px) * sa + (self.edge.g(x) - py) * ca

    def to_world(self, t1, t2) -> np.ndarray:
        t1 = np.asarray(t1, dtype=float)
        t2 = np.asarray(t2, dtype=float)
        x = self.p[0] + t1 * self.tau[0] + t2 * self.nu[0]
        y = self.p[1] + t1 * self.tau[1] + t2 * self.nu[1]
        return np.stack([x, y], axis=-1)


# ---------------------------------------------------------------------------
# Canonical model library
# ---------------------------------------------------------------------------

def straight_edge(y0: float = 0.0, jump: float = 1.0, base: float = 0.0,
                  guard: tuple[float, float] = (0.36, 0.49)) -> CartoonFunction:
    """Horizontal unit-jump edge; a compact plateau along y turns the field
    off before the periodic wrap so no seam edge appears."""
    plus = [SideTerm("const", value=base),
            SideTerm("const", value=jump, center=(0.0, y0), plateau_y=guard)]
    minus = [SideTerm("const", value=base)]
    return CartoonFunction(
        name="straight-edge",
        plus=plus, minus=minus,
        edge=EdgeCurve("poly", [y0], n=3),
        N=3,
    )


def heaviside_edge(y0: float = 0.0) -> CartoonFunction:
    """Plain 0/1 split at y = y0 with no envelope (wraps into a stripe)."""
    return CartoonFunction(
        name="heaviside",
        plus=[SideTerm("const", value=1.0)],
        minus=[],
        edge=EdgeCurve("poly", [y0], n=3),
        N=3,
    )


def parabola_edge(curvature: float = 0.8, y0: float = -0.05, jump: float = 1.0,
                  guard_x: tuple[float, float] = (0.30, 0.47),
                  guard_y: tuple[float, float] = (0.33, 0.48)) -> CartoonFunction:
    """Edge ``y = y0 + curvature * x^2`` with a compactly enveloped unit jump."""
    if curvature > 1.0:
        raise ModelError("parabola slope would exceed 1 on the unit interval")
    plus = [SideTerm("const", value=jump, plateau_x=guard_x, plateau_y=guard_y)]
    return CartoonFunction(
        name="parabola-edge",
        plus=plus, minus=[],
        edge=EdgeCurve("poly", [y0, 0.0, curvature], n=3),
        N=3,
    )


def sine_edge(amplitude: float = 0.08, periods: int = 1, y0: float = 0.0,
              guard: tuple[float, float] = (0.33, 0.48)) -> CartoonFunction:
    """Edge ``y = y0 + amplitude * sin(2 pi periods x)``; periodic in x."""
    freq = float(periods)  # cycles per unit on the unit-extent domain
    if amplitude * 2.0 * math.pi * freq > 1.0:
        raise ModelError("sine edge slope would exceed 1")
    plus = [SideTerm("const", value=1.0, center=(0.0, y0), plateau_y=guard)]
    return CartoonFunction(
        name="sine-edge",
        plus=plus, minus=[],
        edge=EdgeCurve("trig", [y0], waves=[(amplitude, freq, 0.0)], n=3),
        N=3,
    )


def c3_jump_edge(y0: float = 0.0, kink_amp: float = 6.0,
                 guard: tuple[float, float] = (0.36, 0.49)) -> CartoonFunction:
    """Straight edge whose jump profile has a ``|x|^3.5`` kink: the sides are
    C^3 but not C^4, so the angular coefficient decay is a clean power law."""
    plus = [
        SideTerm("const", value=1.0, center=(0.0, y0), plateau_y=guard),
        SideTerm("ridge_kink", center=(0.0, y0), amp=kink_amp, power=3.5,
                 angle=0.5 * math.pi, gauss_sigma=(0.12, 0.2),
                 plateau_x=(0.28, 0.44), plateau_y=guard),
    ]
    return CartoonFunction(
        name="c3-jump-edge",
        plus=plus, minus=[],
        edge=EdgeCurve("poly", [y0], n=3),
        N=3,
    )


def c3_ridge(amp: float = 4.0, y0: float = 0.0) -> CartoonFunction:
    """Globally C^3 (not C^4) edgeless model: ``|y|^3.5`` ridge along y = y0.

    All terms carry compact plateau envelopes so the periodic extension has
    no wrap seam (interior plateau creases are C^5 and decay far below the
    ridge signal).
    """
    plus = [
        SideTerm("ridge_kink", center=(0.0, y0), amp=amp, power=3.5,
                 gauss_sigma=(0.15, 0.1), plateau_x=(0.28, 0.44), plateau_y=(0.28, 0.44)),
        SideTerm("poly", coeffs=[[0.3]], gauss_sigma=(0.16, 0.16), center=(0.1, 0.12),
                 plateau_x=(0.22, 0.36), plateau_y=(0.22, 0.35)),
    ]
    return CartoonFunction(name="c3-ridge", plus=plus, minus=[], edge=None, N=3)


def gauss_bump(sigma: float = 0.08, amp: float = 1.0,
               center: tuple[float, float] = (0.0, 0.0)) -> CartoonFunction:
    """Infinitely smooth edgeless bump."""
    plus = [SideTerm("poly", coeffs=[[amp]], center=center, gauss_sigma=(sigma, sigma))]
    return CartoonFunction(name="gauss-bump", plus=plus, minus=[], edge=None, N=10)


def half_disc(radius: float = 0.3, y0: float = 0.0) -> CartoonFunction:
    """Unit value on the upper half-disc; sharp arc (rasterization tests)."""
    return CartoonFunction(
        name="half-disc",
        plus=[SideTerm("disc", value=1.0, radius=radius)],
        minus=[],
        edge=EdgeCurve("poly", [y0], n=3),
        N=0,
    )


MODEL_LIBRARY = {
    "straight": straight_edge,
    "heaviside": heaviside_edge,
    "parabola": parabola_edge,
    "sine": sine_edge,
    "c3-jump": c3_jump_edge,
    "c3-ridge": c3_ridge,
    "gauss": gauss_bump,
    "half-disc": half_disc,
}


def make_model(name: str, **kwargs) -> CartoonFunction:
    try:
        factory = MODEL_LIBRARY[name]
    except KeyError:
        raise ModelError(f"unknown model {name!r}; have {sorted(MODEL_LIBRARY)}") from None
    return factory(**kwargs)
