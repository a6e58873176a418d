"""M-term nonlinear approximation in the curvelet frame.

Greedy magnitude thresholding keeps the M largest coefficients (coarse-band
samples included, ties broken by canonical index order), reconstructs with
the tight-frame inverse, and fits the squared-error decay against the term
count.  For a tight frame this selection is the standard, not provably
optimal, M-term rule.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .cartoons import CartoonFunction, rasterize
from .frame import CoefficientTable, FrameSpec, forward, inverse
from .numerics import GridSpec, LogLogFit, SampledField, fit_loglog


class NlaError(ValueError):
    """Raised for invalid term counts or malformed curves."""


def _canonical_blocks(table: CoefficientTable):
    """Coarse band first, then bands sorted by (j, l); deterministic."""
    blocks = [("coarse", table.coarse)]
    for key in table.sorted_keys():
        blocks.append((key, table.bands[key]))
    return blocks


def mterm_approximate(table: CoefficientTable, M: int) -> CoefficientTable:
    """Zero all but the M largest-magnitude coefficients.

    Exactly M entries survive; ties at the threshold are kept in canonical
    order (coarse band, then (j, l) bands, row-major within each block).
    """
    total = table.n_coefficients()
    if M < 0 or M > total:
        raise NlaError(f"M={M} outside 0..{total}")
    out = table.copy_zeroed()
    if M == 0:
        return out
    blocks = _canonical_blocks(table)
    mags = np.concatenate([np.abs(arr).ravel() for _, arr in blocks])
    kth = np.partition(mags, total - M)[total - M]
    n_above = int(np.sum(mags > kth))
    n_ties = M - n_above

    taken_ties = 0
    for (key, arr), (_, dst) in zip(blocks, _canonical_blocks(out)):
        absa = np.abs(arr)
        keep = absa > kth
        if taken_ties < n_ties:
            tie_pos = np.flatnonzero(absa.ravel() == kth)
            take = tie_pos[: n_ties - taken_ties]
            keep.ravel()[take] = True
            taken_ties += take.size
        dst[keep] = arr[keep]
    return out


@dataclass
class NlaCurve:
    """Squared-error decay of M-term approximations for one model/grid."""

    model_id: str
    grid_size: int
    Ms: list[int]
    errors: list[float]
    fit: LogLogFit | None
    fit_window: tuple[int, int]
    meta: dict = field(default_factory=dict)

    def rows(self):
        return list(zip(self.Ms, self.errors))


def nla_curve(
    model: CartoonFunction,
    spec: FrameSpec,
    Ms,
    fit_window: tuple[int, int] | None = None,
    supersample: int = 1,
) -> NlaCurve:
    """Threshold, invert and measure ||f - f_M||_2^2 for each term count."""
    Ms = [int(M) for M in Ms]
    if Ms != sorted(Ms):
        raise NlaError("term counts must be sorted ascending")
    f = rasterize(model, spec.grid, supersample=supersample)
    table = forward(f, spec)
    errors = []
    for M in Ms:
        approx = mterm_approximate(table, M)
        rec = inverse(approx, spec)
        err = float(np.sum(np.abs(rec.values - f.values) ** 2) * spec.grid.cell_area)
        errors.append(err)
    window = fit_window if fit_window is not None else (Ms[0], Ms[-1])
    sel = [i for i, M in enumerate(Ms) if window[0] <= M <= window[1] and errors[i] > 0]
    fit = None
    if len(sel) >= 2:
        fit = fit_loglog(np.array([Ms[i] for i in sel], dtype=float),
                         np.array([errors[i] for i in sel]))
    return NlaCurve(
        model_id=model.name,
        grid_size=spec.grid.rows,
        Ms=Ms,
        errors=errors,
        fit=fit,
        fit_window=window,
        meta={
            "n_coefficients": table.n_coefficients(),
            "signal_energy": f.norm2(),
            "supersample": supersample,
        },
    )


def discarded_energy_bound(table: CoefficientTable, M: int) -> float:
    """Tight-frame thresholding bound: sum of squared discarded magnitudes."""
    mags = np.concatenate([np.abs(table.coarse).ravel()]
                          + [np.abs(table.bands[k]).ravel() for k in table.sorted_keys()])
    total = mags.size
    if M >= total:
        return 0.0
    keep = np.partition(mags, total - M)[total - M:] if M > 0 else np.array([])
    return float(np.sum(mags**2) - np.sum(keep**2))


def compare_curves(curves) -> dict:
    """Aligned report of several NLA curves."""
    curves = list(curves)
    if not curves:
        raise NlaError("need at least one curve")
    return {
        "curves": [
            {
                "model": c.model_id,
                "grid": c.grid_size,
                "Ms": c.Ms,
                "errors": c.errors,
                "slope": None if c.fit is None else c.fit.slope,
                "r_squared": None if c.fit is None else c.fit.r_squared,
                "window": list(c.fit_window),
            }
            for c in curves
        ],
    }


def write_curve_csv(curve: NlaCurve, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["M", "error_sq"])
        for M, err in curve.rows():
            writer.writerow([M, repr(float(err))])


def write_report(curves, path, extra: dict | None = None) -> None:
    report = compare_curves(curves)
    if extra:
        report.update(extra)
    with open(path, "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
