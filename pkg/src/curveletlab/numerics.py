"""Grids, unitary FFTs, quadrature and log-log fitting shared by all modules.

A :class:`SampledField` is a function sampled at the cell centers of a
uniform periodic grid with a physical extent.  All quadrature and norm
helpers weight array sums by the cell area so the numbers agree with their
continuum counterparts.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

IMAG_TOL = 1e-12


class GridError(ValueError):
    """Raised for malformed grids or mismatched field shapes."""


class FitError(ValueError):
    """Raised when a log-log fit is fed degenerate data."""


def _as_pair(value) -> tuple[float, float]:
    if np.isscalar(value):
        return (float(value), float(value))
    x, y = value
    return (float(x), float(y))


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic grid: ``rows x cols`` cells covering ``extent``.

    Sample ``(r, c)`` sits at the center of its cell,
    ``origin + ((c + 1/2) * dx, (r + 1/2) * dy)``.
    """

    rows: int
    cols: int
    extent: tuple[float, float] = (1.0, 1.0)
    origin: tuple[float, float] = (-0.5, -0.5)

    def __post_init__(self):
        object.__setattr__(self, "extent", _as_pair(self.extent))
        object.__setattr__(self, "origin", _as_pair(self.origin))
        if self.rows <= 0 or self.cols <= 0:
            raise GridError(f"grid size must be positive, got {self.rows}x{self.cols}")
        if self.extent[0] <= 0 or self.extent[1] <= 0:
            raise GridError(f"extent must be positive, got {self.extent}")

    @property
    def dx(self) -> float:
        return self.extent[0] / self.cols

    @property
    def dy(self) -> float:
        return self.extent[1] / self.rows

    @property
    def cell_area(self) -> float:
        return self.dx * self.dy

    @property
    def n_samples(self) -> int:
        return self.rows * self.cols

    def x_coords(self) -> np.ndarray:
        return self.origin[0] + (np.arange(self.cols) + 0.5) * self.dx

    def y_coords(self) -> np.ndarray:
        return self.origin[1] + (np.arange(self.rows) + 0.5) * self.dy

    def meshgrid(self) -> tuple[np.ndarray, np.ndarray]:
        """(X, Y) arrays of sample positions, shape (rows, cols)."""
        return np.meshgrid(self.x_coords(), self.y_coords())

    def freq_grids(self) -> tuple[np.ndarray, np.ndarray]:
        """(FX, FY) frequency arrays in cycles per unit length, fft order."""
        fx = np.fft.fftfreq(self.cols, d=self.dx)
        fy = np.fft.fftfreq(self.rows, d=self.dy)
        return np.meshgrid(fx, fy)

    def nyquist(self) -> float:
        """Smallest of the two Nyquist frequencies, cycles per unit."""
        return min(self.cols / (2.0 * self.extent[0]), self.rows / (2.0 * self.extent[1]))

    def first_sample(self) -> tuple[float, float]:
        """Physical position of sample (0, 0)."""
        return (self.origin[0] + 0.5 * self.dx, self.origin[1] + 0.5 * self.dy)


@dataclass
class SampledField:
    """Complex samples on a :class:`GridSpec`; ``real`` flags zero imaginary part."""

    grid: GridSpec
    values: np.ndarray
    real: bool = False

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.complex128)
        if self.values.shape != (self.grid.rows, self.grid.cols):
            raise GridError(
                f"value shape {self.values.shape} does not match grid "
                f"{self.grid.rows}x{self.grid.cols}"
            )
        if self.real and np.abs(self.values.imag).max(initial=0.0) > IMAG_TOL:
            raise GridError("field flagged real has imaginary parts above 1e-12")

    @property
    def rows(self) -> int:
        return self.grid.rows

    @property
    def cols(self) -> int:
        return self.grid.cols

    def real_values(self) -> np.ndarray:
        return self.values.real

    def copy(self) -> "SampledField":
        return SampledField(self.grid, self.values.copy(), self.real)

    def norm2(self) -> float:
        """Physical squared L2 norm, cell-area weighted."""
        return float(np.sum(np.abs(self.values) ** 2) * self.grid.cell_area)


def field_from_function(grid: GridSpec, fn, real: bool = True) -> SampledField:
    """Sample ``fn(x, y)`` at the cell centers of ``grid``."""
    X, Y = grid.meshgrid()
    vals = np.asarray(fn(X, Y))
    return SampledField(grid, vals.astype(np.complex128), real=real)


def _check_power_of_two(field: SampledField, strict: bool):
    if not strict:
        return
    for n in (field.rows, field.cols):
        if n & (n - 1) != 0:
            raise GridError(f"strict mode requires power-of-two sizes, got {n}")


def fft2(field: SampledField, strict: bool = True) -> SampledField:
    """Unitary DFT of the sample array (1/sqrt(N) both ways).

    The result stores raw spectrum bins in fft order on the same grid
    metadata; round trip with :func:`ifft2` reproduces the input.
    """
    _check_power_of_two(field, strict)
    spec = np.fft.fft2(field.values, norm="ortho")
    return SampledField(field.grid, spec, real=False)


def ifft2(field: SampledField, strict: bool = True, real: bool = False) -> SampledField:
    """Unitary inverse DFT; ``real=True`` drops roundoff imaginary parts."""
    _check_power_of_two(field, strict)
    vals = np.fft.ifft2(field.values, norm="ortho")
    if real:
        vals = vals.real.astype(np.complex128)
    return SampledField(field.grid, vals, real=real)


def integrate(field: SampledField) -> complex:
    """Quadrature over the periodic extent: cell area times the sample sum.

    On a uniform periodic grid the trapezoid and midpoint rules coincide;
    for smooth periodic integrands this is spectrally accurate.
    """
    return complex(np.sum(field.values) * field.grid.cell_area)


def inner_product(f: SampledField, g: SampledField) -> complex:
    """integral of f * conj(g) over the extent."""
    if f.grid != g.grid:
        raise GridError("inner product requires identical grids")
    return complex(np.sum(f.values * np.conj(g.values)) * f.grid.cell_area)


@dataclass(frozen=True)
class LogLogFit:
    """Least-squares line through (log x, log y); slope = power-law exponent."""

    slope: float
    intercept: float
    r_squared: float
    n_points: int

    def __post_init__(self):
        if self.n_points < 2:
            raise FitError("fit needs at least two points")


def fit_loglog(xs, ys) -> LogLogFit:
    """Fit ``y = exp(intercept) * x**slope`` by least squares in log space.

    Raises:
        FitError: non-positive data, mismatched lengths, or all xs equal.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.shape != ys.shape or xs.ndim != 1:
        raise FitError("xs and ys must be 1-d arrays of equal length")
    if xs.size < 2:
        raise FitError("fit needs at least two points")
    if np.any(xs <= 0) or np.any(ys <= 0):
        raise FitError("log-log fit requires strictly positive data")
    lx, ly = np.log(xs), np.log(ys)
    if np.ptp(lx) == 0.0:
        raise FitError("all xs equal: slope is undefined")
    lxm, lym = lx - lx.mean(), ly - ly.mean()
    sxx = float(np.dot(lxm, lxm))
    slope = float(np.dot(lxm, lym)) / sxx
    intercept = float(ly.mean() - slope * lx.mean())
    resid = ly - (intercept + slope * lx)
    ss_res = float(np.dot(resid, resid))
    ss_tot = float(np.dot(lym, lym))
    if ss_tot == 0.0:
        r2 = 1.0
    else:
        r2 = max(0.0, min(1.0, 1.0 - ss_res / ss_tot))
    return LogLogFit(slope=slope, intercept=intercept, r_squared=r2, n_points=xs.size)


def next_fast_len(n: int) -> int:
    """Smallest 5-smooth integer >= n (fast FFT sizes)."""
    if n <= 1:
        return 1
    best = None
    p5 = 1
    while p5 < 2 * n:
        p35 = p5
        while p35 < 2 * n:
            q = p35
            while q < n:
                q *= 2
            if best is None or q < best:
                best = q
            p35 *= 3
        p5 *= 5
    return best


# ---------------------------------------------------------------------------
# CVGRID v1 file format
# ---------------------------------------------------------------------------

_CVGRID_MAGIC = "CVGRID 1"


def write_cvgrid(path, field: SampledField) -> None:
    """Write the CVGRID v1 format: ASCII header + little-endian float64 values.

    Header: ``CVGRID 1 <rows> <cols> <extent_x> <extent_y> <origin_x>
    <origin_y> <real|complex>``; complex values interleave (re, im) row-major.
    """
    g = field.grid
    kind = "real" if field.real else "complex"
    header = (
        f"{_CVGRID_MAGIC} {g.rows} {g.cols} {g.extent[0]!r} {g.extent[1]!r} "
        f"{g.origin[0]!r} {g.origin[1]!r} {kind}\n"
    )
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        if field.real:
            data = field.values.real.astype("<f8")
        else:
            data = np.empty((g.rows, g.cols, 2), dtype="<f8")
            data[..., 0] = field.values.real
            data[..., 1] = field.values.imag
        fh.write(data.tobytes())


def read_cvgrid(path) -> SampledField:
    """Read a CVGRID v1 file written by :func:`write_cvgrid`."""
    with open(path, "rb") as fh:
        header = fh.readline().decode("ascii").strip()
        parts = header.split()
        if len(parts) != 9 or parts[0] != "CVGRID" or parts[1] != "1":
            raise GridError(f"not a CVGRID v1 header: {header!r}")
        rows, cols = int(parts[2]), int(parts[3])
        extent = (float(parts[4]), float(parts[5]))
        origin = (float(parts[6]), float(parts[7]))
        kind = parts[8]
        if kind not in ("real", "complex"):
            raise GridError(f"unknown CVGRID value kind {kind!r}")
        raw = fh.read()
    grid = GridSpec(rows, cols, extent, origin)
    if kind == "real":
        vals = np.frombuffer(raw, dtype="<f8", count=rows * cols).reshape(rows, cols)
        return SampledField(grid, vals.astype(np.complex128), real=True)
    vals = np.frombuffer(raw, dtype="<f8", count=2 * rows * cols).reshape(rows, cols, 2)
    return SampledField(grid, vals[..., 0] + 1j * vals[..., 1], real=False)
