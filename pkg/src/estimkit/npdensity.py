"""Non-parametric densities from finite differences of a CDF.

The joint estimator combines a second difference of the joint CDF along the
grid diagonal with first differences of the marginal densities::

    f(x, y) = [D2F(x, y) - Df_X(x) dx - Df_Y(y) dy] / (2 dx dy)

    D2F(x, y) = F(x+dx, y+dy) - 2 F(x, y) + F(x-dx, y-dy)
    Df_X(x)   = [f_X(x+dx) - f_X(x-dx)] / 2

with ``f_X`` the central CDF difference ``[F_X(x+dx) - F_X(x-dx)] / (2 dx)``.
No kernel and no bandwidth are involved; accuracy is governed by the sample
size and the grid step. Raw estimates may be negative; :func:`normalize`
clips and rescales them.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import BadGrid, DegenerateDensity
from .series import Grid

# an already-normalized density is returned untouched, which keeps normalize idempotent
_UNIT_MASS_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class DensityCurve:
    grid: Grid
    values: np.ndarray
    method: str
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.grid.ndim != 1:
            raise BadGrid("DensityCurve needs a 1-D grid")
        _freeze_values(self, self.grid.shape)

    @property
    def x(self) -> np.ndarray:
        return self.grid.x_knots

    def integral(self) -> float:
        return float(np.trapezoid(self.values, dx=self.grid.dx))


@dataclass(frozen=True, eq=False)
class DensitySurface:
    grid: Grid
    values: np.ndarray
    method: str
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.grid.ndim != 2:
            raise BadGrid("DensitySurface needs a 2-D grid")
        _freeze_values(self, self.grid.shape)

    def integral(self) -> float:
        return float(_trapezoid_2d(self.values, self.grid))


def _freeze_values(obj, shape):
    vals = np.array(obj.values, dtype=float, copy=True)
    if vals.shape != shape:
        raise BadGrid(f"values have shape {vals.shape}, grid expects {shape}")
    if not np.all(np.isfinite(vals)):
        raise ValueError("density values must be finite")
    vals.setflags(write=False)
    object.__setattr__(obj, "values", vals)
    object.__setattr__(obj, "diagnostics", dict(obj.diagnostics))


def _trapezoid_2d(values: np.ndarray, grid: Grid) -> float:
    inner = np.trapezoid(values, dx=grid.dy, axis=1)
    return np.trapezoid(inner, dx=grid.dx)


def _marginal_on_indices(cdf, axis: str, grid1d: Grid, idx: np.ndarray) -> np.ndarray:
    # f_X at lattice indices idx, using CDF values at idx +/- 1
    step = grid1d.dx
    upper = cdf.marginal(axis, grid1d.x_at(idx + 1))
    lower = cdf.marginal(axis, grid1d.x_at(idx - 1))
    return (np.asarray(upper, dtype=float) - np.asarray(lower, dtype=float)) / (2.0 * step)


def marginal_density_np(cdf, axis: str, grid: Grid) -> DensityCurve:
    """Marginal density along ``axis`` as the central difference of the marginal CDF.

    ``cdf`` is an :class:`~estimkit.series.EmpiricalCDF` or any object with the
    same ``marginal(axis, q)`` method (e.g. :class:`~estimkit.series.AnalyticCDF`).
    """
    axis = _axis_name(axis)
    if grid.ndim != 1:
        raise BadGrid("marginal_density_np needs a 1-D grid")
    values = _marginal_on_indices(cdf, axis, grid, np.arange(grid.nx))
    return DensityCurve(grid, values, method="np-marginal",
                        diagnostics={"axis": axis, "negative_fraction": float(np.mean(values < 0))})


def joint_density_np(cdf, grid: Grid) -> DensitySurface:
    """Joint density on a 2-D grid from CDF finite differences (raw, unclipped)."""
    if grid.ndim != 2:
        raise BadGrid("joint_density_np needs a 2-D grid")
    nx, ny = grid.shape
    dx, dy = grid.dx, grid.dy

    # joint CDF on the lattice extended by one knot on every side
    ext_x = grid.x_at(np.arange(-1, nx + 1))
    ext_y = grid.y_at(np.arange(-1, ny + 1))
    table = np.asarray(cdf.joint_table(ext_x, ext_y), dtype=float)
    center = table[1:-1, 1:-1]
    second = table[2:, 2:] - 2.0 * center + table[:-2, :-2]

    # marginal densities at knots -1..n, then their central first differences
    fx = _marginal_on_indices(cdf, "x", grid.axis("x"), np.arange(-1, nx + 1))
    fy = _marginal_on_indices(cdf, "y", grid.axis("y"), np.arange(-1, ny + 1))
    dfx = (fx[2:] - fx[:-2]) / 2.0
    dfy = (fy[2:] - fy[:-2]) / 2.0

    values = (second - dfx[:, None] * dx - dfy[None, :] * dy) / (2.0 * dx * dy)
    diagnostics = {"negative_fraction": float(np.mean(values < 0))}
    return DensitySurface(grid, values, method="np-joint", diagnostics=diagnostics)


def normalize(density):
    """Clip negatives to zero and rescale to unit trapezoid mass on the grid."""
    raw = density.values
    if not np.any(raw > 0):
        raise DegenerateDensity("density has no positive values to normalize")
    clipped = np.where(raw < 0, 0.0, raw)
    clip_count = int(np.count_nonzero(raw < 0))
    if density.grid.ndim == 1:
        mass = float(np.trapezoid(clipped, dx=density.grid.dx))
    else:
        mass = float(_trapezoid_2d(clipped, density.grid))
    if mass <= 0:
        raise DegenerateDensity("clipped density has zero mass on the grid")
    if clip_count == 0 and abs(mass - 1.0) <= _UNIT_MASS_TOL:
        scale = 1.0
        values = raw
    else:
        scale = 1.0 / mass
        values = clipped / mass
    diagnostics = dict(density.diagnostics)
    diagnostics.setdefault("clip_count", clip_count)
    diagnostics.setdefault("scale_factor", scale)
    diagnostics["normalized"] = True
    return replace(density, values=values, diagnostics=diagnostics)


def integrate_out(surface: DensitySurface, axis: str) -> DensityCurve:
    """Trapezoid-integrate ``axis`` out of a surface, leaving a curve over the other axis."""
    axis = _axis_name(axis)
    g = surface.grid
    if axis == "y":
        values = np.trapezoid(surface.values, dx=g.dy, axis=1)
        keep = g.axis("x")
    else:
        values = np.trapezoid(surface.values, dx=g.dx, axis=0)
        keep = g.axis("y")
    return DensityCurve(keep, values, method=f"{surface.method}:integrated-{axis}",
                        diagnostics={"axis": "x" if axis == "y" else "y"})


def _axis_name(axis: str) -> str:
    a = str(axis).lower()
    if a not in ("x", "y"):
        raise ValueError(f"axis must be 'x' or 'y', got {axis!r}")
    return a
