"""Core data types: price series, sample pairs, evaluation grids and CDFs."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np

from .errors import (
    BadGrid,
    EmptySample,
    NonPositivePrice,
    NonUniformSpacingWarning,
    TooShort,
)

SPACING_RTOL = 1e-6
# slack on (x_max - x_min) / dx before flooring, so 0.3 / 0.1 yields 3 steps
_KNOT_RTOL = 1e-9


def _frozen(a, dtype=float) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class PriceSeries:
    """Positive asset prices on an (ideally) uniform time index.

    ``dt`` is the sampling interval in whatever unit the caller uses for
    annualization, e.g. ``1/252`` for daily bars.
    """

    timestamps: np.ndarray
    prices: np.ndarray
    dt: float = 1.0

    def __post_init__(self):
        ts = _frozen(self.timestamps)
        px = _frozen(self.prices)
        if ts.ndim != 1 or px.ndim != 1 or ts.shape != px.shape:
            raise ValueError("timestamps and prices must be 1-D arrays of equal length")
        if px.size < 2:
            raise TooShort(f"need at least 2 prices, got {px.size}")
        bad = np.flatnonzero(~(px > 0) | ~np.isfinite(px))
        if bad.size:
            i = int(bad[0])
            raise NonPositivePrice(f"price {px[i]!r} at index {i} is not positive", location=f"index {i}")
        steps = np.diff(ts)
        if not np.all(steps > 0):
            raise ValueError("timestamps must be strictly increasing")
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ValueError(f"dt must be positive, got {self.dt!r}")
        med = float(np.median(steps))
        if np.any(np.abs(steps - med) > SPACING_RTOL * med):
            warnings.warn("timestamps are not uniformly spaced; estimators treat steps as equal",
                          NonUniformSpacingWarning, stacklevel=3)
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "prices", px)
        object.__setattr__(self, "dt", float(self.dt))

    @classmethod
    def from_prices(cls, prices, dt: float = 1.0) -> "PriceSeries":
        """Series indexed by bar number 0, 1, 2, ..."""
        prices = np.asarray(prices, dtype=float)
        return cls(np.arange(prices.size, dtype=float), prices, dt)

    def __len__(self) -> int:
        return self.prices.size


@dataclass(frozen=True, eq=False)
class SamplePairs:
    """Paired i.i.d. observations of (X, Y)."""

    xs: np.ndarray
    ys: np.ndarray

    def __post_init__(self):
        xs = _frozen(self.xs)
        ys = _frozen(self.ys)
        if xs.ndim != 1 or ys.ndim != 1 or xs.shape != ys.shape:
            raise ValueError("xs and ys must be 1-D arrays of equal length")
        if xs.size < 2:
            raise EmptySample(f"need at least 2 sample pairs, got {xs.size}")
        if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(ys))):
            raise ValueError("sample values must be finite")
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)

    @property
    def n(self) -> int:
        return self.xs.size

    def __len__(self) -> int:
        return self.n


@dataclass(frozen=True)
class Grid:
    """Regular 1-D or 2-D lattice; knots are always ``x_min + i*dx``."""

    x_min: float
    x_max: float
    dx: float
    y_min: float | None = None
    y_max: float | None = None
    dy: float | None = None

    @property
    def ndim(self) -> int:
        return 1 if self.dy is None else 2

    @property
    def nx(self) -> int:
        return _knot_count(self.x_min, self.x_max, self.dx)

    @property
    def ny(self) -> int:
        if self.dy is None:
            raise BadGrid("1-D grid has no y axis")
        return _knot_count(self.y_min, self.y_max, self.dy)

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.nx,) if self.ndim == 1 else (self.nx, self.ny)

    def x_at(self, idx) -> np.ndarray:
        """Lattice coordinate for (possibly out-of-range) integer indices."""
        return self.x_min + np.asarray(idx, dtype=float) * self.dx

    def y_at(self, idx) -> np.ndarray:
        return self.y_min + np.asarray(idx, dtype=float) * self.dy

    @property
    def x_knots(self) -> np.ndarray:
        return self.x_at(np.arange(self.nx))

    @property
    def y_knots(self) -> np.ndarray:
        return self.y_at(np.arange(self.ny))

    @property
    def knots(self) -> np.ndarray:
        """Knot coordinates: shape (nx,) for 1-D, (nx, ny, 2) for 2-D."""
        if self.ndim == 1:
            return self.x_knots
        gx, gy = np.meshgrid(self.x_knots, self.y_knots, indexing="ij")
        return np.stack([gx, gy], axis=-1)

    def axis(self, name: str) -> "Grid":
        """The 1-D grid along axis ``"x"`` or ``"y"``."""
        name = name.lower()
        if name == "x":
            return Grid(self.x_min, self.x_max, self.dx)
        if name == "y" and self.ndim == 2:
            return Grid(self.y_min, self.y_max, self.dy)
        raise BadGrid(f"grid has no axis {name!r}")

    def to_dict(self) -> dict:
        out = {"x_min": self.x_min, "x_max": self.x_max, "dx": self.dx}
        if self.ndim == 2:
            out.update(y_min=self.y_min, y_max=self.y_max, dy=self.dy)
        return out


def _knot_count(lo: float, hi: float, step: float) -> int:
    return int(math.floor((hi - lo) / step * (1.0 + _KNOT_RTOL))) + 1


def _check_axis(lo, hi, step, label):
    for v in (lo, hi, step):
        if v is None or not math.isfinite(v):
            raise BadGrid(f"{label} axis needs finite range and step")
    if step <= 0:
        raise BadGrid(f"d{label} must be positive, got {step}")
    if not hi > lo:
        raise BadGrid(f"{label} range ({lo}, {hi}) is empty or inverted")


def make_grid(x_range, dx, y_range=None, dy=None) -> Grid:
    """Build a lattice covering ``x_range`` (and ``y_range``) with steps dx, dy.

    >>> make_grid((0, 1), 0.3).x_knots.tolist()
    [0.0, 0.3, 0.6, 0.8999999999999999]
    """
    x_lo, x_hi = map(float, x_range)
    _check_axis(x_lo, x_hi, float(dx), "x")
    if y_range is None and dy is None:
        return Grid(x_lo, x_hi, float(dx))
    if y_range is None or dy is None:
        raise BadGrid("a 2-D grid needs both y_range and dy")
    y_lo, y_hi = map(float, y_range)
    _check_axis(y_lo, y_hi, float(dy), "y")
    return Grid(x_lo, x_hi, float(dx), y_lo, y_hi, float(dy))


@dataclass(frozen=True, eq=False)
class EmpiricalCDF:
    """Step-function estimates of the joint and marginal CDFs of a sample.

    All counts use ``<=``: ``F(x, y) = #{i: x_i <= x and y_i <= y} / n``.
    Marginal queries are binary searches. Lattice queries (``joint_table``)
    cost one pass over the sample plus O(1) per knot; scattered joint queries
    go through a merge-sort tree built on first use, O(log^2 n) each.
    """

    source: SamplePairs
    _x_sorted: np.ndarray = field(init=False, repr=False)
    _y_sorted: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "_x_sorted", _frozen(np.sort(self.source.xs)))
        object.__setattr__(self, "_y_sorted", _frozen(np.sort(self.source.ys)))

    @property
    def n(self) -> int:
        return self.source.n

    def marginal_x(self, x) -> np.ndarray:
        return np.searchsorted(self._x_sorted, np.asarray(x, dtype=float), side="right") / self.n

    def marginal_y(self, y) -> np.ndarray:
        return np.searchsorted(self._y_sorted, np.asarray(y, dtype=float), side="right") / self.n

    def marginal(self, axis: str, q) -> np.ndarray:
        return self.marginal_x(q) if axis.lower() == "x" else self.marginal_y(q)

    def joint_table(self, xq, yq) -> np.ndarray:
        """F at every (xq[a], yq[b]); both query vectors must be non-decreasing."""
        xq = np.asarray(xq, dtype=float)
        yq = np.asarray(yq, dtype=float)
        if np.any(np.diff(xq) < 0) or np.any(np.diff(yq) < 0):
            raise ValueError("joint_table queries must be sorted ascending")
        # first query index each sample is counted at (query >= sample)
        a = np.searchsorted(xq, self.source.xs, side="left")
        b = np.searchsorted(yq, self.source.ys, side="left")
        nx, ny = xq.size + 1, yq.size + 1
        hist = np.bincount(a * ny + b, minlength=nx * ny).reshape(nx, ny)
        counts = hist.cumsum(axis=0).cumsum(axis=1)
        return counts[: xq.size, : yq.size] / self.n

    def joint(self, x, y) -> np.ndarray:
        """F at scattered points (broadcast over ``x`` and ``y``)."""
        x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        m = np.searchsorted(self._tree_x, x.ravel(), side="right")
        yr = np.searchsorted(self._y_sorted, y.ravel(), side="right")
        counts = np.zeros(m.size, dtype=np.int64)
        for level, flat in enumerate(self._tree_levels):
            size = 1 << level
            take = ((m >> level) & 1).astype(bool)
            if not take.any():
                continue
            block = (m[take] >> (level + 1)) << 1
            offset = block * self._rank_stride
            pos = np.searchsorted(flat, offset + yr[take], side="right")
            counts[take] += pos - block * size
        return (counts / self.n).reshape(x.shape)

    @cached_property
    def _tree_x(self) -> np.ndarray:
        return self.source.xs[self._x_order]

    @cached_property
    def _x_order(self) -> np.ndarray:
        return np.argsort(self.source.xs, kind="stable")

    @property
    def _rank_stride(self) -> int:
        return self.n + 2

    @cached_property
    def _tree_levels(self) -> list[np.ndarray]:
        # y-ranks in x order, padded to a power of two with a rank larger than any query
        n = self.n
        depth = max(1, math.ceil(math.log2(n)))
        size = 1 << depth
        ranks = np.full(size, n + 1, dtype=np.int64)
        ranks[:n] = np.searchsorted(self._y_sorted, self.source.ys[self._x_order], side="right")
        levels = []
        for level in range(depth + 1):
            width = 1 << level
            blocks = np.sort(ranks.reshape(-1, width), axis=1)
            offsets = (np.arange(blocks.shape[0], dtype=np.int64) * self._rank_stride)[:, None]
            levels.append((blocks + offsets).ravel())
        return levels


def build_empirical_cdf(samples: SamplePairs) -> EmpiricalCDF:
    if samples.n < 2:
        raise EmptySample(f"need at least 2 sample pairs, got {samples.n}")
    return EmpiricalCDF(samples)


@dataclass(frozen=True)
class AnalyticCDF:
    """Closed-form CDF with the same query surface as :class:`EmpiricalCDF`.

    Used to feed exact distributions through the finite-difference estimators.
    Callables must be vectorized over numpy arrays.
    """

    joint_fn: Callable[[np.ndarray, np.ndarray], np.ndarray]
    marginal_x_fn: Callable[[np.ndarray], np.ndarray]
    marginal_y_fn: Callable[[np.ndarray], np.ndarray]

    def marginal_x(self, x):
        return self.marginal_x_fn(np.asarray(x, dtype=float))

    def marginal_y(self, y):
        return self.marginal_y_fn(np.asarray(y, dtype=float))

    def marginal(self, axis: str, q):
        return self.marginal_x(q) if axis.lower() == "x" else self.marginal_y(q)

    def joint(self, x, y):
        return self.joint_fn(np.asarray(x, dtype=float), np.asarray(y, dtype=float))

    def joint_table(self, xq, yq):
        gx, gy = np.meshgrid(np.asarray(xq, dtype=float), np.asarray(yq, dtype=float), indexing="ij")
        return self.joint_fn(gx, gy)

    @classmethod
    def independent(cls, cdf_x, cdf_y=None) -> "AnalyticCDF":
        """Product CDF ``F(x, y) = F_X(x) F_Y(y)``."""
        cdf_y = cdf_x if cdf_y is None else cdf_y
        return cls(lambda x, y: cdf_x(x) * cdf_y(y), cdf_x, cdf_y)
