"""Per-step volatility and volatility-of-volatility from a price series.

    v_t     = |S_{t+1} - S_t| / S_t
    gamma_t = |v_{t+1}^2 - v_t^2| / v_t      (mode "literal")
    gamma_t = |v_{t+1} - v_t| / v_t          (mode "analogous")

Both quantities are per step; nothing is annualized here.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import BadWindow, NonPositivePrice, TooShort
from .series import PriceSeries

MODES = ("literal", "analogous")


def _frozen(a, dtype=float):
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class VolSeries:
    """``values[i]`` is the volatility anchored at step ``start_index + i``.

    ``window`` > 1 marks a rolling mean; entry i then averages steps
    ``start_index + i .. start_index + i + window - 1``.
    """

    values: np.ndarray
    start_index: int = 0
    dt: float = 1.0
    window: int = 1

    def __post_init__(self):
        vals = _frozen(self.values)
        if vals.ndim != 1:
            raise ValueError("values must be 1-D")
        if np.any(~np.isfinite(vals)) or np.any(vals < 0):
            raise ValueError("volatility values must be finite and non-negative")
        object.__setattr__(self, "values", vals)

    @property
    def index(self) -> np.ndarray:
        return self.start_index + np.arange(self.values.size)

    def __len__(self) -> int:
        return self.values.size


@dataclass(frozen=True, eq=False)
class VolVolSeries:
    """Vol-of-vol values; ``index`` holds the source step of each retained value."""

    values: np.ndarray
    index: np.ndarray
    mode: str = "literal"
    dropped_count: int = 0
    dt: float = 1.0
    window: int = 1

    def __post_init__(self):
        vals = _frozen(self.values)
        idx = _frozen(self.index, dtype=np.int64)
        if vals.shape != idx.shape or vals.ndim != 1:
            raise ValueError("values and index must be 1-D and equally long")
        if np.any(~np.isfinite(vals)) or np.any(vals < 0):
            raise ValueError("vol-of-vol values must be finite and non-negative")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "index", idx)

    def __len__(self) -> int:
        return self.values.size


def vol_series(prices) -> VolSeries:
    """Per-step volatility of a :class:`PriceSeries` (or a bare price array)."""
    if isinstance(prices, PriceSeries):
        s, dt = prices.prices, prices.dt
    else:
        s, dt = np.asarray(prices, dtype=float), 1.0
        if s.size < 2:
            raise TooShort(f"need at least 2 prices, got {s.size}")
        bad = np.flatnonzero(~(s > 0))
        if bad.size:
            raise NonPositivePrice(f"price {s[bad[0]]!r} at index {bad[0]} is not positive",
                                   location=f"index {int(bad[0])}")
    v = np.abs(s[1:] - s[:-1]) / s[:-1]
    return VolSeries(v, start_index=0, dt=dt)


def volvol_series(vols, mode: str = "literal") -> VolVolSeries:
    """Volatility of volatility; steps with zero volatility are dropped and counted."""
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    if isinstance(vols, VolSeries):
        v, start, dt = vols.values, vols.start_index, vols.dt
    else:
        v, start, dt = np.asarray(vols, dtype=float), 0, 1.0
    if v.size < 2:
        raise TooShort(f"need at least 2 volatility values, got {v.size}")
    cur, nxt = v[:-1], v[1:]
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        if mode == "literal":
            gamma = np.abs(nxt * nxt - cur * cur) / cur
        else:
            gamma = np.abs(nxt - cur) / cur
    # zero (or subnormal, where the ratio overflows) volatility cannot anchor a ratio
    keep = (cur > 0) & np.isfinite(gamma)
    gamma = gamma[keep]
    index = start + np.flatnonzero(keep)
    return VolVolSeries(gamma, index, mode=mode, dropped_count=int(np.count_nonzero(~keep)), dt=dt)


def rolling_mean(series, window: int):
    """Trailing-window mean; output[i] averages values[i .. i + window - 1]."""
    n = len(series)
    if int(window) != window or window < 1 or window > n:
        raise BadWindow(f"window must be in [1, {n}], got {window!r}")
    window = int(window)
    if window == 1:
        return series
    means = sliding_window_view(series.values, window).mean(axis=1)
    if isinstance(series, VolSeries):
        return replace(series, values=means, window=series.window + window - 1)
    return replace(series, values=means, index=series.index[: means.size],
                   window=series.window + window - 1)
