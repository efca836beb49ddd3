"""Synthetic data with known ground truth, a KDE baseline and error metrics.

Random numbers come from numpy's PCG64 bit generator seeded through
``SeedSequence(seed)``. Stream layout (fixed, part of the reproducibility
contract):

* ``gen_gbm``: child stream 0 drives the price shocks Z.
* ``gen_heston``: child stream 0 drives price shocks Z (shared with GBM, so a
  zero vol-of-vol Heston path reuses the GBM shocks), child stream 1 drives
  the independent shocks mixed into the variance noise W.
* ``gen_bivariate_gaussian``: child stream 0, drawn as an (n, 2) block.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np

from .errors import BadBandwidth, BadCovariance, BadParams, GridMismatch
from .npdensity import DensityCurve, DensitySurface
from .series import Grid, PriceSeries, SamplePairs

RNG_NAME = "numpy.PCG64/SeedSequence.spawn v1"
SILVERMAN_CONSTANT = 1.06
MIN_COV_EIGENVALUE = 1e-10


def _streams(seed: int, count: int) -> list[np.random.Generator]:
    children = np.random.SeedSequence(int(seed)).spawn(count)
    return [np.random.Generator(np.random.PCG64(c)) for c in children]


@dataclass(frozen=True)
class GbmParams:
    s0: float = 100.0
    mu: float = 0.0
    sigma: float = 0.2
    dt: float = 1 / 252
    n_steps: int = 252
    seed: int = 0

    def __post_init__(self):
        if not self.s0 > 0:
            raise BadParams(f"s0 must be positive, got {self.s0}")
        if not self.sigma >= 0:
            raise BadParams(f"sigma must be non-negative, got {self.sigma}")
        if not self.dt > 0:
            raise BadParams(f"dt must be positive, got {self.dt}")
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise BadParams(f"n_steps must be a positive integer, got {self.n_steps}")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class HestonParams:
    s0: float = 100.0
    v0: float = 0.04
    kappa: float = 3.0
    theta: float = 0.04
    xi: float = 0.5
    rho: float = 0.0
    dt: float = 1 / 252
    n_steps: int = 252
    seed: int = 0

    def __post_init__(self):
        for name in ("s0", "v0", "dt"):
            if not getattr(self, name) > 0:
                raise BadParams(f"{name} must be positive, got {getattr(self, name)}")
        for name in ("kappa", "theta", "xi"):
            if not getattr(self, name) >= 0:
                raise BadParams(f"{name} must be non-negative, got {getattr(self, name)}")
        if not -1.0 <= self.rho <= 1.0:
            raise BadParams(f"rho must lie in [-1, 1], got {self.rho}")
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise BadParams(f"n_steps must be a positive integer, got {self.n_steps}")

    @property
    def feller_ratio(self) -> float:
        """2 kappa theta / xi^2; above 1 the continuous process stays positive."""
        return math.inf if self.xi == 0 else 2.0 * self.kappa * self.theta / self.xi**2

    def to_dict(self) -> dict:
        return asdict(self)


def gen_gbm(params: GbmParams) -> PriceSeries:
    """Exact log-normal GBM path with ``n_steps + 1`` prices."""
    (rng,) = _streams(params.seed, 1)
    z = rng.standard_normal(int(params.n_steps))
    step = (params.mu - 0.5 * params.sigma**2) * params.dt + params.sigma * math.sqrt(params.dt) * z
    log_path = np.concatenate([[0.0], np.cumsum(step)])
    prices = params.s0 * np.exp(log_path)
    return PriceSeries(np.arange(prices.size, dtype=float), prices, params.dt)


def gen_heston(params: HestonParams) -> tuple[PriceSeries, np.ndarray]:
    """Full-truncation Euler Heston path; returns (prices, latent variance path)."""
    n = int(params.n_steps)
    rng_z, rng_e = _streams(params.seed, 2)
    z = rng_z.standard_normal(n)
    e = rng_e.standard_normal(n)
    w = params.rho * z + math.sqrt(1.0 - params.rho**2) * e

    kappa, theta, xi, dt = params.kappa, params.theta, params.xi, params.dt
    sqrt_dt = math.sqrt(dt)
    var = [params.v0]
    log_s = [0.0]
    v = params.v0
    ls = 0.0
    for zt, wt in zip(z.tolist(), w.tolist()):
        vp = v if v > 0.0 else 0.0
        assert vp >= 0.0
        vol = math.sqrt(vp)
        ls = ls - 0.5 * vp * dt + vol * sqrt_dt * zt
        v = v + kappa * (theta - vp) * dt + xi * vol * sqrt_dt * wt
        log_s.append(ls)
        var.append(v)
    var = np.array(var)
    prices = params.s0 * np.exp(np.array(log_s))
    return PriceSeries(np.arange(n + 1, dtype=float), prices, dt), var


def gen_bivariate_gaussian(mean, cov, n: int, seed: int) -> SamplePairs:
    """Correlated normal pairs via a Cholesky factor of ``cov``."""
    mean = np.asarray(mean, dtype=float).reshape(2)
    cov = np.asarray(cov, dtype=float).reshape(2, 2)
    if not np.allclose(cov, cov.T, rtol=0, atol=1e-14):
        raise BadCovariance("covariance must be symmetric")
    if np.linalg.eigvalsh(cov)[0] < MIN_COV_EIGENVALUE:
        raise BadCovariance(f"covariance is not positive definite (min eigenvalue < {MIN_COV_EIGENVALUE:g})")
    chol = np.linalg.cholesky(cov)
    (rng,) = _streams(seed, 1)
    draws = rng.standard_normal((int(n), 2)) @ chol.T + mean
    return SamplePairs(draws[:, 0], draws[:, 1])


def silverman_bandwidth(values) -> float:
    """``1.06 * s * n^(-1/5)`` with s the sample standard deviation (ddof=1)."""
    values = np.asarray(values, dtype=float)
    return SILVERMAN_CONSTANT * float(np.std(values, ddof=1)) * values.size ** (-0.2)


def _resolve_bandwidth(values, bandwidth) -> float:
    h = silverman_bandwidth(values) if bandwidth == "silverman" else float(bandwidth)
    if not (h > 0 and math.isfinite(h)):
        raise BadBandwidth(f"bandwidth must be positive, got {h!r}")
    return h


def _kernel_matrix(knots: np.ndarray, data: np.ndarray, h: float) -> np.ndarray:
    u = (knots[:, None] - data[None, :]) / h
    return np.exp(-0.5 * u * u) / (h * math.sqrt(2.0 * math.pi))


def kde_density(samples, grid: Grid, bandwidth="silverman", chunk: int = 65536):
    """Gaussian (product) kernel density estimate on ``grid``.

    ``samples`` is a :class:`SamplePairs` for a 2-D grid or a 1-D array for a
    1-D grid. ``bandwidth`` is ``"silverman"`` or a positive number (used on
    every axis).
    """
    if grid.ndim == 1:
        data = np.asarray(samples.xs if isinstance(samples, SamplePairs) else samples, dtype=float)
        if data.size < 2:
            raise ValueError("KDE needs at least 2 samples")
        h = _resolve_bandwidth(data, bandwidth)
        acc = np.zeros(grid.nx)
        for start in range(0, data.size, chunk):
            acc += _kernel_matrix(grid.x_knots, data[start:start + chunk], h).sum(axis=1)
        return DensityCurve(grid, acc / data.size, method="kde", diagnostics={"bandwidth": h})

    if not isinstance(samples, SamplePairs):
        raise TypeError("2-D KDE needs SamplePairs")
    hx = _resolve_bandwidth(samples.xs, bandwidth)
    hy = _resolve_bandwidth(samples.ys, bandwidth)
    acc = np.zeros(grid.shape)
    # separable kernel: sum_i Kx[a, i] Ky[b, i] is a matrix product
    for start in range(0, samples.n, chunk):
        kx = _kernel_matrix(grid.x_knots, samples.xs[start:start + chunk], hx)
        ky = _kernel_matrix(grid.y_knots, samples.ys[start:start + chunk], hy)
        acc += kx @ ky.T
    return DensitySurface(grid, acc / samples.n, method="kde",
                          diagnostics={"bandwidth_x": hx, "bandwidth_y": hy})


@dataclass(frozen=True)
class ErrorReport:
    mae: float
    rmse: float
    mise: float
    sup_error: float
    grid: Grid
    estimator: str

    def to_dict(self) -> dict:
        return {"estimator": self.estimator, "mae": self.mae, "rmse": self.rmse,
                "mise": self.mise, "sup_error": self.sup_error, "grid": self.grid.to_dict()}


def error_report(estimate, truth: Callable, grid: Grid | None = None) -> ErrorReport:
    """Compare a gridded estimate against an analytic density.

    ``truth`` takes ``x`` (1-D) or ``(x, y)`` (2-D) arrays. ``mise`` is the
    trapezoid integral of the squared error over the grid.
    """
    grid = estimate.grid if grid is None else grid
    if grid != estimate.grid:
        raise GridMismatch("estimate was computed on a different grid")
    if grid.ndim == 1:
        true_vals = np.asarray(truth(grid.x_knots), dtype=float)
        err = estimate.values - true_vals
        mise = float(np.trapezoid(err**2, dx=grid.dx))
    else:
        gx, gy = np.meshgrid(grid.x_knots, grid.y_knots, indexing="ij")
        true_vals = np.asarray(truth(gx, gy), dtype=float)
        err = estimate.values - true_vals
        mise = float(np.trapezoid(np.trapezoid(err**2, dx=grid.dy, axis=1), dx=grid.dx))
    abs_err = np.abs(err)
    return ErrorReport(mae=float(abs_err.mean()), rmse=float(np.sqrt(np.mean(err**2))),
                       mise=mise, sup_error=float(abs_err.max()), grid=grid, estimator=estimate.method)


def normal_pdf(x):
    x = np.asarray(x, dtype=float)
    return np.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)


def std_normal_2d(x, y):
    return normal_pdf(x) * normal_pdf(y)


def uniform_unit_square(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return ((x >= 0) & (x <= 1) & (y >= 0) & (y <= 1)).astype(float)


# analytic densities addressable by name from the CLI
TRUTHS: dict[str, Callable] = {
    "std-normal-2d": std_normal_2d,
    "uniform-unit-square": uniform_unit_square,
}
