"""Polynomial (Taylor-expansion) densities fitted by least squares.

A density of order ``k`` is ``f(x, y) = sum c_i x^a y^b`` over all monomials
with ``a + b <= k``. Monomials are listed degree by degree; inside a degree the
pure powers come first (``x^d``, ``y^d``) followed by the mixed terms in
descending power of x. For ``k = 2`` that gives ``1, x, y, x^2, y^2, xy``.

Marginals, conditionals and the CDF are computed in closed form from the
coefficients, so no quadrature is involved once the fit is done.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import (
    BadOrder,
    DegenerateDensity,
    DomainWarning,
    IllConditioned,
    NegativeMassWarning,
    Underdetermined,
    ZeroMarginal,
)
from .npdensity import DensitySurface

MAX_CONDITION = 1e12
ZERO_MARGINAL_EPS = 1e-12
EXACT_FIT_RTOL = 1e-12


def monomial_exponents(order: int) -> list[tuple[int, int]]:
    """Exponent pairs ``(a, b)`` for ``x^a y^b`` in coefficient order.

    >>> monomial_exponents(2)
    [(0, 0), (1, 0), (0, 1), (2, 0), (0, 2), (1, 1)]
    """
    if int(order) != order or order < 1:
        raise BadOrder(f"Taylor order must be an integer >= 1, got {order!r}")
    exps = [(0, 0)]
    for d in range(1, order + 1):
        exps.append((d, 0))
        exps.append((0, d))
        exps.extend((d - j, j) for j in range(1, d))
    return exps


def n_coefficients(order: int) -> int:
    return (order + 1) * (order + 2) // 2


def design_matrix(points, order: int) -> np.ndarray:
    """Rows of monomial values, one row per (x, y) point."""
    exps = monomial_exponents(order)
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.size == 0:
        raise ValueError("design_matrix needs at least one point")
    if pts.shape[-1] != 2:
        raise ValueError("points must be (x, y) pairs")
    x, y = pts[:, 0], pts[:, 1]
    return np.column_stack([x**a * y**b for a, b in exps])


@dataclass(frozen=True)
class FitReport:
    r_squared: float
    rmse: float
    n_points: int
    condition_estimate: float

    def to_dict(self) -> dict:
        return {
            "r_squared": self.r_squared,
            "rmse": self.rmse,
            "n_points": self.n_points,
            "condition_estimate": self.condition_estimate,
        }


@dataclass(frozen=True, eq=False)
class PolynomialDensity:
    """Bivariate polynomial density on a rectangular domain.

    ``domain`` is ``((x_min, x_max), (y_min, y_max))``.
    """

    order: int
    coefficients: np.ndarray
    domain: tuple
    fit_report: FitReport | None = None
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        coefs = np.array(self.coefficients, dtype=float, copy=True)
        if coefs.shape != (n_coefficients(self.order),):
            raise BadOrder(f"order {self.order} needs {n_coefficients(self.order)} coefficients, got {coefs.shape}")
        coefs.setflags(write=False)
        (x0, x1), (y0, y1) = self.domain
        if not (x1 > x0 and y1 > y0):
            raise ValueError(f"degenerate domain {self.domain!r}")
        object.__setattr__(self, "coefficients", coefs)
        object.__setattr__(self, "domain", ((float(x0), float(x1)), (float(y0), float(y1))))
        object.__setattr__(self, "diagnostics", dict(self.diagnostics))

    @property
    def exponents(self) -> list[tuple[int, int]]:
        return monomial_exponents(self.order)

    def coefficient_table(self) -> np.ndarray:
        """Coefficients as a (k+1, k+1) array indexed by [x power, y power]."""
        table = np.zeros((self.order + 1, self.order + 1))
        for c, (a, b) in zip(self.coefficients, self.exponents):
            table[a, b] = c
        return table

    def __call__(self, x, y):
        return eval_density(self, x, y)

    def to_dict(self) -> dict:
        return {
            "order": self.order,
            "coefficients": self.coefficients.tolist(),
            "domain": [list(self.domain[0]), list(self.domain[1])],
            "fit_report": None if self.fit_report is None else self.fit_report.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PolynomialDensity":
        fr = d.get("fit_report")
        return cls(
            order=int(d["order"]),
            coefficients=d["coefficients"],
            domain=tuple(tuple(r) for r in d["domain"]),
            fit_report=None if fr is None else FitReport(**fr),
        )

    def formula(self, digits: int = 3) -> str:
        return format_formula(self, digits)


@dataclass(frozen=True, eq=False)
class Polynomial1D:
    """Univariate polynomial ``sum c_j t^j`` on ``domain``; ``variable`` names t."""

    coefficients: np.ndarray
    domain: tuple
    variable: str = "x"

    def __post_init__(self):
        coefs = np.array(self.coefficients, dtype=float, copy=True)
        coefs.setflags(write=False)
        object.__setattr__(self, "coefficients", coefs)
        object.__setattr__(self, "domain", (float(self.domain[0]), float(self.domain[1])))

    def __call__(self, t):
        return np.polynomial.polynomial.polyval(np.asarray(t, dtype=float), self.coefficients)

    def integral(self, lo: float | None = None, hi: float | None = None) -> float:
        lo = self.domain[0] if lo is None else lo
        hi = self.domain[1] if hi is None else hi
        anti = np.polynomial.polynomial.polyint(self.coefficients)
        return float(np.polynomial.polynomial.polyval(hi, anti) - np.polynomial.polynomial.polyval(lo, anti))

    def to_dict(self) -> dict:
        return {"variable": self.variable, "coefficients": self.coefficients.tolist(),
                "domain": list(self.domain)}


def _scaling_map(lo: float, hi: float) -> tuple[float, float]:
    center = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    return center, (half if half > 0 else 1.0)


def _unscale_coefficients(scaled: np.ndarray, exps, cx, sx, cy, sy, order) -> np.ndarray:
    # expand sum s_ab ((x-cx)/sx)^a ((y-cy)/sy)^b back into raw monomials
    table = np.zeros((order + 1, order + 1))
    for s, (a, b) in zip(scaled, exps):
        if s == 0.0:
            continue
        for i in range(a + 1):
            ca = math.comb(a, i) * (-cx) ** (a - i) / sx**a
            for j in range(b + 1):
                cb = math.comb(b, j) * (-cy) ** (b - j) / sy**b
                table[i, j] += s * ca * cb
    return np.array([table[a, b] for a, b in exps])


def fit_polynomial_density(targets, order: int, values=None, domain=None) -> PolynomialDensity:
    """Least-squares fit of an order-``k`` polynomial to density targets.

    Parameters
    ----------
    targets : DensitySurface or array of (x, y) points
        Gridded density estimates, or explicit points (then ``values`` is required).
    order : int
        Taylor expansion order k >= 1.
    values : array, optional
        Target density per point when ``targets`` are points.
    domain : ((x0, x1), (y0, y1)), optional
        Validity rectangle; defaults to the grid extent or the points' bounding box.

    The fit runs on inputs mapped to [-1, 1] and solved by Householder QR;
    reported coefficients are in the original coordinates.
    """
    exps = monomial_exponents(order)
    if isinstance(targets, DensitySurface):
        g = targets.grid
        pts = targets.grid.knots.reshape(-1, 2)
        vals = targets.values.ravel()
        if domain is None:
            domain = ((g.x_min, float(g.x_knots[-1])), (g.y_min, float(g.y_knots[-1])))
    else:
        if values is None:
            raise ValueError("explicit targets need a values array")
        pts = np.asarray(targets, dtype=float).reshape(-1, 2)
        vals = np.asarray(values, dtype=float).ravel()
        if vals.size != pts.shape[0]:
            raise ValueError("targets and values differ in length")
        if domain is None:
            domain = ((pts[:, 0].min(), pts[:, 0].max()), (pts[:, 1].min(), pts[:, 1].max()))

    n_pts, n_coef = pts.shape[0], len(exps)
    if n_pts < n_coef:
        raise Underdetermined(f"order {order} needs at least {n_coef} target points, got {n_pts}")

    cx, sx = _scaling_map(pts[:, 0].min(), pts[:, 0].max())
    cy, sy = _scaling_map(pts[:, 1].min(), pts[:, 1].max())
    scaled_pts = np.column_stack([(pts[:, 0] - cx) / sx, (pts[:, 1] - cy) / sy])
    A = design_matrix(scaled_pts, order)

    sv = np.linalg.svd(A, compute_uv=False)
    cond = math.inf if sv[-1] == 0 else float((sv[0] / sv[-1]) ** 2)
    if not cond <= MAX_CONDITION:
        raise IllConditioned(f"normal-system condition estimate {cond:.3g} exceeds {MAX_CONDITION:g}")

    q, r = np.linalg.qr(A, mode="reduced")
    scaled_coef = scipy.linalg.solve_triangular(r, q.T @ vals)
    fitted = A @ scaled_coef
    resid = vals - fitted
    ss_res = float(resid @ resid)
    ss_tot = float(np.sum((vals - vals.mean()) ** 2))
    # residuals at roundoff level count as an exact fit, so constant targets give R^2 = 1
    exact_tol = (EXACT_FIT_RTOL * max(1.0, float(np.linalg.norm(vals)))) ** 2
    if ss_res <= exact_tol:
        r2 = 1.0
    elif ss_tot == 0.0:
        r2 = 0.0
    else:
        r2 = 1.0 - ss_res / ss_tot
    report = FitReport(r_squared=r2, rmse=math.sqrt(ss_res / n_pts), n_points=n_pts, condition_estimate=cond)

    coefs = _unscale_coefficients(scaled_coef, exps, cx, sx, cy, sy, order)
    return PolynomialDensity(order, coefs, domain, fit_report=report)


def eval_density(poly: PolynomialDensity, x, y):
    """Evaluate the raw polynomial; may be negative. Warns outside the domain."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    (x0, x1), (y0, y1) = poly.domain
    if np.any((x < x0) | (x > x1) | (y < y0) | (y > y1)):
        warnings.warn("evaluating polynomial density outside its domain", DomainWarning, stacklevel=2)
    out = np.zeros(np.broadcast(x, y).shape)
    for c, (a, b) in zip(poly.coefficients, poly.exponents):
        out = out + c * x**a * y**b
    return out[()] if out.ndim == 0 else out


def _power_integral(power: int, lo: float, hi: float) -> float:
    return (hi ** (power + 1) - lo ** (power + 1)) / (power + 1)


def marginal_by_integration(poly: PolynomialDensity, axis: str) -> Polynomial1D:
    """Integrate ``axis`` out over the domain; returns a polynomial in the other variable."""
    axis = axis.lower()
    table = poly.coefficient_table()
    (x0, x1), (y0, y1) = poly.domain
    k = poly.order
    if axis == "y":
        w = np.array([_power_integral(b, y0, y1) for b in range(k + 1)])
        return Polynomial1D(table @ w, (x0, x1), variable="x")
    if axis == "x":
        w = np.array([_power_integral(a, x0, x1) for a in range(k + 1)])
        return Polynomial1D(w @ table, (y0, y1), variable="y")
    raise ValueError(f"axis must be 'x' or 'y', got {axis!r}")


def conditional_density(poly: PolynomialDensity, given: str, value: float) -> Polynomial1D:
    """Density of the free variable given ``given = value``.

    ``conditional_density(p, "y", y0)`` is ``f(x | y0) = f(x, y0) / f_Y(y0)``.
    """
    given = given.lower()
    table = poly.coefficient_table()
    powers = float(value) ** np.arange(poly.order + 1)
    if given == "y":
        marg = marginal_by_integration(poly, "x")
        slice_coefs = table @ powers
        free_domain, free = poly.domain[0], "x"
    elif given == "x":
        marg = marginal_by_integration(poly, "y")
        slice_coefs = powers @ table
        free_domain, free = poly.domain[1], "y"
    else:
        raise ValueError(f"given must be 'x' or 'y', got {given!r}")
    m = float(marg(value))
    if abs(m) <= ZERO_MARGINAL_EPS:
        raise ZeroMarginal(f"marginal density at {given}={value} is {m:.3g}")
    return Polynomial1D(slice_coefs / m, free_domain, variable=free)


def cumulative(poly: PolynomialDensity, upper) -> float:
    """Closed-form mass of ``[x_min, x] x [y_min, y]``."""
    ux, uy = map(float, upper)
    (x0, _), (y0, _) = poly.domain
    total = 0.0
    for c, (a, b) in zip(poly.coefficients, poly.exponents):
        total += c * _power_integral(a, x0, ux) * _power_integral(b, y0, uy)
    return total


def negative_mass(poly: PolynomialDensity, resolution: int = 201) -> float:
    """Approximate integral of max(-f, 0) over the domain (midpoint rule)."""
    (x0, x1), (y0, y1) = poly.domain
    hx = (x1 - x0) / resolution
    hy = (y1 - y0) / resolution
    xs = x0 + hx * (np.arange(resolution) + 0.5)
    ys = y0 + hy * (np.arange(resolution) + 0.5)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    vals = eval_density(poly, gx, gy)
    return float(np.sum(np.maximum(-vals, 0.0)) * hx * hy)


def normalize_poly(poly: PolynomialDensity) -> PolynomialDensity:
    """Rescale coefficients to unit mass over the domain; negatives are kept."""
    (_, x1), (_, y1) = poly.domain
    total = cumulative(poly, (x1, y1))
    if not total > 0:
        raise DegenerateDensity(f"polynomial has non-positive total mass {total:.3g}")
    scaled = PolynomialDensity(poly.order, poly.coefficients / total, poly.domain,
                               fit_report=poly.fit_report, diagnostics=poly.diagnostics)
    neg = negative_mass(scaled)
    scaled.diagnostics.update(scale_factor=1.0 / total, negative_mass=neg)
    if neg > 0:
        warnings.warn(f"normalized polynomial density has negative mass {neg:.3g}",
                      NegativeMassWarning, stacklevel=2)
    return scaled


def _term_label(a: int, b: int, var_x: str = "x", var_y: str = "y") -> str:
    parts = []
    for var, p in ((var_x, a), (var_y, b)):
        if p == 1:
            parts.append(var)
        elif p > 1:
            parts.append(f"{var}^{p}")
    return "*".join(parts)


def term_labels(order: int) -> list[str]:
    return [_term_label(a, b) or "1" for a, b in monomial_exponents(order)]


def format_formula(poly: PolynomialDensity, digits: int = 3) -> str:
    """Human-readable ``f(x,y) = ...``; terms that round to zero are omitted."""
    terms = []
    for c, (a, b) in zip(poly.coefficients, poly.exponents):
        text = f"{abs(c):.{digits}f}"
        if float(text) == 0.0:
            continue
        label = _term_label(a, b)
        body = f"{text}*{label}" if label else text
        terms.append(("-" if c < 0 else "+", body))
    if not terms:
        return "f(x,y) = 0"
    sign, body = terms[0]
    out = ("-" if sign == "-" else "") + body
    for sign, body in terms[1:]:
        out += f" {sign} {body}"
    return f"f(x,y) = {out}"
