"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -s`` to see the summary lines.
"""

import json
import math
import subprocess
import sys
import time

import numpy as np

from conftest import std_normal_cdf
from estimkit import (
    AnalyticCDF,
    GbmParams,
    HestonParams,
    build_empirical_cdf,
    design_matrix,
    fit_polynomial_density,
    gen_bivariate_gaussian,
    gen_gbm,
    gen_heston,
    integrate_out,
    joint_density_np,
    make_grid,
    marginal_density_np,
    normalize,
    normalize_poly,
    rolling_mean,
    vol_series,
    volvol_series,
)
from estimkit.paramdensity import cumulative, monomial_exponents
from estimkit.synthlab import std_normal_2d


def report(number, title, ok, detail):
    print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {title}: {detail}")
    assert ok, detail


class Timer:
    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.seconds = time.perf_counter() - self.start


def test_01_gaussian_oracle():
    with Timer() as t:
        cdf = AnalyticCDF.independent(std_normal_cdf)
        grid = make_grid((-0.1, 0.1), 0.1, (-0.1, 0.1), 0.1)
        value = float(joint_density_np(cdf, grid).values[1, 1])
    rel = abs(value - 1 / (2 * math.pi)) * 2 * math.pi
    report(1, "Gaussian joint-density oracle", rel <= 0.005 and t.seconds < 1.0,
           f"f(0,0) = {value:.6f}, relative error {rel:.4%}, {t.seconds:.3f}s")


def test_02_sampled_convergence():
    grid = make_grid((-2, 2), 0.1, (-2, 2), 0.1)
    truth = std_normal_2d(*np.meshgrid(grid.x_knots, grid.y_knots, indexing="ij"))
    sizes = (1_000, 10_000, 100_000)
    with Timer() as t:
        maes = np.array([[np.mean(np.abs(joint_density_np(build_empirical_cdf(
            gen_bivariate_gaussian([0, 0], np.eye(2), n, seed)), grid).values - truth))
            for n in sizes] for seed in range(5)])
    steps_ok = [int((maes[:, i + 1] < maes[:, i]).sum()) for i in range(len(sizes) - 1)]
    ok = all(s >= 4 for s in steps_ok) and t.seconds < 30
    report(2, "sampled convergence", ok,
           f"mean MAE by n {np.round(maes.mean(axis=0), 4).tolist()}, "
           f"seeds decreasing per step {steps_ok}, {t.seconds:.2f}s")


def test_03_polynomial_exactness():
    rng = np.random.default_rng(2024)
    worst = 0.0
    with Timer() as t:
        for trial in range(100):
            k = int(rng.integers(1, 4))
            coefs = rng.normal(size=len(monomial_exponents(k)))
            x0, y0 = rng.uniform(-3, 3, size=2)
            wx, wy = rng.uniform(0.5, 4, size=2)
            nx, ny = rng.integers(k + 2, 15, size=2)
            gx, gy = np.meshgrid(np.linspace(x0, x0 + wx, nx), np.linspace(y0, y0 + wy, ny), indexing="ij")
            pts = np.column_stack([gx.ravel(), gy.ravel()])
            fit = fit_polynomial_density(pts, k, values=design_matrix(pts, k) @ coefs)
            worst = max(worst, np.max(np.abs(fit.coefficients - coefs)) / np.max(np.abs(coefs)))
    report(3, "polynomial exactness", worst <= 1e-10 and t.seconds < 5,
           f"worst relative coefficient error {worst:.2e} over 100 fits, {t.seconds:.2f}s")


def test_04_order_monotonicity():
    # shifted, correlated Gaussian: a centred isotropic one makes the odd terms
    # orthogonal to the target, so order 3 could not improve on order 2
    mean, rho = np.array([0.3, -0.2]), 0.4
    axis = np.linspace(-1, 1, 21)
    gx, gy = np.meshgrid(axis, axis, indexing="ij")
    u, w = gx - mean[0], gy - mean[1]
    dens = np.exp(-(u * u - 2 * rho * u * w + w * w) / (2 * (1 - rho**2))) / (2 * math.pi * math.sqrt(1 - rho**2))
    pts = np.column_stack([gx.ravel(), gy.ravel()])
    rmse = [fit_polynomial_density(pts, k, values=dens.ravel()).fit_report.rmse for k in (1, 2, 3)]
    ok = rmse[0] > rmse[1] > rmse[2]
    report(4, "order monotonicity", ok, f"rmse k=1,2,3: {[f'{r:.5f}' for r in rmse]}")


def test_05_volatility_oracle():
    with Timer() as t:
        v = vol_series(gen_gbm(GbmParams(sigma=0.2, dt=1 / 252, n_steps=100_000, seed=7)))
        mean = float(v.values.mean())
    target = 0.2 * math.sqrt(1 / 252) * math.sqrt(2 / math.pi)
    rel = abs(mean / target - 1)
    report(5, "volatility oracle", rel <= 0.02 and t.seconds < 2,
           f"mean v = {mean:.6f} vs {target:.6f} ({rel:.2%}), {t.seconds:.2f}s")


def test_06_volvol_discrimination():
    theta, n = 0.05, 50_000
    rows = []
    with Timer() as t:
        for seed in range(5):
            heston, _ = gen_heston(HestonParams(v0=theta, kappa=3.0, theta=theta, xi=0.5, rho=0.0,
                                                dt=1 / 252, n_steps=n, seed=seed))
            gbm = gen_gbm(GbmParams(sigma=math.sqrt(theta), dt=1 / 252, n_steps=n, seed=seed))
            med = [float(np.median(rolling_mean(volvol_series(vol_series(s)), 100).values))
                   for s in (heston, gbm)]
            rows.append(med)
    wins = sum(h > g for h, g in rows)
    report(6, "vol-of-vol discrimination", wins == 5 and t.seconds < 30,
           f"Heston > GBM in {wins}/5 seeds; medians {[(round(h, 5), round(g, 5)) for h, g in rows]}, "
           f"{t.seconds:.2f}s")


def test_07_density_axioms():
    samples = gen_bivariate_gaussian([0, 0], np.eye(2), 20_000, seed=3)
    grid = make_grid((-3, 3), 0.1, (-3, 3), 0.1)
    surf = normalize(joint_density_np(build_empirical_cdf(samples), grid))
    np_mass = surf.integral()
    again = normalize(surf)
    pts = np.column_stack([grid.knots[..., 0].ravel(), grid.knots[..., 1].ravel()])
    poly = normalize_poly(fit_polynomial_density(pts, 2, values=std_normal_2d(pts[:, 0], pts[:, 1]) + 0.05,
                                                 domain=((-3, 3), (-3, 3))))
    poly_mass = cumulative(poly, (3, 3))
    poly_again = normalize_poly(poly)
    ok = (abs(np_mass - 1) <= 1e-6 and bool(np.all(surf.values >= 0))
          and np.array_equal(again.values, surf.values) and abs(poly_mass - 1) <= 1e-9
          and np.allclose(poly_again.coefficients, poly.coefficients, rtol=1e-12, atol=0))
    report(7, "density axioms", ok,
           f"np mass {np_mass:.12f}, min {surf.values.min():.3g}, idempotent "
           f"{np.array_equal(again.values, surf.values)}; poly mass {poly_mass:.12f}")


def test_08_marginal_consistency():
    samples = gen_bivariate_gaussian([0, 0], np.eye(2), 100_000, seed=0)
    grid = make_grid((-2, 2), 0.1, (-2, 2), 0.1)
    cdf = build_empirical_cdf(samples)
    joint = joint_density_np(cdf, grid)
    gaps = {}
    for keep, drop in (("x", "y"), ("y", "x")):
        integrated = integrate_out(joint, drop)
        direct = marginal_density_np(cdf, keep, grid.axis(keep))
        gaps[keep] = float(np.max(np.abs(integrated.values - direct.values)))
    sup = max(gaps.values())
    report(8, "marginal consistency", sup <= 0.05,
           f"sup-norm gap x {gaps['x']:.4f}, y {gaps['y']:.4f} (limit 0.05)")


def test_09_baseline_comparison(tmp_path):
    out = tmp_path / "compare.json"
    cmd = [sys.executable, "-m", "estimkit", "compare", "--n", "100000", "--seed", "0",
           "--x-range", "-2", "2", "--dx", "0.1", "--y-range", "-2", "2", "--dy", "0.1",
           "--format", "json", "--output", str(out)]
    proc = subprocess.run(cmd, capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    payload = json.loads(out.read_text())
    mise = {r["estimator"]: r["mise"] for r in payload["reports"]}
    ratio = payload["mise_ratio_np_over_kde"]
    report(9, "baseline comparison", set(mise) == {"np-joint", "kde"} and ratio <= 3.0,
           f"mise np {mise['np-joint']:.4g} vs kde {mise['kde']:.4g}, ratio {ratio:.4g} (limit 3)")


def _cli(*args):
    proc = subprocess.run([sys.executable, "-m", "estimkit", *map(str, args)], capture_output=True)
    assert proc.returncode == 0, proc.stderr.decode()
    return proc.stdout


def test_10_determinism(tmp_path):
    gauss_cfg = tmp_path / "g.json"
    gauss_cfg.write_text(json.dumps({"mean": [0, 0], "cov": [[1, 0.5], [0.5, 1]], "n": 3000}))
    prices = tmp_path / "prices.csv"
    pairs = tmp_path / "pairs.csv"
    prices.write_bytes(_cli("simulate", "heston", "--n", 2000, "--seed", 11))
    pairs.write_bytes(_cli("simulate", "gaussian", "--config", gauss_cfg, "--seed", 11))
    commands = [
        ("simulate", "gbm", "--n", 2000, "--seed", 11),
        ("simulate", "heston", "--n", 2000, "--seed", 11),
        ("simulate", "gaussian", "--config", gauss_cfg, "--seed", 11),
        ("vol", "-i", prices),
        ("volvol", "-i", prices, "--window", 20),
        ("density-np", "-i", pairs, "--normalize"),
        ("density-fit", "-i", pairs, "--order", 3),
        ("compare", "--n", 5000, "--seed", 11),
    ]
    differing = [c[0] + (" " + str(c[1]) if c[0] == "simulate" else "")
                 for c in commands if _cli(*c) != _cli(*c)]
    report(10, "determinism", not differing,
           f"{len(commands)} commands run twice, differing: {differing or 'none'}")
