"""End-to-end acceptance checks, one test per criterion.

Each test prints a single PASS/FAIL line (collected again in the terminal
summary) and fails if the criterion is not met.
"""

import math
import time

import numpy as np
import pytest

from kennedy_tomo.cli import RunConfig, sweep_rows
from kennedy_tomo.detector import (
    MEASURED_DARK_PROB,
    MEASURED_VISIBILITY,
    DetectorModel,
    ProbeEnsemble,
    simulate_frequency_table,
)
from kennedy_tomo.metrics import discrimination_error, reference_povm
from kennedy_tomo.pipeline import run_cell
from kennedy_tomo.receivers import (
    GaussianParams,
    gaussian_error,
    gaussian_error_quadrature,
    kennedy_error,
    min_gaussian_error,
    optimal_kennedy_beta,
)
from kennedy_tomo.tomography import ml_reconstruct

from oracles import exhaustive_binary_qubit_ml

HOMODYNE = 0.5 - 1 / math.sqrt(2 * math.pi)


def timed(fn, *args, **kw):
    t0 = time.perf_counter()
    out = fn(*args, **kw)
    return out, time.perf_counter() - t0


@pytest.fixture(scope="module")
def fidelity_cells():
    return timed(lambda: [run_cell(-0.70, seed) for seed in range(10)])


@pytest.fixture(scope="module")
def ideal_sweep():
    return timed(sweep_rows, RunConfig())


@pytest.fixture(scope="module")
def imperfect_sweep():
    return timed(sweep_rows, RunConfig(visibility=MEASURED_VISIBILITY, dark_prob=MEASURED_DARK_PROB))


def test_kennedy_optimum(verdict):
    (beta, err), elapsed = timed(optimal_kennedy_beta)
    exact = 0.5 - math.exp(-0.5) / math.sqrt(2)
    ok = (
        abs(beta + 1 / math.sqrt(2)) <= 1e-9
        and abs(err - exact) <= 1e-12
        and abs(err - 0.0711) <= 5e-5
        and elapsed < 1.0
    )
    verdict(1, "Kennedy optimum", ok, f"beta={beta:.12f} error={err:.9f} t={elapsed:.3f}s")


def test_gaussian_benchmark(verdict):
    opt, elapsed = timed(min_gaussian_error)
    at_zero = [gaussian_error(GaussianParams(r=r)) for r in (0.0, 0.5, 1.0)]
    spread = max(at_zero) - min(at_zero)
    m = opt.minimizer
    ok = (
        abs(opt.error - HOMODYNE) <= 1e-6
        and abs(opt.error - 0.101) <= 5e-4
        and m.theta == 0.0
        and m.phi == 0.0
        and spread < 1e-12
        and elapsed < 10.0
    )
    verdict(2, "Gaussian benchmark", ok,
            f"min={opt.error:.9f} at theta={m.theta} phi={m.phi} r-spread={spread:.1e} t={elapsed:.2f}s")


def test_cross_formalism_consistency(verdict):
    t0 = time.perf_counter()
    grid = np.linspace(-1.2, -0.3, 30)
    kennedy_gap = max(abs(discrimination_error(reference_povm(b)).p_error - kennedy_error(b)) for b in grid)
    rng = np.random.default_rng(20181012)
    gauss_gap = 0.0
    for _ in range(10):
        p = GaussianParams(
            alpha=complex(*rng.normal(scale=0.6, size=2)),
            phi=rng.uniform(-math.pi, math.pi),
            r=rng.uniform(0, 1.2),
            theta=rng.uniform(-math.pi, math.pi),
        )
        gauss_gap = max(gauss_gap, abs(gaussian_error_quadrature(p) - gaussian_error(p)))
    elapsed = time.perf_counter() - t0
    ok = kennedy_gap <= 1e-6 and gauss_gap <= 2e-4 and elapsed < 30.0
    verdict(3, "cross-formalism consistency", ok,
            f"kennedy gap={kennedy_gap:.1e} gaussian gap={gauss_gap:.1e} t={elapsed:.2f}s")


def test_tomography_fidelity(verdict, fidelity_cells):
    cells, elapsed = fidelity_cells
    passing = sum(c.f_plus > 0.995 and c.f_minus > 0.995 for c in cells)
    worst = min(min(c.f_plus, c.f_minus) for c in cells)
    ok = passing >= 9 and elapsed < 120.0
    verdict(4, "tomography fidelity", ok, f"{passing}/10 seeds above 0.995, worst={worst:.6f} t={elapsed:.1f}s")


def test_sweep_reproduction(verdict, ideal_sweep, imperfect_sweep):
    (ideal, _), t_ideal = ideal_sweep
    (imperfect, _), t_imperfect = imperfect_sweep
    betas = np.array([r["beta"] for r in ideal])
    means = np.array([r["pe_mean"] for r in ideal])
    nearest = betas[np.argmin(np.abs(betas + 0.71))]
    ideal_ok = (
        all(r["n_ok"] == 5 for r in ideal)
        and np.max(np.abs(means - np.array([r["pe_ideal"] for r in ideal]))) <= 0.01
        and betas[np.argmin(means)] == nearest
        and np.all(means < HOMODYNE)
    )
    imp_means = np.array([r["pe_mean"] for r in imperfect])
    imperfect_ok = (
        all(r["n_ok"] == 5 for r in imperfect)
        and np.all(imp_means > np.array([r["pe_ideal"] for r in imperfect]))
        and np.max(np.abs(imp_means - np.array([r["pe_imperfect"] for r in imperfect]))) <= 0.01
    )
    elapsed = t_ideal + t_imperfect
    table = " ".join(f"{b:+.2f}:{m:.4f}/{n:.4f}" for b, m, n in zip(betas, means, imp_means))
    verdict(5, "sweep reproduction", ideal_ok and imperfect_ok and elapsed < 180.0,
            f"beta:ideal/imperfect means {table} t={elapsed:.1f}s")


def test_estimator_properties(verdict, fidelity_cells, ideal_sweep, imperfect_sweep):
    t0 = time.perf_counter()
    cells = list(fidelity_cells[0]) + [c for run in (ideal_sweep, imperfect_sweep) for c in run[0][1]]
    records = [c.to_dict() if hasattr(c, "to_dict") else c for c in cells]
    monotone = all(r["monotone"] for r in records)
    completeness = max(r["completeness_error"] for r in records)
    min_eig = min(r["min_eigenvalue"] for r in records)

    ens = ProbeEnsemble([0.3, 0.5j, -0.6, 0.4 + 0.4j], shots_per_probe=2000, truncation_dim=2, seed=4)
    table = simulate_frequency_table(DetectorModel(-0.6, 0.9, 0.05), ens)
    povm, report = ml_reconstruct(ens, table)
    best, _ = exhaustive_binary_qubit_ml(ens.densities(), table.counts)
    gap = abs(report.final_log_likelihood - best)
    small_monotone = bool(np.all(np.diff(report.log_likelihood_trace) >= -1e-9))
    elapsed = time.perf_counter() - t0
    ok = (
        monotone
        and small_monotone
        and completeness <= 1e-8
        and min_eig >= -1e-9
        and povm.completeness_error() <= 1e-8
        and gap <= 1e-6
        and elapsed < 30.0
    )
    verdict(6, "ML estimator properties", ok,
            f"{len(records)} runs monotone={monotone} completeness={completeness:.1e} "
            f"min eig={min_eig:.1e} oracle gap={gap:.1e} nats t={elapsed:.1f}s")
