"""Maximum-likelihood detector tomography with the R Pi R fixed-point iteration."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import fock
from .detector import FrequencyTable, ProbeEnsemble
from .errors import InvalidInputError, NumericalFailure
from .povm import PovmSet

MONOTONE_TOL = 1e-9
MIN_DAMPING = 2.0**-40
MAX_PULLBACKS = 30
# an extrapolated point may shrink an element's smallest eigenvalue to at most
# this fraction of the two-step iterate's, so the boundary is approached but never hit
BOUNDARY_FRACTION = 0.1


@dataclass(frozen=True)
class MlConfig:
    max_iterations: int = 10_000
    convergence_tol: float = 1e-8
    prob_floor: float = 1e-12
    eig_floor: float = 1e-12
    extrapolate: bool = True

    def __post_init__(self):
        for name in ("max_iterations", "convergence_tol", "prob_floor", "eig_floor"):
            if not getattr(self, name) > 0:
                raise InvalidInputError(f"{name} must be positive")


@dataclass
class MlReport:
    iterations_run: int = 0
    final_log_likelihood: float = float("nan")
    log_likelihood_trace: list[float] = field(default_factory=list)
    max_constraint_violation: float = float("nan")
    converged: bool = False
    constraints_ok: bool = False
    probed_support_dim: int = 0
    damped_steps: int = 0
    extrapolated_steps: int = 0
    stalled: bool = False

    def to_dict(self, with_trace: bool = False) -> dict:
        d = {k: v for k, v in self.__dict__.items() if k != "log_likelihood_trace"}
        if with_trace:
            d["log_likelihood_trace"] = list(self.log_likelihood_trace)
        return d


def _probabilities(rhos: np.ndarray, elements: np.ndarray) -> np.ndarray:
    """p[m, l] = Tr(rho_m Pi_l)."""
    return np.einsum("mij,lji->ml", rhos, elements).real


def _log_likelihood(f: np.ndarray, p: np.ndarray, prob_floor: float) -> float:
    terms = np.where(f > 0, f * np.log(np.maximum(p, prob_floor)), 0.0)
    return float(terms.sum())


def _check_shapes(ensemble: ProbeEnsemble, table: FrequencyTable, dim: int):
    if table.counts.shape[0] != len(ensemble):
        raise InvalidInputError(f"table has {table.counts.shape[0]} rows but the ensemble has {len(ensemble)} probes")
    if dim != ensemble.truncation_dim:
        raise InvalidInputError(f"POVM dimension {dim} differs from probe truncation {ensemble.truncation_dim}")


def log_likelihood(povm: PovmSet, ensemble: ProbeEnsemble, table: FrequencyTable, prob_floor: float = 1e-12) -> float:
    """sum_{m,l} f_ml ln Tr(rho_m Pi_l); zero counts contribute exactly 0."""
    _check_shapes(ensemble, table, povm.dim)
    if povm.n_outcomes != table.counts.shape[1]:
        raise InvalidInputError("POVM outcome count differs from the table's")
    p = _probabilities(ensemble.densities(), povm.elements)
    return _log_likelihood(table.counts.astype(float), p, prob_floor)


def _rpr_step(rhos, f, elements, cfg: MlConfig):
    p = np.maximum(_probabilities(rhos, elements), cfg.prob_floor)
    r = np.einsum("ml,mij->lij", f / p, rhos)
    g = r @ elements @ r
    lam_inv, rank = fock.psd_inv_sqrt(_hermitize(g.sum(axis=0)), floor=cfg.eig_floor)
    new = lam_inv @ g @ lam_inv
    d = elements.shape[1]
    if rank < d:
        # unprobed complement keeps its previous value
        q_perp = np.eye(d) - lam_inv @ _hermitize(g.sum(axis=0)) @ lam_inv
        q_perp = _hermitize(q_perp)
        new = new + q_perp @ elements @ q_perp
    return _hermitize(new), rank


def _min_eigs(elements: np.ndarray) -> np.ndarray:
    return np.linalg.eigvalsh(elements)[:, 0]


def _accelerated(f, rhos, elements, x1, plain, cfg: MlConfig):
    """Squared extrapolation over three applications of the map, or None.

    With r = F(x) - x and v = F(F(x)) - 2F(x) + x the trial point is
    x - 2a r + a^2 v, a = -|r|/|v|, pulled back towards a = -1 (which is
    F(F(x)) itself) until it keeps positivity; one more map application
    stabilizes it. Every trial point resolves the identity because r and v
    sum to zero over the elements. The result is returned only if it beats
    the plain step ``x1`` (likelihood ``plain``).
    """
    x2, _ = _rpr_step(rhos, f, x1, cfg)
    r = x1 - elements
    v = x2 - x1 - r
    nr, nv = np.linalg.norm(r), np.linalg.norm(v)
    if not (np.isfinite(nr) and np.isfinite(nv)) or nv == 0.0:
        return None
    floor = BOUNDARY_FRACTION * np.maximum(_min_eigs(x2), 0.0)
    a = min(-nr / nv, -1.0)
    for _ in range(MAX_PULLBACKS):
        trial = _hermitize(elements - 2 * a * r + a * a * v)
        if np.all(_min_eigs(trial) >= floor):
            out, _ = _rpr_step(rhos, f, trial, cfg)
            if np.all(np.isfinite(out)):
                value = _log_likelihood(f, _probabilities(rhos, out), cfg.prob_floor)
                if value > plain:
                    return out, value
        if a == -1.0:
            break
        a = max((a - 1.0) / 2.0, -1.0) if a < -2.0 else -1.0
    return None


def _hermitize(a: np.ndarray) -> np.ndarray:
    return (a + np.swapaxes(a, -1, -2).conj()) / 2


def ml_reconstruct(
    ensemble: ProbeEnsemble,
    table: FrequencyTable,
    config: MlConfig | None = None,
    labels: tuple[str, ...] = ("+", "-"),
) -> tuple[PovmSet, MlReport]:
    """Maximum-likelihood POVM for the given probes and counts.

    Starts from Pi_l = I/L and applies Pi_l <- lam^-1 R_l Pi_l R_l lam^-1 with
    R_l = sum_m f_ml / Tr(rho_m Pi_l) rho_m and lam = (sum_l R_l Pi_l R_l)^(1/2).
    A step that lowers the likelihood by more than 1e-9 is retried as a convex
    mix with the previous iterate, halving the mixing weight each time. A step
    that reverses the previous one (the raw map can 2-cycle, e.g. for d = 1)
    starts from weight 1/2. An undamped step is replaced by a squared
    extrapolation over further map applications when that raises the
    likelihood more; fixed points are unchanged, but the slow linear drift
    towards rank-deficient optima is shortened by orders of magnitude. Stops when no element moves by more than
    ``convergence_tol`` (Frobenius).

    Probes are summed in a canonical order, so permuting the input rows gives
    a bit-identical result.
    """
    cfg = config or MlConfig()
    d = ensemble.truncation_dim
    _check_shapes(ensemble, table, d)
    n_out = table.counts.shape[1]
    if len(labels) != n_out:
        raise InvalidInputError("one label per outcome column is required")

    order = np.lexsort((*table.counts.T[::-1], ensemble.probes.imag, ensemble.probes.real))
    rhos = ensemble.densities()[order]
    f = table.counts.astype(float)[order]
    elements = np.stack([np.eye(d, dtype=complex) / n_out] * n_out)
    current = _log_likelihood(f, _probabilities(rhos, elements), cfg.prob_floor)
    report = MlReport()
    last_step = None

    for it in range(1, cfg.max_iterations + 1):
        proposal, rank = _rpr_step(rhos, f, elements, cfg)
        report.probed_support_dim = rank
        if not np.all(np.isfinite(proposal)):
            raise NumericalFailure("non-finite POVM update", iteration=it)

        step = proposal - elements
        s = 1.0
        if last_step is not None:
            overlap = np.vdot(last_step, step).real
            if overlap < -0.5 * np.linalg.norm(last_step) * np.linalg.norm(step):
                s = 0.5
        while True:
            candidate = proposal if s == 1.0 else (1 - s) * elements + s * proposal
            value = _log_likelihood(f, _probabilities(rhos, candidate), cfg.prob_floor)
            if not np.isfinite(value):
                raise NumericalFailure("non-finite log-likelihood", iteration=it)
            if value >= current - MONOTONE_TOL:
                break
            s /= 2
            if s < MIN_DAMPING:
                break
        if s < MIN_DAMPING:
            # no ascent direction above rounding noise; keep the last accepted iterate
            report.stalled = True
            break
        if s < 1.0:
            report.damped_steps += 1
        elif cfg.extrapolate:
            fast = _accelerated(f, rhos, elements, candidate, value, cfg)
            if fast is not None:
                report.extrapolated_steps += 1
                candidate, value = fast
        last_step = candidate - elements

        change = float(np.max(np.linalg.norm(candidate - elements, axis=(1, 2))))
        elements, current = candidate, value
        report.log_likelihood_trace.append(current)
        report.iterations_run = it
        if change < cfg.convergence_tol:
            report.converged = True
            break

    povm = PovmSet(elements, labels)
    report.final_log_likelihood = current
    report.max_constraint_violation = povm.constraint_violation()
    report.constraints_ok = report.max_constraint_violation <= 1e-6
    return povm, report


def truncate_povm(povm: PovmSet, sub_dim: int) -> PovmSet:
    """Top-left ``sub_dim`` block of each element (PSD, not complete)."""
    if sub_dim > povm.dim:
        raise InvalidInputError(f"sub_dim {sub_dim} exceeds POVM dimension {povm.dim}")
    out = povm.truncate(sub_dim)
    return PovmSet(out.elements, out.labels, complete=False, meta=out.meta) if sub_dim == povm.dim else out
