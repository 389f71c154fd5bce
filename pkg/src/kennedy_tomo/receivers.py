"""Displacement photon counter and Gaussian/homodyne receivers for |+>, |->.

Conventions: x = (a + a^dag)/sqrt(2), so <x|0> = pi^(-1/4) exp(-x^2/2);
R(t) = exp(i t a^dag a); S(r) = exp(r (a^2 - a^dag^2)/2); the Gaussian
unitary is U = D(alpha) R(phi) S(r) R(theta).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize

from . import fock
from .errors import InvalidInputError
from .povm import PovmSet

LABELS = ("+", "-")
HOMODYNE_MIN_ERROR = 0.5 - 1.0 / math.sqrt(2.0 * math.pi)


def _wrap_angle(a: float) -> float:
    """Map to (-pi, pi]."""
    w = math.remainder(float(a), 2.0 * math.pi)
    return math.pi if w == -math.pi else w


# ---------------------------------------------------------------------------
# Kennedy-type receiver


def kennedy_povm(beta: complex, dim: int = 2) -> PovmSet:
    """{D^dag|0><0|D, I - D^dag|0><0|D} on the first ``dim`` levels."""
    if dim < 2:
        raise InvalidInputError("the qubit block needs dim >= 2")
    beta = complex(beta)
    if not np.isfinite(beta):
        raise InvalidInputError(f"beta must be finite, got {beta!r}")
    plus = fock.displaced_vacuum_projector(beta, dim)
    minus = np.eye(dim) - plus
    return PovmSet(np.stack([plus, minus]), LABELS, meta={"beta": [beta.real, beta.imag]})


def kennedy_error(beta: complex) -> float:
    """Equal-prior error 1/2 + Re(beta) exp(-|beta|^2)."""
    beta = complex(beta)
    return min(1.0, max(0.0, 0.5 + beta.real * math.exp(-abs(beta) ** 2)))


def optimal_kennedy_beta() -> tuple[float, float]:
    """Real displacement minimizing :func:`kennedy_error`.

    The stationarity condition (1 - 2 beta^2) exp(-beta^2) = 0 gives
    beta = -1/sqrt(2) on the error-reducing side.
    """
    beta = -1.0 / math.sqrt(2.0)
    return beta, kennedy_error(beta)


def vacuum_overlap(beta: float) -> float:
    """|<0|D(beta)|+>|^2 evaluated with displacement matrices."""
    plus, _ = fock.plus_minus_states(2)
    row = fock.displacement_matrix(beta, 2)[0]
    return float(abs(row @ plus) ** 2)


def closest_to_vacuum_beta() -> float:
    """Real beta that displaces |+> closest to the vacuum.

    Solves d/dbeta |<0|D(beta)|+>|^2 = 0 by bracketing, using
    dD/dbeta = (a^dag - a) D for real beta.
    """
    g = fock.guard_dim(2)
    a = fock.annihilation(g)
    gen = a.conj().T - a
    plus, _ = fock.plus_minus_states(g)

    def slope(b: float) -> float:
        d = fock.displacement_matrix(b, g, guard=False)
        amp = (d @ plus)[0]
        damp = (gen @ d @ plus)[0]
        return float((np.conj(amp) * damp).real)

    return float(optimize.brentq(slope, -1.5, 0.0, xtol=1e-15, rtol=4 * np.finfo(float).eps))


# ---------------------------------------------------------------------------
# Gaussian unitary followed by homodyne detection


@dataclass(frozen=True)
class GaussianParams:
    alpha: complex = 0j
    phi: float = 0.0
    r: float = 0.0
    theta: float = 0.0

    def __post_init__(self):
        if not (self.r >= 0 and math.isfinite(self.r)):
            raise InvalidInputError(f"squeezing r must be finite and >= 0, got {self.r!r}")
        object.__setattr__(self, "alpha", complex(self.alpha))
        object.__setattr__(self, "phi", _wrap_angle(self.phi))
        object.__setattr__(self, "theta", _wrap_angle(self.theta))


@dataclass(frozen=True)
class GaussianElement:
    x: float
    x_tilde: float
    epsilon: complex
    xi: complex
    norm_n: float
    matrix: np.ndarray  # 2x2, rows/cols |0>, |1>


def bogoliubov(params: GaussianParams) -> tuple[complex, complex]:
    """Coefficients (u, v) with G a G^dag = u a + v a^dag, G = R(phi) S(r) R(theta)."""
    u, v = 1.0 + 0j, 0j

    def conj_by(p: complex, q: complex):
        # W a W^dag = p a + q a^dag  =>  W (u a + v a^dag) W^dag
        nonlocal u, v
        u, v = u * p + v * np.conj(q), u * q + v * np.conj(p)

    # innermost factor acts first
    conj_by(np.exp(-1j * params.theta), 0j)
    conj_by(math.cosh(params.r), math.sinh(params.r))
    conj_by(np.exp(-1j * params.phi), 0j)
    return complex(u), complex(v)


def _wavefunction_data(params: GaussianParams) -> tuple[complex, complex]:
    """Return (kappa, slope) with <x|G|0> ~ exp(-kappa x^2/2), <x|G|1> = slope * x * <x|G|0>."""
    u, v = bogoliubov(params)
    # (u a + v a^dag) psi0 = 0 with a = (x + d/dx)/sqrt2, a^dag = (x - d/dx)/sqrt2
    kappa = (u + v) / (u - v)
    # G|1> = (u* a^dag + v* a) G|0>, and d/dx psi0 = -kappa x psi0
    slope = (np.conj(u) * (1 + kappa) + np.conj(v) * (1 - kappa)) / math.sqrt(2.0)
    return complex(kappa), complex(slope)


def _element_matrices(params: GaussianParams, x_tilde: np.ndarray) -> np.ndarray:
    kappa, slope = _wavefunction_data(params)
    x_tilde = np.asarray(x_tilde, dtype=float)
    dens = math.sqrt(kappa.real / math.pi) * np.exp(-kappa.real * x_tilde**2)
    out = np.empty(x_tilde.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = dens
    out[..., 0, 1] = dens * slope * x_tilde
    out[..., 1, 0] = dens * np.conj(slope) * x_tilde
    out[..., 1, 1] = dens * abs(slope) ** 2 * x_tilde**2
    return out


def closed_form_epsilon_xi(params: GaussianParams) -> tuple[complex, complex]:
    """Closed forms xi = e^{2i phi} tanh r, eps = e^{i(phi+theta)} sqrt2 sech r / (1 - xi)."""
    xi = np.exp(2j * params.phi) * math.tanh(params.r)
    eps = np.exp(1j * (params.phi + params.theta)) * math.sqrt(2.0) / math.cosh(params.r) / (1 - xi)
    return complex(eps), complex(xi)


def misplaced_sqrt_pi_norm_n(params: GaussianParams, x: float) -> float:
    """Variant of the prefactor N with sqrt(pi) in the exponent and |1 - xi|^2 in front.

    Kept for comparison only: it does not integrate to one (at r = 0 the
    integral is pi^(1/4)). :func:`gaussian_povm_element` uses the derived
    density instead.
    """
    _, xi = closed_form_epsilon_xi(params)
    sech = 1.0 / math.cosh(params.r)
    xt = x - math.sqrt(2.0) * params.alpha.real
    den = math.sqrt(math.pi) * abs(1 - xi) ** 2
    return sech / den * math.exp(-(sech**2) / den * xt**2)


def gaussian_povm_element(params: GaussianParams, x: float) -> GaussianElement:
    """Qubit block of U^dag |x><x| U built from the wavefunctions of U|0>, U|1>."""
    x_tilde = float(x) - math.sqrt(2.0) * params.alpha.real
    matrix = _element_matrices(params, np.array(x_tilde))
    _, slope = _wavefunction_data(params)
    u, v = bogoliubov(params)
    return GaussianElement(
        x=float(x),
        x_tilde=x_tilde,
        epsilon=slope,
        xi=v / u,
        norm_n=float(matrix[0, 0].real),
        matrix=matrix,
    )


def gaussian_decision_rule(params: GaussianParams) -> int:
    """Sign s such that outcome "+" is declared when s * x_tilde >= 0."""
    _, slope = _wavefunction_data(params)
    return 1 if slope.real >= 0 else -1


def gaussian_error(params: GaussianParams) -> float:
    """Closed-form equal-prior error of the Gaussian unitary + homodyne receiver."""
    t = math.tanh(params.r)
    num = abs(math.cos(params.theta + params.phi) - math.cos(params.theta - params.phi) * t)
    den2 = 1.0 - 2.0 * math.cos(2.0 * params.phi) * t + t * t
    if den2 < 1e-300:
        warnings.warn("degenerate Gaussian parameters (tanh r -> 1, phi -> 0); returning 0.5", RuntimeWarning)
        return 0.5
    return 0.5 - num / (math.sqrt(2.0 * math.pi) * math.sqrt(den2))


def _gaussian_error_grid(theta, phi, r):
    t = np.tanh(r)
    num = np.abs(np.cos(theta + phi) - np.cos(theta - phi) * t)
    den = np.sqrt(np.maximum(1.0 - 2.0 * np.cos(2.0 * phi) * t + t * t, 1e-300))
    return 0.5 - num / (math.sqrt(2.0 * math.pi) * den)


def gaussian_error_quadrature(params: GaussianParams) -> float:
    """Equal-prior error from integrating the element matrices over half-lines."""
    kappa, _ = _wavefunction_data(params)
    sigma = 1.0 / math.sqrt(2.0 * kappa.real)
    s = gaussian_decision_rule(params)
    plus, minus = fock.plus_minus_states(2)

    def integrand(z: float, state: np.ndarray) -> float:
        m = _element_matrices(params, np.array(z * sigma))
        return float((state.conj() @ m @ state).real) * sigma

    # "+" region is s * x_tilde >= 0, i.e. z in [0, 10] for s = 1
    lo, hi = (0.0, 10.0) if s > 0 else (-10.0, 0.0)
    opts = dict(epsabs=1e-10, epsrel=1e-10, limit=200)
    minus_as_plus = integrate.quad(integrand, lo, hi, args=(minus,), **opts)[0]
    plus_as_plus = integrate.quad(integrand, lo, hi, args=(plus,), **opts)[0]
    return 0.5 * (minus_as_plus + (1.0 - plus_as_plus))


@dataclass(frozen=True)
class GaussianOptimum:
    error: float
    minimizer: GaussianParams  # canonical representative of the minimizing set
    refined: GaussianParams  # raw output of the local refinement


def min_gaussian_error(n_angle: int = 24, n_r: int = 13, r_max: float = 3.0) -> GaussianOptimum:
    """Minimize :func:`gaussian_error` over (theta, phi, r in [0, r_max]).

    A grid containing theta = phi = 0 is searched, then refined locally.
    The minimizing set is degenerate; among grid points attaining the
    refined minimum to 1e-12 the one with the smallest |theta| + |phi| is
    reported as ``minimizer``.
    """
    half = n_angle // 2
    angles = 2.0 * math.pi * np.arange(-half + 1, n_angle - half + 1) / n_angle  # exact 0 included
    rs = np.linspace(0.0, r_max, n_r)
    th, ph, rr = np.meshgrid(angles, angles, rs, indexing="ij")
    vals = _gaussian_error_grid(th, ph, rr)
    i = np.unravel_index(np.argmin(vals), vals.shape)

    res = optimize.minimize(
        lambda p: _gaussian_error_grid(p[0], p[1], p[2]),
        x0=[th[i], ph[i], rr[i]],
        method="L-BFGS-B",
        bounds=[(-math.pi, math.pi), (-math.pi, math.pi), (0.0, r_max)],
        options={"ftol": 1e-15, "gtol": 1e-12},
    )
    best = min(float(res.fun), float(vals[i]))
    ties = np.argwhere(vals <= best + 1e-12)
    k = min(ties, key=lambda idx: (abs(th[tuple(idx)]) + abs(ph[tuple(idx)]), rr[tuple(idx)]))
    k = tuple(k)
    canonical = GaussianParams(phi=float(ph[k]), r=float(rr[k]), theta=float(th[k]))
    refined = GaussianParams(phi=float(res.x[1]), r=float(res.x[2]), theta=float(res.x[0]))
    return GaussianOptimum(best, canonical, refined)


def homodyne_error_quadrature() -> float:
    """Plain x-homodyne on |+>/|->: "+" for x >= 0, integrated directly."""

    def density(x: float, sign: float) -> float:
        psi = math.pi**-0.25 * math.exp(-x * x / 2) * (1 + sign * math.sqrt(2.0) * x) / math.sqrt(2.0)
        return psi * psi

    opts = dict(epsabs=1e-12, epsrel=1e-12)
    plus_wrong = integrate.quad(density, -np.inf, 0.0, args=(1.0,), **opts)[0]
    minus_wrong = integrate.quad(density, 0.0, np.inf, args=(-1.0,), **opts)[0]
    return 0.5 * plus_wrong + 0.5 * minus_wrong
