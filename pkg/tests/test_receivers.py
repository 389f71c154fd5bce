import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st
from numpy.testing import assert_allclose
from scipy import integrate

from kennedy_tomo import fock
from kennedy_tomo.errors import InvalidInputError
from kennedy_tomo.receivers import (
    HOMODYNE_MIN_ERROR,
    GaussianParams,
    closed_form_epsilon_xi,
    closest_to_vacuum_beta,
    gaussian_decision_rule,
    gaussian_error,
    gaussian_error_quadrature,
    gaussian_povm_element,
    homodyne_error_quadrature,
    kennedy_error,
    kennedy_povm,
    min_gaussian_error,
    misplaced_sqrt_pi_norm_n,
    optimal_kennedy_beta,
    vacuum_overlap,
)

from oracles import displacement_element, gaussian_element_fock

GOLDEN_BETA = -(math.sqrt(5) - 1) / 2


def random_params(rng, with_alpha=True):
    alpha = complex(*rng.normal(scale=0.6, size=2)) if with_alpha else 0j
    return GaussianParams(alpha=alpha, phi=rng.uniform(-math.pi, math.pi), r=rng.uniform(0, 1.2),
                          theta=rng.uniform(-math.pi, math.pi))


class TestKennedy:
    def test_zero_displacement_gives_vacuum_projector(self):
        povm = kennedy_povm(0, 3)
        assert_allclose(povm["+"], np.diag([1, 0, 0]), atol=1e-15)

    def test_vacuum_element_matches_laguerre(self):
        beta = -1 / math.sqrt(2)
        povm = kennedy_povm(beta, 2)
        expected = abs(displacement_element(beta, 0, 0)) ** 2
        assert povm["+"][0, 0].real == pytest.approx(expected, abs=1e-12)
        assert povm["+"][0, 0].real == pytest.approx(math.exp(-0.5), abs=1e-12)

    def test_full_space_trace_is_one(self):
        assert np.trace(kennedy_povm(-0.7 + 0.2j, 30)["+"]).real == pytest.approx(1.0, abs=1e-10)

    @given(st.complex_numbers(max_magnitude=1.5, allow_nan=False, allow_infinity=False))
    def test_povm_constraints(self, beta):
        povm = kennedy_povm(beta, 15)
        assert_allclose(povm["+"] + povm["-"], np.eye(15), atol=1e-15)
        assert povm.min_eigenvalue() >= -1e-9
        w = np.linalg.eigvalsh(povm["+"])
        assert np.all(np.abs(w[:-1]) < 1e-8)  # rank one

    def test_error_values(self):
        assert kennedy_error(-1 / math.sqrt(2)) == pytest.approx(0.0711, abs=5e-5)
        assert kennedy_error(0) == 0.5
        assert kennedy_error(-0.70) == pytest.approx(0.5 - 0.70 * math.exp(-0.49), abs=1e-15)
        assert kennedy_error(-0.70) == pytest.approx(0.07116, abs=1e-5)

    @pytest.mark.parametrize("beta", np.linspace(-1.5, 1.0, 11))
    def test_closed_form_matches_operator_pipeline(self, beta):
        povm = kennedy_povm(beta, 15)
        plus, minus = fock.plus_minus_states(15)
        pe = 0.5 * ((minus @ povm["+"] @ minus) + (plus @ povm["-"] @ plus)).real
        assert pe == pytest.approx(kennedy_error(beta), abs=1e-6)

    def test_optimum(self):
        beta, err = optimal_kennedy_beta()
        assert beta == pytest.approx(-0.70711, abs=5e-6)
        assert err == pytest.approx(0.0711, abs=5e-5)
        grid = np.linspace(-2, 2, 40001)
        numeric = grid[np.argmin([kennedy_error(b) for b in grid])]
        assert numeric == pytest.approx(beta, abs=1e-4)
        assert beta != pytest.approx(GOLDEN_BETA, abs=1e-2)

    def test_closest_to_vacuum(self):
        b = closest_to_vacuum_beta()
        assert b == pytest.approx(GOLDEN_BETA, abs=1e-9)
        assert b == pytest.approx(-0.6180, abs=5e-5)

    def test_vacuum_overlap_ordering(self):
        def direct(beta):  # |<0|D(beta)|+>|^2 from the Laguerre elements
            amp = (displacement_element(beta, 0, 0) + displacement_element(beta, 0, 1)) / math.sqrt(2)
            return abs(amp) ** 2

        assert direct(GOLDEN_BETA) > direct(-1 / math.sqrt(2))
        assert vacuum_overlap(GOLDEN_BETA) == pytest.approx(direct(GOLDEN_BETA), abs=1e-12)
        assert vacuum_overlap(0.0) == pytest.approx(0.5, abs=1e-15)


class TestGaussianElement:
    def test_identity_params_matrix(self):
        x = 0.63
        el = gaussian_povm_element(GaussianParams(), x)
        expected = math.exp(-x * x) / math.sqrt(math.pi) * np.array([[1, math.sqrt(2) * x], [math.sqrt(2) * x, 2 * x * x]])
        assert_allclose(el.matrix, expected, atol=1e-15)
        # direct Hermite-function products
        h0 = math.pi**-0.25 * math.exp(-x * x / 2)
        h1 = math.pi**-0.25 * math.sqrt(2) * x * math.exp(-x * x / 2)
        assert_allclose(el.matrix, np.outer([h0, h1], [h0, h1]), atol=1e-15)

    def test_identity_epsilon(self):
        el = gaussian_povm_element(GaussianParams(), 0.1)
        assert el.epsilon == pytest.approx(math.sqrt(2), abs=1e-15)
        assert el.xi == 0

    @pytest.mark.parametrize("params", [
        GaussianParams(),
        GaussianParams(alpha=0.4 - 0.3j, phi=0.5, r=0.6, theta=-0.8),
        GaussianParams(alpha=-0.2 + 0.1j, phi=2.2, r=1.0, theta=1.3),
    ])
    def test_completeness_on_qubit_block(self, params):
        total = np.zeros((2, 2), dtype=complex)
        for i in range(2):
            for j in range(2):
                for part in (np.real, np.imag):
                    val = integrate.quad(lambda x: part(gaussian_povm_element(params, x).matrix[i, j]),
                                         -12, 12, epsabs=1e-10, limit=200)[0]
                    total[i, j] += val if part is np.real else 1j * val
        assert_allclose(total, np.eye(2), atol=1e-6)

    def test_matches_fock_space_wavefunctions(self, rng):
        for _ in range(5):
            p = random_params(rng)
            p = GaussianParams(alpha=p.alpha, phi=p.phi, r=min(p.r, 0.9), theta=p.theta)
            for x in rng.uniform(-2, 2, size=3):
                oracle = gaussian_element_fock(p.alpha, p.phi, p.r, p.theta, x)
                assert_allclose(gaussian_povm_element(p, x).matrix, oracle, atol=1e-8)

    def test_proportional_to_closed_form_structure(self, rng):
        for _ in range(20):
            p = random_params(rng)
            eps, xi = closed_form_epsilon_xi(p)
            x = rng.uniform(-2, 2)
            el = gaussian_povm_element(p, x)
            m = el.matrix / el.matrix[0, 0]
            assert m[0, 1] == pytest.approx(eps * el.x_tilde, abs=1e-8)
            assert m[1, 0] == pytest.approx(np.conj(eps) * el.x_tilde, abs=1e-8)
            assert m[1, 1].real == pytest.approx(abs(eps) ** 2 * el.x_tilde**2, abs=1e-8)
            assert el.xi == pytest.approx(xi, abs=1e-12)
            assert np.linalg.eigvalsh(el.matrix).min() >= -1e-12

    def test_misplaced_sqrt_pi_prefactor_is_not_normalized(self):
        # derived density integrates to one; the misplaced-sqrt(pi) variant does not
        p = GaussianParams()
        derived = integrate.quad(lambda x: gaussian_povm_element(p, x).norm_n, -12, 12)[0]
        variant = integrate.quad(lambda x: misplaced_sqrt_pi_norm_n(p, x), -12, 12)[0]
        assert derived == pytest.approx(1.0, abs=1e-10)
        assert variant == pytest.approx(math.pi**0.25, abs=1e-8)

    def test_negative_squeezing_rejected(self):
        with pytest.raises(InvalidInputError):
            GaussianParams(r=-0.1)

    def test_angles_wrapped(self):
        p = GaussianParams(phi=3 * math.pi, theta=-math.pi)
        assert p.phi == pytest.approx(math.pi)
        assert p.theta == pytest.approx(math.pi)


class TestDecisionRule:
    def test_identity(self):
        assert gaussian_decision_rule(GaussianParams()) == 1

    @pytest.mark.parametrize("r", [0.0, 0.3, 1.0, 2.5])
    def test_real_epsilon_for_zero_angles(self, r):
        assert gaussian_decision_rule(GaussianParams(r=r)) == 1

    def test_theta_pi_flips(self):
        assert gaussian_decision_rule(GaussianParams(theta=math.pi)) == -1
        assert gaussian_decision_rule(GaussianParams(theta=math.pi, r=0.5)) == -1


class TestGaussianError:
    def test_homodyne_value(self):
        assert gaussian_error(GaussianParams()) == pytest.approx(0.5 - 1 / math.sqrt(2 * math.pi), abs=1e-15)
        assert gaussian_error(GaussianParams()) == pytest.approx(0.101, abs=5e-4)

    def test_r_independent_at_zero_angles(self):
        vals = [gaussian_error(GaussianParams(r=r)) for r in (0.2, 0.5, 1.0)]
        assert max(vals) - min(vals) < 1e-12

    def test_quadrature_angle(self):
        assert gaussian_error(GaussianParams(theta=math.pi / 2)) == pytest.approx(0.5, abs=1e-15)

    def test_alpha_invariance(self, rng):
        base = GaussianParams(phi=0.3, r=0.4, theta=-0.2)
        ref = gaussian_error(base)
        for _ in range(5):
            a = complex(*rng.normal(size=2))
            assert abs(gaussian_error(GaussianParams(alpha=a, phi=0.3, r=0.4, theta=-0.2)) - ref) < 1e-12

    def test_closed_form_matches_quadrature(self, rng):
        for _ in range(10):
            p = random_params(rng)
            assert gaussian_error_quadrature(p) == pytest.approx(gaussian_error(p), abs=2e-4)

    def test_degenerate_parameters_warn(self):
        # tanh(r) rounds to 1 for r = 40, and phi = 0 makes the denominator vanish
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            assert gaussian_error(GaussianParams(r=40.0)) == 0.5
        assert any(issubclass(w.category, RuntimeWarning) for w in caught)

    def test_never_below_homodyne(self, rng):
        for _ in range(200):
            assert gaussian_error(random_params(rng, with_alpha=False)) >= HOMODYNE_MIN_ERROR - 1e-14


class TestMinGaussian:
    def test_minimum(self):
        opt = min_gaussian_error()
        assert opt.error == pytest.approx(0.5 - 1 / math.sqrt(2 * math.pi), abs=1e-6)
        assert opt.error == pytest.approx(0.101, abs=5e-4)

    def test_canonical_minimizer(self):
        opt = min_gaussian_error()
        assert opt.minimizer.theta == 0.0
        assert math.remainder(opt.minimizer.phi, math.pi) == pytest.approx(0.0, abs=1e-12)

    def test_matches_homodyne_quadrature(self):
        assert homodyne_error_quadrature() == pytest.approx(min_gaussian_error().error, abs=1e-8)

    def test_grid_oracle_agrees(self):
        th, ph, r = np.meshgrid(np.linspace(-math.pi, math.pi, 37), np.linspace(-math.pi, math.pi, 37),
                                np.linspace(0, 3, 7), indexing="ij")
        vals = np.vectorize(lambda a, b, c: gaussian_error(GaussianParams(phi=b, r=c, theta=a)))(th, ph, r)
        assert vals.min() == pytest.approx(min_gaussian_error().error, abs=1e-9)

    def test_minimum_reached_for_every_phi_and_r(self, rng):
        # maximizing the numerator over theta gives exactly the denominator
        for _ in range(20):
            phi, r = rng.uniform(-math.pi, math.pi), rng.uniform(0, 2)
            t = math.tanh(r)
            theta = math.atan2(-math.sin(phi) * (1 + t), math.cos(phi) * (1 - t))
            assert gaussian_error(GaussianParams(phi=phi, r=r, theta=theta)) == pytest.approx(HOMODYNE_MIN_ERROR, abs=1e-12)

    def test_headline_ordering(self):
        assert optimal_kennedy_beta()[1] < min_gaussian_error().error
