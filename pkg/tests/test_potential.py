from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import MINUS, PLUS, second_difference
from susydeco.potential import (HarmonicChannel, NoStableEquilibrium, NotAnEquilibrium, Polynomial,
                                SuperpotentialModel, UnstableEquilibrium, derivative,
                                effective_potential, eq21_frequency, evaluate, find_equilibria,
                                force, harmonic_params, linear_model, quartic_model, real_roots)

coeff = st.floats(min_value=-10, max_value=10, allow_nan=False, allow_infinity=False)
polys = st.lists(coeff, max_size=6).map(Polynomial)


class TestPolynomial:
    def test_derivative_examples(self):
        assert derivative(Polynomial([0, 0, 0.125])).coefficients == (0.0, 0.25)
        assert derivative(Polynomial([])).coefficients == ()
        assert derivative(Polynomial([2, -1, 0, 0.5])).coefficients == (-1.0, 0.0, 1.5)

    def test_evaluate_examples(self):
        assert evaluate(Polynomial([1, 2, 3]), 2) == 17
        assert evaluate(Polynomial([]), 5) == 0
        assert evaluate(Polynomial([0, 0, 0.35355339]), 1) == 0.35355339

    def test_trailing_zeros_trimmed(self):
        p = Polynomial([1.0, 2.0, 0.0, 0.0])
        assert p.coefficients == (1.0, 2.0)
        assert Polynomial([0.0]).is_zero()
        assert Polynomial([]).degree == -1

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            Polynomial([1.0, math.inf])

    @given(polys, st.floats(-3, 3))
    def test_evaluate_matches_numpy(self, p, x):
        ref = np.polynomial.polynomial.polyval(x, p.coefficients) if p.coefficients else 0.0
        assert evaluate(p, x) == pytest.approx(ref, rel=1e-12, abs=1e-9)

    @given(polys, polys, st.floats(-2, 2))
    def test_product_rule(self, p, q, x):
        lhs = evaluate(derivative(p * q), x)
        rhs = evaluate(derivative(p), x) * evaluate(q, x) + evaluate(p, x) * evaluate(derivative(q), x)
        assert lhs == pytest.approx(rhs, rel=1e-9, abs=1e-6)

    def test_array_evaluation(self):
        xs = np.linspace(-1, 1, 5)
        assert np.allclose(evaluate(Polynomial([1, 0, 1]), xs), 1 + xs**2)


class TestPartnerPotentials:
    def test_quartic_plus(self, quartic):
        V = effective_potential(quartic, PLUS)
        assert np.allclose(V.coefficients, [0, 0.5, 0, 0, 0.125], atol=1e-15)

    def test_zero_superpotential(self):
        m = SuperpotentialModel(Polynomial([]))
        assert effective_potential(m, PLUS).is_zero()
        assert effective_potential(m, MINUS).is_zero()
        assert force(m, PLUS).is_zero()

    def test_linear_is_split_oscillator(self):
        w, m, hb = 1.7, 2.0, 0.5
        model = linear_model(w, m, hb)
        for ch in (PLUS, MINUS):
            V = effective_potential(model, ch)
            assert np.allclose(V.coefficients, [ch.sign * hb * w / 2, 0, 0.5 * m * w * w])

    def test_quartic_force(self, quartic):
        assert np.allclose(force(quartic, PLUS).coefficients, [-0.5, 0, 0, -0.5])

    @given(polys)
    def test_force_is_minus_gradient(self, W):
        model = SuperpotentialModel(W)
        for ch in (PLUS, MINUS):
            assert force(model, ch).coefficients == (-derivative(effective_potential(model, ch))).coefficients


class TestEquilibria:
    @pytest.mark.parametrize("C", [0.1, 0.5, 1.0])
    def test_quartic_minima(self, C):
        model = quartic_model(C)
        r = (1.0 / (2.0 * C)) ** (1.0 / 3.0)
        (xp,) = find_equilibria(model, PLUS)
        (xm,) = find_equilibria(model, MINUS)
        assert xp == pytest.approx(-r, abs=1e-10)
        assert xm == pytest.approx(r, abs=1e-10)

    def test_c_half_is_unit(self, quartic):
        assert find_equilibria(quartic, PLUS) == [-1.0]
        assert find_equilibria(quartic, MINUS) == [1.0]

    def test_quadratic_well_at_origin(self):
        assert find_equilibria(linear_model(1.0), PLUS) == [0.0]

    def test_flat_has_no_minimum(self):
        with pytest.raises(NoStableEquilibrium):
            find_equilibria(SuperpotentialModel(Polynomial([])), PLUS)

    def test_constant_superpotential_has_no_minimum(self):
        with pytest.raises(NoStableEquilibrium):
            find_equilibria(SuperpotentialModel(Polynomial([0.7])), MINUS)

    def test_minima_are_sorted_and_stable(self):
        # W = x^3 - x gives a double well in each channel
        model = SuperpotentialModel(Polynomial([0.0, -1.0, 0.0, 1.0]))
        for ch in (PLUS, MINUS):
            xs = find_equilibria(model, ch)
            assert xs == sorted(xs)
            V2 = derivative(derivative(effective_potential(model, ch)))
            assert all(evaluate(V2, x) > 0 for x in xs)

    def test_real_roots_match_numpy(self):
        p = Polynomial([-6.0, 11.0, -6.0, 1.0])  # (x-1)(x-2)(x-3)
        assert np.allclose(real_roots(p), [1.0, 2.0, 3.0], atol=1e-12)


class TestHarmonicReduction:
    def test_quartic_frequency_against_finite_difference(self, quartic):
        hc = harmonic_params(quartic, PLUS, -1.0)
        V = effective_potential(quartic, PLUS)
        fd = second_difference(lambda x: evaluate(V, x), -1.0)
        assert hc.omega0 == pytest.approx(math.sqrt(1.5), rel=1e-14)
        assert hc.omega0 == pytest.approx(math.sqrt(fd), rel=1e-5)

    def test_quartic_force_and_energy(self, quartic):
        hc = harmonic_params(quartic, PLUS, -1.0)
        w = math.sqrt(1.5)
        assert hc.f == pytest.approx(-1.5 * (-1.0) * math.sqrt(1 / (2 * w)), rel=1e-14)
        assert hc.f == pytest.approx(0.9585, abs=1e-4)
        # direct Taylor model: V0 + 0.5 w^2 (x - x0)^2 expanded about 0 has constant V0 + 0.5 w^2 x0^2
        assert hc.E0 == pytest.approx(hc.V0 + 0.5 * w * w, rel=1e-14)
        assert hc.V0 == pytest.approx(-0.375, abs=1e-15)

    def test_taylor_model_tangent(self, quartic):
        hc = harmonic_params(quartic, PLUS, -1.0)
        V = effective_potential(quartic, PLUS)
        for h in (1e-3, 1e-2):
            # cubic remainder only
            assert abs(hc.potential(-1 + h) - evaluate(V, -1 + h)) < 2 * abs(h) ** 3

    def test_quadratic_well(self):
        model = linear_model(2.0)
        hc = harmonic_params(model, PLUS, 0.0)
        assert hc.omega0 == pytest.approx(2.0)
        assert hc.f == 0.0
        assert hc.E0 == hc.V0

    def test_not_an_equilibrium(self, quartic):
        with pytest.raises(NotAnEquilibrium):
            harmonic_params(quartic, PLUS, 0.3)

    def test_flat_is_unstable(self):
        with pytest.raises(UnstableEquilibrium):
            harmonic_params(SuperpotentialModel(Polynomial([])), PLUS, 0.0)

    def test_channel_validation(self):
        with pytest.raises(UnstableEquilibrium):
            HarmonicChannel.from_equilibrium(PLUS, 0.0, 0.0, 0.0)

    @pytest.mark.parametrize("mass,hbar", [(1.0, 1.0), (2.0, 0.5), (0.3, 1.7)])
    def test_mass_and_hbar(self, mass, hbar):
        model = quartic_model(0.5, mass, hbar)
        for ch in (PLUS, MINUS):
            (x0,) = find_equilibria(model, ch)
            V = effective_potential(model, ch)
            hc = harmonic_params(model, ch, x0)
            assert mass * hc.omega0**2 == pytest.approx(evaluate(derivative(derivative(V)), x0))
            assert hc.g == pytest.approx(hc.f / hbar)


class TestEq21:
    def test_quartic(self, quartic):
        assert eq21_frequency(quartic, PLUS, -1.0) == pytest.approx(1.5, rel=1e-14)
        assert eq21_frequency(quartic, MINUS, 1.0) == pytest.approx(1.5, rel=1e-14)

    def test_linear(self):
        m, w = 1.0, 1.3
        assert eq21_frequency(linear_model(w, m), PLUS, 0.0) == pytest.approx(m * w * w)

    def test_zero(self):
        assert eq21_frequency(SuperpotentialModel(Polynomial([])), PLUS, 0.0) == 0.0

    @pytest.mark.parametrize("C", [0.1, 0.5, 1.0, 2.3])
    def test_matches_curvature_at_equilibrium(self, C):
        model = quartic_model(C)
        for ch in (PLUS, MINUS):
            (x0,) = find_equilibria(model, ch)
            V2 = evaluate(derivative(derivative(effective_potential(model, ch))), x0)
            assert eq21_frequency(model, ch, x0) == pytest.approx(V2, rel=1e-10)
