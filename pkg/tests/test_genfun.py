import math
from fractions import Fraction

import numpy as np
import pytest

from cubelab.expsums import cubic_gauss_sum
from cubelab.genfun import (
    QuadratureError,
    estimate_bilinear_prefactor,
    fractional_phases,
    interval_spec,
    rho_kernel,
    set_spec,
    sigma_kernel,
    spec_from_params,
    v_integral,
    w_integral,
    weyl_sum,
)
from cubelab.params import PreconditionError, derive_parameters
from cubelab.smooth import smooth_interval_set, smooth_set


class TestFractionalPhases:
    def test_against_exact_fractions(self):
        rng = np.random.default_rng(42)
        xs = np.array([1, 2, 17, 1000, 54321, 207000], dtype=np.int64)
        for alpha in [0.1, 0.123456789, 0.9999999, rng.random(), rng.random()]:
            exact = [float(Fraction(alpha) * int(x) ** 3 % 1) for x in xs]
            got = fractional_phases(alpha, xs)
            assert np.allclose(got, exact, atol=1e-13), alpha

    def test_big_value_fallback_matches(self):
        # Above the float-exact cube range the dyadic big-int path takes over.
        xs = np.array([300_000, 1_234_567], dtype=np.int64)
        alpha = 0.7182818284590452
        exact = [float(Fraction(alpha) * int(x) ** 3 % 1) for x in xs]
        got = fractional_phases(alpha, xs)
        assert np.allclose(got, exact, atol=1e-13)

    def test_integer_alpha_zero_phase(self):
        xs = np.arange(1, 50, dtype=np.int64)
        assert np.all(fractional_phases(0.0, xs) == 0.0)


class TestWeylSum:
    def test_zero_phase_counts_terms(self):
        P = 100
        assert weyl_sum(0.0, interval_spec(P, 2 * P)) == pytest.approx(100.0)

    def test_two_term_cancellation(self):
        # x in {3, 4}: e(27/2) + e(32) = -1 + 1 = 0.
        got = weyl_sum(0.5, interval_spec(2, 4))
        assert got == pytest.approx(0.0, abs=1e-12)

    def test_bilinear_zero_phase_counts_pairs(self):
        params = derive_parameters(864, 1 / 3, eta=0.5, L_override=4.0)
        spec = spec_from_params("K", params)
        expected = sum(
            len(smooth_interval_set(max(params.P / p, 1.0), max(2 * params.P / params.Y, 1.0), params.eta))
            for p, _ in spec.pairs
        )
        assert weyl_sum(0.0, spec) == pytest.approx(expected)

    def test_periodicity(self):
        spec = interval_spec(10, 20)
        for alpha in (3 / 1024, 0.25, 917 / 2048):
            a = weyl_sum(alpha, spec)
            b = weyl_sum(alpha + 1.0, spec)
            assert abs(a - b) < 1e-10

    def test_rational_point_identity(self):
        # Full-period sums collapse to multiples of the complete sum:
        # sum_{1<=x<=q*m} e((a/q) x^3) = m * S(q, a).
        for q in (2, 3, 5, 7, 12, 30):
            for a in (1, q - 1):
                for m in (1, 4, 20):
                    lhs = weyl_sum(a / q, interval_spec(0, q * m))
                    rhs = m * cubic_gauss_sum(q, a)
                    assert abs(lhs - rhs) < 1e-9 * q * m, (q, a, m)

    def test_modulus_bounded_by_term_count(self):
        rng = np.random.default_rng(7)
        spec = set_spec(sorted(rng.choice(np.arange(1, 5000), 64, replace=False).tolist()))
        for alpha in rng.random(10):
            assert abs(weyl_sum(float(alpha), spec)) <= 64 + 1e-9

    def test_oversize_guard(self):
        with pytest.raises(PreconditionError):
            weyl_sum(0.1, interval_spec(0, 2 * 10**8))

    def test_spec_validation(self):
        with pytest.raises(PreconditionError):
            interval_spec(5, 3)
        with pytest.raises(PreconditionError):
            set_spec([3, 3, 5])
        with pytest.raises(PreconditionError):
            set_spec([0, 2])


def _simpson_oracle(beta: float, lo: float, hi: float, m: int = 1 << 21) -> complex:
    g = np.linspace(lo, hi, m + 1)
    vals = np.exp(2j * np.pi * beta * g**3)
    h = (hi - lo) / m
    return complex(h / 3 * (vals[0] + vals[-1] + 4 * vals[1:-1:2].sum() + 2 * vals[2:-1:2].sum()))


class TestOscillatoryIntegrals:
    def test_zero_phase_exact(self):
        for Z in (0.5, 1.0, 7.0, 250.0):
            assert v_integral(0.0, Z).value == pytest.approx(Z, rel=1e-12)
            assert w_integral(0.0, Z).value == pytest.approx(Z, rel=1e-12)

    def test_conjugate_symmetry(self):
        for beta, Z in [(0.37, 2.0), (1.5, 3.0), (1e-3, 10.0)]:
            plus = v_integral(beta, Z).value
            minus = v_integral(-beta, Z).value
            assert minus == pytest.approx(plus.conjugate(), abs=1e-11)

    def test_v_against_brute_quadrature(self):
        Z = 10.0
        beta = 1 / Z**3
        got = v_integral(beta, Z, tol=1e-10).value
        oracle = _simpson_oracle(beta, Z, 2 * Z)
        assert abs(got - oracle) < 1e-8

    def test_w_against_brute_quadrature(self):
        got = w_integral(1000.0, 1.0, tol=1e-10).value
        oracle = _simpson_oracle(1000.0, 0.0, 1.0)
        assert abs(got - oracle) < 1e-8

    def test_w_scaling_law(self):
        # w(beta; Z) = Z * w(beta Z^3; 1)
        for beta, Z in [(0.02, 3.0), (0.5, 2.0), (1e-4, 10.0)]:
            lhs = w_integral(beta, Z, tol=1e-11).value
            rhs = Z * w_integral(beta * Z**3, 1.0, tol=1e-11).value
            assert lhs == pytest.approx(rhs, abs=1e-9)

    def test_v_scaling_law(self):
        for beta, Z in [(0.02, 3.0), (0.37, 2.0)]:
            lhs = v_integral(beta, Z, tol=1e-11).value
            rhs = Z * v_integral(beta * Z**3, 1.0, tol=1e-11).value
            assert lhs == pytest.approx(rhs, abs=1e-9)

    def test_error_estimate_below_tol(self):
        out = v_integral(0.01, 5.0, tol=1e-9)
        assert out.abs_error_estimate <= 1e-9

    def test_magnitude_bounded_by_range(self):
        for beta in np.geomspace(1e-6, 10, 12):
            assert abs(v_integral(float(beta), 4.0).value) <= 4.0 + 1e-9
            assert abs(w_integral(float(beta), 4.0).value) <= 4.0 + 1e-9

    def test_v_decay_envelope(self):
        # |v(beta; P)| * (1 + P^3 |beta|) <= 4P over a log-spaced grid.
        P = 50.0
        worst = 0.0
        for x in np.geomspace(1e-3, 1e4, 30):
            beta = float(x / P**3)
            worst = max(worst, abs(v_integral(beta, P, tol=1e-11).value) * (1 + P**3 * beta) / P)
        assert worst <= 4.0, f"observed sup = {worst}"

    def test_w_decay_envelope(self):
        U = 50.0
        worst = 0.0
        for x in np.geomspace(1e-3, 1e4, 30):
            beta = float(x / U**3)
            worst = max(worst, abs(w_integral(beta, U, tol=1e-11).value)
                        * (1 + U**3 * beta) ** (1 / 3) / U)
        assert worst <= 4.0, f"observed sup = {worst}"

    def test_budget_failure_raises(self):
        with pytest.raises(QuadratureError):
            v_integral(5e4, 100.0, tol=1e-14)

    def test_rejects_bad_args(self):
        with pytest.raises(PreconditionError):
            v_integral(0.1, -1.0)
        with pytest.raises(PreconditionError):
            w_integral(0.1, 1.0, tol=0.0)


class TestKernels:
    def test_rho_kernel_zero_phase(self):
        params = derive_parameters(864, 1 / 3, eta=0.5, L_override=4.0)
        h0 = len(smooth_set(params.R, params.eta))
        got = rho_kernel(0.0, params, C=0.7)
        assert got == pytest.approx(0.7 * h0**2 * params.P**2, rel=1e-10)

    def test_rho_kernel_conjugate_symmetry(self):
        params = derive_parameters(864, 1 / 3, eta=0.5, L_override=4.0)
        a = rho_kernel(2e-4, params, C=1.0)
        b = rho_kernel(-2e-4, params, C=1.0)
        assert b == pytest.approx(a.conjugate(), abs=1e-8)

    def test_rho_kernel_composition(self):
        params = derive_parameters(864, 1 / 3, eta=0.5, L_override=4.0)
        beta, C = 3e-4, 1.3
        h0 = len(smooth_set(params.R, params.eta))
        v = v_integral(beta, params.P, tol=1e-10).value
        assert rho_kernel(beta, params, C) == pytest.approx(C * h0**2 * v**2, rel=1e-9)

    def test_sigma_kernel_zero_phase(self):
        # ((2P)^2 - P^2) * R^2 = 3 P^2 R^2
        P, R = 7.0, 3.0
        assert sigma_kernel(0.0, P, R) == pytest.approx(3 * P**2 * R**2, rel=1e-10)

    def test_sigma_kernel_forms_agree(self):
        rng = np.random.default_rng(20260809)
        P, R = 9.0, 4.0
        for _ in range(100):
            beta = float(rng.uniform(-2e-3, 2e-3))
            direct = sigma_kernel(beta, P, R, tol=1e-12, form="direct")
            factored = sigma_kernel(beta, P, R, tol=1e-12, form="factored")
            scale = max(abs(direct), abs(factored), 1e-30)
            assert abs(direct - factored) / scale < 1e-9

    def test_sigma_kernel_decay_envelope(self):
        # |W(beta)| <= 8 P^2 R^2 (1 + P^3 |beta|)^(-4/3), harness constant 8.
        P, R = 10.0, 4.0
        worst = 0.0
        for x in np.geomspace(1e-3, 3e3, 25):
            beta = float(x / P**3)
            bound = 8 * P**2 * R**2 * (1 + P**3 * beta) ** (-4 / 3)
            worst = max(worst, abs(sigma_kernel(beta, P, R, tol=1e-11)) / bound)
        assert worst <= 1.0, f"observed sup ratio = {worst}"

    def test_prefactor_heuristic(self):
        params = derive_parameters(864, 1 / 3, eta=0.5, L_override=4.0)
        k0 = spec_from_params("K", params).term_count()
        assert estimate_bilinear_prefactor(params) == pytest.approx(k0 / params.P)


class TestSpecFromParams:
    def test_interval_kinds(self):
        params = derive_parameters(4000, 0.25, L_override=10.0)
        P = params.P
        assert spec_from_params("f", params).term_count() == math.floor(2 * P) - math.floor(P)
        assert spec_from_params("F", params).term_count() == math.floor(2 * P)
        assert spec_from_params("F0", params).term_count() == math.floor(P)
        assert spec_from_params("G", params).term_count() == math.floor(params.R)

    def test_h_matches_smooth_set(self):
        params = derive_parameters(4000, 1 / 3, eta=0.4, L_override=10.0)
        spec = spec_from_params("h", params)
        assert spec.members == smooth_set(params.R, params.eta).members

    def test_unknown_kind_rejected(self):
        params = derive_parameters(4000, 0.25, L_override=10.0)
        with pytest.raises(PreconditionError):
            spec_from_params("g", params)
