import math
import random
from fractions import Fraction

import numpy as np
import pytest

from qwmodel.errors import ConvergenceError, DomainError, ValidationError
from qwmodel.matelem import inner_product
from qwmodel.spectrum1d import (
    binomial_alternating_sum,
    eigenstate,
    eigenvalue,
    evaluate_xi,
    fd_oracle_spectrum,
    first_row_residual,
    gamma_mass,
    moments,
    spectrum_rows,
)


class TestMoments:
    def test_first_moment(self, params32):
        table = moments(Fraction(3, 2), 1, 3)
        assert table.sigma[1] == 2
        assert table.sigma[2] == 6

    def test_scaling_in_w(self):
        assert moments(Fraction(3, 2), 2, 1).sigma[1] == 1

    def test_shifted_tables(self):
        # the z kernel shifts the exponent: sigma_2 at s+1/2 = 2 is 5/2
        assert moments(Fraction(2), 1, 1).sigma[1] == Fraction(5, 2)

    def test_recursion(self):
        for s_eff, w in ((Fraction(3, 2), Fraction(1)), (Fraction(2), Fraction(5, 3))):
            table = moments(s_eff, w, 10)
            for n in range(1, 10):
                assert table.sigma[n + 1] == table.sigma[n] * (2 * n + 1 + 2 * s_eff) / (2 * w)

    def test_mass(self):
        # int exp(-z^2) z^3 dz = 1/2 for s_eff = 3/2
        assert gamma_mass(Fraction(3, 2), Fraction(1)).as_fraction() == Fraction(1, 2)
        # int exp(-z^2) z^4 dz = (3/8) sqrt(pi) for s_eff = 2
        m = gamma_mass(Fraction(2), Fraction(1))
        assert (m.coeff, m.pi_pow) == (Fraction(3, 8), 1)

    def test_domain(self):
        with pytest.raises(DomainError):
            moments(Fraction(1, 3), 1, 2)
        with pytest.raises(DomainError):
            moments(Fraction(3, 2), 0, 2)


class TestEigenvalues:
    def test_ground(self, params32):
        assert eigenvalue(0, params32) == 4

    def test_excited_scaled(self, params_w2):
        assert eigenvalue(2, params_w2) == 24

    def test_gap_is_4w(self, params52, params_w2):
        for params in (params52, params_w2):
            for n in range(6):
                assert eigenvalue(n + 1, params) - eigenvalue(n, params) == 4 * params.w

    def test_negative_index(self, params32):
        with pytest.raises(DomainError):
            eigenvalue(-1, params32)


class TestEigenstates:
    def test_ground_state(self, params32):
        st = eigenstate(0, params32)
        assert st.poly_coeffs() == (Fraction(1),)
        assert st.mu == params32.w * (1 + 2 * params32.s)

    def test_first_excited(self, params32):
        st = eigenstate(1, params32)
        assert st.poly_coeffs() == (Fraction(-2), Fraction(1))  # z^2 - 2

    def test_second_excited_ratio(self, params32):
        st = eigenstate(2, params32)
        assert st.coeffs[1] / st.coeffs[0] == Fraction(-1, 6)

    def test_degree_and_parity(self, params32):
        # only even powers appear; degree exactly 2n
        for n in range(8):
            coeffs = eigenstate(n, params32).poly_coeffs()
            assert len(coeffs) == n + 1
            assert coeffs[-1] != 0

    def test_first_row_identity(self, params32, params52):
        for params in (params32, params52):
            for u in range(1, 61):
                assert first_row_residual(u, params) == 0

    def test_alternating_binomial(self):
        for u in range(1, 61):
            assert binomial_alternating_sum(u) == 0


class TestEvaluation:
    def test_ground_value(self, params32):
        assert abs(evaluate_xi(eigenstate(0, params32), 1.0) - math.exp(-0.5)) < 1e-14

    def test_root_of_first_excited(self, params32):
        assert abs(evaluate_xi(eigenstate(1, params32), math.sqrt(2.0))) < 1e-14

    def test_positive_beyond_largest_root(self, params32):
        for n in range(1, 6):
            st = eigenstate(n, params32)
            roots = np.roots([float(c) for c in reversed(st.poly_coeffs())])
            largest = math.sqrt(max(abs(r) for r in roots))
            assert evaluate_xi(st, largest * 1.5 + 1.0) > 0

    def test_domain(self, params32):
        with pytest.raises(DomainError):
            evaluate_xi(eigenstate(0, params32), 0.0)


class TestOracle:
    def test_low_eigenvalues(self, params32):
        vals = fd_oracle_spectrum(params32, 2500, 1e-3, 10.0, 4)
        for n, v in enumerate(vals):
            exact = float(eigenvalue(n, params32))
            assert abs(v - exact) / exact < 1e-3

    def test_second_eigenvalue_coarse(self, params32):
        vals = fd_oracle_spectrum(params32, 4000, 1e-3, 10.0, 2)
        assert abs(vals[1] - 8.0) < 1e-2

    def test_convergence_order_near_two(self, params32):
        errs = []
        for grid in (400, 800, 1600):
            v = fd_oracle_spectrum(params32, grid, 1e-3, 10.0, 1)[0]
            errs.append(abs(v - 4.0))
        order = math.log(errs[0] / errs[1]) / math.log(2)
        assert 1.6 < order < 2.6

    def test_zmin_insensitivity(self, params32):
        a = fd_oracle_spectrum(params32, 3000, 1e-3, 10.0, 1)[0]
        b = fd_oracle_spectrum(params32, 3000, 5e-4, 10.0, 1)[0]
        assert abs(a - b) / a < 1e-4

    def test_refine_check_passes(self, params32):
        vals = fd_oracle_spectrum(params32, 1000, 1e-3, 10.0, 2, refine_check=True)
        assert vals.shape == (2,)

    def test_guards(self, params32):
        with pytest.raises(ValidationError):
            fd_oracle_spectrum(params32, 100, 1e-3, 10.0, 1)
        with pytest.raises(ValidationError):
            fd_oracle_spectrum(params32, 1000, 2.0, 1.0, 1)
        with pytest.raises(ValidationError):
            fd_oracle_spectrum(params32, 1000, 1e-3, 10.0, 0)


def test_orthogonality_exact(params32):
    rng = random.Random(3)
    pairs = rng.sample([(u, v) for u in range(25) for v in range(25) if u < v], 40)
    for u, v in pairs:
        assert inner_product(u, v, params32) == 0


def test_spectrum_rows_schema(params32):
    rows = spectrum_rows(params32, 4)
    # ground contributes one row, state n contributes n rows
    assert len(rows) == 1 + sum(range(1, 5))
    states = {row[0] for row in rows}
    assert states == set(range(5))
    assert rows[0] == [0, "4", 4.0, 0, "1"]
