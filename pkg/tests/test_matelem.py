import math
import random
from fractions import Fraction

import mpmath
import pytest

from qwmodel.errors import DomainError
from qwmodel.matelem import (
    SingleBodyElements,
    ddz_matrix_element,
    denominator_assembly,
    fit_loglog_slope,
    inner_product,
    matelem_report,
    matelem_rows,
    norm_sq,
    norm_sq_closed,
    normalized_z_ground,
    quadrature_matrix_element,
    raw_matrix_element,
    theorem2_sequence,
    z_ground_closed,
    z_matrix_element,
    zinv_matrix_element,
    zsq_matrix_element,
)
from qwmodel.numerics import ExactValue
from qwmodel.oscseries import s3_direct

SQRT_PI = math.sqrt(math.pi)


class TestInnerProducts:
    def test_examples(self, params32):
        assert inner_product(0, 1, params32) == 0
        assert inner_product(0, 0, params32) == Fraction(1, 2)
        assert inner_product(1, 1, params32) == 1

    def test_orthogonality_sampled(self, params32, params52):
        rng = random.Random(11)
        pairs = rng.sample([(u, v) for u in range(30) for v in range(30) if u != v], 50)
        for u, v in pairs:
            assert inner_product(u, v, params32) == 0
        for u, v in pairs[:10]:
            assert inner_product(u, v, params52) == 0

    def test_norm_shortcut_matches_direct(self, params32, params52, params_w2):
        for params in (params32, params52, params_w2):
            for u in range(0, 25):
                assert norm_sq(u, params) == inner_product(u, u, params)

    def test_known_norms(self, params32):
        assert [norm_sq(u, params32) for u in range(5)] == [
            Fraction(1, 2),
            Fraction(1),
            Fraction(1, 6),
            Fraction(1, 18),
            Fraction(1, 40),
        ]


class TestKernels:
    def test_z_ground_pair(self, params32):
        v = z_matrix_element(1, 0, params32)
        assert v == ExactValue(Fraction(3, 16), 1)
        assert abs(float(v) - 0.33234) < 1e-5

    def test_z_diagonal_ground(self, params32):
        v = z_matrix_element(0, 0, params32)
        assert v == ExactValue(Fraction(3, 8), 1)  # (3/8) sqrt(pi)

    def test_z_symmetric(self, params32):
        assert z_matrix_element(3, 1, params32) == z_matrix_element(1, 3, params32)

    def test_zsq_virial_value(self, params32):
        # normalized <0|z^2|0> = (s + 1/2)/w = 2
        assert zsq_matrix_element(0, 0, params32) / norm_sq(0, params32) == 2

    def test_zinv_value(self, params32):
        # <xi_0 | 1/z | xi_0> = int exp(-z^2) z^2 = sqrt(pi)/4
        v = zinv_matrix_element(0, 0, params32)
        assert v == ExactValue(Fraction(1, 4), 1)

    def test_ddz_diagonal_vanishes(self, params32, params52):
        for params in (params32, params52):
            for u in range(8):
                assert ddz_matrix_element(u, u, params).is_zero

    def test_ddz_ground_pair(self, params32):
        v = ddz_matrix_element(1, 0, params32)
        assert v == ExactValue(Fraction(-3, 8), 1)

    def test_ddz_antisymmetric_exactly(self, params32):
        for u in range(4):
            for v in range(4):
                assert ddz_matrix_element(u, v, params32) == -ddz_matrix_element(
                    v, u, params32
                )

    def test_unknown_kernel(self, params32):
        with pytest.raises(DomainError):
            raw_matrix_element(0, 0, "cube", params32)


class TestDualRoute:
    @pytest.mark.parametrize("kernel", ["identity", "z", "z_squared", "z_inverse", "d_dz"])
    def test_quadrature_agrees(self, params32, kernel):
        for u, v in ((0, 0), (1, 0), (2, 1), (3, 3)):
            exact = float(raw_matrix_element(u, v, kernel, params32).to_mpf())
            quad = float(quadrature_matrix_element(u, v, kernel, params32))
            assert abs(exact - quad) <= 1e-12 * max(abs(exact), 1e-10)

    def test_far_element(self, params32):
        # u = 5 against the ground state, per the dual-route contract
        exact = float(raw_matrix_element(5, 0, "z", params32).to_mpf())
        quad = float(quadrature_matrix_element(5, 0, "z", params32))
        assert abs(exact - quad) <= 1e-12 * abs(exact)

    def test_report_normalized_match(self, params32):
        a = matelem_report(2, 0, "z", params32, "moment_algebra")
        b = matelem_report(2, 0, "z", params32, "quadrature")
        assert abs(a.normalized - b.normalized) < 1e-12


class TestClosedForms:
    def test_exact_equality_with_direct(self, params32, params52, params_w2):
        for params in (params32, params52, params_w2):
            for u in (1, 2, 3, 7, 20, 64, 100):
                assert z_ground_closed(u, params) == z_matrix_element(u, 0, params)
                assert norm_sq_closed(u, params) == norm_sq(u, params)

    def test_float_path_matches(self, params32):
        rows = theorem2_sequence(params32, [8, 64, 256], method="direct")
        for (u, m, _), m_fast in zip(rows, (normalized_z_ground(u, params32) for u, _, _ in rows)):
            assert abs(m - m_fast) < 1e-12 * m


class TestTheorem2:
    def test_first_value(self, params32):
        rows = theorem2_sequence(params32, [1])
        expected = (3 / 16) * SQRT_PI / math.sqrt(0.5)
        assert abs(rows[0][1] - expected) < 1e-12

    def test_u_times_value_decays_like_inverse_u(self, params32):
        # slope of u * M_u is -1: the normalized element itself falls as u^-2
        rows = theorem2_sequence(params32, [64, 128, 256, 512], method="closed")
        slope = fit_loglog_slope([(u, um) for u, _, um in rows])
        assert abs(slope + 1.0) < 0.05

    def test_element_slope_is_minus_two(self, params32):
        # the printed 1/u statement holds only as an upper bound; the sharp
        # rate of the normalized element is u^-2 at s = 3/2
        rows = theorem2_sequence(params32, [64, 128, 256, 512], method="closed")
        slope = fit_loglog_slope([(u, m) for u, m, _ in rows])
        assert abs(slope + 2.0) < 0.05
        assert all(u * m < 0.01 for u, m, _ in rows)  # u*M tends to 0, not a constant

    def test_norm_sequence_tends_to_zero(self, params32):
        # with a_2 = 1 the squared norm is exactly 2 / (u^2 (u+1)) at
        # s = 3/2, w = 1 (equivalently (u+1) S3(u,1) = 1); the printed
        # constant limit d0^-1 ((1+2s)/2w)^2 / (s+1/2) = 1 is refuted
        for u in (1, 2, 5, 40, 100):
            assert norm_sq(u, params32) == Fraction(2, u * u * (u + 1))
        assert float(norm_sq(512, params32)) < 1e-7


class TestAssembly:
    def test_boundary_sums_vanish(self, params32):
        for u in range(1, 61):
            rep = denominator_assembly(params32, u)
            assert rep.j0 == 0 and rep.j1 == 0

    def test_assembled_equals_direct(self, params32, params52):
        for params in (params32, params52):
            for u in range(1, 41):
                rep = denominator_assembly(params, u)
                assert rep.assembled == norm_sq(u, params)

    def test_printed_constant_is_not_the_norm(self, params32):
        # the u-independent additive term of the source derivation does not
        # belong in the assembly: norms tend to zero instead
        rep = denominator_assembly(params32, 40)
        assert rep.printed_constant == 1  # its value at s=3/2, w=1
        assert rep.assembled != rep.printed_constant

    def test_s3_connection(self, params32):
        # assembled = mass * ((1+2s)/(2wu))^2 t! S3(u,t)
        for u in (3, 9):
            rep = denominator_assembly(params32, u)
            assert rep.assembled == Fraction(1, 2) * Fraction(4, 2 * u) ** 2 * s3_direct(u, 1)


def test_numerator_constant_term_cancels(params32):
    # the u^0 term of the normalized-numerator bracket vanishes: the raw
    # element over its mass prefactor is O(1/u) (in fact far smaller)
    from qwmodel.spectrum1d import gamma_mass

    mass = gamma_mass(Fraction(2), Fraction(1))
    prev = None
    for u in (4, 8, 16, 32, 64):
        bracket = abs(float((z_matrix_element(u, 0, params32) / mass).as_fraction()))
        assert bracket < 1.0 / u
        if prev is not None:
            assert bracket < prev
        prev = bracket


def test_leading_coefficient_expression_nonzero(params32, params52):
    # the base-2 candidate for the 1/u coefficient, 4(1+s) C(s) (2s-1)!/((s-1/2)!^2)
    # - (1+2s), is rational and nonzero; it does not govern the observed rate
    from qwmodel.oscseries import product_constant

    for params, expected in ((params32, Fraction(-4, 3)), (params52, None)):
        s = params.s
        t = int(s - Fraction(1, 2))
        val = (
            4
            * (1 + s)
            * product_constant(s, 2)
            * Fraction(math.factorial(2 * t), math.factorial(t) ** 2)
            - 1
            - 2 * s
        )
        assert val != 0
        if expected is not None:
            assert val == expected


def test_single_body_element_cache(params32):
    el = SingleBodyElements(params32)
    assert el.dhat(2, 2) == 0.0
    assert el.dhat(1, 0) == -el.dhat(0, 1)
    assert abs(el.zhat(1, 0) - 0.47) < 1e-3
    assert el.overlap(3, 3) == 1.0 and el.overlap(3, 2) == 0.0


def test_matelem_rows_schema(params32):
    rows = matelem_rows(params32, 1, 1, ("identity", "z"))
    assert len(rows) == 8
    ident = [r for r in rows if r[2] == "identity" and r[0] == r[1] == 0][0]
    assert ident[4] == "1/2"
