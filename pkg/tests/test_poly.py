import itertools
import random
from math import comb

import pytest

from surfres.errors import UnsupportedInCharZero
from surfres.field import FieldSpec
from surfres.poly import Poly, lucas_binomial, parse_poly
from surfres.series import (
    NotAPower,
    Series,
    hasse_derivative,
    qth_power_root,
    substitute,
    substitute_poly,
)

QQ = FieldSpec.rationals()
F2 = FieldSpec.finite(2)
F3 = FieldSpec.finite(3)
F5 = FieldSpec.finite(5)
F4 = FieldSpec.finite(2, 2)


def P(text, spec=QQ, nvars=3):
    return parse_poly(text, spec, nvars)


# -- parsing / printing ------------------------------------------------------


def test_roundtrip_simple():
    for text in ["z^2 + x^3", "x^3*y + x*y^3 + z^2", "x - y", "2*x^2 - 3*y + 1/2"]:
        p = P(text)
        assert parse_poly(str(p), QQ) == p


def test_roundtrip_finite_extension_coefficients():
    p = parse_poly("(t+1)*x^2 + t*y + 1", F4)
    assert parse_poly(str(p), F4) == p


def test_roundtrip_kernel_variables():
    p = parse_poly("x1^2*x4 + x2*x3", QQ, 4)
    assert parse_poly(str(p), QQ, 4) == p


def test_print_graded_lex():
    p = P("x + y^2 + x*y + 1")
    assert str(p) == "x*y + y^2 + x + 1"


def test_parse_rejects_unknown_variable():
    with pytest.raises(ValueError):
        parse_poly("w + x", QQ)


# -- substitution ------------------------------------------------------------


def test_substitute_chart_map_from_blowup_example():
    # x-chart at (1, 0): x -> x, y -> x(y+1), z -> xz; weak transform after
    # dividing by x^2 is z^2 + x^2(y+1)y^2
    f = parse_poly("z^2 + x*y*(x^2+y^2)", F2)
    x, y, z = (parse_poly(v, F2) for v in "xyz")
    total = substitute_poly(f, [x, x * parse_poly("y+1", F2), x * z])
    weak = total.divide_by_monomial((2, 0, 0))
    assert weak == parse_poly("z^2 + x^2*(y+1)*y^2", F2)


def test_substitute_identity():
    f = P("z")
    imgs = [P("x"), P("y"), P("z")]
    assert substitute_poly(f, imgs) == f


def test_substitute_linear_triangular_expansion():
    f = P("(x+y)^3")
    out = substitute_poly(f, [P("x"), P("y-x"), P("z")])
    assert out == P("y^3")
    # direct termwise expansion oracle
    manual = Poly.zero(QQ, 3)
    for k in range(4):
        manual = manual + P(f"{comb(3, k)}*y^{k}*x^{3-k}") if k else manual + P("x^3")
    # (x + (y-x))^3 = y^3: sanity against the binomial identity
    assert out == P("y^3")


def test_substitute_inverse_recovers_truncated():
    f = Series.from_poly(P("x^2*y + z^3 + x*y*z"), 10)
    sigma = [P("x"), P("y+x"), P("z")]
    sigma_inv = [P("x"), P("y-x"), P("z")]
    g = substitute(f, sigma)
    back = substitute(g, sigma_inv)
    assert back.body == f.body


def test_substitution_requires_translation_flag():
    f = Series.from_poly(P("x*y"), 8)
    with pytest.raises(Exception):
        substitute(f, [P("x+1"), P("y"), P("z")])
    moved = substitute(f, [P("x+1"), P("y"), P("z")], translation=True)
    assert moved.body == P("x*y + y")


# -- Hasse derivatives -------------------------------------------------------


def test_hasse_on_monomial_rule():
    out = hasse_derivative(parse_poly("x^2*y", F2), (0, 1, 0))
    assert out.body == parse_poly("x^2", F2)


def test_hasse_on_p_th_power_of_sum():
    # d_{x^p}(f^p) = (d_x f)^p for f = x + y over F_p
    f = parse_poly("(x+y)^2", F2)
    out = hasse_derivative(f, (2, 0, 0))
    assert out.body == Poly.const(F2, 3, 1)


def test_hasse_kills_alpha_not_multiple_of_q():
    rng = random.Random(3)
    for _ in range(20):
        terms = {}
        for _ in range(4):
            mono = (rng.randint(0, 3), rng.randint(0, 3), 0)
            terms[mono] = F2.one()
        g = Poly(F2, 3, terms)
        sq = g * g
        for alpha in [(1, 0, 0), (0, 1, 0), (1, 2, 0), (3, 0, 0), (1, 1, 0)]:
            if all(a % 2 == 0 for a in alpha):
                continue
            assert not hasse_derivative(sq, alpha).body


def test_leibniz_rule_random_small():
    rng = random.Random(11)
    for spec in (QQ, F2, F3):
        for _ in range(12):
            def rand_poly():
                terms = {}
                for _ in range(5):
                    mono = (rng.randint(0, 3), rng.randint(0, 3), rng.randint(0, 2))
                    c = rng.randint(1, 6)
                    terms[mono] = spec.from_int(c)
                return Poly(spec, 3, terms)

            f, g = rand_poly(), rand_poly()
            alpha = (rng.randint(0, 2), rng.randint(0, 2), rng.randint(0, 2))
            lhs = hasse_derivative(f * g, alpha).body
            rhs = Poly.zero(spec, 3)
            for beta in itertools.product(*(range(a + 1) for a in alpha)):
                gamma = tuple(a - b for a, b in zip(alpha, beta))
                rhs = rhs + hasse_derivative(f, beta).body * hasse_derivative(g, gamma).body
            assert lhs == rhs


def test_composition_law_exhaustive_small():
    # d_{x^alpha} o d_{x^beta} = C(alpha+beta, alpha) d_{x^(alpha+beta)} on
    # monomials of degree <= 6
    for spec in (QQ, F2, F3):
        monos = [
            (a, b, c)
            for a in range(4)
            for b in range(4)
            for c in range(3)
            if a + b + c <= 6
        ]
        for alpha in [(1, 0, 0), (0, 2, 0), (1, 1, 0), (2, 0, 1)]:
            for beta in [(1, 0, 0), (0, 1, 1), (2, 0, 0)]:
                total = tuple(a + b for a, b in zip(alpha, beta))
                from surfres.poly import multi_binomial

                coeff = multi_binomial(total, alpha, spec)
                for m in monos:
                    f = Poly.monomial(spec, 3, m)
                    lhs = hasse_derivative(hasse_derivative(f, beta).body, alpha).body
                    rhs = hasse_derivative(f, total).body.scale(coeff)
                    assert lhs == rhs


# -- binomials ---------------------------------------------------------------


def test_lucas_examples():
    assert lucas_binomial(6, 2, F2) == F2.one()  # 15 mod 2
    assert lucas_binomial(4, 4, F2) == F2.one()  # C(c, q) nonzero for q = q_K(c)
    assert not lucas_binomial(4, 3, F2)  # c - q < k < c vanishes


def test_lucas_matches_factorials_up_to_64():
    for spec in (F2, F3, F5):
        p = spec.p
        for n in range(65):
            for k in range(n + 1):
                assert lucas_binomial(n, k, spec) == spec.from_int(comb(n, k) % p)


def test_lucas_over_q_is_exact():
    assert lucas_binomial(10, 5, QQ).value == comb(10, 5)


# -- q-th power roots --------------------------------------------------------


def test_qth_root_basic():
    s = Series.from_poly(parse_poly("x^2*y^4 + x^4*y^2", F2), 32)
    r = qth_power_root(s, 2)
    assert r.body == parse_poly("x*y^2 + x^2*y", F2)
    assert (r * r).body == s.body


def test_qth_root_witness():
    s = Series.from_poly(parse_poly("x^3*y", F2), 32)
    out = qth_power_root(s, 2)
    assert isinstance(out, NotAPower)
    assert out.witness == (3, 1, 0)


def test_qth_root_q_one_is_identity():
    s = Series.from_poly(P("x + y^2"), 16)
    assert qth_power_root(s, 1) is s


def test_qth_root_char_zero_raises():
    with pytest.raises(UnsupportedInCharZero):
        qth_power_root(Series.from_poly(P("x^2"), 8), 2)


def test_qth_root_coefficients_use_frobenius():
    t = F4.generator()
    s = Series.from_poly(Poly(F4, 3, {(2, 0, 0): t}), 8)
    r = qth_power_root(s, 2)
    assert (r * r).body == s.body
