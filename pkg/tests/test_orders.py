import random

from surfres.field import FieldSpec
from surfres.orders import (
    ExtOrder,
    WeightFn,
    init_form,
    ord_along,
    ord_of,
    q_of,
    vec_add,
    weighted_ord,
)
from surfres.poly import Poly, parse_poly
from surfres.series import Series

QQ = FieldSpec.rationals()
F2 = FieldSpec.finite(2)


def P(text, spec=QQ):
    return parse_poly(text, spec)


def test_extorder_total_order():
    f3 = ExtOrder.finite(3)
    a3 = ExtOrder.at_least(3)
    inf = ExtOrder.infinity()
    assert f3 < a3 < inf
    assert ExtOrder.finite(2) < a3
    assert a3 < ExtOrder.finite(4)
    assert sorted([inf, f3, a3]) == [f3, a3, inf]


def test_extorder_arithmetic():
    assert ExtOrder.finite(2) + ExtOrder.finite(3) == ExtOrder.finite(5)
    assert (ExtOrder.at_least(4) + ExtOrder.finite(1)).tag == "atleast"
    assert ExtOrder.finite(6).scaled("1/2") == ExtOrder.finite(3)
    assert (ExtOrder.infinity() + ExtOrder.finite(1)).tag == "infinity"


def test_ord_examples():
    assert ord_of(P("z^2 + x*y*(x^2+y^2)", F2)) == 2
    assert ord_of(P("1 + x")) == 0  # unit
    zero = Series.from_poly(Poly.zero(QQ, 3), 32)
    assert ord_of(zero) == ExtOrder.at_least(32)


def test_ord_along_examples():
    assert ord_along(P("y^5 + x^9"), {1}) == 0
    assert ord_along(P("x^2*y^2*(y^3+x^7)"), {0}) == 2
    assert ord_along(P("y^3 + y*x^4"), {1}) == 1


def test_weighted_ord_example():
    w = WeightFn.single(3, (1, 2, 0))
    assert weighted_ord(w, P("x*y"))[0] == 3


def test_weighted_ord_composite_is_lex_pair():
    # upsilon = (ord, ord_(y)) evaluated on x^3 y + x y^3 gives (4, 1)
    ups = WeightFn.compose(WeightFn.total(3), WeightFn.along(3, {1}))
    val = weighted_ord(ups, P("x^3*y + x*y^3"))
    assert [v.value for v in val] == [4, 1]


def test_weighted_ord_unit_is_zero():
    w = WeightFn.single(3, (1, 2, 3))
    assert all(v == 0 for v in weighted_ord(w, P("1 + x")))


def test_init_form_examples():
    assert init_form(WeightFn.total(3), P("z^2 + x^3")).form == P("z^2")
    w11 = WeightFn.single(3, (1, 1, 1))
    assert init_form(w11, P("x^3*y + x^2*y^2")).form == P("x^3*y + x^2*y^2")
    wy = WeightFn.along(3, {1})
    assert init_form(wy, P("y^3 + y*x^4")).form == P("y*x^4")


def test_q_of():
    assert q_of(2, F2) == 2
    assert q_of(6, F2) == 2
    assert q_of(5, QQ) == 1
    assert q_of(9, FieldSpec.finite(3)) == 9
    assert q_of(12, FieldSpec.finite(3)) == 3


def test_valuation_laws_random():
    rng = random.Random(5)
    w = WeightFn.single(3, (1, 2, 1))
    for _ in range(40):
        def rand(spec):
            terms = {}
            for _ in range(rng.randint(1, 5)):
                mono = (rng.randint(0, 3), rng.randint(0, 3), rng.randint(0, 2))
                terms[mono] = spec.from_int(rng.randint(1, 5))
            return Poly(spec, 3, terms)

        f, g = rand(QQ), rand(QQ)
        vf, vg = weighted_ord(w, f), weighted_ord(w, g)
        vsum = weighted_ord(w, f + g)
        assert list(vsum) >= min(list(vf), list(vg))
        if list(vf) != list(vg) and (f + g):
            assert list(vsum) == min(list(vf), list(vg))
        if f and g:
            assert list(weighted_ord(w, f * g)) == list(vec_add(vf, vg))


def test_plain_ord_equals_all_ones_weight():
    rng = random.Random(9)
    w = WeightFn.total(3)
    for _ in range(25):
        terms = {}
        for _ in range(rng.randint(1, 6)):
            mono = (rng.randint(0, 4), rng.randint(0, 4), rng.randint(0, 4))
            terms[mono] = QQ.from_int(rng.randint(1, 3))
        f = Poly(QQ, 3, terms)
        assert weighted_ord(w, f)[0] == ord_of(f)
