import random
from fractions import Fraction

import pytest

from surfres.errors import DivisionByZero, SpecMismatch, UnsupportedInCharZero
from surfres.field import FieldSpec, embed

QQ = FieldSpec.rationals()
F2 = FieldSpec.finite(2)
F4 = FieldSpec.finite(2, 2)
F8 = FieldSpec.finite(2, 3)


def test_parse_literals():
    assert FieldSpec.parse("QQ") == QQ
    assert FieldSpec.parse("GF(2)") == F2
    assert FieldSpec.parse("GF(2^2)") == F4
    assert FieldSpec.parse("GF(3)").p == 3
    with pytest.raises(ValueError):
        FieldSpec.parse("GF(4)")  # 4 is not prime


def test_minimal_modulus_is_deterministic():
    # least monic irreducible in lex order on (c_0, ..., c_{k-1})
    assert F4.modulus == (1, 1, 1)  # t^2 + t + 1
    assert F8.modulus == (1, 0, 1, 1)  # t^3 + t^2 + 1


def test_rational_arithmetic():
    a = QQ.from_fraction(Fraction(1, 3))
    b = QQ.from_fraction(Fraction(1, 6))
    assert (a + b).value == Fraction(1, 2)


def test_characteristic_two():
    one = F2.one()
    assert not (one + one)


def test_inverses_exhaustive_f8():
    for a in F8.elements():
        if a:
            assert a * a.inverse() == F8.one()


def test_division_by_zero():
    with pytest.raises(DivisionByZero):
        F2.one() / F2.zero()


def test_spec_mismatch():
    with pytest.raises(SpecMismatch):
        F2.one() + F4.one()


def test_frobenius_root_f4_table():
    # square all four elements and invert the table
    t = F4.generator()
    squares = {a * a: a for a in F4.elements()}
    for a in F4.elements():
        assert a.frobenius_root(1) == squares[a]
    # (t+1)^2 = t, so the square root of t is t+1
    assert t.frobenius_root(1) == t + F4.one()


def test_frobenius_fixed_points():
    assert F4.one().frobenius_root(3) == F4.one()
    assert F4.zero().frobenius_root(2) == F4.zero()


def test_frobenius_root_identity_exhaustive():
    # b = root(a, 1) must satisfy b^p = a, for every a in small fields
    for spec in (F2, F4, F8, FieldSpec.finite(3), FieldSpec.finite(3, 2)):
        p = spec.p
        for a in spec.elements():
            b = a.frobenius_root(1)
            assert b ** p == a


def test_frobenius_unsupported_over_q():
    with pytest.raises(UnsupportedInCharZero):
        QQ.from_int(2).frobenius_root(1)
    assert QQ.from_int(2).frobenius_root(0) == QQ.from_int(2)


def test_field_axioms_random_triples():
    rng = random.Random(7)
    for spec in (QQ, F4, FieldSpec.finite(5)):
        elems = (
            [spec.from_fraction(Fraction(rng.randint(-9, 9), rng.randint(1, 9))) for _ in range(12)]
            if spec.kind == "rationals"
            else list(spec.elements())
        )
        for _ in range(60):
            a, b, c = (rng.choice(elems) for _ in range(3))
            assert (a + b) + c == a + (b + c)
            assert (a * b) * c == a * (b * c)
            assert a * (b + c) == a * b + a * c
            assert a + b == b + a
            assert a * b == b * a


def test_embedding_f2_into_f4():
    assert embed(F2.one(), F4) == F4.one()
    img = embed(F2.zero(), F4)
    assert not img


def test_embedding_f4_into_f16():
    F16 = FieldSpec.finite(2, 4)
    t = F4.generator()
    img = embed(t, F16)
    # the image must satisfy the defining relation t^2 + t + 1 = 0
    assert not (img * img + img + F16.one())
    # embedding respects multiplication
    for a in F4.elements():
        for b in F4.elements():
            assert embed(a * b, F16) == embed(a, F16) * embed(b, F16)


def test_element_string_roundtripish():
    t = F4.generator()
    assert str(t + F4.one()) == "t+1"
    assert str(F4.zero()) == "0"
