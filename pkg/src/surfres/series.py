"""Truncated formal power series: a sparse polynomial plus a precision.

A Series knows its coefficients for all terms of total degree < precision;
everything of degree >= precision is unknown.  Operations propagate the
provable output precision.  The default working precision is 32.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import PrecisionTooLow, SpecMismatch, UnsupportedInCharZero
from .field import FieldElement, FieldSpec
from .poly import Poly, mono_deg, multi_binomial

DEFAULT_PRECISION = 32


@dataclass(frozen=True)
class NotAPower:
    """Witness that a series is not a q-th power."""

    witness: tuple  # offending exponent tuple


class Series:
    __slots__ = ("body", "precision")

    def __init__(self, body: Poly, precision: int):
        object.__setattr__(self, "body", body.truncate(precision))
        object.__setattr__(self, "precision", precision)

    def __setattr__(self, *args):
        raise AttributeError("Series is immutable")

    @staticmethod
    def from_poly(poly: Poly, precision: int = DEFAULT_PRECISION) -> "Series":
        return Series(poly, precision)

    @property
    def spec(self) -> FieldSpec:
        return self.body.spec

    @property
    def nvars(self) -> int:
        return self.body.nvars

    def _check(self, other: "Series"):
        if self.spec != other.spec or self.nvars != other.nvars:
            raise SpecMismatch("series ring mismatch")

    def order_floor(self) -> int:
        """Known order, or the precision when the body vanishes."""
        o = self.body.order()
        return self.precision if o is None else o

    def __add__(self, other):
        self._check(other)
        return Series(self.body + other.body, min(self.precision, other.precision))

    def __sub__(self, other):
        self._check(other)
        return Series(self.body - other.body, min(self.precision, other.precision))

    def __neg__(self):
        return Series(-self.body, self.precision)

    def __mul__(self, other):
        if isinstance(other, FieldElement):
            return Series(self.body.scale(other), self.precision)
        self._check(other)
        prec = min(
            self.order_floor() + other.precision,
            other.order_floor() + self.precision,
        )
        return Series(self.body * other.body, prec)

    def scale(self, coeff: FieldElement) -> "Series":
        return Series(self.body.scale(coeff), self.precision)

    def __pow__(self, n: int) -> "Series":
        result = Series(Poly.const(self.spec, self.nvars, 1), self.precision)
        base = self
        first = True
        while n:
            if n & 1:
                result = base if first else result * base
                first = False
            n >>= 1
            if n:
                base = base * base
        return result

    def __eq__(self, other):
        return (
            isinstance(other, Series)
            and self.precision == other.precision
            and self.body == other.body
        )

    def __bool__(self):
        return bool(self.body)

    def truncated(self, precision: int) -> "Series":
        return Series(self.body, min(precision, self.precision))

    def divide_by_monomial(self, mono) -> "Series":
        return Series(self.body.divide_by_monomial(mono), self.precision - mono_deg(mono))

    def inverse(self) -> "Series":
        """Inverse of a unit series, to the same precision."""
        const = self.body.terms.get((0,) * self.nvars)
        if const is None:
            raise ZeroDivisionError("series is not a unit")
        c_inv = const.inverse()
        # u = c (1 + v), 1/u = (1/c) sum (-v)^k
        v = (self.scale(c_inv)) - Series(
            Poly.const(self.spec, self.nvars, 1), self.precision
        )
        acc = Series(Poly.const(self.spec, self.nvars, 1), self.precision)
        term = acc
        k = v.order_floor()
        if k == 0:
            raise PrecisionTooLow("unit has unknown tail at precision 0")
        steps = (self.precision + k - 1) // k if v else 0
        for _ in range(steps):
            term = term * (-v)
            acc = acc + term
        return acc.scale(c_inv)

    def __str__(self):
        return f"{self.body} + O(deg {self.precision})"

    def __repr__(self):
        return f"Series({self})"


# ---------------------------------------------------------------------------
# Substitution


def substitute(f, images, precision: int | None = None, translation: bool = False):
    """Compose f with variable images; realizes chart maps and z-changes.

    ``f`` is a Poly or Series; ``images`` is one Poly/Series per variable of
    f (all in a common target ring).  Unless ``translation`` is set, every
    image must have zero constant term.  With ``translation``, the series
    body is treated as exact (all local data here descends from polynomials)
    and the precision is carried through.
    """
    if isinstance(f, Series):
        body, fprec = f.body, f.precision
    else:
        body, fprec = f, None

    target_spec = images[0].spec if images else body.spec
    target_nvars = images[0].nvars if images else body.nvars

    img_series = []
    prec_candidates = []
    for img in images:
        if isinstance(img, Series):
            img_series.append(img)
            prec_candidates.append(img.precision)
        else:
            # exact polynomial image
            img_series.append(Series(img, 10 ** 9))
    if fprec is not None:
        prec_candidates.append(fprec)
    if precision is not None:
        prec_candidates.append(precision)
    if not prec_candidates:
        prec_candidates.append(DEFAULT_PRECISION)
    out_prec = min(prec_candidates)

    if not translation:
        for img in img_series:
            if img.body.terms.get((0,) * img.nvars):
                raise SpecMismatch(
                    "image has a constant term; pass translation=True for point moves"
                )

    work_prec = out_prec
    one = Series(Poly.const(target_spec, target_nvars, 1), 10 ** 9)

    # cache powers of each image
    pow_cache = [dict() for _ in images]

    def img_pow(i: int, e: int) -> Series:
        cache = pow_cache[i]
        if e not in cache:
            if e == 0:
                cache[e] = one
            elif e == 1:
                cache[e] = img_series[i]
            else:
                half = img_pow(i, e // 2)
                sq = half * half
                if e % 2:
                    sq = sq * img_series[i]
                cache[e] = sq.truncated(max(work_prec, 1))
        return cache[e]

    acc = Series(Poly.zero(target_spec, target_nvars), out_prec)
    for mono, coeff in body.terms.items():
        term = one
        for i, e in enumerate(mono):
            if e:
                term = (term * img_pow(i, e)).truncated(max(work_prec, 1))
        contrib = term.scale(coeff)
        acc = Series(acc.body + contrib.body, out_prec)

    return acc


def substitute_poly(f: Poly, images: list) -> Poly:
    """Exact polynomial composition (no truncation)."""
    target_spec = images[0].spec
    target_nvars = images[0].nvars
    one = Poly.const(target_spec, target_nvars, 1)
    pow_cache = [dict() for _ in images]

    def img_pow(i, e):
        cache = pow_cache[i]
        if e not in cache:
            if e == 0:
                cache[e] = one
            else:
                cache[e] = img_pow(i, e - 1) * images[i]
        return cache[e]

    acc = Poly.zero(target_spec, target_nvars)
    for mono, coeff in f.terms.items():
        term = one
        for i, e in enumerate(mono):
            if e:
                term = term * img_pow(i, e)
        acc = acc + term.scale(coeff)
    return acc


# ---------------------------------------------------------------------------
# Hasse differential operators


def hasse_derivative(f, alpha) -> Series:
    """The divided-power differential operator d_{x^alpha} applied to f.

    On monomials: d(x^beta) = C(beta, alpha) x^(beta - alpha), with binomials
    evaluated in the coefficient field (Lucas digits in char p).  Satisfies
    the Leibniz product rule.
    """
    if isinstance(f, Series):
        body, prec = f.body, f.precision
    else:
        body, prec = f, 10 ** 9
    spec = body.spec
    out = {}
    for mono, coeff in body.terms.items():
        if any(m < a for m, a in zip(mono, alpha)):
            continue
        b = multi_binomial(mono, alpha, spec)
        if not b:
            continue
        target = tuple(m - a for m, a in zip(mono, alpha))
        c = coeff * b
        if target in out:
            s = out[target] + c
            if s:
                out[target] = s
            else:
                del out[target]
        else:
            out[target] = c
    new_prec = max(prec - sum(alpha), 0)
    return Series(Poly(spec, body.nvars, out), new_prec)


# ---------------------------------------------------------------------------
# q-th power roots


def qth_power_root(f: Series, q: int):
    """Return G with G^q = f (up to precision/q), or a NotAPower witness.

    Requires q = 1 or a finite (perfect) coefficient field; exponent
    divisibility plus coefficient Frobenius roots give the constructive test.
    """
    if q == 1:
        return f
    spec = f.spec
    if spec.kind == "rationals":
        raise UnsupportedInCharZero("q-th roots with q > 1 need char p")
    p = spec.p
    e = 0
    qq = q
    while qq % p == 0:
        qq //= p
        e += 1
    if qq != 1:
        raise ValueError(f"{q} is not a power of the characteristic {p}")
    out = {}
    for mono, coeff in f.body.terms.items():
        if any(m % q for m in mono):
            return NotAPower(witness=mono)
        root_mono = tuple(m // q for m in mono)
        out[root_mono] = coeff.frobenius_root(e)
    return Series(Poly(spec, f.nvars, out), max(f.precision // q, 1))
