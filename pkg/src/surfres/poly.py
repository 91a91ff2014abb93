"""Sparse multivariate polynomials over an exact coefficient field.

Monomials are exponent tuples of fixed length nvars.  Terms are stored in a
dict keyed by exponent tuple; zero coefficients are never stored.  Canonical
term iteration and printing use graded lexicographic order (highest degree
first, ties broken by the exponent tuple with x > y > z).
"""

from __future__ import annotations

from fractions import Fraction
from math import comb

from .errors import SpecMismatch, UnsupportedInCharZero
from .field import FieldElement, FieldSpec

VARNAMES3 = ("x", "y", "z")


def var_names(nvars: int):
    if nvars <= 3:
        return VARNAMES3[:nvars]
    return tuple(f"x{i + 1}" for i in range(nvars))


def mono_mul(a, b):
    return tuple(i + j for i, j in zip(a, b))


def mono_deg(a) -> int:
    return sum(a)


def _grlex_key(mono):
    return (mono_deg(mono), mono)


class Poly:
    """Sparse polynomial; immutable by convention (never mutate .terms)."""

    __slots__ = ("spec", "nvars", "terms")

    def __init__(self, spec: FieldSpec, nvars: int, terms: dict | None = None):
        self.spec = spec
        self.nvars = nvars
        self.terms = {}
        if terms:
            for mono, coeff in terms.items():
                if coeff:
                    self.terms[mono] = coeff

    # -- constructors ------------------------------------------------------

    @staticmethod
    def zero(spec, nvars):
        return Poly(spec, nvars)

    @staticmethod
    def const(spec, nvars, value) -> "Poly":
        if isinstance(value, int):
            value = spec.from_int(value)
        elif isinstance(value, Fraction):
            value = spec.from_fraction(value)
        if not value:
            return Poly(spec, nvars)
        return Poly(spec, nvars, {(0,) * nvars: value})

    @staticmethod
    def variable(spec, nvars, index) -> "Poly":
        mono = tuple(1 if i == index else 0 for i in range(nvars))
        return Poly(spec, nvars, {mono: spec.one()})

    @staticmethod
    def monomial(spec, nvars, mono, coeff=None) -> "Poly":
        coeff = spec.one() if coeff is None else coeff
        return Poly(spec, nvars, {tuple(mono): coeff})

    # -- ring operations ---------------------------------------------------

    def _check(self, other: "Poly"):
        if self.spec != other.spec or self.nvars != other.nvars:
            raise SpecMismatch("polynomial ring mismatch")

    def __add__(self, other):
        self._check(other)
        out = dict(self.terms)
        for mono, coeff in other.terms.items():
            if mono in out:
                s = out[mono] + coeff
                if s:
                    out[mono] = s
                else:
                    del out[mono]
            else:
                out[mono] = coeff
        return Poly(self.spec, self.nvars, out)

    def __neg__(self):
        return Poly(self.spec, self.nvars, {m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, FieldElement):
            return self.scale(other)
        self._check(other)
        out = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = mono_mul(m1, m2)
                prod = c1 * c2
                if m in out:
                    s = out[m] + prod
                    if s:
                        out[m] = s
                    else:
                        del out[m]
                elif prod:
                    out[m] = prod
        return Poly(self.spec, self.nvars, out)

    def scale(self, coeff: FieldElement) -> "Poly":
        if not coeff:
            return Poly(self.spec, self.nvars)
        return Poly(self.spec, self.nvars, {m: c * coeff for m, c in self.terms.items()})

    def __pow__(self, n: int) -> "Poly":
        result = Poly.const(self.spec, self.nvars, 1)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base if n > 1 else base
            n >>= 1
        return result

    def __eq__(self, other):
        return (
            isinstance(other, Poly)
            and self.spec == other.spec
            and self.nvars == other.nvars
            and self.terms == other.terms
        )

    def __hash__(self):
        return hash((self.spec, self.nvars, frozenset(self.terms.items())))

    def __bool__(self):
        return bool(self.terms)

    # -- queries -----------------------------------------------------------

    def degree(self) -> int:
        """Total degree; -1 for the zero polynomial."""
        return max((mono_deg(m) for m in self.terms), default=-1)

    def order(self):
        """Minimal total degree of a term; None for zero."""
        return min((mono_deg(m) for m in self.terms), default=None)

    def order_along(self, vars_subset):
        """Minimal sum of exponents in vars_subset over all terms; None if 0."""
        return min(
            (sum(m[i] for i in vars_subset) for m in self.terms), default=None
        )

    def coefficient_of(self, var: int, power: int) -> "Poly":
        """Coefficient of var^power, as a polynomial in the same ring."""
        out = {}
        for m, c in self.terms.items():
            if m[var] == power:
                out[m[:var] + (0,) + m[var + 1 :]] = c
        return Poly(self.spec, self.nvars, out)

    def max_exponent(self, var: int) -> int:
        return max((m[var] for m in self.terms), default=0)

    def evaluate(self, point) -> FieldElement:
        """Evaluate at a tuple of field elements."""
        acc = self.spec.zero()
        for m, c in self.terms.items():
            term = c
            for i, e in enumerate(m):
                if e:
                    term = term * point[i] ** e
            acc = acc + term
        return acc

    def sorted_terms(self):
        return sorted(self.terms.items(), key=lambda kv: _grlex_key(kv[0]), reverse=True)

    def truncate(self, precision: int) -> "Poly":
        """Drop all terms of total degree >= precision."""
        return Poly(
            self.spec,
            self.nvars,
            {m: c for m, c in self.terms.items() if mono_deg(m) < precision},
        )

    def map_coeffs(self, fn) -> "Poly":
        return Poly(self.spec, self.nvars, {m: fn(c) for m, c in self.terms.items()})

    def permute_vars(self, perm) -> "Poly":
        """Relabel variables: new exponent i comes from old position perm[i]."""
        out = {}
        for m, c in self.terms.items():
            out[tuple(m[perm[i]] for i in range(self.nvars))] = c
        return Poly(self.spec, self.nvars, out)

    def drop_var(self, var: int) -> "Poly":
        """Forget a variable that no term uses."""
        out = {}
        for m, c in self.terms.items():
            if m[var] != 0:
                raise ValueError("variable still occurs")
            out[m[:var] + m[var + 1 :]] = c
        return Poly(self.spec, self.nvars - 1, out)

    def insert_var(self, var: int) -> "Poly":
        out = {}
        for m, c in self.terms.items():
            out[m[:var] + (0,) + m[var:]] = c
        return Poly(self.spec, self.nvars + 1, out)

    def divide_by_monomial(self, mono) -> "Poly":
        """Exact division by x^mono; raises if not divisible."""
        out = {}
        for m, c in self.terms.items():
            q = tuple(a - b for a, b in zip(m, mono))
            if any(e < 0 for e in q):
                raise ValueError("not divisible by the monomial")
            out[q] = c
        return Poly(self.spec, self.nvars, out)

    def try_divide(self, divisor: "Poly"):
        """Exact division by an arbitrary polynomial, or None.

        Sparse long division against the graded-lex leading term; the
        quotient is unique when the division is exact.
        """
        if not divisor:
            raise ZeroDivisionError("division by the zero polynomial")
        lead_mono = max(divisor.terms, key=_grlex_key)
        lead_coeff = divisor.terms[lead_mono]
        rem = dict(self.terms)
        quo = {}
        while rem:
            m = max(rem, key=_grlex_key)
            q = tuple(a - b for a, b in zip(m, lead_mono))
            if any(e < 0 for e in q):
                return None
            coeff = rem[m] / lead_coeff
            quo[q] = coeff
            for dm, dc in divisor.terms.items():
                target = mono_mul(q, dm)
                s = rem.get(target, self.spec.zero()) - coeff * dc
                if s:
                    rem[target] = s
                else:
                    rem.pop(target, None)
        return Poly(self.spec, self.nvars, quo)

    # -- printing / parsing -------------------------------------------------

    def __str__(self):
        if not self.terms:
            return "0"
        names = var_names(self.nvars)
        pieces = []
        for mono, coeff in self.sorted_terms():
            negative = False
            if self.spec.kind == "rationals" and coeff.value < 0:
                negative = True
                coeff = -coeff
            factors = []
            cs = str(coeff)
            needs_parens = ("+" in cs[1:]) or ("/" in cs) or ("t" in cs)
            if mono_deg(mono) == 0:
                factors.append(f"({cs})" if needs_parens else cs)
            else:
                if cs != "1":
                    factors.append(f"({cs})" if needs_parens else cs)
                for i, e in enumerate(mono):
                    if e == 1:
                        factors.append(names[i])
                    elif e > 1:
                        factors.append(f"{names[i]}^{e}")
            pieces.append(("-" if negative else "+", "*".join(factors)))
        sign, first = pieces[0]
        out = ("-" if sign == "-" else "") + first
        for sign, part in pieces[1:]:
            out += f" {sign} {part}"
        return out

    def __repr__(self):
        return f"Poly({self})"


# ---------------------------------------------------------------------------
# Parsing


class _Parser:
    def __init__(self, text: str, spec: FieldSpec, nvars: int):
        self.text = text
        self.pos = 0
        self.spec = spec
        self.nvars = nvars
        self.names = {n: i for i, n in enumerate(var_names(nvars))}

    def _skip(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def _peek(self):
        self._skip()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def parse(self) -> Poly:
        p = self._expr()
        self._skip()
        if self.pos != len(self.text):
            raise ValueError(f"trailing input at {self.pos}: {self.text[self.pos:]!r}")
        return p

    def _expr(self) -> Poly:
        ch = self._peek()
        if ch == "-":
            self.pos += 1
            acc = -self._term()
        else:
            if ch == "+":
                self.pos += 1
            acc = self._term()
        while True:
            ch = self._peek()
            if ch == "+":
                self.pos += 1
                acc = acc + self._term()
            elif ch == "-":
                self.pos += 1
                acc = acc - self._term()
            else:
                return acc

    def _term(self) -> Poly:
        acc = self._factor()
        while True:
            ch = self._peek()
            if ch == "*":
                self.pos += 1
                acc = acc * self._factor()
            elif ch == "(" or ch.isalnum():
                # implicit multiplication
                acc = acc * self._factor()
            else:
                return acc

    def _factor(self) -> Poly:
        base = self._atom()
        if self._peek() == "^":
            self.pos += 1
            exp = self._integer()
            base = base ** exp
        return base

    def _atom(self) -> Poly:
        ch = self._peek()
        if ch == "(":
            self.pos += 1
            inner = self._expr()
            if self._peek() != ")":
                raise ValueError("expected )")
            self.pos += 1
            return inner
        if ch.isdigit():
            num = self._integer()
            if self._peek() == "/":
                self.pos += 1
                den = self._integer()
                return Poly.const(self.spec, self.nvars, Fraction(num, den))
            return Poly.const(self.spec, self.nvars, num)
        if ch.isalpha():
            name = self._name()
            if name == "t" and self.spec.kind == "finite" and self.spec.k > 1:
                gen = self.spec.generator()
                return Poly.const(self.spec, self.nvars, 1).scale(gen)
            if name not in self.names:
                raise ValueError(f"unknown variable {name!r}")
            return Poly.variable(self.spec, self.nvars, self.names[name])
        raise ValueError(f"unexpected character {ch!r} at {self.pos}")

    def _integer(self) -> int:
        self._skip()
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos].isdigit():
            self.pos += 1
        if start == self.pos:
            raise ValueError("expected integer")
        return int(self.text[start : self.pos])

    def _name(self) -> str:
        self._skip()
        start = self.pos
        self.pos += 1
        while self.pos < len(self.text) and self.text[self.pos].isdigit():
            self.pos += 1
        return self.text[start : self.pos]


def parse_poly(text: str, spec: FieldSpec, nvars: int = 3) -> Poly:
    """Parse the polynomial grammar: vars x,y,z / x1..xn, ^, *, +, -, parens."""
    return _Parser(text, spec, nvars).parse()


# ---------------------------------------------------------------------------
# Binomial coefficients


def lucas_binomial(n: int, k: int, spec: FieldSpec) -> FieldElement:
    """C(n, k) as a field element; digitwise base p in characteristic p."""
    if k < 0 or k > n:
        return spec.zero()
    if spec.kind == "rationals":
        return spec.from_int(comb(n, k))
    p = spec.p
    acc = 1
    while n or k:
        ni, ki = n % p, k % p
        if ki > ni:
            return spec.zero()
        acc = (acc * comb(ni, ki)) % p
        n //= p
        k //= p
    return spec.from_int(acc)


def multi_binomial(beta, alpha, spec: FieldSpec) -> FieldElement:
    """Product of per-variable binomials C(beta_i, alpha_i) in the field."""
    acc = spec.one()
    for b, a in zip(beta, alpha):
        acc = acc * lucas_binomial(b, a, spec)
        if not acc:
            return acc
    return acc
