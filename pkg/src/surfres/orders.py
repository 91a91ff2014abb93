"""Order functions, weighted order functions, initial forms, and q_K(c).

Values live in an extended order type: Finite(v), AtLeast(v) (a truncation
artifact: the true value is >= v), and Infinity.  Comparisons are total via
the key (value, tag rank), so Finite(a) < AtLeast(a) < Infinity.  Weighted
order functions are vector-valued; vectors compare lexicographically.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .poly import Poly, mono_deg
from .series import Series

_RANK = {"finite": 0, "atleast": 1, "infinity": 2}


@dataclass(frozen=True)
class ExtOrder:
    tag: str  # "finite" | "atleast" | "infinity"
    value: Fraction = Fraction(0)

    @staticmethod
    def finite(v) -> "ExtOrder":
        return ExtOrder("finite", Fraction(v))

    @staticmethod
    def at_least(v) -> "ExtOrder":
        return ExtOrder("atleast", Fraction(v))

    @staticmethod
    def infinity() -> "ExtOrder":
        return ExtOrder("infinity", Fraction(0))

    @property
    def is_finite(self) -> bool:
        return self.tag == "finite"

    def __lt__(self, other):
        other = _coerce(other)
        return self._sortkey() < other._sortkey()

    def __le__(self, other):
        other = _coerce(other)
        return self._sortkey() <= other._sortkey()

    def __gt__(self, other):
        other = _coerce(other)
        return self._sortkey() > other._sortkey()

    def __ge__(self, other):
        other = _coerce(other)
        return self._sortkey() >= other._sortkey()

    def _sortkey(self):
        if self.tag == "infinity":
            return (1, Fraction(0), 0)
        return (0, self.value, _RANK[self.tag])

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.tag == "finite" and self.value == other
        if not isinstance(other, ExtOrder):
            return NotImplemented
        return self._sortkey() == other._sortkey()

    def __hash__(self):
        return hash(self._sortkey())

    def __add__(self, other):
        other = _coerce(other)
        if self.tag == "infinity" or other.tag == "infinity":
            return ExtOrder.infinity()
        tag = "atleast" if "atleast" in (self.tag, other.tag) else "finite"
        return ExtOrder(tag, self.value + other.value)

    def __sub__(self, other):
        other = _coerce(other)
        if self.tag == "infinity":
            return ExtOrder.infinity()
        if other.tag != "finite":
            raise ValueError("cannot subtract a non-finite bound")
        return ExtOrder(self.tag, self.value - other.value)

    def scaled(self, factor) -> "ExtOrder":
        factor = Fraction(factor)
        if self.tag == "infinity":
            return self
        return ExtOrder(self.tag, self.value * factor)

    def as_int(self) -> int:
        if self.tag != "finite" or self.value.denominator != 1:
            raise ValueError(f"{self} is not a finite integer")
        return self.value.numerator

    def __str__(self):
        if self.tag == "finite":
            return str(self.value)
        if self.tag == "atleast":
            return f">={self.value}"
        return "inf"

    def __repr__(self):
        return f"ExtOrder({self})"


def _coerce(v) -> ExtOrder:
    if isinstance(v, ExtOrder):
        return v
    return ExtOrder.finite(v)


def vec_scaled(vec: tuple, factor) -> tuple:
    return tuple(c.scaled(factor) for c in vec)


def vec_add(a: tuple, b: tuple) -> tuple:
    return tuple(x + y for x, y in zip(a, b))


def vec_is_finite(vec: tuple) -> bool:
    return all(c.is_finite for c in vec)


# ---------------------------------------------------------------------------
# Weighted order functions


class WeightFn:
    """Vector-valued weights per variable, compared lexicographically.

    The all-ones single-component instance is the plain order function; the
    instance with weight 1 on one variable and 0 elsewhere is the x_i-order.
    """

    __slots__ = ("nvars", "k", "weights")

    def __init__(self, weights):
        self.weights = tuple(tuple(int(c) for c in w) for w in weights)
        self.nvars = len(self.weights)
        self.k = len(self.weights[0]) if self.weights else 0
        for w in self.weights:
            if len(w) != self.k:
                raise ValueError("ragged weight vectors")

    @staticmethod
    def total(nvars: int) -> "WeightFn":
        return WeightFn([(1,)] * nvars)

    @staticmethod
    def along(nvars: int, vars_subset) -> "WeightFn":
        vs = set(vars_subset)
        return WeightFn([(1,) if i in vs else (0,) for i in range(nvars)])

    @staticmethod
    def single(nvars: int, values) -> "WeightFn":
        """One-component weight with the given per-variable values."""
        return WeightFn([(int(v),) for v in values])

    @staticmethod
    def compose(*fns: "WeightFn") -> "WeightFn":
        """Concatenate components; value = (w1(f), w2(init_{w1} f), ...)."""
        nvars = fns[0].nvars
        return WeightFn([sum((fn.weights[i] for fn in fns), ()) for i in range(nvars)])

    def augmented(self) -> "WeightFn":
        """Append an all-ones component (the omega_+ construction)."""
        return WeightFn([w + (1,) for w in self.weights])

    def mono_value(self, mono) -> tuple:
        out = [0] * self.k
        for e, w in zip(mono, self.weights):
            if e:
                for j in range(self.k):
                    out[j] += e * w[j]
        return tuple(out)

    def min_mono_value(self) -> tuple:
        """Componentwise minimum over variables; bounds unknown-tail values."""
        return tuple(min(w[j] for w in self.weights) for j in range(self.k))

    def __eq__(self, other):
        return isinstance(other, WeightFn) and self.weights == other.weights

    def __hash__(self):
        return hash(self.weights)

    def __repr__(self):
        return f"WeightFn({self.weights})"


@dataclass(frozen=True)
class InitialForm:
    form: Poly
    value: tuple  # ExtOrder vector


def weighted_ord(w: WeightFn, f) -> tuple:
    """Lexicographic minimum of term values, as an ExtOrder vector."""
    if isinstance(f, Series):
        body, prec = f.body, f.precision
    else:
        body, prec = f, None
    if w.nvars != body.nvars:
        raise ValueError("weight/variable count mismatch")
    best = None
    for mono in body.terms:
        v = w.mono_value(mono)
        if best is None or v < best:
            best = v
    if best is None:
        if prec is None:
            return tuple(ExtOrder.infinity() for _ in range(w.k))
        floor = w.min_mono_value()
        return tuple(ExtOrder.at_least(prec * m) for m in floor)
    return tuple(ExtOrder.finite(c) for c in best)


def init_form(w: WeightFn, f) -> InitialForm:
    """Sum of the minimal-value terms (weighted-homogeneous by construction)."""
    body = f.body if isinstance(f, Series) else f
    value = weighted_ord(w, f)
    if not vec_is_finite(value):
        return InitialForm(Poly.zero(body.spec, body.nvars), value)
    target = tuple(c.value for c in value)
    terms = {
        m: c
        for m, c in body.terms.items()
        if tuple(Fraction(x) for x in w.mono_value(m)) == target
    }
    return InitialForm(Poly(body.spec, body.nvars, terms), value)


def ord_of(f) -> ExtOrder:
    """Plain order: minimal total degree; AtLeast(precision) when truncated."""
    if isinstance(f, Series):
        o = f.body.order()
        return ExtOrder.at_least(f.precision) if o is None else ExtOrder.finite(o)
    o = f.order()
    return ExtOrder.infinity() if o is None else ExtOrder.finite(o)


def ord_along(f, vars_subset) -> ExtOrder:
    """Order along the coordinate subvariety V(x_i : i in vars_subset)."""
    if not vars_subset:
        raise ValueError("vars_subset must be nonempty")
    body = f.body if isinstance(f, Series) else f
    o = body.order_along(vars_subset)
    if o is None:
        if isinstance(f, Series):
            return ExtOrder.at_least(0)
        return ExtOrder.infinity()
    return ExtOrder.finite(o)


def q_of(c: int, spec) -> int:
    """q_K(c): 1 in characteristic 0, p^(v_p(c)) in characteristic p."""
    if c < 1:
        raise ValueError("c must be >= 1")
    p = spec.char
    if p == 0:
        return 1
    q = 1
    while c % p == 0:
        q *= p
        c //= p
    return q
