"""Exact coefficient fields: Q and finite fields F_{p^k}.

Elements of F_{p^k} are polynomials of degree < k over F_p, reduced modulo a
deterministically chosen irreducible modulus, so that all traces are
reproducible.  Rationals use fractions.Fraction.  No floating point anywhere.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import DivisionByZero, SpecMismatch, UnsupportedInCharZero


def _is_prime(p: int) -> bool:
    if p < 2:
        return False
    d = 2
    while d * d <= p:
        if p % d == 0:
            return False
        d += 1
    return True


def _polymod(coeffs, modulus, p):
    """Reduce a coefficient tuple modulo (modulus, p). Little-endian tuples."""
    c = [x % p for x in coeffs]
    k = len(modulus) - 1
    while len(c) > k:
        lead = c.pop()
        if lead:
            # modulus is monic: x^k = -(lower part)
            for i in range(k):
                c[len(c) - k + i] = (c[len(c) - k + i] - lead * modulus[i]) % p
    while len(c) < k:
        c.append(0)
    return tuple(c)


def _polymul(a, b, p):
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] = (out[i + j] + x * y) % p
    return out


def _poly_divmod(a, b, p):
    """Division of little-endian int-coefficient polys over F_p; b nonzero."""
    a = [x % p for x in a]
    while a and a[-1] == 0:
        a.pop()
    b = [x % p for x in b]
    while b and b[-1] == 0:
        b.pop()
    if not b:
        raise DivisionByZero("polynomial division by zero")
    inv_lead = pow(b[-1], p - 2, p)
    q = [0] * max(1, len(a) - len(b) + 1)
    r = a[:]
    while len(r) >= len(b) and any(r):
        shift = len(r) - len(b)
        factor = (r[-1] * inv_lead) % p
        q[shift] = factor
        for i, y in enumerate(b):
            r[shift + i] = (r[shift + i] - factor * y) % p
        while r and r[-1] == 0:
            r.pop()
    return q, r


def _poly_is_irreducible(poly, p):
    """Trial division by all monic polynomials of degree <= deg/2."""
    deg = len(poly) - 1
    if deg <= 0:
        return False
    if deg == 1:
        return True
    for d in range(1, deg // 2 + 1):
        # enumerate monic candidates of degree d
        for code in range(p ** d):
            cand = []
            c = code
            for _ in range(d):
                cand.append(c % p)
                c //= p
            cand.append(1)
            _, rem = _poly_divmod(list(poly), cand, p)
            if not any(rem):
                return False
    return True


def _minimal_irreducible(p: int, k: int):
    """Least monic irreducible of degree k over F_p in lex coefficient order.

    Coefficient vectors (c_0, ..., c_{k-1}) are scanned in lexicographic
    order; the modulus is x^k + c_{k-1} x^{k-1} + ... + c_0.
    """
    if k == 1:
        return (0, 1)
    for code in range(p ** k):
        coeffs = []
        c = code
        for _ in range(k):
            coeffs.append(c % p)
            c //= p
        # code enumerates (c_0, c_1, ...) with c_0 fastest; to scan in lex
        # order on (c_0, ..., c_{k-1}) we need c_{k-1} fastest instead.
        coeffs = coeffs[::-1]
        cand = tuple(coeffs) + (1,)
        if _poly_is_irreducible(cand, p):
            return cand
    raise AssertionError("no irreducible polynomial found")


@dataclass(frozen=True)
class FieldSpec:
    """Description of the coefficient field: Q or F_{p^k}."""

    kind: str  # "rationals" | "finite"
    p: int = 0
    k: int = 1
    modulus: tuple = ()  # little-endian, monic, length k+1 (finite only)

    RATIONALS_LITERAL = "QQ"

    def __post_init__(self):
        if self.kind == "finite":
            if not _is_prime(self.p):
                raise ValueError(f"{self.p} is not prime")
            if self.k < 1:
                raise ValueError("extension degree must be >= 1")

    @staticmethod
    def rationals() -> "FieldSpec":
        return FieldSpec(kind="rationals", p=0, k=1, modulus=())

    @staticmethod
    def finite(p: int, k: int = 1) -> "FieldSpec":
        return FieldSpec(kind="finite", p=p, k=k, modulus=_minimal_irreducible(p, k))

    @staticmethod
    def parse(text: str) -> "FieldSpec":
        """Parse a field literal: "QQ", "GF(p)" or "GF(p^k)"."""
        text = text.strip()
        if text == "QQ":
            return FieldSpec.rationals()
        if text.startswith("GF(") and text.endswith(")"):
            inner = text[3:-1]
            if "^" in inner:
                ps, ks = inner.split("^")
                return FieldSpec.finite(int(ps), int(ks))
            return FieldSpec.finite(int(inner))
        raise ValueError(f"cannot parse field literal {text!r}")

    @property
    def char(self) -> int:
        return self.p if self.kind == "finite" else 0

    @property
    def size(self):
        """Number of elements, or None for Q."""
        if self.kind == "finite":
            return self.p ** self.k
        return None

    def zero(self) -> "FieldElement":
        return self.from_int(0)

    def one(self) -> "FieldElement":
        return self.from_int(1)

    def from_int(self, n: int) -> "FieldElement":
        if self.kind == "rationals":
            return FieldElement(self, Fraction(n))
        return FieldElement(self, _polymod((n,), self.modulus, self.p))

    def from_fraction(self, q: Fraction) -> "FieldElement":
        if self.kind == "rationals":
            return FieldElement(self, Fraction(q))
        num = self.from_int(q.numerator)
        den = self.from_int(q.denominator)
        return num / den

    def generator(self) -> "FieldElement":
        """The class of x in F_p[x]/(modulus); only meaningful for k > 1."""
        if self.kind != "finite":
            raise UnsupportedInCharZero("no generator over Q")
        return FieldElement(self, _polymod((0, 1), self.modulus, self.p))

    def elements(self):
        """Iterate all field elements (finite fields only), deterministically."""
        if self.kind != "finite":
            raise SearchOverQ()
        for code in range(self.p ** self.k):
            coeffs = []
            c = code
            for _ in range(self.k):
                coeffs.append(c % self.p)
                c //= self.p
            yield FieldElement(self, tuple(coeffs))

    def __str__(self):
        if self.kind == "rationals":
            return "QQ"
        if self.k == 1:
            return f"GF({self.p})"
        return f"GF({self.p}^{self.k})"


class SearchOverQ(SpecMismatch):
    """Enumeration of all field elements requested over Q."""


class FieldElement:
    """Immutable exact scalar in Q or F_{p^k}."""

    __slots__ = ("spec", "value")

    def __init__(self, spec: FieldSpec, value):
        object.__setattr__(self, "spec", spec)
        object.__setattr__(self, "value", value)

    def __setattr__(self, *args):
        raise AttributeError("FieldElement is immutable")

    def _check(self, other: "FieldElement"):
        if self.spec != other.spec:
            raise SpecMismatch(f"{self.spec} vs {other.spec}")

    def __add__(self, other):
        self._check(other)
        if self.spec.kind == "rationals":
            return FieldElement(self.spec, self.value + other.value)
        p = self.spec.p
        vals = tuple((a + b) % p for a, b in zip(self.value, other.value))
        return FieldElement(self.spec, vals)

    def __sub__(self, other):
        self._check(other)
        if self.spec.kind == "rationals":
            return FieldElement(self.spec, self.value - other.value)
        p = self.spec.p
        vals = tuple((a - b) % p for a, b in zip(self.value, other.value))
        return FieldElement(self.spec, vals)

    def __neg__(self):
        if self.spec.kind == "rationals":
            return FieldElement(self.spec, -self.value)
        p = self.spec.p
        return FieldElement(self.spec, tuple((-a) % p for a in self.value))

    def __mul__(self, other):
        self._check(other)
        if self.spec.kind == "rationals":
            return FieldElement(self.spec, self.value * other.value)
        prod = _polymul(self.value, other.value, self.spec.p)
        return FieldElement(self.spec, _polymod(prod, self.spec.modulus, self.spec.p))

    def inverse(self) -> "FieldElement":
        if not self:
            raise DivisionByZero("inverse of zero")
        if self.spec.kind == "rationals":
            return FieldElement(self.spec, 1 / self.value)
        # a^(q-2) with q = p^k
        q = self.spec.p ** self.spec.k
        return self ** (q - 2)

    def __truediv__(self, other):
        self._check(other)
        if not other:
            raise DivisionByZero("division by zero")
        return self * other.inverse()

    def __pow__(self, n: int):
        if n < 0:
            return self.inverse() ** (-n)
        result = self.spec.one()
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def frobenius_root(self, e: int = 1) -> "FieldElement":
        """The unique b with b^(p^e) = self; K perfect makes it exist.

        Realized as the e-fold inverse Frobenius a -> a^(p^(k-1)).
        """
        if e == 0:
            return self
        if self.spec.kind == "rationals":
            raise UnsupportedInCharZero("p^e-th roots with e > 0 need char p")
        out = self
        exp = self.spec.p ** (self.spec.k - 1) if self.spec.k > 1 else None
        for _ in range(e):
            if self.spec.k == 1:
                # Frobenius is the identity on F_p
                continue
            out = out ** exp
        return out

    def __eq__(self, other):
        if not isinstance(other, FieldElement):
            return NotImplemented
        return self.spec == other.spec and self.value == other.value

    def __hash__(self):
        return hash((self.spec, self.value))

    def __bool__(self):
        if self.spec.kind == "rationals":
            return self.value != 0
        return any(self.value)

    def as_int(self):
        """Integer image for prime-field / integral rational elements."""
        if self.spec.kind == "rationals":
            if self.value.denominator != 1:
                raise ValueError("not an integer")
            return self.value.numerator
        if any(self.value[1:]):
            raise ValueError("not in the prime field")
        return self.value[0]

    def __str__(self):
        if self.spec.kind == "rationals":
            return str(self.value)
        if self.spec.k == 1:
            return str(self.value[0])
        parts = []
        for i in range(self.spec.k - 1, -1, -1):
            c = self.value[i]
            if c == 0:
                continue
            if i == 0:
                parts.append(str(c))
            else:
                head = "" if c == 1 else f"{c}*"
                parts.append(f"{head}t" if i == 1 else f"{head}t^{i}")
        return "+".join(parts) if parts else "0"

    def __repr__(self):
        return f"<{self} : {self.spec}>"


def embed(elt: FieldElement, target: FieldSpec) -> FieldElement:
    """Embed an element of F_{p^k} (or Q) into a compatible larger field.

    For finite fields the embedding sends the generator of the base field to
    a root of the base modulus in the target, found by exhaustive search.
    """
    if elt.spec == target:
        return elt
    if elt.spec.kind == "rationals" or target.kind == "rationals":
        raise SpecMismatch("no embedding between Q and finite fields")
    if elt.spec.p != target.p or target.k % elt.spec.k != 0:
        raise SpecMismatch(f"no embedding {elt.spec} -> {target}")
    if elt.spec.k == 1:
        return target.from_int(elt.value[0])
    root = _modulus_root(elt.spec, target)
    out = target.zero()
    for i, c in enumerate(elt.value):
        out = out + target.from_int(c) * root ** i
    return out


_ROOT_CACHE: dict = {}


def _modulus_root(base: FieldSpec, target: FieldSpec) -> FieldElement:
    key = (base, target)
    if key not in _ROOT_CACHE:
        for cand in target.elements():
            acc = target.zero()
            for i, c in enumerate(base.modulus):
                acc = acc + target.from_int(c) * cand ** i
            if not acc:
                _ROOT_CACHE[key] = cand
                break
        else:
            raise SpecMismatch(f"modulus of {base} has no root in {target}")
    return _ROOT_CACHE[key]
