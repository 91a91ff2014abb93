"""Coefficient-ideal descriptors and order-level computations on them.

The coefficient ideal of J with respect to c and (x, z) is generated by the
powers f_i^(c!/(c-i)) of z-expansion coefficients.  Those powers are never
materialized here: every invariant of interest (weighted orders, the
exceptional factorization (r, d), the second coefficient-ideal order s) is a
minimum of scaled orders of the f_i, computed exactly over Q.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import factorial

from .orders import ExtOrder, WeightFn, ord_along, ord_of, vec_scaled, weighted_ord
from .series import Series


@dataclass
class ZExpansion:
    """Rows (i, f_i) of z-expansions, one list per generator of J."""

    c: int
    zvar: int
    rows: list  # list (per generator) of list[(i, Series in remaining vars)]

    def admissible(self):
        """All rows with i < c, across generators."""
        for gen_rows in self.rows:
            for i, fi in gen_rows:
                if i < self.c:
                    yield i, fi


@dataclass
class ZYExpansion:
    """Double expansion rows (i, j, f_ij) with f_ij free of both y and z."""

    c: int
    zvar: int
    yvar: int
    entries: list  # list (per generator) of list[(i, j, Series)]


@dataclass
class CoeffData:
    """Order-level summary of a coefficient ideal and its factorization."""

    c: int
    m: ExtOrder  # ord of the coefficient ideal
    r: dict  # exceptional variable -> ExtOrder exponent
    d: ExtOrder  # residual order: m - sum(r)
    s: ExtOrder | None = None  # order of the second coefficient ideal
    delta: Fraction | None = None

    @property
    def r_total(self) -> Fraction:
        total = Fraction(0)
        for v in self.r.values():
            total += v.value
        return total


def z_expand(gens, c: int, zvar: int) -> ZExpansion:
    """Expand each generator as sum f_i z^i; rows keep all i that occur."""
    rows = []
    for g in gens:
        body, prec = (g.body, g.precision) if isinstance(g, Series) else (g, None)
        gen_rows = []
        for i in range(body.max_exponent(zvar) + 1):
            coeff = body.coefficient_of(zvar, i).drop_var(zvar)
            if prec is None:
                fi = Series(coeff, 10 ** 9)
            else:
                fi = Series(coeff, max(prec - i, 0))
            if fi:
                gen_rows.append((i, fi))
        rows.append(gen_rows)
    return ZExpansion(c=c, zvar=zvar, rows=rows)


def zy_expand(gens, c: int, zvar: int, yvar: int) -> ZYExpansion:
    """Double expansion f = sum f_ij y^j z^i per generator."""
    entries = []
    for g in gens:
        body, prec = (g.body, g.precision) if isinstance(g, Series) else (g, None)
        gen_entries = []
        yv = yvar if yvar < zvar else yvar - 1
        for i in range(body.max_exponent(zvar) + 1):
            layer = body.coefficient_of(zvar, i).drop_var(zvar)
            for j in range(layer.max_exponent(yv) + 1):
                fij = layer.coefficient_of(yv, j).drop_var(yv)
                p = 10 ** 9 if prec is None else max(prec - i - j, 0)
                sij = Series(fij, p)
                if sij:
                    gen_entries.append((i, j, sij))
        entries.append(gen_entries)
    return ZYExpansion(c=c, zvar=zvar, yvar=yvar, entries=entries)


def coeff_weighted_order(zx: ZExpansion, w: WeightFn) -> tuple:
    """omega(J_-1) = min over rows i < c of (c!/(c-i)) * omega(f_i).

    Computed from generators only (legitimate for weighted orders of
    coefficient ideals).  Returns an ExtOrder vector; all-empty rows signal
    J = (z^c) and give Infinity.
    """
    cf = factorial(zx.c)
    best = None
    for i, fi in zx.admissible():
        scale = Fraction(cf, zx.c - i)
        val = vec_scaled(weighted_ord(w, fi), scale)
        if best is None or list(val) < list(best):
            best = val
    if best is None:
        return tuple(ExtOrder.infinity() for _ in range(w.k))
    return best


def coeff_ord(zx: ZExpansion) -> ExtOrder:
    """Plain order of the coefficient ideal."""
    nv = _remaining_nvars(zx)
    return coeff_weighted_order(zx, WeightFn.total(nv))[0]


def _remaining_nvars(zx: ZExpansion) -> int:
    for gen_rows in zx.rows:
        for _, fi in gen_rows:
            return fi.nvars
    raise ValueError("empty expansion")


def coeff_factorization(zx: ZExpansion, exc_vars) -> CoeffData:
    """Monomial/residual factorization of the coefficient ideal.

    r_v = c! * min over rows of ord_along(f_i, {v}) / (c - i) for each
    exceptional variable v (indices in the reduced ring), and d = m - sum r_v.
    """
    cf = factorial(zx.c)
    m = coeff_ord(zx)
    r = {}
    for v in sorted(exc_vars):
        best = None
        for i, fi in zx.admissible():
            val = ord_along(fi, {v}).scaled(Fraction(cf, zx.c - i))
            if best is None or val < best:
                best = val
        r[v] = best if best is not None else ExtOrder.infinity()
    d = m
    for v in r:
        d = d - ExtOrder.finite(r[v].value) if r[v].is_finite else d
    return CoeffData(c=zx.c, m=m, r=r, d=d)


def second_coeff_order(
    zy: ZYExpansion, r_total, r_y, d, include_ry_in_bound: bool = True
):
    """Order s of the second coefficient ideal, plus the auxiliary delta.

    s = min over generators and entries (i < c, j < (c-i)(d+r_y)/c!) of
        d!/(d + r_y - (c!/(c-i)) j) * ((c!/(c-i)) ord f_ij - |r|).
    """
    c = zy.c
    cf = factorial(c)
    r_total = Fraction(r_total)
    r_y = Fraction(r_y)
    if isinstance(d, ExtOrder):
        if not d.is_finite:
            raise ValueError("d must be finite to form the second coefficient ideal")
        d = d.value
    d = Fraction(d)
    if d <= 0:
        raise ValueError("second coefficient ideal needs d > 0")
    dfact = factorial(int(d)) if d.denominator == 1 else None
    if dfact is None:
        raise ValueError("d must be an integer")
    best = None
    found_range = False
    for gen_entries in zy.entries:
        for i, j, fij in gen_entries:
            if i >= c:
                continue
            scale = Fraction(cf, c - i)
            if Fraction(j) >= (d + r_y) / scale:
                continue
            found_range = True
            denom = d + r_y - scale * j
            val = (ord_of(fij).scaled(scale) - ExtOrder.finite(r_total)).scaled(
                Fraction(dfact) / denom
            )
            if best is None or val < best:
                best = val
    if not found_range or best is None:
        return ExtOrder.infinity(), None
    if not best.is_finite:
        return best, None
    s = best
    delta = ((d + r_y) * s.value / dfact + r_total) / cf
    return s, delta


def companion_second_order(c: int, d, r_y, r_rest, s0: ExtOrder) -> ExtOrder:
    """Second-order invariant for 0 < d < c! via the companion construction.

    s = (d(c!-d))! * min{ s0/d!, m0/(c!-d)! } where m0 is the order of the
    (c!-d)-th coefficient ideal of the monomial part M (curve-variable
    exponent r_y, remaining exceptional exponent sum r_rest), expanded along
    the same curve variable used for s0.
    """
    cf = factorial(c)
    if isinstance(d, ExtOrder):
        d = d.as_int()
    if not (0 < d < cf):
        raise ValueError("companion construction needs 0 < d < c!")
    cprime = cf - d
    ry = int(r_y)
    r_rest = Fraction(r_rest)
    # the monomial part has a single curve-variable row (j = r_y, coeff x^r_rest)
    if ry < cprime:
        m0 = ExtOrder.finite(Fraction(factorial(cprime), cprime - ry) * r_rest)
    else:
        m0 = ExtOrder.infinity()
    scale = factorial(d * cprime)
    cand1 = s0.scaled(Fraction(scale, factorial(d)))
    cand2 = m0.scaled(Fraction(scale, factorial(cprime)))
    return min(cand1, cand2)


def coeff_ideal_power_law_check(gens, c: int, zvar: int, n: int) -> bool:
    """Oracle: ord coeff^(nc)(J^n) == ((nc)!/c!) * ord coeff^c(J)."""
    base = coeff_ord(z_expand(gens, c, zvar))
    power_gens = []

    # products of n generators (with repetition) generate J^n
    def _products(acc, start, depth):
        if depth == 0:
            power_gens.append(acc)
            return
        for k in range(start, len(gens)):
            _products(acc * gens[k], k, depth - 1)

    first = gens[0]
    onebody = first.body if isinstance(first, Series) else first
    from .poly import Poly

    unit = Series(
        Poly.const(onebody.spec, onebody.nvars, 1),
        first.precision if isinstance(first, Series) else 10 ** 9,
    )
    _products(unit, 0, n)
    lhs = coeff_ord(z_expand(power_gens, n * c, zvar))
    rhs = base.scaled(Fraction(factorial(n * c), factorial(c)))
    return lhs == rhs
