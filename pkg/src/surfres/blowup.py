"""Local blowup chart maps, weak transforms, and exceptional bookkeeping.

A chart of the blowup along the coordinate center (x_i : i in center_vars)
fixes the chart variable and maps every other center variable v to
chart_var * (v + t_v); non-center variables are untouched.  The weak
transform divides the total transform by chart_var^c.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import NonDivisible, NotPermissible
from .field import FieldElement
from .orders import ExtOrder, ord_along, ord_of
from .poly import Poly
from .series import Series, substitute, substitute_poly


@dataclass(frozen=True)
class ChartMap:
    center_vars: tuple  # sorted variable indices generating the center
    chart_var: int  # one of center_vars
    t: tuple = ()  # (var, FieldElement) translations for non-chart center vars

    def translations(self) -> dict:
        return dict(self.t)

    def describe(self, names):
        parts = [f"{names[self.chart_var]}-chart"]
        tr = self.translations()
        if any(bool(v) for v in tr.values()):
            at = ",".join(f"{names[v]}={val}" for v, val in sorted(tr.items(), key=lambda kv: kv[0]))
            parts.append(f"at {at}")
        return " ".join(parts)


@dataclass
class ExceptionalComponent:
    local_eq: Poly  # principal local equation
    age: int
    label: int

    def copy_with(self, eq: Poly) -> "ExceptionalComponent":
        return ExceptionalComponent(local_eq=eq, age=self.age, label=self.label)


def chart_images(cmap: ChartMap, spec, nvars: int):
    """Variable images of the chart substitution, as exact polynomials."""
    tr = cmap.translations()
    chart = Poly.variable(spec, nvars, cmap.chart_var)
    images = []
    for i in range(nvars):
        v = Poly.variable(spec, nvars, i)
        if i == cmap.chart_var:
            images.append(v)
        elif i in cmap.center_vars:
            tv = tr.get(i)
            if tv is not None and tv:
                v = v + Poly.const(spec, nvars, 1).scale(tv)
            images.append(chart * v)
        else:
            images.append(v)
    return images


def apply_chart(f, c: int, cmap: ChartMap):
    """Weak transform of f under the chart map: (f o pi) / chart_var^c.

    Returns (f_weak, exc_eq).  Raises NotPermissible when the center order
    condition fails, NonDivisible if chart_var^c does not divide the total
    transform (an internal consistency failure).
    """
    body = f.body if isinstance(f, Series) else f
    spec, nvars = body.spec, body.nvars
    center_order = ord_along(f, set(cmap.center_vars))
    if center_order < ExtOrder.finite(c):
        raise NotPermissible(
            f"center order {center_order} < {c} along {cmap.center_vars}"
        )
    images = chart_images(cmap, spec, nvars)
    mono = tuple(c if i == cmap.chart_var else 0 for i in range(nvars))
    if isinstance(f, Series):
        total = substitute(f, images, precision=f.precision, translation=True)
        try:
            weak = total.divide_by_monomial(mono)
        except ValueError as exc:
            raise NonDivisible(str(exc)) from exc
    else:
        total = substitute_poly(f, images)
        try:
            weak = total.divide_by_monomial(mono)
        except ValueError as exc:
            raise NonDivisible(str(exc)) from exc
    exc_eq = Poly.variable(spec, nvars, cmap.chart_var)
    return weak, exc_eq


def transform_divisors(
    components, cmap: ChartMap, o_max: int, next_label: int, spec, nvars: int
):
    """Strict transforms of old components plus the new exceptional divisor.

    A component whose strict transform is a unit at the chart origin no
    longer passes through any point of interest of this chart and is dropped.
    """
    images = chart_images(cmap, spec, nvars)
    out = []
    for comp in components:
        total = substitute_poly(comp.local_eq, images)
        e = total.order_along({cmap.chart_var})
        if e:
            total = total.divide_by_monomial(
                tuple(e if i == cmap.chart_var else 0 for i in range(nvars))
            )
        const = total.terms.get((0,) * nvars)
        if const is not None and const:
            # unit at the origin of this chart: the component misses it
            continue
        out.append(comp.copy_with(total))
    out.append(
        ExceptionalComponent(
            local_eq=Poly.variable(spec, nvars, cmap.chart_var),
            age=o_max,
            label=next_label,
        )
    )
    return out


@dataclass(frozen=True)
class ChartFamily:
    """A family of charts over one chart variable, with free translations.

    free_vars lists the center variables whose translation constant ranges
    over the field; all other non-chart center variables are pinned to 0.
    """

    chart_var: int
    free_vars: tuple = ()


def equiconstant_charts(tau: int, center_vars, zvar: int):
    """Chart families that can contain equiconstant points.

    The z-chart is always excluded (z generates the directrix).  For tau = 2
    the second directrix direction is the y-like variable, so only the
    origin of the x-like chart survives; tau = 3 forces the order to drop
    everywhere and no family is returned.
    """
    others = [v for v in sorted(center_vars) if v != zvar]
    if tau >= 3:
        return []
    if tau == 2:
        if not others:
            return []
        return [ChartFamily(chart_var=others[0], free_vars=())]
    families = []
    for idx, v in enumerate(others):
        free = tuple(others[idx + 1 :])
        families.append(ChartFamily(chart_var=v, free_vars=free))
    return families
