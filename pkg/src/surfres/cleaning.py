"""z-regularity, cleanness tests, and the cleaning processes.

A coordinate change z -> z + g can raise a weighted order of the coefficient
ideal only by cancelling a q-th-power obstruction (q = q_K(c)) against the
unit z^c-coefficient.  The cleanness conditions certify that no such
cancellation is available; the cleaning step extracts the obstruction root G
and applies z -> z - C(c,q)^{-1} G ... iterating until clean.  Secondary
cleaning plays the same game one level down, for the order of the second
coefficient ideal, with steps of the shape z -> z + g_b(x) y^b.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import factorial

from .coeffideal import (
    coeff_factorization,
    coeff_weighted_order,
    second_coeff_order,
    z_expand,
    zy_expand,
)
from .errors import PrecisionTooLow
from .field import FieldSpec
from .orders import (
    ExtOrder,
    WeightFn,
    init_form,
    ord_of,
    q_of,
    vec_is_finite,
    vec_scaled,
    weighted_ord,
)
from .poly import Poly, lucas_binomial
from .series import NotAPower, Series, qth_power_root, substitute


def z_coefficient(f: Series, zvar: int, i: int) -> Series:
    """The coefficient f_i of z^i, as a series in the remaining variables."""
    coeff = f.body.coefficient_of(zvar, i).drop_var(zvar)
    return Series(coeff, max(f.precision - i, 0))


def is_z_regular(f: Series, c: int, zvar: int) -> bool:
    """True iff the z^c-coefficient of f is a unit."""
    return z_coefficient(f, zvar, c).order_floor() == 0


def lift_to_full(g: Series, zvar: int, full_nvars: int) -> Series:
    """Re-insert the z variable (with exponent 0) into a reduced-ring series."""
    assert g.nvars == full_nvars - 1
    return Series(g.body.insert_var(zvar), g.precision)


def apply_z_change(f: Series, zvar: int, g: Series) -> Series:
    """Substitute z -> z + g(remaining vars) into f."""
    spec, nv = f.spec, f.nvars
    images = []
    g_full = lift_to_full(g, zvar, nv)
    for i in range(nv):
        var = Series(Poly.variable(spec, nv, i), 10 ** 9)
        images.append(var + g_full if i == zvar else var)
    return substitute(f, images, precision=f.precision)


@dataclass
class CleanVerdict:
    clean: bool
    condition: int | None = None  # 1 | 2 | 3 when clean
    witness: Series | None = None  # G with init(f_{c-q}) = init(f_c) G^q
    m: tuple | None = None  # weighted order of the coefficient ideal
    weight: WeightFn | None = None  # possibly omega_+-augmented


@dataclass
class CleaningOutcome:
    g_total: Series  # accumulated coordinate change, reduced ring
    status: str  # "cleaned" | "coeff_vanishes_at_precision" | "precision_exhausted"
    steps: int
    m_final: tuple | None = None
    s_final: ExtOrder | None = None


def _augment_if_needed(w: WeightFn, m: tuple, zx) -> tuple:
    """Apply the omega_+ construction when the leading component of m is 0."""
    if vec_is_finite(m) and m[0].value == 0:
        w2 = w.augmented()
        return w2, coeff_weighted_order(zx, w2)
    return w, m


def omega_clean_test(f: Series, c: int, zvar: int, w: WeightFn) -> CleanVerdict:
    """Decide omega-cleanness of f (z-regular of order c) w.r.t. coeff^c(f).

    Returns the first satisfied condition, or the witness root G of the
    failing third condition.
    """
    assert is_z_regular(f, c, zvar), "omega_clean_test needs a z-regular element"
    spec = f.spec
    zx = z_expand([f], c, zvar)
    m = coeff_weighted_order(zx, w)
    if not vec_is_finite(m):
        # J = (z^c) at this precision: nothing left to maximize
        return CleanVerdict(clean=True, condition=2, m=m, weight=w)
    w, m = _augment_if_needed(w, m, zx)
    q = q_of(c, spec)
    cf = factorial(c)

    for i in range(c - q + 1, c):
        fi = z_coefficient(f, zvar, i)
        if fi and list(weighted_ord(w, fi)) == list(vec_scaled(m, Fraction(c - i, cf))):
            return CleanVerdict(clean=True, condition=1, m=m, weight=w)

    fcq = z_coefficient(f, zvar, c - q)
    if not fcq:
        # the coefficient vanishes (identically, for polynomial-derived data)
        return CleanVerdict(clean=True, condition=2, m=m, weight=w)
    target = vec_scaled(m, Fraction(q, cf))
    vq = weighted_ord(w, fcq)
    if list(vq) > list(target):
        return CleanVerdict(clean=True, condition=2, m=m, weight=w)

    # not-divisible shortcut: failing condition three forces m = c! * omega(G)
    if any((comp.value % cf) for comp in m):
        return CleanVerdict(clean=True, condition=3, m=m, weight=w)

    fc = z_coefficient(f, zvar, c)
    init_cq = init_form(w, fcq)
    init_c = init_form(w, fc)
    # initial forms are exact; work at q times the series precision so the
    # extracted root is still known to the full working precision
    hprec = max(q * f.precision, 1)
    inv = Series(init_c.form, hprec).inverse()
    h = Series(init_cq.form, hprec) * inv
    root = qth_power_root(h, q)
    if isinstance(root, NotAPower):
        return CleanVerdict(clean=True, condition=3, m=m, weight=w)
    return CleanVerdict(clean=False, witness=root, m=m, weight=w)


def cleaning_step_change(f: Series, c: int, verdict: CleanVerdict) -> Series:
    """The coordinate change g = -C(c,q)^{-1} G of a cleaning step."""
    spec = f.spec
    q = q_of(c, spec)
    binv = lucas_binomial(c, q, spec).inverse()
    return verdict.witness.scale(-binv)


def omega_cleaning_process(
    f: Series,
    c: int,
    zvar: int,
    w: WeightFn,
    max_steps: int | None = None,
    trace_hook=None,
):
    """Iterate cleaning steps until f is omega-clean w.r.t. its coefficient
    ideal; returns (f_transformed, CleaningOutcome)."""
    if max_steps is None:
        max_steps = 2 * f.precision + 8
    spec, nv = f.spec, f.nvars
    g_total = Series(Poly.zero(spec, nv - 1), f.precision)
    prev_m = None
    for step in range(max_steps + 1):
        verdict = omega_clean_test(f, c, zvar, w)
        m = verdict.m
        if (
            prev_m is not None
            and len(prev_m) == len(m)
            and vec_is_finite(prev_m)
            and vec_is_finite(m)
        ):
            assert not list(m) < list(prev_m), "cleaning must not decrease the order"
        if not vec_is_finite(m):
            return f, CleaningOutcome(
                g_total=g_total,
                status="coeff_vanishes_at_precision",
                steps=step,
                m_final=m,
            )
        if verdict.clean:
            return f, CleaningOutcome(
                g_total=g_total, status="cleaned", steps=step, m_final=m
            )
        g = cleaning_step_change(f, c, verdict)
        if g.order_floor() >= f.precision or not g:
            return f, CleaningOutcome(
                g_total=g_total,
                status="coeff_vanishes_at_precision",
                steps=step,
                m_final=m,
            )
        assert g.body.order() >= 1, "cleaning step must be a coordinate change"
        if trace_hook:
            trace_hook(step=step, kind="omega", g=str(g.body), m_before=[str(v) for v in m])
        f = apply_z_change(f, zvar, g)
        g_total = g_total + g
        prev_m = m
    return f, CleaningOutcome(
        g_total=g_total, status="precision_exhausted", steps=max_steps, m_final=prev_m
    )


def multi_clean(f: Series, c: int, zvar: int, weights, max_steps=None, trace_hook=None):
    """Run cleaning consecutively for several weighted order functions.

    Each cleaning step preserves cleanness already achieved for the other
    weights on the same parameters, so one pass per weight suffices.
    """
    spec, nv = f.spec, f.nvars
    g_total = Series(Poly.zero(spec, nv - 1), f.precision)
    for w in weights:
        f, outcome = omega_cleaning_process(f, c, zvar, w, max_steps, trace_hook)
        g_total = g_total + outcome.g_total
    return f, g_total


# ---------------------------------------------------------------------------
# Secondary cleaning


def _xy_coefficient(f: Series, zvar: int, yvar: int, i: int, j: int) -> Series:
    layer = f.body.coefficient_of(zvar, i).drop_var(zvar)
    yv = yvar if yvar < zvar else yvar - 1
    fij = layer.coefficient_of(yv, j).drop_var(yv)
    return Series(fij, max(f.precision - i - j, 0))


def _secondary_data(f, c, zvar, yvar, exc_x_vars, fix_ry):
    """(r_total, r_y, d, s, delta) for the current frame."""
    zx = z_expand([f], c, zvar)
    yv = yvar if yvar < zvar else yvar - 1
    exc = set(exc_x_vars)
    fact_vars = exc | ({yv} if fix_ry else set())
    cd = coeff_factorization(zx, fact_vars)
    r_total = sum((cd.r[v].value for v in exc), Fraction(0))
    r_y = cd.r[yv].value if fix_ry else Fraction(0)
    d = cd.d
    zy = zy_expand([f], c, zvar, yvar)
    if not d.is_finite or d.value <= 0:
        return r_total, r_y, d, None, None
    s, delta = second_coeff_order(zy, r_total, r_y, d)
    return r_total, r_y, d, s, delta


def secondary_clean_test(f, c, zvar, yvar, r_total, r_y, d, s, delta):
    """Check conditions (i)_b - (iii)_b for all b < (d + r_y)/c!.

    Returns (True, None, None) when secondary ord-clean, else
    (False, b, G) for the minimal failing index b with obstruction root G.
    """
    spec = f.spec
    q = q_of(c, spec)
    cf = factorial(c)
    dv = d.value
    sb = s.value
    dfact = factorial(int(dv))
    b_bound = (dv + r_y) / cf
    fc0 = _xy_coefficient(f, zvar, yvar, c, 0)
    assert fc0.order_floor() == 0

    b = 0
    while Fraction(b) < b_bound:
        ok = False
        # (i)_b
        for i in range(c - q + 1, c):
            for j in range(0, (c - i) * b + 1):
                fij = _xy_coefficient(f, zvar, yvar, i, j)
                if not fij:
                    continue
                target = (c - i) * delta - Fraction(j) * sb / dfact
                if ord_of(fij) == target:
                    ok = True
                    break
            if ok:
                break
        if not ok:
            # (ii)_b
            fcq = _xy_coefficient(f, zvar, yvar, c - q, b * q)
            target = q * delta - Fraction(b * q) * sb / dfact
            if ord_of(fcq) > ExtOrder.finite(target):
                ok = True
            else:
                # (iii)_b
                hprec = max(q * f.precision, 1)
                init_cq = init_form(WeightFn.total(fcq.nvars), fcq)
                init_c0 = init_form(WeightFn.total(fc0.nvars), fc0)
                inv = Series(init_c0.form, hprec).inverse()
                h = Series(init_cq.form, hprec) * inv
                root = qth_power_root(h, q)
                if isinstance(root, NotAPower):
                    ok = True
                else:
                    return False, b, root
        b += 1
    return True, None, None


def secondary_cleaning_process(
    f: Series,
    c: int,
    zvar: int,
    yvar: int,
    exc_x_vars=(),
    fix_ry: bool = False,
    max_steps: int | None = None,
    trace_hook=None,
):
    """Maximize the order of the second coefficient ideal over z-changes.

    Precondition: f is ord-clean w.r.t. the coefficient ideal (the steps then
    preserve the factorization setting).  Steps are z -> z + g_b(x) y^b.
    """
    if max_steps is None:
        max_steps = 2 * f.precision + 8
    spec, nv = f.spec, f.nvars
    g_total = Series(Poly.zero(spec, nv - 1), f.precision)
    d0 = None
    prev_s = None
    for step in range(max_steps + 1):
        r_total, r_y, d, s, delta = _secondary_data(f, c, zvar, yvar, exc_x_vars, fix_ry)
        if d0 is None:
            d0 = d
        else:
            assert d == d0, "secondary cleaning must preserve the setting"
        if s is None or not s.is_finite:
            return f, CleaningOutcome(
                g_total=g_total,
                status="coeff_vanishes_at_precision",
                steps=step,
                s_final=s,
            )
        if prev_s is not None:
            assert not s < prev_s, "secondary cleaning must not decrease s"
        clean, b, root = secondary_clean_test(
            f, c, zvar, yvar, r_total, r_y, d, s, delta
        )
        if clean:
            return f, CleaningOutcome(
                g_total=g_total, status="cleaned", steps=step, s_final=s
            )
        q = q_of(c, spec)
        binv = lucas_binomial(c, q, spec).inverse()
        gb = root.scale(-binv)
        # the step is z -> z + g_b y^b in the reduced ring
        yv = yvar if yvar < zvar else yvar - 1
        gb_red = Series(gb.body.insert_var(yv), gb.precision)
        y_mono = Series(Poly.variable(spec, nv - 1, yv), 10 ** 9)
        g = gb_red * (y_mono ** b) if b else gb_red
        if g.order_floor() >= f.precision or not g:
            return f, CleaningOutcome(
                g_total=g_total,
                status="coeff_vanishes_at_precision",
                steps=step,
                s_final=s,
            )
        if trace_hook:
            trace_hook(step=step, kind="secondary", g=str(g.body), s_before=str(s))
        f = apply_z_change(f, zvar, g)
        g_total = g_total + g
        prev_s = s
    return f, CleaningOutcome(
        g_total=g_total, status="precision_exhausted", steps=max_steps, s_final=prev_s
    )


# ---------------------------------------------------------------------------
# Simultaneous maximization over z- and y-changes


def _rational_roots(coeffs):
    """Rational roots of sum coeffs[j] T^j with Fraction coefficients."""
    items = [(j, Fraction(c)) for j, c in enumerate(coeffs) if c != 0]
    if not items:
        return []
    shift = items[0][0]
    roots = set()
    if shift > 0:
        roots.add(Fraction(0))
    # clear denominators to an integer polynomial in T^(j - shift)
    denom_lcm = 1
    for _, c in items:
        denom_lcm = denom_lcm * c.denominator // _gcd(denom_lcm, c.denominator)
    ints = [(j - shift, int(c * denom_lcm)) for j, c in items]
    a0 = ints[0][1]
    an = ints[-1][1]

    def divisors(n):
        n = abs(n)
        out, k = set(), 1
        while k * k <= n:
            if n % k == 0:
                out.add(k)
                out.add(n // k)
            k += 1
        return out or {1}

    for p in divisors(a0):
        for q in divisors(an):
            for sign in (1, -1):
                cand = Fraction(sign * p, q)
                if sum(c * cand ** j for j, c in ints) == 0:
                    roots.add(cand)
    return sorted(roots)


def _gcd(a, b):
    while b:
        a, b = b, a % b
    return a


def _translation_candidates(f, c, zvar, yvar, u):
    """Leading coefficients of candidate translations y -> y + lambda x^u.

    Over a finite field every nonzero constant is tried (the caller accepts a
    candidate only when the second coefficient-ideal order strictly improves,
    so completeness is what matters).  Over Q the candidates are the rational
    roots of the dehomogenized (1, u)-weighted initial forms of the
    z-coefficients, the obstruction edges an improving translation must
    cancel.
    """
    spec = f.spec
    if spec.kind == "finite":
        return [lam for lam in spec.elements() if lam]
    nv_red = f.nvars - 1
    yv = yvar if yvar < zvar else yvar - 1
    weights = [1] * nv_red
    weights[yv] = u
    w = WeightFn.single(nv_red, weights)
    cands = []
    seen = set()
    for i in range(c):
        fi = z_coefficient(f, zvar, i)
        if not fi:
            continue
        init_i = init_form(w, fi).form
        coeffs = _edge_coeffs(init_i, yv, u)
        for r in _rational_roots(coeffs):
            if r == 0:
                continue
            lam = spec.from_fraction(r)
            if lam not in seen:
                seen.add(lam)
                cands.append(lam)
    return cands


def _edge_coeffs(init_poly, yv, u):
    """Dehomogenize a (1,u)-weighted homogeneous binary form to coefficients.

    Only meaningful in the surface flow, where the reduced ring is K[[x,y]]
    and each y-degree carries exactly one monomial of the form.
    """
    coeffs = {}
    for mono, c in init_poly.terms.items():
        coeffs[mono[yv]] = c
    if not coeffs:
        return []
    top = max(coeffs)
    out = []
    for j in range(top + 1):
        c = coeffs.get(j)
        out.append(Fraction(0) if c is None else c.value)
    return out


def _edge_vanishes(init_poly, yv, u, lam):
    """Does substituting y -> y + lam x^u strictly raise the y-order of the
    edge form?  (Checked by direct substitution on the form.)"""
    spec = init_poly.spec
    nv = init_poly.nvars
    images = []
    for i in range(nv):
        v = Poly.variable(spec, nv, i)
        if i == yv:
            xv = 0 if yv != 0 else 1
            v = v + Poly.monomial(
                spec, nv, tuple(u if k == xv else 0 for k in range(nv)), lam
            )
        images.append(v)
    from .series import substitute_poly

    moved = substitute_poly(init_poly, images)
    before = init_poly.order_along({yv})
    after = moved.order_along({yv})
    if before is None:
        return False
    return after is None or after > before


def maximize_z_and_y(
    f: Series,
    c: int,
    zvar: int,
    yvar: int,
    exc_x_vars=(),
    max_rounds: int = 12,
):
    """Alternate secondary z-cleaning with candidate y-translations.

    Returns (f_final, g_total, h_total, s_max); g_total is the accumulated
    z-change in the *current* y coordinate, h_total the accumulated
    y-translation.  s_max is reported as AtLeast(precision) when the second
    coefficient ideal empties at the working precision.
    """
    spec, nv = f.spec, f.nvars
    yv = yvar if yvar < zvar else yvar - 1
    ord_w = WeightFn.total(nv - 1)
    exc_weights = [WeightFn.along(nv - 1, {v}) for v in sorted(exc_x_vars)]

    g_total = Series(Poly.zero(spec, nv - 1), f.precision)
    h_total = Series(Poly.zero(spec, nv - 1), f.precision)

    def reclean(fc):
        fc, g1 = multi_clean(fc, c, zvar, [ord_w] + exc_weights)
        fc, out2 = secondary_cleaning_process(fc, c, zvar, yvar, exc_x_vars)
        return fc, g1 + out2.g_total, out2.s_final

    f, g_new, s = reclean(f)
    g_total = g_total + g_new
    dfact_cache = {}

    for _ in range(max_rounds):
        if s is None or not s.is_finite:
            return f, g_total, h_total, ExtOrder.at_least(f.precision)
        _, _, d, _, _ = _secondary_data(f, c, zvar, yvar, exc_x_vars, False)
        dv = d.as_int()
        if dv not in dfact_cache:
            dfact_cache[dv] = factorial(dv)
        u_frac = s.value / dfact_cache[dv]
        if u_frac.denominator != 1 or u_frac == 0:
            break
        u = int(u_frac)
        if u >= f.precision:
            return f, g_total, h_total, ExtOrder.at_least(f.precision)
        improved = False
        xv = 0 if yv != 0 else 1
        for lam in _translation_candidates(f, c, zvar, yvar, u):
            h = Series(
                Poly.monomial(
                    spec,
                    nv - 1,
                    tuple(u if k == xv else 0 for k in range(nv - 1)),
                    lam,
                ),
                10 ** 9,
            )
            f_cand = _apply_y_translation(f, yvar, h)
            f_cand, g_new, s_cand = reclean(f_cand)
            if s_cand is None or (s_cand.is_finite and s.is_finite and not s_cand > s):
                continue
            if s_cand.is_finite and not s.is_finite:
                continue
            # accept
            f = f_cand
            g_total = _rebase_g(g_total, yv, h) + g_new
            h_total = h_total + h.truncated(f.precision)
            s = s_cand
            improved = True
            break
        if not improved:
            break
    return f, g_total, h_total, s


def _apply_y_translation(f: Series, yvar: int, h: Series) -> Series:
    """Substitute y -> y + h(x) into f.

    h lives in the reduced ring (without z); z is by convention the last
    variable in all engine flows here.
    """
    spec, nv = f.spec, f.nvars
    h_full = Series(h.body.insert_var(nv - 1), h.precision)
    images = []
    for i in range(nv):
        var = Series(Poly.variable(spec, nv, i), 10 ** 9)
        images.append(var + h_full if i == yvar else var)
    return substitute(f, images, precision=f.precision)


def _rebase_g(g_total: Series, yv: int, h: Series) -> Series:
    """Re-express g(x, y) after the substitution y -> y + h(x)."""
    spec, nv = g_total.spec, g_total.nvars
    images = []
    for i in range(nv):
        var = Series(Poly.variable(spec, nv, i), 10 ** 9)
        images.append(var + h if i == yv else var)
    return substitute(g_total, images, precision=g_total.precision)


def express_in_original_y(g_total: Series, yv: int, h_total: Series) -> Series:
    """Rewrite g(x, y_new) in terms of the original y (y_new = y - h)."""
    spec, nv = g_total.spec, g_total.nvars
    images = []
    for i in range(nv):
        var = Series(Poly.variable(spec, nv, i), 10 ** 9)
        images.append(var - h_total if i == yv else var)
    return substitute(g_total, images, precision=g_total.precision)
