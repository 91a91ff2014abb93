"""Global driver: point sampling, top locus, centers, and the resolution loop.

A tree node is one affine chart A^3 carrying a polynomial defining equation
and the exceptional components as global polynomials.  Points are sampled
exhaustively over F_{p^(k j)} (j up to a small bound) or from integer boxes /
provided points over Q; the local engine runs at every sampled point of X.
Each blowup rewrites the node into the coordinate frame of its center
(translation, tilt, curve cleaning) and spawns one child node per chart.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from fractions import Fraction

from .blowup import ChartMap
from .engine import (
    FieldExtensionNeeded,
    InvariantTuple,
    Scene,
    SceneAnalysis,
    SceneComponent,
    X,
    Y,
    Z,
    resolution_invariant,
)
from .errors import (
    NotPermissible,
    CenterNotPolynomialAtPrecision,
    LimitExceeded,
    SearchInconclusive,
    SurfresError,
)
from .field import FieldElement, FieldSpec, embed
from .orders import ord_along
from .poly import Poly, parse_poly, var_names
from .series import Series, substitute_poly

DEFAULT_DRIVER_PRECISION = 16


@dataclass
class GlobalComponent:
    eq: Poly
    age: int
    label: int


@dataclass
class GlobalScene:
    spec: FieldSpec
    f: Poly
    components: list = field(default_factory=list)
    points: list = field(default_factory=list)  # provided candidate points
    search: tuple = ("enumerate", 2)  # ("enumerate", k_max) | ("box", r) | ("provided",)
    precision: int = DEFAULT_DRIVER_PRECISION
    # chart-cover pruning: points with a nonzero coordinate among these
    # variables belong to an earlier sibling chart and are skipped here
    skip_vars: tuple = ()

    def copy(self) -> "GlobalScene":
        return GlobalScene(
            spec=self.spec,
            f=self.f,
            components=[replace(c) for c in self.components],
            points=list(self.points),
            search=self.search,
            precision=self.precision,
            skip_vars=self.skip_vars,
        )


# ---------------------------------------------------------------------------
# Scene file format


def parse_scene(text: str) -> GlobalScene:
    """Parse the scene input format (see README for the grammar)."""
    spec = None
    f = None
    comps = []
    points = []
    search = ("enumerate", 2)
    precision = DEFAULT_DRIVER_PRECISION
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key == "field":
            spec = FieldSpec.parse(value)
        elif key == "f":
            if spec is None:
                raise ValueError("field must precede f")
            f = parse_poly(value, spec)
        elif key == "exceptional":
            body = value.strip()
            if not (body.startswith("{") and body.endswith("}")):
                raise ValueError("exceptional entries use { eq = ..., age = ..., label = ... }")
            fields = {}
            for part in body[1:-1].split(","):
                k, _, v = part.partition("=")
                fields[k.strip()] = v.strip()
            comps.append(
                GlobalComponent(
                    eq=parse_poly(fields["eq"], spec),
                    age=int(fields["age"]),
                    label=int(fields["label"]),
                )
            )
        elif key == "point":
            body = value.strip()
            if body.startswith("(") and body.endswith(")"):
                body = body[1:-1]
            coords = tuple(
                spec.from_fraction(Fraction(part.strip())) for part in body.split(",")
            )
            points.append(coords)
        elif key == "precision":
            precision = int(value)
        elif key == "search":
            v = value.strip()
            if v.startswith("enumerate"):
                inner = v[v.find("(") + 1 : v.find(")")] if "(" in v else "2"
                search = ("enumerate", int(inner))
            elif v.startswith("box"):
                inner = v[v.find("(") + 1 : v.find(")")] if "(" in v else "2"
                search = ("box", int(inner))
            elif v == "provided":
                search = ("provided",)
            else:
                raise ValueError(f"unknown search strategy {v!r}")
        else:
            raise ValueError(f"unknown scene key {key!r}")
    if spec is None or f is None:
        raise ValueError("scene needs at least field and f")
    labels = [c.label for c in comps]
    if len(labels) != len(set(labels)):
        raise ValueError("exceptional labels must be unique")
    return GlobalScene(
        spec=spec, f=f, components=comps, points=points, search=search, precision=precision
    )


# ---------------------------------------------------------------------------
# Point sampling


def _extension_fields(spec: FieldSpec, k_max: int):
    for j in range(1, k_max + 1):
        yield j, (spec if j == 1 else FieldSpec.finite(spec.p, spec.k * j))


def _in_proper_subfield(coords, spec: FieldSpec, base_k: int, j: int) -> bool:
    """Is the point already defined over a proper subfield F_{p^(base_k j')}?"""
    for jp in range(1, j):
        if j % jp:
            continue
        q = spec.p ** (base_k * jp)
        if all(c ** q == c for c in coords):
            return True
    return False


def candidate_points(gs: GlobalScene):
    """Yield (field, coords) candidates on X per the search strategy.

    Points with a nonzero coordinate among gs.skip_vars are covered by an
    earlier sibling chart of the same blowup and are not re-examined here.
    """
    kind = gs.search[0]
    if kind == "provided":
        for pt in gs.points:
            if any(pt[j] for j in gs.skip_vars):
                continue
            yield gs.spec, pt
        if not gs.points:
            raise SearchInconclusive("no candidate points provided")
        return
    if gs.spec.kind == "finite":
        k_max = gs.search[1] if kind == "enumerate" else 2
        for j, fld in _extension_fields(gs.spec, k_max):
            fpoly = _embed_poly(gs.f, fld)
            elements = list(fld.elements())
            zero = fld.zero()
            for a in elements:
                for b in elements:
                    for c in elements:
                        coords = (a, b, c)
                        if any(coords[v] for v in gs.skip_vars):
                            continue
                        if j > 1 and _in_proper_subfield(coords, fld, gs.spec.k, j):
                            continue
                        if not fpoly.evaluate(coords):
                            yield fld, coords
        return
    # rationals: provided points plus an integer box
    radius = gs.search[1] if kind == "box" else 2
    seen = set()
    for pt in gs.points:
        if any(pt[j] for j in gs.skip_vars):
            continue
        key = tuple(c.value for c in pt)
        if key not in seen:
            seen.add(key)
            yield gs.spec, pt
    rng = range(-radius, radius + 1)
    for a in rng:
        for b in rng:
            for c in rng:
                coords = tuple(gs.spec.from_int(v) for v in (a, b, c))
                if any(coords[v] for v in gs.skip_vars):
                    continue
                key = tuple(x.value for x in coords)
                if key in seen:
                    continue
                if not gs.f.evaluate(coords):
                    seen.add(key)
                    yield gs.spec, coords


def _embed_poly(p: Poly, fld: FieldSpec) -> Poly:
    if p.spec == fld:
        return p
    return Poly(fld, p.nvars, {m: embed(c, fld) for m, c in p.terms.items()})


def _translate(p: Poly, coords) -> Poly:
    spec = coords[0].spec
    images = [
        Poly.variable(spec, p.nvars, i) + Poly.const(spec, p.nvars, 1).scale(coords[i])
        for i in range(p.nvars)
    ]
    return substitute_poly(_embed_poly(p, spec), images)


def local_scene(gs: GlobalScene, fld: FieldSpec, coords):
    """Build the local Scene at a sampled point (moved to the origin).

    Returns (scene, norm) where norm = (forward, inverse) is the extra
    coordinate change (after the translation) that puts the current-era
    exceptional components onto V(x) and V(y); None when not needed.
    """
    f_loc = _translate(gs.f, coords)
    o = f_loc.order()
    if o is None:
        raise SurfresError("point not on X")
    at_eqs, old_comps = [], []
    for comp in gs.components:
        eq_loc = _translate(comp.eq, coords)
        if eq_loc.terms.get((0, 0, 0)):
            continue  # component misses the point
        if comp.age < o:
            raise SurfresError(
                f"age axiom violated: component {comp.label} has age {comp.age} < o={o}"
            )
        if comp.age == o:
            at_eqs.append((comp, eq_loc))
        else:
            old_comps.append((comp, eq_loc))
    norm = None
    e_at = []
    if at_eqs:
        at_eqs.sort(key=lambda pair: pair[0].label)
        if len(at_eqs) > 2:
            raise SurfresError("more than two current-era components at a point")
        norm, targets = _normalize_e_at(fld, [eq for _, eq in at_eqs])
        if norm is not None:
            fwd = norm[0]
            f_loc = substitute_poly(f_loc, fwd)
            old_comps = [
                (comp, substitute_poly(eq, fwd)) for comp, eq in old_comps
            ]
        for (comp, _eq), var in zip(at_eqs, targets):
            e_at.append(SceneComponent(var=var, eq=None, age=comp.age, label=comp.label))
    e_old = [
        SceneComponent(var=None, eq=eq, age=comp.age, label=comp.label)
        for comp, eq in old_comps
    ]
    f_ser = Series.from_poly(f_loc, gs.precision)
    scene = Scene(spec=fld, f=f_ser, e_at=e_at, e_old=e_old, precision=gs.precision)
    return scene, norm


def _coordinate_var(eq: Poly):
    terms = eq.terms
    if len(terms) != 1:
        return None
    mono, coeff = next(iter(terms.items()))
    if sum(mono) != 1:
        return None
    return mono.index(1)


def _series_straighten(spec: FieldSpec, eq: Poly, used_slots):
    """Formal solve of eq = alpha * w for the new coordinate w along some
    variable v: old_v = S(new vars), a truncated series.  Returns
    (forward_step, inverse_step, v)."""
    prec = DEFAULT_DRIVER_PRECISION + 4
    ident = [Poly.variable(spec, 3, i) for i in range(3)]
    for v in range(3):
        if v in used_slots:
            continue
        lin_mono = tuple(1 if i == v else 0 for i in range(3))
        alpha = eq.terms.get(lin_mono)
        if alpha is None or not alpha:
            continue
        alpha_inv = alpha.inverse()
        rest = eq - Poly.monomial(spec, 3, lin_mono, alpha)
        # iterate old_v = alpha^{-1} (w - rest(old)), old_i = new_i otherwise
        sol = ident[v]
        for _ in range(prec):
            imgs = [sol if i == v else ident[i] for i in range(3)]
            nxt = (ident[v] - substitute_poly(rest, imgs).scale(alpha_inv)).truncate(prec)
            if nxt == sol:
                break
            sol = nxt
        fwd_step = [sol if i == v else ident[i] for i in range(3)]
        # sanity: eq(fwd_step) = alpha * w up to the working precision
        check = substitute_poly(eq, fwd_step).truncate(prec - 2)
        if check != Poly.monomial(spec, 3, lin_mono, alpha).truncate(prec - 2):
            continue
        inv_step = [eq.scale(alpha_inv) if i == v else ident[i] for i in range(3)]
        return fwd_step, inv_step, v
    raise SurfresError("cannot straighten a current-era component")


def _normalize_e_at(spec: FieldSpec, eqs):
    """Coordinate change putting the given regular hypersurface equations on
    V(x) (and V(y)).  Returns ((forward, inverse) or None, target_vars).

    Each equation is straightened by a triangular shear v -> v - rest(others)
    along a variable v whose linear coefficient is nonzero and which does not
    occur in the remaining part; a final permutation moves the straightened
    slots onto x (and y).
    """
    ident = [Poly.variable(spec, 3, i) for i in range(3)]
    forward = list(ident)
    inverse = list(ident)
    changed = False
    polynomial = True

    def compose(outer, inner):
        return [substitute_poly(img, inner) for img in outer]

    # straighten exactly-coordinate equations first so that mixed equations
    # do not steal their slots
    order = sorted(
        range(len(eqs)), key=lambda i: (_coordinate_var(eqs[i]) is None, i)
    )
    slot_of = {}
    current_eqs = list(eqs)
    for idx in order:
        eq = current_eqs[idx]
        var = _coordinate_var(eq)
        if var is not None and var not in slot_of.values():
            slot_of[idx] = var
            continue
        used = set(slot_of.values())
        done = False
        for v in range(3):
            if v in used:
                continue
            lin_mono = tuple(1 if i == v else 0 for i in range(3))
            alpha = eq.terms.get(lin_mono)
            if alpha is None or not alpha:
                continue
            rest = eq - Poly.monomial(spec, 3, lin_mono, alpha)
            if any(m[v] for m in rest.terms):
                continue
            shift = rest.scale(alpha.inverse())
            fwd_step = [ident[i] - (shift if i == v else Poly.zero(spec, 3)) for i in range(3)]
            inv_step = [ident[i] + (shift if i == v else Poly.zero(spec, 3)) for i in range(3)]
            forward = compose(forward, fwd_step)
            inverse = compose(inv_step, inverse)
            current_eqs = [substitute_poly(e, fwd_step) for e in current_eqs]
            changed = True
            slot_of[idx] = v
            done = True
            break
        if not done:
            # fallback: formal implicit solve to the working precision (the
            # straightened coordinate is then a truncated series; good enough
            # for the local analysis, never for a polynomial center frame)
            fwd_step, inv_step, v = _series_straighten(spec, eq, used)
            polynomial = False
            forward = compose(forward, fwd_step)
            inverse = compose(inv_step, inverse)
            current_eqs = [
                substitute_poly(e, fwd_step).truncate(DEFAULT_DRIVER_PRECISION + 4)
                for e in current_eqs
            ]
            changed = True
            slot_of[idx] = v
    slots = [slot_of[i] for i in range(len(eqs))]
    targets = [X, Y][: len(slots)]
    if slots != targets:
        remaining = [v for v in range(3) if v not in slots]
        new_order = slots + remaining
        # new_order[i] should become variable i
        perm_imgs = [None] * 3
        for new_pos, old_pos in enumerate(new_order):
            perm_imgs[old_pos] = ident[new_pos]
        forward = compose(forward, perm_imgs)
        inv_perm = [None] * 3
        for new_pos, old_pos in enumerate(new_order):
            inv_perm[new_pos] = ident[old_pos]
        inverse = compose(inv_perm, inverse)
        changed = True
    if not changed:
        return None, targets
    return (forward, inverse, polynomial), targets


# ---------------------------------------------------------------------------
# Top locus


@dataclass
class PointRecord:
    fld: FieldSpec
    coords: tuple
    analysis: SceneAnalysis | None
    norm: tuple | None = None  # (forward, inverse) e_at-normalization images
    resolved_snc: bool = False  # X regular and X u E snc at the point
    snc_tuple: InvariantTuple | None = None

    @property
    def tuple(self) -> InvariantTuple:
        if self.analysis is None:
            return self.snc_tuple
        return self.analysis.tuple

    @property
    def resolved(self) -> bool:
        return self.resolved_snc or self.tuple == InvariantTuple.resolved()

    def coord_strs(self):
        return tuple(str(c) for c in self.coords)


@dataclass
class CurveStratum:
    anchor: PointRecord
    generators: tuple  # two node-coordinate polynomials cutting the curve
    members: list
    generic_pair: tuple
    exceptions: list  # sampled members whose pair differs (finite by theory)


@dataclass
class TopLocus:
    max_tuple: InvariantTuple
    maximal: list  # PointRecord
    strata: list  # CurveStratum
    records: list  # every sampled point


def analyze_point(gs: GlobalScene, fld: FieldSpec, coords, _depth=0) -> PointRecord:
    scene, norm = local_scene(gs, fld, coords)
    snc = _snc_resolved(scene)
    if snc is not None:
        return PointRecord(
            fld=fld,
            coords=coords,
            analysis=None,
            norm=norm,
            resolved_snc=True,
            snc_tuple=snc,
        )
    try:
        analysis = resolution_invariant(scene)
    except FieldExtensionNeeded as exc:
        if _depth >= 2 or gs.spec.kind != "finite":
            raise
        bigger = FieldSpec.finite(fld.p, fld.k * exc.degree_factor)
        coords2 = tuple(embed(c, bigger) for c in coords)
        return analyze_point(gs, bigger, coords2, _depth + 1)
    return PointRecord(fld=fld, coords=coords, analysis=analysis, norm=norm)


def _snc_resolved(scene: Scene):
    """Detect points where X is regular and X u E already has simple normal
    crossings: the differentials of f and of all components through the point
    are linearly independent.  Returns the (o, c)-tuple for reporting, or
    None when the point still needs work."""
    f = scene.f
    o = f.body.order()
    if o != 1:
        return None
    rows = []
    lin = {(1, 0, 0): X, (0, 1, 0): Y, (0, 0, 1): Z}
    fvec = [f.body.terms.get(m, scene.spec.zero()) for m in lin]
    rows.append(fvec)
    ncomps = 0
    for comp in scene.e_at:
        vec = [scene.spec.zero()] * 3
        vec[comp.var] = scene.spec.one()
        rows.append(vec)
        ncomps += 1
    for comp in scene.e_old:
        rows.append([comp.eq.terms.get(m, scene.spec.zero()) for m in lin])
        ncomps += 1
    if _rank(scene.spec, rows) == len(rows):
        return InvariantTuple(1, 1 + ncomps, 0, 0, 0, 0, 0)
    return None


def _rank(spec: FieldSpec, rows):
    mat = [list(r) for r in rows]
    rank = 0
    ncols = len(mat[0]) if mat else 0
    for col in range(ncols):
        piv = None
        for r in range(rank, len(mat)):
            if mat[r][col]:
                piv = r
                break
        if piv is None:
            continue
        mat[rank], mat[piv] = mat[piv], mat[rank]
        inv = mat[rank][col].inverse()
        mat[rank] = [v * inv for v in mat[rank]]
        for r in range(len(mat)):
            if r != rank and mat[r][col]:
                factor = mat[r][col]
                mat[r] = [a - factor * b for a, b in zip(mat[r], mat[rank])]
        rank += 1
    return rank


def _rec_key(rec: PointRecord):
    return (rec.fld.p, rec.fld.k, tuple(str(c) for c in rec.coords))


def top_locus(gs: GlobalScene) -> TopLocus:
    """Sample the node, then chase candidate center curves out of the node's
    chart-cover region: a curve stratum is only trusted once every sampled
    point on it (pruned or not) has been analyzed, so that a strictly bigger
    point on the curve wins the center selection, as the global process
    demands."""
    records = {}
    for fld, coords in candidate_points(gs):
        rec = analyze_point(gs, fld, coords)
        records[_rec_key(rec)] = rec

    strata = []
    for _ in range(4):
        active = [r for r in records.values() if not r.resolved]
        if not active:
            return TopLocus(
                max_tuple=None, maximal=[], strata=[], records=list(records.values())
            )
        max_tuple = max(r.tuple for r in active)
        maximal = sorted(
            (r for r in active if r.tuple == max_tuple), key=_rec_key
        )
        if not (max_tuple.r or max_tuple.l):
            return TopLocus(
                max_tuple=max_tuple,
                maximal=maximal,
                strata=[],
                records=list(records.values()),
            )
        strata = _group_strata(gs, maximal, list(records.values()))
        if not gs.skip_vars or not strata:
            break
        # curves may leave the pruned region: sample them without pruning
        unpruned = gs.copy()
        unpruned.skip_vars = ()
        new = []
        gens_all = [s.generators for s in strata if s.generators is not None]
        for fld, coords in candidate_points(unpruned):
            key = (fld.p, fld.k, tuple(str(c) for c in coords))
            if key in records:
                continue
            on_some = False
            for gens in gens_all:
                try:
                    gens_e = tuple(_embed_poly(g, fld) for g in gens)
                except Exception:
                    continue
                if all(not g.evaluate(coords) for g in gens_e):
                    on_some = True
                    break
            if on_some:
                rec = analyze_point(gs, fld, coords)
                records[_rec_key(rec)] = rec
                new.append(rec)
        if not new:
            break
    return TopLocus(
        max_tuple=max_tuple,
        maximal=maximal,
        strata=strata,
        records=list(records.values()),
    )


def center_frame_images(gs: GlobalScene, rec: PointRecord, curve: bool = True):
    """Node-rewrite images realizing the analysis frame of a terminal point.

    Returns (images, inverse_images): polynomials expressing the node
    coordinates in terms of the frame coordinates and vice versa.  The frame
    is a composition of elementary invertible pieces (translation, linear
    tilt, curve-variable translation h(x), hypersurface change z -> z + g),
    inverted piece by piece.  Point centers only need the translation.
    """
    spec = rec.fld
    analysis = rec.analysis
    ident = [Poly.variable(spec, 3, i) for i in range(3)]

    def compose(outer, inner):
        return [substitute_poly(img, inner) for img in outer]

    steps = []  # (forward_images, inverse_images)
    steps.append(
        (
            [ident[i] + Poly.const(spec, 3, 1).scale(rec.coords[i]) for i in range(3)],
            [ident[i] - Poly.const(spec, 3, 1).scale(rec.coords[i]) for i in range(3)],
        )
    )
    if rec.norm is not None and curve:
        if not rec.norm[2]:
            raise CenterNotPolynomialAtPrecision(
                "component normalization needed a truncated series"
            )
        steps.append(rec.norm[:2])
    frame = analysis.frame
    if frame is not None and curve:
        if frame.perm is not None:
            perm = frame.perm
            steps.append(
                (
                    [ident[perm.index(v)] for v in range(3)],
                    [ident[perm[j]] for j in range(3)],
                )
            )
        if frame.tilt is not None:
            s, t = frame.tilt
            zv = ident[Z]
            steps.append(
                (
                    [ident[X] + zv.scale(s), ident[Y] + zv.scale(t), zv],
                    [ident[X] - zv.scale(s), ident[Y] - zv.scale(t), zv],
                )
            )
        if frame.h is not None and frame.h:
            if frame.h.precision <= frame.h.body.degree():
                raise CenterNotPolynomialAtPrecision("curve translation truncated")
            h_full = frame.h.body.insert_var(Z)
            steps.append(
                (
                    [
                        ident[v] + (h_full if v == frame.h_var else Poly.zero(spec, 3))
                        for v in range(3)
                    ],
                    [
                        ident[v] - (h_full if v == frame.h_var else Poly.zero(spec, 3))
                        for v in range(3)
                    ],
                )
            )
        if frame.g is not None and frame.g:
            if frame.g.precision <= frame.g.body.degree():
                raise CenterNotPolynomialAtPrecision("curve cleaning truncated")
            g_full = frame.g.body.insert_var(Z)
            steps.append(
                (
                    [ident[v] + (g_full if v == Z else Poly.zero(spec, 3)) for v in range(3)],
                    [ident[v] - (g_full if v == Z else Poly.zero(spec, 3)) for v in range(3)],
                )
            )
    images = ident
    inverse = ident
    for fwd, inv in steps:
        images = compose(images, fwd)
        inverse = compose(inv, inverse)
    return images, inverse


def _curve_generators(gs: GlobalScene, rec: PointRecord):
    """Node-coordinate generators of the terminal center curve at rec.

    The curve is V(w, z) in frame coordinates; its node equations are the
    frame coordinates w and z expressed in node coordinates.
    """
    hint = rec.analysis.center_hint
    if hint not in ("curve_x", "curve_y"):
        return None
    w = X if hint == "curve_x" else Y
    images, inverse = center_frame_images(gs, rec)
    for i in range(3):
        check = substitute_poly(images[i], inverse)
        if check != Poly.variable(rec.fld, 3, i):
            raise SurfresError("frame inverse verification failed")
    return (inverse[w], inverse[Z])


def _anchor_ok(rec: PointRecord) -> bool:
    """Can this record's frame serve as a polynomial center frame?"""
    if rec.norm is not None and not rec.norm[2]:
        return False
    fr = rec.analysis.frame if rec.analysis else None
    if fr is None:
        return True
    for ser in (fr.h, fr.g):
        if ser is not None and ser and ser.precision <= ser.body.degree():
            return False
    return True


def _group_strata(gs: GlobalScene, maximal, records):
    strata = []
    used = set()
    ordered = sorted(maximal, key=lambda r: (not _anchor_ok(r), _rec_key(r)))
    for rec in ordered:
        if id(rec) in used:
            continue
        gens = None
        if _anchor_ok(rec):
            try:
                gens = _curve_generators(gs, rec)
            except Exception:
                gens = None
        if gens is None:
            if rec.analysis is None or rec.analysis.center_hint not in (
                "curve_x",
                "curve_y",
            ):
                continue
            # pseudo-stratum: the curve exists but has no polynomial frame in
            # this chart; group by the invariant pair and let the blowup find
            # generators from the derivative candidates
            members = [
                m
                for m in maximal
                if id(m) not in used
                and (m.tuple.r, m.tuple.l) == (rec.tuple.r, rec.tuple.l)
            ]
            for m in members:
                used.add(id(m))
            strata.append(
                CurveStratum(
                    anchor=rec,
                    generators=None,
                    members=members,
                    generic_pair=(rec.tuple.r, rec.tuple.l),
                    exceptions=[],
                )
            )
            continue
        members = []
        for other in maximal:
            coords = other.coords
            if other.fld != rec.fld:
                if (
                    gs.spec.kind == "finite"
                    and other.fld.k % rec.fld.k == 0
                ):
                    try:
                        coords = tuple(embed(c, other.fld) for c in coords)
                    except Exception:
                        continue
                    gens_e = tuple(_embed_poly(g, other.fld) for g in gens)
                    if all(not g.evaluate(other.coords) for g in gens_e):
                        members.append(other)
                    continue
                continue
            if all(not g.evaluate(other.coords) for g in gens):
                members.append(other)
        for m in members:
            used.add(id(m))
        pair = (rec.tuple.r, rec.tuple.l)
        exceptions = [m for m in members if (m.tuple.r, m.tuple.l) != pair]
        strata.append(
            CurveStratum(
                anchor=rec,
                generators=gens,
                members=members,
                generic_pair=pair,
                exceptions=exceptions,
            )
        )
    return strata


# ---------------------------------------------------------------------------
# Centers and blowups


@dataclass
class Center:
    kind: str  # "point" | "curve"
    anchor: PointRecord
    stratum: CurveStratum | None = None

    def describe(self):
        if self.kind == "point":
            return f"point({','.join(self.anchor.coord_strs())})"
        if self.stratum.generators is None:
            return f"curve(through {','.join(self.anchor.coord_strs())})"
        g1, g2 = self.stratum.generators
        return f"curve({g1}; {g2})"


def select_center(top: TopLocus, gs: GlobalScene) -> Center:
    mt = top.max_tuple
    if (mt.d, mt.n, mt.s) > (0, 0, 0):
        anchor = _first_record(top.maximal)
        return Center(kind="point", anchor=anchor)
    # terminal: prefer a stratum through a maximal point; isolated otherwise
    if top.strata:
        strat = top.strata[0]
        return Center(kind="curve", anchor=strat.anchor, stratum=strat)
    anchor = _first_record(top.maximal)
    return Center(kind="point", anchor=anchor)


def _first_record(records):
    def key(r):
        return (r.fld.k, tuple(str(c) for c in r.coords))

    return sorted(records, key=key)[0]


def _power_root_strip(g: Poly) -> Poly:
    """Strip p-th powers: while g = h^p (perfect field), replace g by h."""
    spec = g.spec
    if spec.kind != "finite":
        return g
    from surfres.series import NotAPower, Series, qth_power_root

    while g.degree() > 0:
        root = qth_power_root(Series(g, 10 ** 9), spec.p)
        if isinstance(root, NotAPower) or root.body == g:
            break
        g = root.body
    return g


def _strip_monomial(g: Poly) -> Poly:
    mono = tuple(
        min(m[i] for m in g.terms) for i in range(g.nvars)
    )
    if any(mono):
        return g.divide_by_monomial(mono)
    return g


def curve_generator_candidates(gs: GlobalScene, spec, c: int):
    """Polynomial candidates for terminal-center curve generators.

    The defining ideal of the order-c locus is the radical of the Hasse
    derivatives of degree < c applied to f and the old exceptional product;
    stripping p-th powers and monomial factors from those derivatives yields
    candidate generators.  Candidates are sorted per orientation v: those of
    the shape v + G(others) (after rescaling) versus those free of v.
    """
    from surfres.series import hasse_derivative

    f = _embed_poly(gs.f, spec)
    sources = [f]
    for comp in gs.components:
        sources.append(f * _embed_poly(comp.eq, spec))
    cands = []
    seen = set()
    alphas = [
        (a, b, d)
        for a in range(c)
        for b in range(c)
        for d in range(c)
        if 0 < a + b + d < c or (a, b, d) == (0, 0, 0)
    ]
    for src in sources:
        if len(src.terms) > 120 or src.degree() > 40:
            continue
        derivs = []
        for alpha in alphas:
            g = hasse_derivative(src, alpha).body
            if g and len(g.terms) <= 80:
                derivs.append(g)
        derivs.sort(key=lambda g: (g.degree(), len(g.terms)))
        derivs = derivs[:12]
        # pairwise reductions expose pure powers like f - x W^2 = z^2
        for g in derivs + _pairwise_reductions(derivs):
            g = _power_root_strip(g)
            # variables dividing g are candidates themselves (coordinate
            # curves); the monomial-free core is a candidate too
            mono = tuple(min(m[i] for m in g.terms) for i in range(3))
            for v in range(3):
                if mono[v]:
                    var = Poly.variable(spec, 3, v)
                    key = str(var)
                    if key not in seen:
                        seen.add(key)
                        cands.append(var)
            if any(mono):
                g = g.divide_by_monomial(mono)
            key = str(g)
            if key in seen or g.degree() < 1:
                continue
            seen.add(key)
            cands.append(g)
    cands.sort(key=lambda g: (g.degree(), len(g.terms), str(g)))
    cands = cands[:40]
    w_by_axis = {v: [] for v in (X, Y, Z)}
    axis_by_axis = {v: [] for v in (X, Y, Z)}
    for v in (X, Y, Z):
        lin = tuple(1 if i == v else 0 for i in range(3))
        axis_by_axis[v].append(Poly.variable(spec, 3, v))
        for g in cands:
            if not any(m[v] for m in g.terms):
                w_by_axis[v].append(g)
            else:
                gamma = g.terms.get(lin)
                if gamma and not any(
                    m[v] for m in (g - Poly.monomial(spec, 3, lin, gamma)).terms
                ):
                    axis_by_axis[v].append(g.scale(gamma.inverse()))
    return w_by_axis, axis_by_axis


def _snc_with_components(gs: GlobalScene, spec, members, w: Poly, zt: Poly) -> bool:
    """The center V(w, zt) must, at every sampled member point, either be
    contained in each component through the point or cross it transversally
    (gradients of w, zt and the component equation independent)."""

    def grad_at(poly, fld, coords):
        out = []
        from surfres.series import hasse_derivative

        for v in range(3):
            alpha = tuple(1 if i == v else 0 for i in range(3))
            out.append(hasse_derivative(poly, alpha).body.evaluate(coords))
        return out

    contains_curve = {}
    for comp in gs.components:
        ok = True
        for m in members:
            try:
                eqe = _embed_poly(comp.eq, m.fld)
            except Exception:
                ok = False
                break
            if eqe.evaluate(m.coords):
                ok = False
                break
        contains_curve[comp.label] = ok

    for m in members:
        try:
            we = _embed_poly(w, m.fld)
            ze = _embed_poly(zt, m.fld)
        except Exception:
            return False
        rows = [grad_at(we, m.fld, m.coords), grad_at(ze, m.fld, m.coords)]
        if _rank(m.fld, rows) < 2:
            return False  # the candidate pair is not even a regular curve here
        for comp in gs.components:
            eqe = _embed_poly(comp.eq, m.fld)
            if eqe.evaluate(m.coords):
                continue
            g = grad_at(eqe, m.fld, m.coords)
            if _rank(m.fld, rows + [g]) == 3:
                continue  # transversal crossing
            if contains_curve[comp.label]:
                continue  # the component contains the whole sampled curve
            return False
    return True


def _pairwise_reductions(derivs):
    """g minus its h-divisible part, for pairs of derivative candidates.

    Subtracting the h-multiple part of g can expose a pure power of the
    missing generator (f - x W^2 = z^2 in the model case)."""
    out = []
    for g in derivs:
        for h in derivs:
            if g is h or g.degree() <= h.degree():
                continue
            q = None
            for mono, coeff in g.terms.items():
                cand = Poly.monomial(g.spec, g.nvars, mono, coeff)
                quot = cand.try_divide(h)
                if quot is not None:
                    q = quot if q is None else q + quot
            if q is not None:
                red = g - q * h
                if red and red.degree() >= 1:
                    out.append(red)
    return out


def _find_curve_pair(gs: GlobalScene, center: Center, spec, o_center: int):
    """Pick (W, axis_var + G) generators for the terminal curve.

    Candidates come from Hasse derivatives of f; a pair (with the blown-down
    coordinate axis_var) is accepted when all stratum members lie on
    V(W, axis + G) and the total transform of f is divisible by W^o along
    the chart axis -> W axis - G."""
    member_sets = [[center.anchor]]
    if center.stratum and len(center.stratum.members) > 1:
        # same-pair points may lie on different curves; try the full stratum
        # first, then fall back to the curve through the anchor alone
        member_sets.insert(0, center.stratum.members)
    w_by_axis, axis_by_axis = curve_generator_candidates(gs, spec, max(o_center, 2))

    f_emb = _embed_poly(gs.f, spec)
    c_center = center.anchor.tuple.c

    def w_multiplicity(poly, w, cap):
        e = 0
        cur = poly
        while e < cap:
            q = cur.try_divide(w)
            if q is None:
                break
            cur = q
            e += 1
        return e

    for members in member_sets:
        def vanishes_on_members(g):
            for m in members:
                try:
                    ge = _embed_poly(g, m.fld)
                except Exception:
                    return False
                if ge.evaluate(m.coords):
                    return False
            return True

        for axis in (Z, Y, X):
            for zt in axis_by_axis[axis]:
                if not vanishes_on_members(zt):
                    continue
                g_part = zt - Poly.variable(spec, 3, axis)
                for w in w_by_axis[axis]:
                    if not vanishes_on_members(w):
                        continue
                    images = [
                        w * Poly.variable(spec, 3, v) - g_part if v == axis
                        else Poly.variable(spec, 3, v)
                        for v in range(3)
                    ]
                    e = w_multiplicity(substitute_poly(f_emb, images), w, o_center)
                    if e < o_center:
                        continue
                    total_ord = e
                    for comp in gs.components:
                        if comp.age > o_center:
                            ce = substitute_poly(_embed_poly(comp.eq, spec), images)
                            total_ord += w_multiplicity(ce, w, c_center)
                    if total_ord < c_center:
                        continue
                    if not _snc_with_components(gs, spec, members, w, zt):
                        continue
                    return axis, w, zt
    return None


def blowup_general_curve(gs: GlobalScene, center: Center, next_label: int, o_center: int):
    """Blow up a curve V(W(x,y), z + G(x,y)) with non-coordinate W.

    For terminal strata the W-exponent of the coefficient ideal is >= c!, so
    the whole strict transform of X lies in the single polynomial chart
    z -> W(x,y) z - G(x,y) whose exceptional equation is W; that chart is the
    only child produced.
    """
    rec = center.anchor
    spec = rec.fld
    pair = _find_curve_pair(gs, center, spec, o_center)
    if pair is None:
        raise CenterNotPolynomialAtPrecision(
            "no polynomial generator pair found for the terminal curve"
        )
    axis, w_poly, zt = pair
    g_part = zt - Poly.variable(spec, 3, axis)
    images = [
        w_poly * Poly.variable(spec, 3, v) - g_part if v == axis
        else Poly.variable(spec, 3, v)
        for v in range(3)
    ]
    total = substitute_poly(_embed_poly(gs.f, spec), images)
    e = 0
    weak = total
    while True:
        q = weak.try_divide(w_poly)
        if q is None:
            break
        weak = q
        e += 1
    if e < o_center:
        raise NotPermissible(
            f"center order {e} < {o_center} along the curve V(W, z+G)"
        )
    new_comps = []
    for comp in gs.components:
        tot = substitute_poly(_embed_poly(comp.eq, spec), images)
        while True:
            q = tot.try_divide(w_poly)
            if q is None:
                break
            tot = q
        if tot.degree() == 0:
            continue
        new_comps.append(GlobalComponent(eq=tot, age=comp.age, label=comp.label))
    new_comps.append(GlobalComponent(eq=w_poly, age=o_center, label=next_label))
    child = GlobalScene(
        spec=spec,
        f=weak,
        components=new_comps,
        points=[],
        search=gs.search,
        precision=gs.precision,
        skip_vars=(),
    )
    return [child], ["sigma-chart"], next_label + 1


def blowup_node(gs: GlobalScene, center: Center, next_label: int, o_center: int):
    """Blow up the center; returns (children, chart_descs, new_next_label).

    The node is first rewritten into the frame coordinates of the center
    (translation + cleaning changes), making the center a coordinate
    subvariety; then one child node per chart is produced.
    """
    rec = center.anchor
    spec = rec.fld
    if center.kind == "curve" and (
        center.stratum is None or center.stratum.generators is None
    ):
        raise CenterNotPolynomialAtPrecision("no polynomial frame for the curve")
    images, _inverse = center_frame_images(gs, rec, curve=center.kind == "curve")
    f_frame = substitute_poly(_embed_poly(gs.f, spec), images)
    comps_frame = [
        GlobalComponent(eq=substitute_poly(_embed_poly(c.eq, spec), images), age=c.age, label=c.label)
        for c in gs.components
    ]
    if center.kind == "point":
        center_vars = (X, Y, Z)
    else:
        w = X if rec.analysis.center_hint == "curve_x" else Y
        center_vars = tuple(sorted((w, Z)))
    e = ord_along(Series.from_poly(f_frame, 10 ** 6), set(center_vars)).as_int()
    if e < o_center:
        raise NotPermissible(
            f"center order {e} < {o_center}; the candidate center is not "
            f"contained in the top locus (curve cleaning truncated?)"
        )
    # c-level permissibility: the center must also sit inside the locus of
    # ord(X u E_old) >= c
    c_center = rec.tuple.c
    total_ord = e
    for comp in comps_frame:
        if comp.age > o_center:
            k = comp.eq.order_along(set(center_vars)) or 0
            total_ord += k
    if total_ord < c_center:
        raise NotPermissible(
            f"center order {total_ord} < c = {c_center} along X u E_old"
        )
    # simple-normal-crossings of the center with every component through it:
    # the component either contains the center or crosses it transversally
    if center.kind == "curve":
        origin = tuple(spec.zero() for _ in range(3))
        for comp in comps_frame:
            if comp.eq.evaluate(origin):
                continue
            if (comp.eq.order_along(set(center_vars)) or 0) >= 1:
                continue  # contains the center curve
            grad = [
                comp.eq.terms.get(tuple(1 if i == v else 0 for i in range(3)))
                for v in range(3)
            ]
            others = [v for v in range(3) if v not in center_vars]
            if not any(grad[v] for v in others):
                raise NotPermissible(
                    f"center is tangent to component {comp.label}"
                )
    label_new = next_label
    children = []
    descs = []
    names = var_names(3)
    for chart_var in center_vars:
        cmap = ChartMap(center_vars=center_vars, chart_var=chart_var)
        chart_imgs = _chart_images_poly(cmap, spec)
        total = substitute_poly(f_frame, chart_imgs)
        weak = total.divide_by_monomial(
            tuple(e if i == chart_var else 0 for i in range(3))
        )
        new_comps = []
        for comp in comps_frame:
            tot = substitute_poly(comp.eq, chart_imgs)
            k = tot.order_along({chart_var}) or 0
            if k:
                tot = tot.divide_by_monomial(
                    tuple(k if i == chart_var else 0 for i in range(3))
                )
            if tot.degree() == 0:
                continue  # globally constant: the strict transform is empty here
            new_comps.append(GlobalComponent(eq=tot, age=comp.age, label=comp.label))
        new_comps.append(
            GlobalComponent(
                eq=Poly.variable(spec, 3, chart_var), age=o_center, label=label_new
            )
        )
        child = GlobalScene(
            spec=spec,
            f=weak,
            components=new_comps,
            points=[],
            search=gs.search if spec.kind == "finite" or gs.search[0] != "provided" else ("box", 2),
            precision=gs.precision,
            skip_vars=tuple(j for j in center_vars if j < chart_var),
        )
        children.append(child)
        descs.append(f"{names[chart_var]}-chart")
    return children, descs, next_label + 1


def _chart_images_poly(cmap: ChartMap, spec):
    chart = Poly.variable(spec, 3, cmap.chart_var)
    images = []
    for i in range(3):
        v = Poly.variable(spec, 3, i)
        if i == cmap.chart_var:
            images.append(v)
        elif i in cmap.center_vars:
            images.append(chart * v)
        else:
            images.append(v)
    return images


# ---------------------------------------------------------------------------
# The resolution loop


@dataclass
class TraceNode:
    node_id: int
    parent: int | None
    chart: str | None
    f: str
    components: list
    max_tuple: tuple | None = None
    center: str | None = None
    resolved: bool = False
    decrease_witness: tuple | None = None  # (parent tuple, child max-over-center)
    duplicate_of: int | None = None  # identical chart data already processed


@dataclass
class ResolutionTrace:
    nodes: list = field(default_factory=list)
    blowups: int = 0
    resolved: bool = False

    def to_json_lines(self) -> str:
        out = []
        for n in self.nodes:
            out.append(
                json.dumps(
                    {
                        "node": n.node_id,
                        "parent": n.parent,
                        "chart": n.chart,
                        "f": n.f,
                        "components": n.components,
                        "max_tuple": n.max_tuple,
                        "center": n.center,
                        "resolved": n.resolved,
                        "decrease": n.decrease_witness,
                    },
                    sort_keys=True,
                )
            )
        return "\n".join(out) + "\n"

    def to_dot(self) -> str:
        lines = ["digraph resolution {"]
        for n in self.nodes:
            label = f"#{n.node_id} {n.max_tuple}"
            if n.resolved:
                label += " resolved"
            lines.append(f'  n{n.node_id} [label="{label}"];')
            if n.parent is not None:
                lines.append(f'  n{n.parent} -> n{n.node_id} [label="{n.chart}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"


RESOLVED = InvariantTuple.resolved()


def resolve(gs: GlobalScene, max_blowups: int = 25) -> ResolutionTrace:
    """Iterate top-locus blowups on every chart until all leaves resolve.

    Every edge over a center must strictly decrease the invariant tuple; the
    witnesses (parent tuple at the center vs the maximal tuple over sampled
    points of the new exceptional divisor) are stored in the trace.  Raises
    LimitExceeded (with the partial trace attached) when the budget runs out.
    """
    trace = ResolutionTrace()
    next_label = max((c.label for c in gs.components), default=0) + 1
    node_counter = 0
    seen_signatures = {}
    # pending: (scene, parent_id, chart_desc, parent_tuple, exc_label)
    pending = [(gs, None, None, None, None)]
    # active leaves awaiting a blowup: (node, gs_node, top)
    active = []

    def intake(entry):
        nonlocal node_counter
        gs_node, parent, chart, parent_tuple, exc_label = entry
        node = TraceNode(
            node_id=node_counter,
            parent=parent,
            chart=chart,
            f=str(gs_node.f),
            components=[
                {"eq": str(c.eq), "age": c.age, "label": c.label}
                for c in gs_node.components
            ],
        )
        node_counter += 1
        trace.nodes.append(node)
        # identical chart data (up to a renaming of the component labels)
        # resolves identically: do the work once and record the reference
        relabel = {}
        comp_sig = []
        for d in sorted(node.components, key=lambda d: d["label"]):
            relabel.setdefault(d["label"], len(relabel))
            comp_sig.append((d["eq"], d["age"], relabel[d["label"]]))
        signature = (str(gs_node.spec), node.f, tuple(comp_sig), gs_node.skip_vars)
        if signature in seen_signatures:
            node.duplicate_of = seen_signatures[signature]
            node.resolved = True
            return
        seen_signatures[signature] = node.node_id
        top = top_locus(gs_node)
        if top.max_tuple is None:
            node.resolved = True
            return
        node.max_tuple = top.max_tuple.as_tuple()
        if parent_tuple is not None:
            witness = _max_over_center(gs_node, top, exc_label)
            if witness is not None:
                assert witness < parent_tuple, (
                    f"invariant failed to decrease: {witness.as_tuple()} over "
                    f"center with {parent_tuple.as_tuple()}"
                )
            node.decrease_witness = (
                parent_tuple.as_tuple(),
                witness.as_tuple() if witness is not None else None,
            )
        if top.max_tuple == RESOLVED:
            node.resolved = True
            return
        active.append((node, gs_node, top))

    while pending or active:
        while pending:
            intake(pending.pop(0))
        if not active:
            break
        # one blowup stage: every chart-local piece of the global top locus
        global_max = max(t.max_tuple for _, _, t in active)
        if trace.blowups >= max_blowups:
            raise LimitExceeded("blowup budget exhausted", trace)
        trace.blowups += 1
        stage = [item for item in active if item[2].max_tuple == global_max]
        active = [item for item in active if item[2].max_tuple != global_max]
        for node, gs_node, top in stage:
            center = select_center(top, gs_node)
            o_center = center.anchor.tuple.o
            label_new = next_label
            try:
                children, descs, next_label = blowup_node(
                    gs_node, center, next_label, o_center
                )
            except (NotPermissible, CenterNotPolynomialAtPrecision):
                if center.kind != "curve":
                    raise
                # the analysis frame of the anchor is not polynomial in this
                # chart; blow up the curve from its global generator pair
                # with the single polynomial chart z -> W z - G
                children, descs, next_label = blowup_general_curve(
                    gs_node, center, next_label, o_center
                )
            node.center = center.describe()
            for child, desc in zip(children, descs):
                pending.append(
                    (child, node.node_id, desc, center.anchor.tuple, label_new)
                )
    trace.resolved = True
    return trace


def _max_over_center(gs_node: GlobalScene, top: TopLocus, exc_label: int):
    """Max tuple over sampled points on the exceptional divisor with the
    given label (the points lying over the blown-up center)."""
    exc_eq = None
    for c in gs_node.components:
        if c.label == exc_label:
            exc_eq = c.eq
            break
    if exc_eq is None:
        return None
    best = None
    for rec in top.records:
        if rec.resolved:
            continue
        eqv = _embed_poly(exc_eq, rec.fld)
        if eqv.evaluate(rec.coords):
            continue
        if best is None or rec.tuple > best:
            best = rec.tuple
    return best
