"""The kangaroo phenomenon and how cleaning plus flags absorb it.

Over F_2, f = z^2 + xy(x^2 + y^2) with E = V(xy) has residual order 2 at the
origin.  Blowing up the point and moving to the chart point (1, 0) loses both
exceptional components; cleaning the transform reveals residual order 3: the
residual order JUMPED.  The jump is bounded by c!/p (Moh), and the invariant
absorbs it because the tangential flag at the origin already reads d = 3.
"""

from surfres.blowup import ChartMap, apply_chart
from surfres.cleaning import omega_clean_test, omega_cleaning_process
from surfres.coeffideal import coeff_factorization, z_expand
from surfres.engine import Scene, SceneComponent, X, Y, resolution_invariant
from surfres.field import FieldSpec
from surfres.orders import WeightFn
from surfres.poly import parse_poly
from surfres.series import Series

F2 = FieldSpec.parse("GF(2)")
f = Series.from_poly(parse_poly("z^2 + x*y*(x^2+y^2)", F2), 16)

verdict = omega_clean_test(f, 2, 2, WeightFn.total(2))
print("origin: clean =", verdict.clean, "via condition", verdict.condition)
cd = coeff_factorization(z_expand([f], 2, 2), {0, 1})
print("origin residual order d =", cd.d, " (m =", cd.r[0], "+", cd.r[1], ")")

# blow up the origin; go to the x-chart point with coordinates (1, 0)
cm = ChartMap(center_vars=(0, 1, 2), chart_var=0, t=((1, F2.one()),))
weak, exc = apply_chart(f, 2, cm)
print("\nafter the blowup at (1,0):", weak.body, " exceptional:", exc)

v2 = omega_clean_test(weak, 2, 2, WeightFn.total(2))
print("clean there?", v2.clean, " obstruction root G =", v2.witness.body)
cleaned, out = omega_cleaning_process(weak, 2, 2, WeightFn.total(2))
print("cleaning step z -> z +", out.g_total.body, "yields", cleaned.body)
cd2 = coeff_factorization(z_expand([cleaned], 2, 2), {0})
print("residual order after cleaning: d =", cd2.d, " -- it jumped 2 -> 3 (kangaroo)")

# the invariant at the origin already accounts for the jump via the n=1 flag
scene = Scene(F2, f, [SceneComponent(X, None, 2, 1), SceneComponent(Y, None, 2, 2)], [], 16)
an = resolution_invariant(scene)
print("\ninvariant at the origin:", an.tuple)
print(
    "maximizing flag: kind =", an.maximizing.kind,
    " multiplicity n =", an.maximizing.n,
    " d =", an.maximizing.d,
)
print("Moh bound: d <= d_transversal + c!/p =", an.d_transversal, "+ 1, with equality here")
