"""The residual order depends on the chosen hypersurface.

For f = z^2 + x^2 y^2 (y^3 + x^7) over F_2 with exceptional divisor V(xy),
three hypersurfaces give three different (m, d) readings of the coefficient
ideal: the monomial exponent sum m and the residual order d.  Neither the
minimal nor the maximal d is the meaningful one; the invariant maximizes m
first (valid hypersurfaces) and only then d.
"""

from surfres.engine import X, Y, hypersurface_data
from surfres.field import FieldSpec
from surfres.poly import parse_poly
from surfres.series import Series

F2 = FieldSpec.parse("GF(2)")
f = Series.from_poly(parse_poly("z^2 + x^2*y^2*(y^3+x^7)", F2), 16)
x, y = parse_poly("x", F2), parse_poly("y", F2)

frames = [
    ("V(z)          ", None),
    ("V(z+xy)       ", x * y),
    ("V(z+x^4+y^4)  ", parse_poly("x^4 + y^4", F2)),
]
print("hypersurface     (m, d)")
for name, gpoly in frames:
    g = None
    if gpoly is not None:
        g = Series(gpoly.coefficient_of(2, 0).drop_var(2), 10 ** 9)
    m, d = hypersurface_data(f, 2, {X, Y}, g)
    print(f"{name} ({int(m)}, {int(d.value)})")

print()
print("V(z) maximizes m = 4 and among those d = 3: it realizes the residual order.")
print("V(z+xy) kills d entirely; V(z+x^4+y^4) inflates d = 7 but has m = 0,")
print("which is the plain coefficient-ideal order and increases under blowup.")
