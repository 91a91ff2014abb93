"""The order s of the second coefficient ideal and its joint maximization.

For f = z^2 + y^3 + y x^4 over F_2 the second coefficient ideal along the
curve V(y, z) is (x^12), so s = 12.  Neither a z-change nor a y-change alone
improves it, but the simultaneous pair z -> z + yx + x^3, y -> y + x^2
transforms f into z^2 + y^3 and pushes s beyond the working precision.
"""

from surfres.cleaning import express_in_original_y, maximize_z_and_y
from surfres.coeffideal import second_coeff_order, zy_expand
from surfres.field import FieldSpec
from surfres.poly import parse_poly
from surfres.series import Series

F2 = FieldSpec.parse("GF(2)")
f = Series.from_poly(parse_poly("z^2 + y^3 + y*x^4", F2), 16)

s, delta = second_coeff_order(zy_expand([f], 2, 2, 1), 0, 0, 3)
print("s before:", s, " delta:", delta)

ffin, g, h, smax = maximize_z_and_y(f, 2, 2, 1)
g_orig = express_in_original_y(g, 1, h)
print("maximizing pair: z -> z +", g_orig.body, ",  y -> y +", h.body)
print("transformed equation:", ffin.body)
print("maximized s:", smax, " (sentinel: beyond the working precision)")
