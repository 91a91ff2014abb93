"""Exact coefficient fields: Q and F_{p^k}, with Frobenius roots.

Everything downstream (series, coefficient ideals, cleaning) runs on these
scalars; there is no floating point anywhere in the package.
"""

from surfres.field import FieldSpec, embed

QQ = FieldSpec.rationals()
F4 = FieldSpec.parse("GF(2^2)")

print("field literals:", QQ, "and", F4)
print("F_4 modulus (little-endian):", F4.modulus, " # t^2 + t + 1, chosen deterministically")

t = F4.generator()
print("\nmultiplication table entries:")
for a in F4.elements():
    print("  t *", a, "=", t * a)

# the inverse Frobenius: every element of a finite field has a unique p-th root
print("\nsquare roots via the inverse Frobenius:")
for a in F4.elements():
    r = a.frobenius_root(1)
    assert r * r == a
    print(f"  sqrt({a}) = {r}")

# embeddings into extensions send the generator to a root of the modulus
F16 = FieldSpec.finite(2, 4)
img = embed(t, F16)
print("\nembedding F_4 -> F_16 sends t to", img)
print("check t^2 + t + 1 = 0 in F_16:", img * img + img + F16.one())
