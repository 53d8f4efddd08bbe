"""Memory coefficients and the Mittag-Leffler function.

The coefficients c_k weigh how strongly a fractional process remembers the
state k steps back, and b_n is the mass still unassigned after n steps.
"""

from frond import memory_coefficients, mittag_leffler

co = memory_coefficients(0.5, 10)
print("k    c_k           b_k")
for k, (c, b) in enumerate(zip(co.c, co.b[1:]), start=1):
    print(f"{k:<4d} {c:.10f}  {b:.10f}")

print("\nE_0.5(z) for decreasing z:")
for z in (-0.5, -2.0, -10.0, -50.0):
    r = mittag_leffler(0.5, z)
    print(f"z = {z:7.1f}  value = {r.value:.12g}  ({r.method_used})")
