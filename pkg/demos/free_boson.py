"""A free boson, from its propagator to Wick's theorem.

Run with ``python3 demos/free_boson.py``.
"""

from vfalg import format_sfn, make_model, parse_sfn, vx_greens, vx_Y

free = make_model(propagator=[[parse_sfn("(x1-x2)^-2", {1, 2})]])
phi = free.phi(1)

# The operator product of phi with itself: the x^-2 pole is the propagator,
# the regular part lists the normally ordered products phi_k phi.
print("Y(phi, x) phi up to x^3")
print(vx_Y(phi, phi, 3))
print()

# Green's functions vanish for an odd number of fields and are sums over
# pairings otherwise.
for n in (2, 3, 4):
    print(f"<phi ... phi> with {n} fields:")
    print("  " + format_sfn(vx_greens([phi] * n)))
