"""Classical versus quantum A1: commutativity turns into a braiding.

Run with ``python3 demos/quantum_braiding.py``.
"""

from vfalg import make_model, parse_sfn, vx_embed, vx_twisted_product, vx_verify


def products(model):
    e = model.e((1,))
    ab = vx_twisted_product(vx_embed(e, 1), vx_embed(e, 2))
    ba = vx_twisted_product(vx_embed(e, 2), vx_embed(e, 1))
    return ab, ba


ab, ba = products(make_model([[2]]))
print("classical: e@1 o e@2 =", ab)
print("classical: the two orders agree:", ab == ba)

ab, ba = products(make_model([[2]], mode="quantum"))
print("quantum:   e@1 o e@2 =", ab)
print("quantum:   the two orders agree:", ab == ba)
lhs = ab * parse_sfn("x1-q^2*x2", {1, 2})
rhs = ba * parse_sfn("q^2*x1-x2", {1, 2})
print("quantum:   they agree after the exchange factors:", lhs == rhs)
print()

# The verification suite knows which checks a braided model is expected to fail.
for report in vx_verify(["commutativity", "braiding", "yang_baxter"],
                        make_model([[2]], mode="quantum"), degree=2, expect="braided"):
    print(report)
