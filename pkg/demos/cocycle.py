"""Why lattice models need a sign cocycle.

With an odd pairing between two generators, the plain group algebra gives
an anticommuting product.  The standard cocycle repairs it.

Run with ``python3 demos/cocycle.py``.
"""

from vfalg import make_model, vx_verify

trivial = make_model([[2, 1], [1, 2]], cocycle="trivial")
for model in (trivial, trivial.with_cocycle("standard")):
    (report,) = vx_verify(["commutativity"], model, degree=1)
    print(f"cocycle={model.cocycle}: {report}")
