"""Exact symbolic computation for bicharacter-twisted vertex algebras.

The layers build on each other:

* :mod:`vfalg.scalar` and :mod:`vfalg.sfield`: exact scalars in ``Q(q)`` and the
  singular coefficient rings ``S(I)``.
* :mod:`vfalg.hopf`: the state space ``H(M)`` with its bialgebra structure.
* :mod:`vfalg.bichar`: bicharacters, their group laws and the braiding charge.
* :mod:`vfalg.vertex`: twisted products, vertex operators, residues.
* :mod:`vfalg.verify`: exact verification suites; :mod:`vfalg.cli` is ``vf``.
"""

from .bichar import (
    Bicharacter, bc_charge, bc_check, bc_convolve, bc_eval, bc_eval_multi, bc_freefield,
    bc_identity, bc_inverse, bc_lattice, bc_model, bc_transpose,
)
from .config import ModelConfig, parse_model, parse_model_text
from .errors import DomainError, ParseError, ResourceError, UsageError, VFError
from .exprparse import format_sfn, format_state, parse_sfn, parse_state
from .hopf import (
    Basis, FreeFieldModel, HMElement, LatticeModel, Model, SweedlerExpansion, hm_antipode,
    hm_coproduct, hm_counit, hm_d_action, hm_dgen, hm_product, make_model,
)
from .scalar import ScalarQ
from .sfield import (
    FactorKey, LaurentSeries, SingularFn, sf_add, sf_divided_deriv, sf_expand, sf_mul,
    sf_rename, sf_set_zero, sf_sum,
)
from .verify import CHECKS, CheckReport, vx_verify
from .vertex import (
    StateVector, VertexSeries, vx_contour, vx_embed, vx_expand_merge, vx_greens, vx_mode,
    vx_npoint, vx_R_apply, vx_tensor_model, vx_twisted_product, vx_Y,
)

__version__ = "0.1.0"
