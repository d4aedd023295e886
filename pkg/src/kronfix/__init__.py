"""Common fixed points of n-parameter nonexpansive semigroups.

The set of common fixed points of ``{T(p) : p in R_+^n}`` equals the fixed
points shared by ``n + 1`` mappings ``T(p_0), T(p_1), ..., T(p_n)`` when
``p_1..p_n`` form a basis and ``p_0 = sum alpha_j p_j`` with
``{1, alpha_1..alpha_n}`` independent over the rationals.  This package
checks that reduction on concrete instances, with exact quadratic-surd
arithmetic for the alphas and certified Kronecker index search, and runs
the classical iteration schemes toward common fixed points.
"""

from .exactreal import ExactReal, parse
from .fixedsets import (
    Mapping,
    ParameterBasis,
    bruck_check,
    combined_map,
    counterexample_demo,
    decompose,
    make_basis,
    prime_root_basis,
    verify_main_theorem,
)
from .kronecker import KroneckerProblem, approx_sequence, beta_shift, find_index, orbit_dispersion
from .semigroup import (
    SemigroupInstance,
    evaluate,
    make_identity,
    make_matexp,
    make_rotation,
    make_translation_counterexample,
    power_apply,
)

__version__ = "0.1.0"
