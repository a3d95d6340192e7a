"""dmodkit: exact computer algebra for linear OD/PD operators.

Layers: exact rational-function arithmetic (`exact`), noncommutative operator
matrices (`ore`), Janet involutive bases (`janet`), compatibility conditions
and module queries (`syzygy`), the torsion-free / parametrizability pipeline
(`duality`), the built-in operator corpus (`corpus`), and the JSON system
format plus CLI (`systemdoc`, `cli`).
"""

from dmodkit.exact import Context, MPoly, RatFunc, normalize, derive, specialize, parse_coeff
from dmodkit.ore import (
    OpMatrix,
    OpRow,
    OrePoly,
    adjoint,
    apply,
    change_coordinates,
    ore_mul,
    specialize_params,
)
from dmodkit.janet import (
    JanetBasis,
    JanetTabular,
    delta_regularize,
    first_order_form,
    involutive_completion,
    normal_form,
    parametric_jets,
    tabular,
)
from dmodkit.syzygy import (
    compatibility_conditions,
    differential_rank,
    differential_sequence,
    is_zero_module,
    module_contains,
    modules_equal,
    syzygy_oracle,
)
from dmodkit.duality import (
    DualityReport,
    adjoint_injective,
    annihilator,
    localize_parametrize,
    minimal_parametrize,
    parametrize,
    torsion_test,
)
from dmodkit.corpus import (
    MetricSpec,
    cauchy,
    einstein_linearized,
    euclid,
    fixture,
    fixture_matrix,
    killing,
    minkowski,
    ricci_linearized,
)

__all__ = [
    "Context",
    "MPoly",
    "RatFunc",
    "normalize",
    "derive",
    "specialize",
    "parse_coeff",
    "OpMatrix",
    "OpRow",
    "OrePoly",
    "adjoint",
    "apply",
    "change_coordinates",
    "ore_mul",
    "specialize_params",
    "JanetBasis",
    "JanetTabular",
    "delta_regularize",
    "first_order_form",
    "involutive_completion",
    "normal_form",
    "parametric_jets",
    "tabular",
    "compatibility_conditions",
    "differential_rank",
    "differential_sequence",
    "is_zero_module",
    "module_contains",
    "modules_equal",
    "syzygy_oracle",
    "DualityReport",
    "adjoint_injective",
    "annihilator",
    "localize_parametrize",
    "minimal_parametrize",
    "parametrize",
    "torsion_test",
    "MetricSpec",
    "cauchy",
    "einstein_linearized",
    "euclid",
    "fixture",
    "fixture_matrix",
    "killing",
    "minkowski",
    "ricci_linearized",
]
