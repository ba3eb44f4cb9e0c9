"""Denjoy-Carleman weight classes, certified flat functions and sparse piecewise maps."""
from .weights import (NON_QUASI_ANALYTIC, QUASI_ANALYTIC, UNDETERMINED, CarlemanVerdict,
                      ConvexifiedSequence, WeightSequence, carleman_partial_sum, classify,
                      load_registry, log_convexify)
from .flat import (FlatSpline, TransitionFunction, eval_bump, hughes_lambda, make_bump,
                   make_transition)
from .sparse import (AtomRegistry, SparsePiecewiseMap, build_map, eval_with_provenance,
                     inverse_eval, sparseness_report)
from .wetzel import build_flat_on_cantor, equalizer_demo, family_member, two_value_check
from .envelope import (DerivativeNormProfile, EnvelopeFit, check_membership,
                       extend_low_orders, measure_norms, minimal_beta)
from .polyrefute import PolyFamily, lagrange_interpolate, pigeonhole_refine

__version__ = "0.1.0"
