"""Low-degree polynomial approximation of random Xavier networks.

Hermite tools, shadow networks (every hidden activation replaced by its
renormalized Hermite truncation), Monte Carlo checks of the approximation
bounds, and learners that exploit them.
"""

from .activations import ActivationSpec, HermiteExpansion, dual_activation, expand, make_activation, sigma_n_eval
from .bounds import BoundReport
from .errors import CombinatorialBlowup, FeatureBlowup, TruncationTooCoarse
from .harness import McConfig
from .network import Architecture, NetworkWeights, forward, sample_weights, shadow_forward
from .polyexpand import MonomialPolynomial, expand_shadow

__version__ = "0.1.0"
