"""Graph de-sparsification and correlation clustering from linear sketches."""
from .graphcore import FractionalGraph, Graph, Partition, WeightedGraph, cc_cost, cc_via_cuts
from .profiles import DESK, PAPER, Profile, get_profile

__version__ = "0.1.0"
