# Recovering a simple graph from a linear sketch
#
# A graph made of three dense communities joined by a couple of bridges is
# streamed into a sketch suite. The suite alone is enough to rebuild an
# unweighted graph with exactly as many edges as the original, whose cuts
# agree with the original's up to a small factor.

import warnings

from desparse.desparsify import COMPOSED_BAND, PreconditionWarning, desparsify_from_sketch
from desparse.generators import clique_union
from desparse.sketches import SketchSuite
from desparse.spectral import is_cut_sparsifier_bruteforce

warnings.simplefilter("ignore", PreconditionWarning)

# The input: cliques of sizes 6, 7 and 8 plus two bridges.

g = clique_union([6, 7, 8], bridges=2, seed=1)
print("n =", g.n, " m =", g.m)

# Sketch it. Updates are linear, so the order of insertions does not matter.

eps = 0.3
suite = SketchSuite.of_graph(g, seed=7, eps=eps)
print("suite bytes:", len(suite.to_bytes()), "  lambda:", round(suite.lam, 3))

# Recover the weak edges, solve the per-component fractional program and round.

out, prov = desparsify_from_sketch(suite, seed=7)
d = prov.to_dict()
print("weak edges recovered:", d["T"], "  components:", d["component_sizes"])
print("output edges:", out.m, "  same edge count:", out.m == g.m)

# Every one of the 2^20 cuts is compared against the original.

verdict = is_cut_sparsifier_bruteforce(out, g, COMPOSED_BAND * eps)
print("cut check at 1 +-", COMPOSED_BAND * eps, "->", verdict.ok)
print("cut ratios range over [%.3f, %.3f]" % (verdict.worst_ratio_low, verdict.worst_ratio_high))

# Clique unions are rebuilt exactly, since each community must be complete to
# hold all of its edges. A denser random graph leaves room to move: the output
# differs from the input edge for edge, yet keeps the same count and close cuts.

from desparse.generators import random_gnp

g = random_gnp(16, 0.7, seed=2)
out, prov = desparsify_from_sketch(SketchSuite.of_graph(g, seed=7, eps=eps), seed=7)
print("\nn =", g.n, " m =", g.m, "  ellipsoid iterations:", prov.ellipsoid_iterations)
print("edges moved:", len(out.edges - g.edges), "  output edges:", out.m)
verdict = is_cut_sparsifier_bruteforce(out, g, COMPOSED_BAND * eps)
print("cut check ->", verdict.ok, "  ratios in [%.3f, %.3f]" % (verdict.worst_ratio_low, verdict.worst_ratio_high))
