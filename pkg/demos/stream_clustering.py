# Correlation clustering over a dynamic stream
#
# Edges arrive and depart. Only the sketch suite is kept in memory, and at the
# end it is turned into a simple graph that any unweighted clustering routine
# can consume. The same suite comes out of the distributed and MPC simulations.

import warnings

from desparse.cluster import brute_force_cc
from desparse.desparsify import PreconditionWarning
from desparse.generators import clique_union
from desparse.graphcore import all_pairs, cc_cost
from desparse.harness import StreamEvent, distributed_run, dynamic_stream_run, insert_stream, mpc_run

warnings.simplefilter("ignore", PreconditionWarning)

# Two groups of four vertices, plus noise edges that are inserted and later deleted.

g = clique_union([4, 4], bridges=1, seed=3)
noise = [e for e in all_pairs(g.n) if e not in g.edges][:6]
events = [StreamEvent(*e) for e in noise] + insert_stream(g) + [StreamEvent(*e, -1) for e in noise]
print(len(events), "events, final graph has", g.m, "edges")

run = dynamic_stream_run(events, g.n, eps=0.3, seed=11)
p = run.clustering.result.partition
print("clusters:", p.clusters())
print("cost on G:", cc_cost(g, p), "  optimum:", brute_force_cc(g).cost)
print("suite equals offline construction:", run.report["suite_equal"])

# The same graph split over machines.

edges = g.sorted_edges()
dist = distributed_run([edges[i::4] for i in range(4)], g.n, 0.3, seed=11)
mpc = mpc_run([edges[i::8] for i in range(8)], g.n, 0.3, seed=11)
print("distributed bytes:", dist.report["total"], "<= bound", dist.report["bound"])
print("mpc rounds:", mpc.report["rounds"], "  identical suites:", dist.suite == mpc.suite == run.suite)
