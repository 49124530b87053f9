# Deterministic insertion-only processing
#
# During the stream nothing random happens: edges go into a sequence of
# spanners or, once every spanner rejects them, into a deterministic
# merge-and-reduce sparsifier. Randomness is used only after the stream ends,
# to round the final program. Replaying the stream gives the same state.

import numpy as np

from desparse.generators import random_gnp
from desparse.harness import GuardedRng, build_state, insert_stream, insertion_only_run
from desparse.spectral import is_spectral_sparsifier

g = random_gnp(32, 0.7, seed=5)
events = insert_stream(g, order=np.random.default_rng(0).permutation(g.m))
eps = 0.9

# In-stream phase, twice.

a = build_state(events, g.n, eps)
b = build_state(events, g.n, eps)
print("spanner sizes:", a.spanners.sizes())
print("edges left to the sparsifier:", a.leftover_count)
print("state digests agree:", a.digest() == b.digest())

# The generator refuses to draw until the stream is over.

rng = GuardedRng(9)
try:
    rng.random()
except RuntimeError as exc:
    print("early draw refused:", exc)

run = insertion_only_run(events, g.n, eps, seed=9, rng=rng)
print("draws after the stream:", rng.draws, "  output edges:", run.graph.m, "of", g.m)
v = is_spectral_sparsifier(run.graph, g, 0.99)
print("spectral range of output vs G: [%.3f, %.3f]" % (v.min_eigenvalue, v.max_eigenvalue))
