"""Simulations of the sublinear computation models."""
from .streams import InvalidStreamError, StreamEvent, insert_stream, net_graph, read_stream, validate_stream, write_stream
from .models import MessageCapExceeded, ModelRun, distributed_run, dynamic_stream_run, mpc_run
from .insertion import (
    OVERFLOW,
    DeterministicState,
    GuardedRng,
    InsertionOnlyRun,
    RandomnessBeforeStreamEnd,
    SpannerSequence,
    StreamingSparsifier,
    barrier_sparsify,
    build_state,
    deterministic_sparsify_stream,
    insertion_only_run,
    spanner_insert,
)
