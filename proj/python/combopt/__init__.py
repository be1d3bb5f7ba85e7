"""Hybrid combinatorial optimization: expression models, TSP/KP/MaxCut
encodings, a hybrid local-search solver, QUBO tooling and benchmark
statistics."""

from ._core import *  # noqa: F401,F403
from ._core import Error, __doc__  # noqa: F401
