"""Normalized error-feedback methods for distributed nonconvex optimization.

The package simulates clients that upload contractively compressed
gradient information and a server that takes normalized (or plain) steps
on the aggregate. Modules:

* :mod:`normef.core` -- vectors, norms and seeded random streams
* :mod:`normef.compressors` -- top-k, rand-k and identity sparsifiers
* :mod:`normef.problems` -- polynomial and logistic regression testbeds
* :mod:`normef.schedules` -- stepsize rules and derived constants
* :mod:`normef.algorithms` -- the client/server rounds and the run loop
* :mod:`normef.harness` -- configs, experiments, checks and the CLI
"""
from .algorithms import AlgoConfig, InitMode, Variant, run
from .compressors import Identity, RandK, TopK, parse_compressor
from .core import RngStream, seeded_rng
from .records import RunRecord

__version__ = "0.1.0"

__all__ = ["AlgoConfig", "Identity", "InitMode", "RandK", "RngStream", "RunRecord", "TopK",
           "Variant", "parse_compressor", "run", "seeded_rng"]
