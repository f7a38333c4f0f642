"""Explicit resilient Boolean functions, the partition families behind them,
and an MGF-preserving oblivious sampler, with exact small-scale oracles."""

__version__ = "0.1.0"
