"""kdfip: a desk-scale laboratory for staged speaker personalization.

The package trains a toy frame-level recognizer on simulated speech-like
data, adapts it to a target speaker through invariant-path stages with
knowledge kept in separate backbone/adapter modules, and verifies the
underlying linearization mathematics with numerical diagnostics.
"""

__version__ = "0.1.0"
