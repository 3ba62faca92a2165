"""Quantum Leakage.

Maximal quantum leakage of quantum encodings: computing it, searching for
encoders that maximize it, and auditing the accuracy bounds it implies for
quantum inference pipelines.
"""

__version__ = "0.1.0"
