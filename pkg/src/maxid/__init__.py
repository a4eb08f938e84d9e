"""Max-infinitely divisible spatial extreme-value models."""

__version__ = "0.1.0"
