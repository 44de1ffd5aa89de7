"""Change counts of Boolean functions under the p-biased hypercube walk."""

__version__ = "0.1.0"
