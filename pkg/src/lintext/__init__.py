"""Linear classifiers for short biomedical abstracts."""

__version__ = "0.1.0"
