"""Multi-fidelity recursive behavior prediction for highway traffic scenes."""

__version__ = "0.1.0"
