"""DyExplainer - explainable dynamic graph neural networks with live updates."""

__version__ = "0.1.0"
