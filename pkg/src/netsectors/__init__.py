"""Interaction networks from message archives: Erdős sectors, circular
time statistics and PCA of vertex metrics over sliding message windows."""

__version__ = "0.1.0"
