"""Products of orthogonal projections: subspaces, trajectories, regularity diagnostics,
Johnson-graph combinatorics, example configurations and transport chains."""

__version__ = "0.1.0"
