"""solvlab: horocyclic products, parabolic boundaries and lattices in solvable groups."""

__version__ = "0.1.0"
