"""tamplan: topological affordance memory for interactive household action planning."""

__version__ = "0.1.0"
