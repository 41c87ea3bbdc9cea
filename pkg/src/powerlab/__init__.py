"""Graph powering, spectral bounds and robust community-detection tests."""

from powerlab.graph import Graph, build_graph, delta_profile, diameter, girth
from powerlab.powering import power_graph

__all__ = ["Graph", "build_graph", "delta_profile", "diameter", "girth", "power_graph"]
__version__ = "0.1.0"
