"""Figure scripts for stackedcp artifacts.

This package is a pure consumer of the CSV/JSON files the ``stackedcp``
command line writes.  It never imports the simulator and never mutates an
artifact, so the two packages can be installed and tested independently.
"""

from .io import SchemaError, SweepTable, load_edges, load_meanfield
from .figures import plot_edges, plot_phase_diagram, plot_phase_portrait

__version__ = "0.1.0"

__all__ = [
    "SchemaError",
    "SweepTable",
    "load_edges",
    "load_meanfield",
    "plot_phase_diagram",
    "plot_phase_portrait",
    "plot_edges",
]
