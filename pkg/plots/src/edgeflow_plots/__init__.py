"""edgeflow-plots: render edgeflow metric CSVs into static figures.

Consumes the simulator's published CSV schemas only; never imports the
simulator package itself.
"""

__version__ = "0.1.0"
