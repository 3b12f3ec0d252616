"""Spectral engine for slowly drifting actions in fast-driven three-degree systems.

Modules:

* fields        gridded angle-spectral fields and weighted norms
* homological   driver fields, conjugation operators, Lie machinery
* normalform    single normalization steps and the two iteration drivers
* elliptic      half-periods, shape functions and their jets in the shape parameter
* euler         planar two-center level geometry, action function, averaged potential
* charts        energy-time / action-angle / regularizing coordinate changes
* dynamics      window vector field, localization, drift experiments, bound reports
* cli           command-line entry points
"""

__all__ = [
    "fields",
    "homological",
    "normalform",
    "elliptic",
    "euler",
    "charts",
    "dynamics",
    "cli",
]

__version__ = "0.1.0"
