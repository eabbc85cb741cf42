"""divfan: exact polyhedral machinery turning the combinatorial datum of a
spherical homogeneous space plus a colored fan into the divisorial fan of the
same variety under its natural torus action, with toric downgrades available
as an independent cross-check."""

__version__ = "0.1.0"
