"""Exact-arithmetic toolkit for collinearity counting in P^3 over finite
fields: projective geometry, group-action encodings of collinear triples,
rational group measures with flattening diagnostics, and a constructive
measure decomposition with approximate-group checks."""

__version__ = "0.1.0"
