"""Scale calculus and the scale Herglotz variational principle."""

__version__ = "0.1.0"
