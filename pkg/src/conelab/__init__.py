"""conelab: cones over pseudo-Riemannian metrics, the Obata equation and projective equivalence."""

__version__ = "0.1.0"

from .errors import ConelabError  # noqa: E402

__all__ = ["ConelabError", "__version__"]
