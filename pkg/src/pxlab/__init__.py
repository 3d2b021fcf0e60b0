"""pxlab - Numerical lab for the normalized p(x)-Laplacian eigenvalue problem."""

from .__version__ import __version__

__all__ = ["__version__"]
