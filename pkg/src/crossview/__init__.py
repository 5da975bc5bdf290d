"""Ground-to-aerial image matching pipeline."""

__version__ = "0.1.0"

from .kernels import active_backend

__all__ = ["active_backend", "__version__"]
