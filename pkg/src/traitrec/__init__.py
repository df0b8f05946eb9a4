"""Big Five trait profiling of chat-group authors and trait-matched channel recommendation."""

__version__ = "0.1.0"

from .neo import TraitLabel, TraitVector

__all__ = ["TraitLabel", "TraitVector", "__version__"]
