"""Locally consistent decomposition of strings into small grammars, and
edit-distance sketches (static and rolling) built on it."""

from .core import Params, derive_params
from .hashing import RandomnessBundle, bundle_generate

__all__ = ["Params", "derive_params", "RandomnessBundle", "bundle_generate"]
__version__ = "0.1.0"
