"""groundnav: implicit destination grounding via recursive belief updates."""

__version__ = "0.1.0"
