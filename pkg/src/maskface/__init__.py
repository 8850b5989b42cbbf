"""Facial animation synthesis and projection pre-distortion for a projected face mask."""

__version__ = "0.1.0"
