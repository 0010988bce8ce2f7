"""Phoneme-level acoustic features and language-model information measures."""

__version__ = "0.1.0"
