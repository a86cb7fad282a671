"""Null-dereference causality traces for MiniLang programs."""

__version__ = "0.1.0"
