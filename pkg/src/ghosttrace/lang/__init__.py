"""MiniLang: a small Java-like object language."""

from .ast import Location, Program
from .parser import parse, parse_file
from .printer import pretty_print
from .resolver import HELPERS, resolve

__all__ = ["Location", "Program", "parse", "parse_file", "pretty_print", "resolve", "HELPERS"]
