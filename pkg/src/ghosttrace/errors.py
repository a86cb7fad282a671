from __future__ import annotations


class GhostTraceError(Exception):
    """Base class for toolchain errors (not for errors of the interpreted program)."""


class ParseError(GhostTraceError):
    def __init__(self, message: str, file: str, line: int, column: int):
        super().__init__(f"{file}:{line}:{column}: {message}")
        self.message = message
        self.file = file
        self.line = line
        self.column = column


class ResolveError(GhostTraceError):
    def __init__(self, message: str, loc):
        super().__init__(f"{loc}: {message}")
        self.message = message
        self.loc = loc


class AlreadyTransformed(GhostTraceError):
    pass


class ValidationFailure(GhostTraceError):
    """A causality trace violates one of the trace-shape properties."""

    def __init__(self, prop: str, index: int, message: str):
        super().__init__(f"property ({prop}) violated at link {index}: {message}")
        self.prop = prop
        self.index = index
