"""Interpreter, runtime values, and the null-detection helpers."""

from .interp import (
    INSTRUMENTED,
    ORIGINAL,
    GhostNPE,
    Interpreter,
    NPESignal,
    ProgramError,
    RunResult,
    eval_expr,
    interpret,
)
from .values import VOID, BoxedInt, Ghost, Obj, is_nullish, render

__all__ = [
    "INSTRUMENTED",
    "ORIGINAL",
    "GhostNPE",
    "Interpreter",
    "NPESignal",
    "ProgramError",
    "RunResult",
    "eval_expr",
    "interpret",
    "VOID",
    "BoxedInt",
    "Ghost",
    "Obj",
    "is_nullish",
    "render",
]
