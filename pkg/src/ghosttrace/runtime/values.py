"""Runtime value universe.

Python ``None`` is the real null, Python ``int``/``bool`` are the primitives.
Reference values compare by identity.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from ..trace import CausalityTrace


class _Void:
    def __repr__(self) -> str:
        return "void"


VOID = _Void()


@dataclass(eq=False)
class Obj:
    cls: str
    fields: dict = field(default_factory=dict)
    oid: int = 0

    def __repr__(self) -> str:
        return f"<{self.cls}@{self.oid}>"


@dataclass(eq=False)
class BoxedInt:
    value: Optional[int]  # None: an IntBox with no integer, unboxes like null

    def __repr__(self) -> str:
        return f"IntBox({self.value})"


@dataclass(eq=False)
class Ghost:
    """A null that remembers how it got here."""

    haunted: str
    trace: CausalityTrace = field(default_factory=CausalityTrace)

    def __repr__(self) -> str:
        return f"Ghost({self.haunted}, {'-'.join(self.trace.kinds())})"


def is_nullish(v) -> bool:
    return v is None or isinstance(v, Ghost)


def render(v) -> str:
    """Deterministic text of a value; ghosts are indistinguishable from null."""
    if v is None or isinstance(v, Ghost):
        return "null"
    if v is True:
        return "true"
    if v is False:
        return "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, BoxedInt):
        return "null" if v.value is None else str(v.value)
    if isinstance(v, Obj):
        return f"<{v.cls}@{v.oid}>"
    if v is VOID:
        return "void"
    raise TypeError(f"not a MiniLang value: {v!r}")
