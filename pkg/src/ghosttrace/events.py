"""Method call/return event logs recorded during interpretation."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

CALL = "call"
RETURN = "return"

# qualified-name prefix of the injected helpers
HELPER_CLASS = "NullDetector"

# payload of a return event for a frame left by an escaping NPE
EXCEPTIONAL = "!NullPointerException"


@dataclass(frozen=True)
class ExecutionEvent:
    seq: int
    kind: str  # CALL | RETURN
    method: str  # "Class#method"
    payload: str

    def key(self) -> tuple[str, str, str]:
        """The part compared between runs (seq is positional)."""
        return (self.kind, self.method, self.payload)

    def to_tsv(self) -> str:
        return f"{self.seq}\t{self.kind}\t{self.method}\t{self.payload}"


@dataclass
class EventLog:
    events: list[ExecutionEvent] = field(default_factory=list)
    program_id: str = ""
    mode: str = "original"
    outcome: Optional[object] = None  # RunResult outcome, attached by the harness

    def record(self, kind: str, method: str, payload: str):
        self.events.append(ExecutionEvent(len(self.events), kind, method, payload))

    def __len__(self) -> int:
        return len(self.events)

    def __iter__(self):
        return iter(self.events)

    def to_tsv(self) -> str:
        return "".join(ev.to_tsv() + "\n" for ev in self.events)

    @classmethod
    def from_tsv(cls, text: str, program_id: str = "", mode: str = "original") -> "EventLog":
        log = cls(program_id=program_id, mode=mode)
        for line in text.splitlines():
            if not line:
                continue
            seq, kind, method, payload = line.split("\t", 3)
            log.events.append(ExecutionEvent(int(seq), kind, method, payload))
        return log

    def is_nested(self) -> bool:
        """Every return closes the most recent open call of the same method."""
        stack: list[str] = []
        last = -1
        for ev in self.events:
            if ev.seq <= last:
                return False
            last = ev.seq
            if ev.kind == CALL:
                stack.append(ev.method)
            elif ev.kind == RETURN:
                if not stack or stack.pop() != ev.method:
                    return False
            else:
                return False
        return not stack
