from __future__ import annotations

import json
from pathlib import Path

import pytest

from ghosttrace import trace as T

ROOT = Path(__file__).resolve().parent.parent
CORPUS = ROOT / "corpus"

# Every report built anywhere in the suite has its trace validated on the
# spot, so an invalid trace fails whichever test produced it.
VALIDATED = {"traces": 0}
_post_init = T.NPEReport.__post_init__


def _checked_post_init(self):
    if self.trace is not None:
        T.validate(self.trace)
        VALIDATED["traces"] += 1
    _post_init(self)


T.NPEReport.__post_init__ = _checked_post_init

# criterion number -> (passed, detail); filled in by test_acceptance
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def load_manifest() -> dict:
    return json.loads((CORPUS / "manifest.json").read_text())


@pytest.fixture(scope="session")
def manifest():
    return load_manifest()


@pytest.fixture
def corpus_dir():
    return CORPUS


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
    terminalreporter.write_line(f"traces validated during the session: {VALIDATED['traces']}")
