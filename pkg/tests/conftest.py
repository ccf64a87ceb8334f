import os
import sys

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))  # for ``import oracles``

settings.register_profile("default", deadline=None, max_examples=150,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


# ---------------------------------------------------------------------------
# acceptance criteria: one verdict line per criterion in the terminal summary

class Criterion:
    def __init__(self, number: int, title: str):
        self.number = number
        self.title = title
        self.notes: list[str] = []
        self.details: list[str] = []

    def note(self, text: str) -> None:
        """A measured value shown on the verdict line."""
        self.notes.append(text)

    def detail(self, text: str) -> None:
        """Longer output (tables) printed under the verdicts."""
        self.details.append(text)


_RESULTS: dict[int, list[tuple[Criterion, bool, str]]] = {}


@pytest.fixture
def criterion(request) -> Criterion:
    marker = request.node.get_closest_marker("criterion")
    c = Criterion(*marker.args)
    request.node._criterion = c
    return c


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    c = getattr(item, "_criterion", None)
    if c is None or rep.when == "teardown" or (rep.when == "setup" and rep.passed):
        return
    why = ""
    if rep.failed:
        why = str(call.excinfo.value).splitlines()[0] if call.excinfo else "failed"
    _RESULTS.setdefault(c.number, []).append((c, rep.passed, why))


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(_RESULTS):
        parts = _RESULTS[n]
        ok = all(p for _, p, _ in parts)
        title = parts[0][0].title
        notes = "; ".join(x for c, _, _ in parts for x in c.notes)
        why = "; ".join(w for _, p, w in parts if not p)
        line = f"criterion {n:2d} {'PASS' if ok else 'FAIL'}  {title}"
        if notes:
            line += f"  [{notes}]"
        if why:
            line += f"  failure: {why}"
        tr.write_line(line)
    for n in sorted(_RESULTS):
        for c, _, _ in _RESULTS[n]:
            for d in c.details:
                tr.write_line(f"\ncriterion {n} detail:\n{d}")
