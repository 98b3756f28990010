import pytest

from sirslab.graphs import gen_random_regular
from sirslab.spectral import certify_expander

ACCEPTANCE_COUNT = 14
_results: dict[int, list] = {}


@pytest.fixture
def criterion():
    """Record the outcome of one acceptance criterion for the end-of-run table."""

    def record(number: int, passed: bool, detail: str = "") -> bool:
        _results.setdefault(number, []).append((bool(passed), detail))
        return bool(passed)

    return record


@pytest.fixture(scope="session")
def expander():
    G = gen_random_regular(2000, 50, 1)
    return G, certify_expander(G, 50, 0.0)


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for k in range(1, ACCEPTANCE_COUNT + 1):
        parts = _results.get(k)
        if not parts:
            tr.write_line(f"criterion {k:2d}: NOT RUN")
            continue
        ok = all(p for p, _ in parts)
        detail = "; ".join(d for _, d in parts if d)
        tr.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
