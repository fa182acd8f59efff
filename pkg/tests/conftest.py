import sys
from collections import OrderedDict
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

# criterion -> list of (part, ok, detail); filled by test_acceptance.py
ACCEPTANCE: "OrderedDict[int, list]" = OrderedDict()


def record(criterion: int, part: str, ok: bool, detail: str) -> None:
    ACCEPTANCE.setdefault(criterion, []).append((part, bool(ok), detail))


@pytest.fixture(scope="session", autouse=True)
def _warm_jit():
    # compile (or load cached) kernels once so timed tests measure integration only
    from forel import integrate, matching_pennies
    g = matching_pennies()
    for kind in ("entropic", "euclidean"):
        integrate(g, kind, [0.1, 0.0, 0.0, 0.0], 0.01, 1e-3)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for crit in sorted(ACCEPTANCE):
        parts = ACCEPTANCE[crit]
        ok = all(p[1] for p in parts)
        detail = "; ".join(f"{p[0]}: {'ok' if p[1] else 'FAIL'} ({p[2]})" for p in parts)
        terminalreporter.write_line(f"criterion {crit:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
