import sys
from functools import lru_cache
from itertools import product

import pytest

from endurq import _pykernels

try:
    from endurq import _kernels
except ImportError:  # extension not built
    _kernels = None

BACKENDS = [_pykernels] + ([_kernels] if _kernels is not None else [])


@pytest.fixture(params=BACKENDS, ids=lambda m: m.__name__.rsplit(".", 1)[-1])
def backend(request):
    return request.param


def naive_ackermann(m, n):
    """Textbook three-case recursion, no shortcuts."""
    sys.setrecursionlimit(max(sys.getrecursionlimit(), 20000))

    @lru_cache(maxsize=None)
    def a(m, n):
        if m == 0:
            return n + 1
        if n == 0:
            return a(m - 1, 1)
        return a(m - 1, a(m, n - 1))

    return a(m, n)


def brute_g(demands, N):
    """Sum of demand products over every state of population N."""
    total = 0.0
    for state in product(range(N + 1), repeat=len(demands)):
        if sum(state) == N:
            w = 1.0
            for d, c in zip(demands, state):
                w *= d**c
            total += w
    return total


ACCEPTANCE_RESULTS = []


@pytest.fixture
def criterion(request):
    """Record one acceptance criterion's outcome for the end-of-run summary."""
    holder = {}

    def register(number, text):
        holder["id"] = (number, text)

    yield register
    rep = getattr(request.node, "rep_call", None)
    ok = rep is not None and rep.passed
    if "id" in holder:
        ACCEPTANCE_RESULTS.append((*holder["id"], ok))


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.rep_call = rep


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, text, ok in sorted(ACCEPTANCE_RESULTS):
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {number:>2}. {text}")
