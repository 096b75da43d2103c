import os
import time
import subprocess
import sys
from pathlib import Path

import pytest

from verexp.constraints import Builder, check_satisfied
from verexp.params import DEFAULT_P, ProtocolParams

FIXTURES = Path(__file__).parent / "fixtures"
TWO_LN2 = "2*ln(2)"


def small_params(m=2, n=3, epsilon=TWO_LN2, method="setk", l=3, bit_width=16):
    return ProtocolParams(range=tuple(range(n)), m=m, epsilon=epsilon, method=method, l=l, bit_width=bit_width)


def gadget(fn, *values, p=DEFAULT_P):
    """Build ``fn(b, *vars)`` with private input wires; returns (out value, cs, witness, out var)."""
    b = Builder(p)
    xs = [b.alloc(v) for v in values]
    out = fn(b, *xs)
    cs, w = b.finish()
    return out, cs, w


def satisfied(cs, w):
    return check_satisfied(cs, w)


def run_cli(*args, env=None, timeout=120):
    full_env = dict(os.environ)
    full_env.pop("VEREXP_BOARD", None)
    full_env.update(env or {})
    return subprocess.run(
        [sys.executable, "-m", "verexp", *map(str, args)],
        capture_output=True,
        text=True,
        env=full_env,
        timeout=timeout,
    )


@pytest.fixture
def params():
    return small_params()


SESSION_START = time.perf_counter()


def pytest_collection_modifyitems(items):
    # acceptance runs last so the suite wall-clock criterion sees every other test
    items.sort(key=lambda item: item.fspath.basename == "test_acceptance.py")

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for text in ACCEPTANCE_LINES:
            terminalreporter.write_line(text)
        terminalreporter.write_line(f"session wall-clock {time.perf_counter() - SESSION_START:.0f}s")
