import numpy as np
import pytest
from hypothesis import settings

from privamp import exponents

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")


@pytest.fixture(scope="session")
def bsc_region():
    """Frontier of the uniform binary key seen through BSC(0.1), traced once."""
    from privamp.prob_types import Channel, Distribution
    from privamp.rate_region import region_boundary
    return region_boundary(Distribution.uniform(2), Channel.bsc(0.1))


def rand_probs(rng, k):
    v = rng.dirichlet(np.ones(k))
    v = np.maximum(v, 1e-9)
    v /= v.sum()
    v[-1] = 1.0 - v[:-1].sum()
    return v


# --- acceptance summary --------------------------------------------------------

ACCEPTANCE_LINES = {}


def record(key, label, passed, detail=""):
    """Register one pass/fail line; parts sharing ``key`` are merged."""
    prev = ACCEPTANCE_LINES.get(key)
    if prev is None:
        ACCEPTANCE_LINES[key] = [label, passed, [detail] if detail else []]
    else:
        prev[1] = prev[1] and passed
        if detail:
            prev[2].append(detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance summary")
    for key in sorted(ACCEPTANCE_LINES):
        label, passed, details = ACCEPTANCE_LINES[key]
        terminalreporter.write_line(f"{key:>2}. [{'PASS' if passed else 'FAIL'}] {label}"
                                    + (f" -- {'; '.join(details)}" if details else ""))
