import importlib.util
import os
import warnings

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

LONG = os.environ.get("BELLFACETS_LONG", "") not in ("", "0")
EXTENDED = os.environ.get("BELLFACETS_LONG", "") == "2"

# lines collected by tests/test_acceptance.py and echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def have_sdp_solver() -> bool:
    if os.environ.get("SDP_SOLVER"):
        return True
    return importlib.util.find_spec("cvxpy") is not None


def pytest_collection_modifyitems(config, items):
    skip_long = pytest.mark.skip(reason="long run: set BELLFACETS_LONG=1")
    skip_ext = pytest.mark.skip(reason="extended run: set BELLFACETS_LONG=2")
    skip_solver = pytest.mark.skip(reason="no SDP solver (install the 'sdp' extra or set SDP_SOLVER)")
    solver_ok = have_sdp_solver()
    for item in items:
        if "extended" in item.keywords and not EXTENDED:
            item.add_marker(skip_ext)
        elif "slow" in item.keywords and not LONG:
            item.add_marker(skip_long)
        if "solver" in item.keywords and not solver_ok:
            warnings.warn("SDP solver absent: solver-gated tests skipped")
            item.add_marker(skip_solver)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def bruteforce_2222():
    """Brute-force facet list of (2,2,2,2) with its wall time, computed once per session."""
    import time

    from bellfacets.facetgen import bruteforce_facets
    from bellfacets.scenario import Scenario

    t = time.time()
    sigs = bruteforce_facets(Scenario(2, 2, 2, 2))
    return sigs, time.time() - t
