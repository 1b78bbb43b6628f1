import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from leadsteer.leadfield import system_from_matrices

settings.register_profile(
    "leadsteer", deadline=None, max_examples=60,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)
settings.load_profile("leadsteer")


def random_system(rng, k=4, m=5, n1=1, scale=1.0):
    """Dense random reduced system with a nonzero target."""
    l1 = rng.normal(size=(n1, k)) * scale
    l2 = rng.normal(size=(m, k)) * scale
    x1 = rng.uniform(0.5, 2.0, size=n1)
    return system_from_matrices(l1, l2, x1)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_CRITERIA: dict[int, tuple[str, str]] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or (rep.when != "call" and not rep.failed):
        return
    n = marker.args[0]
    detail = dict(item.user_properties).get("detail", "")
    if rep.failed:
        _CRITERIA[n] = ("FAIL", detail or f"{rep.when} failed")
    elif rep.when == "call" and n not in _CRITERIA:
        _CRITERIA[n] = ("PASS", detail)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for n in sorted(_CRITERIA):
        status, detail = _CRITERIA[n]
        terminalreporter.write_line(f"criterion {n}: {status}  {detail}".rstrip())
