import numpy as np
import pytest

from qcslp.net import builtin_network


@pytest.fixture(scope="session")
def corridor():
    return builtin_network("corridor")


@pytest.fixture(scope="session")
def illinois():
    return builtin_network("illinois")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_state(rng, k):
    v = rng.normal(size=1 << k) + 1j * rng.normal(size=1 << k)
    return v / np.linalg.norm(v)


# -- acceptance summary: one line per criterion ------------------------------------

_acceptance: dict[int, tuple[str, bool]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): numbered acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None or rep.when != "call" and not rep.failed:
        return
    number, title = marker.args
    ok = rep.passed if rep.when == "call" else False
    prev = _acceptance.get(number, (title, True))[1]
    _acceptance[number] = (title, prev and ok)


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_acceptance):
        title, ok = _acceptance[number]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title}")
