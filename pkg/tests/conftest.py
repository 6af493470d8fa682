"""Shared fixtures and the acceptance summary printed at the end of a run."""

from __future__ import annotations

import functools

import pytest

from quasilab.coefficients import make_example_family
from quasilab.phi import build_phi
from quasilab.transform import build_transform

TEST_FAMILIES = ((0.0, 3.0), (0.5, 2.0), (0.25, 1.5))


@functools.lru_cache(maxsize=None)
def pack_for(mu: float, gamma: float, s_max: float = 1e3):
    return build_transform(make_example_family(mu, gamma), s_max=s_max)


@functools.lru_cache(maxsize=None)
def profile_for(mu: float, gamma: float, ell: float = 0.0):
    return build_phi(pack_for(mu, gamma), ell=ell, s_max=50.0)


@pytest.fixture(scope="session")
def exact_pack():
    """a = 1, f = s^-3: g is the identity and phi(s) = sqrt(2 s)."""
    return pack_for(0.0, 3.0)


_ACCEPTANCE: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("criterion")
    if marker is None or call.when not in ("setup", "call"):
        return
    number, title = marker.args
    entry = _ACCEPTANCE.setdefault(number, {"title": title, "passed": True, "detail": ""})
    if call.excinfo is not None:
        entry["passed"] = False
        msg = str(call.excinfo.value).strip().splitlines()
        entry["detail"] = msg[0][:160] if msg else call.excinfo.typename
    elif call.when == "call":
        detail = dict(item.user_properties).get("detail")
        if detail:
            entry["detail"] = detail


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        e = _ACCEPTANCE[number]
        status = "PASS" if e["passed"] else "FAIL"
        terminalreporter.write_line(f"[{status}] {number:2d}. {e['title']}: {e['detail']}")
