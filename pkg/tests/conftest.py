import numpy as np
import pytest
from hypothesis import settings

from rcsid.signatures import Dataset, RcsSignature, default_angles

settings.register_profile("default", max_examples=50, deadline=None)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def make_sig(rcs, target_id="A", angles=None, freq=15.0, pol="VV"):
    rcs = np.asarray(rcs, dtype=float)
    angles = np.arange(rcs.size) * (360.0 / rcs.size) if angles is None else angles
    return RcsSignature(target_id, freq, pol, angles, rcs)


@pytest.fixture
def three_class_dataset():
    r = np.random.default_rng(7)
    ang = default_angles()
    sigs = [RcsSignature(name, 15.0, "VV", ang, r.exponential(scale, ang.size))
            for name, scale in (("A", 0.1), ("B", 1.0), ("C", 10.0))]
    return Dataset(tuple(sigs))


# ---- acceptance reporting: one PASS/FAIL line per criterion ------------------

_CRITERIA: dict[int, tuple[str, str]] = {}
_SPENT: dict[int, float] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): numbered acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when not in ("setup", "call"):
        return
    number, title = mark.args
    # setup time counts too: shared sweeps run in a fixture
    spent = _SPENT[number] = _SPENT.get(number, 0.0) + call.duration
    if rep.when == "call" or rep.failed:
        status = "PASS" if rep.passed else "FAIL"
        _CRITERIA[number] = (status, f"{title} ({spent:.1f} s)")


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        status, text = _CRITERIA[n]
        terminalreporter.write_line(f"criterion {n:2d}: {status}  {text}")
