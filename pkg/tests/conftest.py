import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from mcf_lab.model import Constant, RadialProblem

# (criterion, ok, detail) rows filled by the acceptance tests
ACCEPTANCE: list[tuple[str, bool, str]] = []

settings.register_profile(
    "default", deadline=None, max_examples=40,
    suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def make_problem(**kw):
    args = dict(n=2, R=1.0, c=Constant(3.0), f=Constant(0.0), phi_R=0.0,
                q=1.0, u0=Constant(0.0))
    args.update(kw)
    return RadialProblem(**args)


@pytest.fixture
def problem():
    return make_problem()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    groups: dict[str, list[bool]] = {}
    for name, ok, _ in ACCEPTANCE:
        groups.setdefault(name.split(" ")[0], []).append(ok)
    terminalreporter.section("acceptance criteria")
    for key in sorted(groups, key=int):
        oks = groups[key]
        verdict = "PASS" if all(oks) else "FAIL"
        terminalreporter.write_line(
            f"criterion {key}: {verdict} ({sum(oks)}/{len(oks)} checks)")
