import pytest

from hopflink.modes import BeamGeometry, hopf_link_superposition
from hopflink.topology import VolumeSpec, trace_vortex_lines

ACCEPTANCE = []


@pytest.fixture(scope="session")
def beam():
    return BeamGeometry()


@pytest.fixture(scope="session")
def link(beam):
    return hopf_link_superposition(0.0, beam)


@pytest.fixture(scope="session")
def link_report(beam, link):
    """Topology of the link state at the default 192 x 192 x 129 volume."""
    return trace_vortex_lines(link, VolumeSpec.default_for(beam))


@pytest.fixture
def acceptance(request):
    """Record one pass/fail line per acceptance criterion."""
    def record(name, passed, detail):
        ACCEPTANCE.append((name, bool(passed), detail))
        request.node.acceptance_recorded = True
        return passed
    return record


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    # a criterion whose test raised before recording still gets a FAIL line
    if (report.when == "call" and report.failed and "acceptance" in item.fixturenames
            and not getattr(item, "acceptance_recorded", False)):
        ACCEPTANCE.append((item.name, False, f"raised {call.excinfo.typename}"))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {name}: {detail}")
