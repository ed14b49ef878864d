import numpy as np
import pytest

from nrcodebook.beamgrid import AntennaConfig
from nrcodebook.channel import PathSet, gen_channel


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def grid_channel(cfg, beams, delays=None, gains=None, n_rx=1, n_3=1, xpol=None):
    """Channel synthesized from on-grid beams ``(m1, m2)`` and integer delays."""
    delays = [0] * len(beams) if delays is None else delays
    paths = PathSet.on_grid(cfg, beams, delays, gains=gains, xpol=xpol)
    return gen_channel(cfg, n_rx, n_3, paths=paths)


@pytest.fixture
def cfg42():
    return AntennaConfig(4, 2, 4, 4)


def physical_beams(cfg, q1, q2):
    """Positions ``b`` in rotation (q1, q2) whose beam has a physical direction."""
    from nrcodebook.beamgrid import rotation_beam_indices

    out = []
    for b, mm in enumerate(rotation_beam_indices(cfg, q1, q2)):
        try:
            PathSet.on_grid(cfg, [mm], [0])
            out.append(b)
        except ValueError:
            pass
    return out


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion checked by the test")
    config._verdicts = {}


@pytest.fixture
def verdict(request):
    """Record one PASS/FAIL line for the test's ``criterion`` marker."""
    number, title = request.node.get_closest_marker("criterion").args
    lines = request.config._verdicts

    def record(ok: bool, detail: str = "") -> bool:
        lines[number] = f"{'PASS' if ok else 'FAIL'} {number:>2}. {title}" + (f": {detail}" if detail else "")
        print(lines[number])
        return ok

    yield record
    if number not in lines:
        record(False, "errored before a verdict")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_verdicts", {})
    if lines:
        terminalreporter.section("acceptance criteria")
        for number in sorted(lines):
            terminalreporter.write_line(lines[number])
