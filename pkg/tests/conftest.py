import numpy as np
import pytest

from usdpc.acoustics import ProbeGeometry, TransmitPulse
from usdpc.phantom import Phantom, Region, Scatterers
from usdpc.acoustics import Medium

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def probe64():
    return ProbeGeometry(64)


@pytest.fixture(scope="session")
def probe65():
    # odd count puts an element exactly at x = 0
    return ProbeGeometry(65)


@pytest.fixture(scope="session")
def pulse():
    return TransmitPulse()


def point_phantom(points, inclusions=(), region=Region(-12, 12, 1, 50), c0=1540.0):
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    refl = pts[:, 2] if pts.shape[1] > 2 else np.ones(len(pts))
    scat = Scatterers(pts[:, 0], pts[:, 1], refl)
    return Phantom(Medium(c0), region, scat, tuple(inclusions))
