import numpy as np
import pytest
from hypothesis import settings

from amrvox.amr import g3_dataset
from amrvox.levels import BuildConfig, build_levels
from amrvox.render import Camera, ShaderConfig, TransferFunction

settings.register_profile("default", deadline=None, max_examples=25)
settings.load_profile("default")

# G3 spans world [-V0, 1 - V0] with V0 = 1/8
G3_CENTRE = 0.375


@pytest.fixture
def g3():
    return g3_dataset()


@pytest.fixture
def g3_pairs(g3):
    return build_levels(g3, BuildConfig())


@pytest.fixture
def const_shader():
    return ShaderConfig(TransferFunction.constant(0.5), extinction_scale=2.0)


def view(width=32, height=32, vfov=40.0):
    c = np.full(3, G3_CENTRE)
    eye = c + np.array([0.35, 0.45, -2.4])
    return Camera(tuple(eye), tuple(c), vfov=vfov, width=width, height=height)


_ACCEPTANCE_LINES = []


@pytest.fixture
def record():
    """Collect a one-line PASS/FAIL verdict for the terminal summary."""

    def _record(number: int, ok: bool, detail: str):
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        _ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return _record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
