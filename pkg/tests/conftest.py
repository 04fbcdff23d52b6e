import numpy as np
import pytest

from polsarinfo.synth import default_scene_spec, derive_regions, generate_scene


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def default_scene():
    """The default 128x128 4-look scene (seed 0) with its derived regions."""
    spec = default_scene_spec(seed=0)
    img, labels = generate_scene(spec)
    return spec, img, labels, derive_regions(spec)


ACCEPTANCE_LINES = []


@pytest.fixture
def criterion():
    """Record and print one PASS/FAIL line, then assert."""

    def report(number, title, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'}  criterion {number:<3} {title}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
