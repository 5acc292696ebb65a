import pytest

from onevstwo.psf import PointSpreadFunction, sample_gaussian_psf, validate


@pytest.fixture(scope="session")
def gaussian():
    return PointSpreadFunction.gaussian()


@pytest.fixture(scope="session")
def sampled_gaussian():
    return validate(sample_gaussian_psf(spacing=0.05, half_extent=8.0))


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
