import pytest

from bdg import GridSpec, PhysicalParams, standard_setup


@pytest.fixture(scope="session")
def small_params():
    return PhysicalParams(h=0.25)


@pytest.fixture(scope="session")
def small_grid():
    # K = 32 * 4 * 4 = 512
    return GridSpec(n_period=4, m_density=32, h=0.25)


@pytest.fixture(scope="session")
def small_setup(small_params, small_grid):
    return standard_setup(small_params, small_grid)


ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def acceptance_log():
    """Collects one summary line per acceptance criterion."""

    def log(criterion, ok, detail):
        line = f"criterion {criterion:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print("\n" + line)
        return ok

    return log


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
