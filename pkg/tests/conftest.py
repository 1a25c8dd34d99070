import numpy as np
import pytest

from sandglass.geometry import Mesh
from sandglass.origami import origami_spec
from sandglass.realize import realize
from sandglass.singular import shaky_design
from sandglass.snap import snap_pair

ACCEPTANCE_LINES = pytest.StashKey[list]()


@pytest.fixture(scope="session")
def snap3():
    """n = 3 snapping design near the snappability maximum."""
    return snap_pair(3, 0.75)


@pytest.fixture(scope="session")
def snap_by_n():
    return {n: snap_pair(n, 0.7) for n in (3, 4, 5, 6)}


@pytest.fixture(scope="session")
def shaky3():
    return shaky_design(3, 0.261)


@pytest.fixture(scope="session")
def generic():
    """An origami design off the shaky locus and its first realization."""
    spec = origami_spec(3, 1.0, 1.0)
    return spec, realize(spec)[0]


def cube_mesh():
    V = np.array([[x, y, z] for x in (0, 1) for y in (0, 1) for z in (0, 1)], dtype=float)
    quads = [(0, 1, 3, 2), (4, 6, 7, 5), (0, 4, 5, 1), (2, 3, 7, 6), (0, 2, 6, 4), (1, 5, 7, 3)]
    F = []
    for a, b, c, d in quads:
        F += [(a, b, c), (a, c, d)]
    return Mesh(0, V, np.array(F), [])


def octahedron_mesh():
    V = np.array([[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1]], dtype=float)
    F = []
    for top in (4, 5):
        ring = [0, 2, 1, 3]
        for k in range(4):
            a, b = ring[k], ring[(k + 1) % 4]
            F.append((a, b, top) if top == 4 else (b, a, top))
    return Mesh(0, V, np.array(F), [])


@pytest.fixture
def cube():
    return cube_mesh()


@pytest.fixture
def octahedron():
    return octahedron_mesh()


@pytest.fixture(scope="session")
def acceptance(request):
    """report(k, ok, detail): print one PASS/FAIL line for criterion k and keep it for the summary."""
    lines = request.config.stash.setdefault(ACCEPTANCE_LINES, [])

    def report(k, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'} criterion {k}: {detail}"
        print(line)
        lines.append((k, line))
        return ok

    return report


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE_LINES, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
