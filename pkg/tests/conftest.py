import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import settings

from wellfill.wells import PROPERTIES, CoordSystem, PropertyKind, WellLog

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

FIXTURES = Path(__file__).parent / "fixtures"


def make_well(name="W-1", n=200, step=0.15, start=1000.0, missing=None, seed=0, x=None, y=None,
              coord_system=None):
    """Smooth, fully measured curves; ``missing`` maps a property to rows to blank."""
    rng = np.random.default_rng(seed)
    t = np.arange(n) * step
    curves = {
        PropertyKind.NPHI: 0.25 + 0.05 * np.sin(t / 7.0) + 0.002 * rng.standard_normal(n),
        PropertyKind.GR: 70.0 + 15.0 * np.cos(t / 11.0) + 0.5 * rng.standard_normal(n),
        PropertyKind.RHOB: 2.4 + 0.1 * np.sin(t / 5.0 + 1.0) + 0.005 * rng.standard_normal(n),
        PropertyKind.VP: 90.0 + 8.0 * np.sin(t / 9.0 + 2.0) + 0.3 * rng.standard_normal(n),
    }
    for kind, rows in (missing or {}).items():
        curves[kind][np.asarray(list(rows), dtype=np.int64)] = math.nan
    if x is not None and coord_system is None:
        coord_system = CoordSystem.PROJECTED
    return WellLog.from_grid(name, start, step, curves, x=x, y=y, coord_system=coord_system)


@pytest.fixture
def fixtures_dir():
    return FIXTURES


@pytest.fixture
def small_well():
    return make_well()


@pytest.fixture(scope="session")
def standard_corpus():
    from wellfill.synth import generate, preset
    return generate(preset("standard", n_wells=4, extent=600.0, step=0.5, seed=3))


def coincidence_fixture():
    """A well whose gap components have orders 1/2/3/4 in counts 83/14/1/2.

    Clusters sit 40 m apart; inside a cluster, starts differ by up to 8 m and
    spans by up to 8%, and one order-3 cluster is only connected through a chain.
    """
    step = 0.1
    n_clusters = 100
    n = int(n_clusters * 40 / step) + 200
    curves = {k: np.linspace(1.0, 2.0, n) for k in PROPERTIES}
    orders = [1] * 83 + [2] * 14 + [3] * 1 + [4] * 2
    # deterministic interleaving so orders are spread along the well
    layout = sorted(range(n_clusters), key=lambda i: (i * 37) % n_clusters)
    for slot, i in enumerate(layout):
        order = orders[i]
        base = 100 + int(slot * 40 / step)
        for j in range(order):
            kind = PROPERTIES[(i + j) % 4]
            if order == 3:
                offset = j * 80  # 8 m hops: first and last are 16 m apart, linked via the middle gap
                rows = 30
            else:
                offset = j * (20 + 10 * (i % 3))  # 2-4 m start differences
                rows = 30 - j  # spans 3.0, 2.9, 2.8, 2.7 m
            curves[kind][base + offset: base + offset + rows] = math.nan
    well = WellLog.from_grid("COINCIDE", 500.0, step, curves)
    return well, {1: 83, 2: 14, 3: 1, 4: 2}


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
