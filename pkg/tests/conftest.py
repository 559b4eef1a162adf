import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from lbdinv.sensing import MeasurementCell, MeasurementPair, Pattern, PatternKind, make_pattern  # noqa: E402


def random_pattern(side, m, seed):
    """CUSTOM pattern with continuous centres and radii 0..2, some cells clipped."""
    rng = np.random.default_rng(seed)
    pairs = []
    while len(pairs) < m:
        a, b = (MeasurementCell(*np.round(rng.uniform(-0.4, side - 0.6, 2), 6), float(rng.integers(0, 3)))
                for _ in range(2))
        if a != b:
            pairs.append(MeasurementPair(a, b))
    return Pattern(PatternKind.CUSTOM, side, seed, tuple(pairs))


def small_patterns():
    """One 8x8 / M=16 pattern per kind (EX_FREAK keeps all its pairs)."""
    return {
        "BRIEF": make_pattern("BRIEF", 8, 16, 3),
        "FREAK": make_pattern("FREAK", 8, 16, 3),
        "RA_FREAK": make_pattern("RA_FREAK", 8, 16, 3),
        "EX_FREAK": make_pattern("EX_FREAK", 8, None, 3),
        "CUSTOM": random_pattern(8, 16, 3),
    }


@pytest.fixture(scope="session")
def freak512():
    return make_pattern("FREAK", 32, 512, 1)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_CRITERIA = {}


@pytest.fixture(scope="session")
def criteria_report():
    """Mapping ``criterion number -> (passed, detail)`` printed after the run."""
    return _CRITERIA


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_CRITERIA):
        passed, detail = _CRITERIA[key]
        terminalreporter.write_line(f"criterion {key}: {'PASS' if passed else 'FAIL'} ({detail})")
