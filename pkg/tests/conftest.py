import numpy as np
import pytest

from hotspot_topics.data import ObservationRecord, SampleDistribution


def random_records(rng, n, V, extent_m=30000.0, n_times=1):
    """Random records scattered over a small square; integer-ish times."""
    out = []
    for j in range(n):
        out.append(ObservationRecord(
            int(rng.integers(V)),
            float(rng.integers(n_times) * 600.0),
            float(rng.uniform(0, extent_m)),
            float(rng.uniform(0, extent_m)),
            j,
        ))
    return out


def random_samples(rng, n, V, max_count=20, t0=0.0):
    out = []
    for j in range(n):
        counts = rng.integers(0, max_count, size=V)
        if counts.sum() == 0:
            counts[rng.integers(V)] = 1
        loc = (t0 + 600.0 * j, float(rng.uniform(0, 50000)), float(rng.uniform(0, 50000)))
        out.append(SampleDistribution(j, loc, counts))
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# ---- acceptance summary -------------------------------------------------------

ACCEPTANCE_RESULTS: list = []


def record_criterion(name: str, passed, detail: str = ""):
    """``passed`` is True, False, or None for a skipped criterion."""
    ACCEPTANCE_RESULTS.append((name, passed, detail))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in ACCEPTANCE_RESULTS:
        status = "SKIP" if passed is None else ("PASS" if passed else "FAIL")
        line = f"{status}  {name}"
        terminalreporter.write_line(f"{line}: {detail}" if detail else line)
