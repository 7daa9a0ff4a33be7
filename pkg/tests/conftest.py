import contextlib
import datetime as dt

import numpy as np
import pytest

from solarcast.series import Resolution, TimeSeries

_CRITERIA: list = []


@contextlib.contextmanager
def criterion(label: str):
    """Record a PASS/FAIL line for an acceptance criterion, re-raising failures."""
    try:
        yield
    except pytest.skip.Exception:
        _CRITERIA.append(("SKIP", label))
        raise
    except BaseException as exc:
        _CRITERIA.append(("FAIL", f"{label} -- {type(exc).__name__}: {str(exc).splitlines()[0] if str(exc) else ''}"))
        raise
    else:
        _CRITERIA.append(("PASS", label))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for status, label in _CRITERIA:
        terminalreporter.write_line(f"{status:4s}  {label}")


def make_series(values, start="2006-03-15T10:00", step_min=5, resolution=Resolution.FIVE_MINUTE):
    values = np.asarray(values, dtype=float)
    t0 = np.datetime64(start, "m")
    stamps = t0 + np.arange(values.size) * np.timedelta64(step_min, "m")
    return TimeSeries(stamps, values, resolution)


@pytest.fixture
def write_csv_text(tmp_path):
    def _write(text, name="data.csv"):
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path

    return _write
