"""Shared fixtures and the acceptance summary printer."""

import sys

import numpy as np
import pytest

from mpholo.field import OpticalConfig


@pytest.fixture
def rng():
    return np.random.default_rng(20240814)


@pytest.fixture
def optical_64():
    return OpticalConfig(wavelength=639e-9, height=64, width=64)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Echo one line per acceptance criterion, outside pytest's capture."""
    module = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    results = getattr(module, "RESULTS", None) if module else None
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for index, title, ok, detail in sorted(results):
        verdict = "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"criterion {index:2d} {title:<34s} {verdict}  {detail}")
