from __future__ import annotations

import numpy as np
import pytest

from fluorosynth.chemdb import load_manifest
from fluorosynth.demo import write_demo_database
from fluorosynth.spectral import Kind, Spectrum, WavelengthGrid

_ACCEPTANCE: dict[str, tuple[str, str]] = {}


def make_spectrum(values, start=400.0, step=0.5, kind=Kind.ABSORPTION) -> Spectrum:
    values = np.asarray(values, dtype=float)
    return Spectrum(WavelengthGrid(start, step, values.size), values, kind)


@pytest.fixture(scope="session")
def demo_dir(tmp_path_factory):
    """Source manifest plus CSVs for all 14 tabulated chemicals."""
    out = tmp_path_factory.mktemp("demo14")
    write_demo_database(out, 14)
    return out


@pytest.fixture(scope="session")
def demo_manifest_11(tmp_path_factory):
    out = tmp_path_factory.mktemp("demo11")
    return write_demo_database(out, 11)


@pytest.fixture(scope="session")
def db11(demo_manifest_11):
    return load_manifest(demo_manifest_11)


@pytest.fixture(scope="session")
def db4(tmp_path_factory):
    out = tmp_path_factory.mktemp("demo4")
    return load_manifest(write_demo_database(out, 4))


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        detail = "; ".join(str(v) for k, v in report.user_properties if k == "measured")
        _ACCEPTANCE[name] = ("PASS" if report.passed else "FAIL", detail)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, (verdict, detail) in sorted(_ACCEPTANCE.items(), key=lambda kv: int(kv[0].split("_")[2])):
        terminalreporter.write_line(f"{verdict}  {name}  {detail}".rstrip())
