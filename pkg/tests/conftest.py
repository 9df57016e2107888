import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from bim2brick.pipeline import RunConfig, convert  # noqa: E402
from bim2brick.synthetic import DEFAULT_ORIGIN, DEFAULT_ROTATION, plan_layout, write_fixture  # noqa: E402

ACCEPTANCE_RESULTS: dict[int, tuple[bool, str]] = {}


@pytest.fixture(scope="session")
def sde4_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("sde4")
    write_fixture(d)
    return d


@pytest.fixture(scope="session")
def sde4_layout():
    return plan_layout()


def run_config(directory, mode="digital-twin", out="out.ttl", **kw) -> RunConfig:
    directory = Path(directory)
    lat, lon, alt = DEFAULT_ORIGIN
    return RunConfig(
        ifc_path=str(directory / "model.ifc"), occupants_path=str(directory / "occupants.csv"),
        mode=mode, out_path=str(directory / out), origin_lat=lat, origin_lon=lon,
        origin_alt=alt, rotation_deg=DEFAULT_ROTATION, **kw)


@pytest.fixture(scope="session")
def sde4_runs(sde4_dir):
    return {m: convert(run_config(sde4_dir, m)) for m in ("people", "bms", "digital-twin")}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_RESULTS):
        ok, label = ACCEPTANCE_RESULTS[number]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {label}")
