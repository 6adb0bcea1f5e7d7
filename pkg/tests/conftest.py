import os
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from ifstile.centralset import estimate_central_set  # noqa: E402
from ifstile.specfile import load_spec  # noqa: E402

GOLDEN = Path(__file__).parent / "golden"
REGEN = os.environ.get("IFSTILE_REGEN_GOLDEN") == "1"


@pytest.fixture(scope="session")
def specs():
    names = ["dyadic-1d", "square-4map", "sierpinski", "golden", "quartic", "fern", "crack", "newgrowth"]
    return {n: load_spec(n) for n in names}


@pytest.fixture(scope="session")
def sierpinski_256():
    return estimate_central_set(load_spec("sierpinski"), resolution=256, cloud_size=200_000, seed=0)


@pytest.fixture(scope="session")
def dyadic_central():
    return estimate_central_set(load_spec("dyadic-1d"), resolution=2048, seed=0)


def golden_path(name: str) -> Path:
    return GOLDEN / name


def check_golden(name: str, data: bytes):
    """Compare with tests/golden/<name>; IFSTILE_REGEN_GOLDEN=1 rewrites it."""
    path = golden_path(name)
    if REGEN or not path.exists():
        if not REGEN:
            pytest.fail(f"missing golden file {path}; rerun with IFSTILE_REGEN_GOLDEN=1")
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(data)
    assert path.read_bytes() == data, f"output differs from golden file {name}"


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not getattr(mod, "RESULTS", None):
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[k])
