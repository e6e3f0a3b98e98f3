import pathlib

import pytest

import snapjet

DATA_DIR = pathlib.Path(snapjet.__file__).parent / "data"
TRACE_DIR = DATA_DIR / "traces"


@pytest.fixture
def data_dir() -> pathlib.Path:
    return DATA_DIR


@pytest.fixture
def trace_dir() -> pathlib.Path:
    return TRACE_DIR


def trace_files(direction: str) -> list[pathlib.Path]:
    files = sorted(TRACE_DIR.glob(f"{direction}_trial*.csv"))
    assert len(files) == 3, f"expected 3 shipped {direction} trials"
    return files
