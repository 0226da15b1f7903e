from pathlib import Path

import pytest

DATA_DIR = Path(__file__).resolve().parent.parent / "data"


@pytest.fixture(scope="session")
def prices_12_csv() -> Path:
    return DATA_DIR / "prices_12.csv"


@pytest.fixture(scope="session")
def prices_8_csv() -> Path:
    return DATA_DIR / "prices_8.csv"


@pytest.fixture(scope="session")
def prices_4_csv() -> Path:
    return DATA_DIR / "prices_4.csv"


@pytest.fixture()
def write_csv(tmp_path):
    def _write(text: str, name: str = "prices.csv") -> Path:
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path
    return _write
