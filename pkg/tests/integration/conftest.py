"""
Integration test configuration and fixtures.
"""

from pathlib import Path

import pytest

ACCEPTANCE_DIR = Path(__file__).resolve().parents[2] / "configs" / "acceptance"


@pytest.fixture
def acceptance_config():
    """Resolve an acceptance config by file name."""

    def _resolve(name: str) -> str:
        path = ACCEPTANCE_DIR / name
        assert path.is_file(), f"missing acceptance config {name}"
        return str(path)

    return _resolve
