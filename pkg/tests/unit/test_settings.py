"""
Unit tests for environment settings.
"""

from hop_sim.settings import Settings
from hop_sim.types import LogLevel


class TestSettings:
    """Test cases for Settings."""

    def test_defaults(self, settings):
        assert settings.log_level is LogLevel.info
        assert settings.block_size == 1024
        assert settings.threads is None

    def test_environment_prefix(self, settings, monkeypatch):
        # Setup
        monkeypatch.setenv("HOP_SIM_SEED", "42")
        monkeypatch.setenv("HOP_SIM_THREADS", "3")

        # Execute
        configured = Settings()

        # Verify
        assert configured.seed == 42
        assert configured.worker_count == 3

    def test_only_simulation_fields(self):
        assert "service_name" not in Settings.model_fields
