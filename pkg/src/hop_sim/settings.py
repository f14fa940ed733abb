import os

import pydantic_settings

from hop_sim.types import LogLevel


class Settings(pydantic_settings.BaseSettings):
    model_config = pydantic_settings.SettingsConfigDict(env_prefix="HOP_SIM_")

    log_level: LogLevel = LogLevel.info

    seed: int = 0
    threads: int | None = None

    # SDE integration
    dt: float = 1e-3
    paths: int = 20000
    block_size: int = 1024
    substep_factor: int = 2
    max_substep_depth: int = 20
    separation_floor: float = 1e-9

    # deterministic numerics
    fd_step: float = 1e-3
    ode_tol: float = 1e-9

    # verification
    bias_budget: float = 1e-4

    @property
    def worker_count(self) -> int:
        """Resolve the worker pool size.

        Returns:
            int: configured thread count, or the CPUs available to this process
        """
        if self.threads is not None:
            return max(1, self.threads)
        try:
            return len(os.sched_getaffinity(0))
        except AttributeError:
            return os.cpu_count() or 1
