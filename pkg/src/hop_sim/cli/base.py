"""
Shared command-line plumbing: global flags, config files and option resolution.

Precedence for every option: command-line flag > config file > environment
(``HOP_SIM_*``) > default.
"""

import argparse
import logging
import math
from collections.abc import Sequence
from pathlib import Path
from typing import Any

import numpy as np
from dotenv import dotenv_values
from pydantic import field_validator

from hop_sim.exceptions import ConfigurationError, ParameterError
from hop_sim.models import equispaced_configuration, zero_configuration
from hop_sim.schemas import Base, ModelSpec, MonteCarloParams, parse_kappa
from hop_sim.settings import Settings
from hop_sim.types import LogLevel, ModelKind, OutputFormat, RealArray

logger = logging.getLogger(__name__)

# argparse destinations that are not options
_INTERNAL = {"config", "command", "handler"}
# flags whose comma-list value may start with a minus sign
_LIST_FLAGS = ("--x0", "--y", "--times")


def global_flags() -> argparse.ArgumentParser:
    """Parent parser with the flags shared by every subcommand.

    Defaults are None so that unset flags fall through to the config file.
    """
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument("--config", help="key=value file, overridden by flags")
    parser.add_argument("--model", choices=[kind.value for kind in ModelKind])
    parser.add_argument("--N", dest="N", type=int)
    parser.add_argument("--kappa", help="coupling, a float or 'inf'")
    parser.add_argument("--k", help="type-A multiplicity, alias of --kappa")
    parser.add_argument("--p", type=float)
    parser.add_argument("--q", type=float)
    parser.add_argument("--x0", help="comma list, 'zero' or 'equispaced'")
    parser.add_argument("--t", type=float)
    parser.add_argument("--times", help="comma list of times")
    parser.add_argument("--dt", type=float)
    parser.add_argument("--paths", type=int)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--threads", type=int)
    parser.add_argument("--block-size", type=int)
    parser.add_argument("--out")
    parser.add_argument("--format", choices=[fmt.value for fmt in OutputFormat])
    parser.add_argument("--log-level", choices=[level.value for level in LogLevel])
    return parser


def attach_list_values(argv: Sequence[str]) -> list[str]:
    """Join list flags with their value (``--x0 -1,3`` to ``--x0=-1,3``).

    argparse takes a separate value such as ``-1,3`` for an unknown option and rejects it.
    """
    joined: list[str] = []
    tokens = iter(argv)
    for token in tokens:
        if token in _LIST_FLAGS:
            value = next(tokens, None)
            joined.append(token if value is None else f"{token}={value}")
        else:
            joined.append(token)
    return joined


def load_config(path: str | None) -> dict[str, str]:
    """Read a dotenv-style key=value file; keys use flag names without dashes."""
    if path is None:
        return {}
    config_path = Path(path)
    if not config_path.is_file():
        raise ConfigurationError(f"config file {path} not found")
    values = dotenv_values(config_path)
    return {key.replace("-", "_"): value for key, value in values.items() if value is not None}


def _float_list(raw: str | None) -> tuple[float, ...]:
    if raw is None or not raw.strip():
        return ()
    try:
        return tuple(float(part) for part in raw.split(","))
    except ValueError as e:
        raise ParameterError(f"expected a comma separated list of numbers, got {raw!r}") from e


class CliOptions(Base):
    """Resolved options of one invocation. Config-file strings are coerced by pydantic."""

    model: ModelKind | None = None
    N: int | None = None
    kappa: str | None = None
    k: str | None = None
    p: float | None = None
    q: float | None = None
    x0: str | None = None
    t: float | None = None
    times: str | None = None
    dt: float | None = None
    paths: int | None = None
    seed: int | None = None
    threads: int | None = None
    block_size: int | None = None
    out: str | None = None
    format: OutputFormat = OutputFormat.CSV
    log_level: LogLevel | None = None

    # subcommand options
    check: str | None = None
    list: bool = False
    l: str | None = None
    y: str | None = None
    t_long: float | None = None
    kappa_alt: str | None = None
    nmax: int | None = None
    method: str = "exact"
    stream: int = 0
    observable: str | None = None
    special_unitary: bool = False

    @field_validator("kappa", "k", "kappa_alt", mode="before")
    @classmethod
    def stringify(cls, v: Any) -> Any:
        return None if v is None else str(v)

    def coupling(self, default: float | None) -> float:
        raw = self.kappa if self.kappa is not None else self.k
        if raw is None:
            if default is None:
                raise ParameterError("--kappa (or --k) is required")
            return default
        try:
            return parse_kappa(raw)
        except ValueError as e:
            raise ParameterError(f"--kappa must be a number or 'inf', got {raw!r}") from e

    def model_spec(self, default_kind: ModelKind | None = None, default_kappa: float | None = 1.0) -> ModelSpec:
        kind = self.model or default_kind
        if kind is None:
            raise ParameterError("--model is required")
        if self.N is None:
            raise ParameterError("--N is required")
        kappa = self.coupling(default_kappa)
        if kind is ModelKind.NONCOMPACT_BC:
            if self.p is None or self.q is None:
                raise ParameterError("noncompactBC needs --p and --q")
            return ModelSpec.noncompact_bc(self.N, self.p, self.q, kappa)
        return ModelSpec(kind=kind, N=self.N, kappa=kappa)

    def start(self, model: ModelSpec, default: str = "zero") -> RealArray:
        raw = (self.x0 or default).strip().lower()
        if raw == "zero":
            return zero_configuration(model)
        if raw == "equispaced":
            return equispaced_configuration(model)
        values = _float_list(raw)
        if len(values) != model.N:
            raise ParameterError(f"--x0 needs {model.N} values, got {len(values)}")
        return np.asarray(values, dtype=np.float64)

    @property
    def time_grid(self) -> tuple[float, ...]:
        """--times if given, else the single time --t, else empty."""
        grid = _float_list(self.times)
        if grid:
            return grid
        return (self.t,) if self.t is not None else ()

    @property
    def y_values(self) -> tuple[float, ...]:
        return _float_list(self.y)

    @property
    def ls(self) -> tuple[int, ...]:
        return tuple(int(v) for v in _float_list(self.l))

    @property
    def alternative_kappa(self) -> float | None:
        if self.kappa_alt is None:
            return None
        value = parse_kappa(self.kappa_alt)
        if math.isinf(value):
            raise ParameterError("--kappa-alt must be finite")
        return value

    def mc_params(self, settings: Settings) -> MonteCarloParams:
        return MonteCarloParams(
            n_paths=self.paths if self.paths is not None else settings.paths,
            dt=self.dt if self.dt is not None else settings.dt,
            seed=self.seed if self.seed is not None else settings.seed,
            block_size=self.block_size if self.block_size is not None else settings.block_size,
            substep_factor=settings.substep_factor,
            max_substep_depth=settings.max_substep_depth,
            separation_floor=settings.separation_floor,
        )

    def worker_count(self, settings: Settings) -> int:
        return max(1, self.threads) if self.threads is not None else settings.worker_count


def resolve_options(args: argparse.Namespace) -> CliOptions:
    """Merge the config file under the explicitly given flags."""
    merged: dict[str, Any] = load_config(getattr(args, "config", None))
    for key, value in vars(args).items():
        if key not in _INTERNAL and value is not None:
            merged[key] = value
    logger.debug(f"Resolved options: {merged}")
    return CliOptions(**merged)
