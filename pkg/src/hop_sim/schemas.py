import math
import sys
from collections.abc import Mapping, Sequence
from typing import Any

if sys.version_info >= (3, 11):
    from typing import Self
else:
    from typing_extensions import Self

import numpy as np
import pydantic
from pydantic import BaseModel, Field, field_validator, model_validator

from hop_sim.symfunc import elementary_symmetric
from hop_sim.types import INFINITY, ModelKind, RealArray

# a check passes when every |z| stays within this many standard errors
Z_PASS = 3.0
STDERR_FLOOR = 1e-15


class Base(BaseModel):
    model_config = pydantic.ConfigDict(frozen=True)


def _format_float(value: float) -> str:
    return "inf" if math.isinf(value) else repr(float(value))


def bc_constraint_violation(N: int, p: float, q: float, kappa: float) -> str | None:
    """Describe the violated BC parameter inequality, if any.

    Returns:
        str | None: the inequality that fails, None for admissible parameters
    """
    floor = N - 1 + (0.0 if math.isinf(kappa) else 1.0 / (2.0 * kappa))
    if not p >= floor:
        return f"p >= N-1+1/(2κ) violated: p={p}, N-1+1/(2κ)={floor}"
    if not q >= p:
        return f"q >= p violated: q={q}, p={p}"
    return None


class ModelSpec(Base):
    kind: ModelKind
    N: int = Field(..., ge=2, description="number of particles")
    kappa: float = Field(..., gt=0, description="coupling, inf for the freezing limit")
    p: float | None = None
    q: float | None = None

    @model_validator(mode="after")
    def check_parameters(self) -> Self:
        if self.kind is ModelKind.NONCOMPACT_BC:
            if self.p is None or self.q is None:
                raise ValueError("noncompactBC requires p and q")
            violation = bc_constraint_violation(self.N, self.p, self.q, self.kappa)
            if violation:
                raise ValueError(violation)
        elif self.p is not None or self.q is not None:
            raise ValueError(f"p and q do not apply to {self.kind}")
        return self

    @classmethod
    def compact_a(cls, N: int, k: float) -> "ModelSpec":
        return cls(kind=ModelKind.COMPACT_A, N=N, kappa=k)

    @classmethod
    def noncompact_a(cls, N: int, k: float) -> "ModelSpec":
        return cls(kind=ModelKind.NONCOMPACT_A, N=N, kappa=k)

    @classmethod
    def noncompact_bc(cls, N: int, p: float, q: float, kappa: float) -> "ModelSpec":
        return cls(kind=ModelKind.NONCOMPACT_BC, N=N, kappa=kappa, p=p, q=q)

    @property
    def k(self) -> float:
        return self.kappa

    @property
    def is_frozen(self) -> bool:
        return math.isinf(self.kappa)

    @property
    def noise_scale(self) -> float:
        """Brownian coefficient sqrt(2/κ) of the renormalized SDE."""
        return 0.0 if self.is_frozen else math.sqrt(2.0 / self.kappa)

    @property
    def k02(self) -> float:
        if self.kind is not ModelKind.NONCOMPACT_BC or self.p is None:
            raise AttributeError("k02 is defined for noncompactBC only")
        shift = 0.0 if self.is_frozen else 1.0 / (2.0 * self.kappa)
        return self.p - (self.N - 1) - shift

    def with_kappa(self, kappa: float) -> "ModelSpec":
        return ModelSpec(**(self.model_dump() | {"kappa": kappa}))

    def to_record(self) -> dict[str, str]:
        """Flat key=value record, kappa written as ``inf`` in the freezing limit."""
        record = {"kind": self.kind.value, "N": str(self.N), "kappa": _format_float(self.kappa)}
        if self.kind.is_type_a:
            record["k"] = record["kappa"]
        else:
            record["p"] = _format_float(self.p or 0.0)
            record["q"] = _format_float(self.q or 0.0)
        return record

    @classmethod
    def from_record(cls, record: Mapping[str, str | None]) -> "ModelSpec":
        raw_kappa = record.get("kappa") or record.get("k")
        if raw_kappa is None:
            raise ValueError("record needs kappa or k")
        p, q = record.get("p"), record.get("q")
        return cls(
            kind=ModelKind(record["kind"]),
            N=int(record["N"] or 0),
            kappa=parse_kappa(raw_kappa),
            p=float(p) if p not in (None, "") else None,
            q=float(q) if q not in (None, "") else None,
        )


def parse_kappa(raw: str | float) -> float:
    if isinstance(raw, str) and raw.strip().lower() in ("inf", "infinity", "∞"):
        return INFINITY
    return float(raw)


class Partition(Base):
    parts: tuple[int, ...]

    @field_validator("parts")
    @classmethod
    def validate_parts(cls, v: tuple[int, ...]) -> tuple[int, ...]:
        if any(part < 0 for part in v):
            raise ValueError("partition parts must be non-negative")
        if any(a < b for a, b in zip(v, v[1:], strict=False)):
            raise ValueError("partition parts must be non-increasing")
        return v

    @classmethod
    def ones(cls, n: int, N: int) -> "Partition":
        return cls(parts=(1,) * n + (0,) * (N - n))

    def padded(self, N: int) -> tuple[int, ...]:
        if len(self.parts) > N:
            raise ValueError(f"partition of length {len(self.parts)} exceeds N={N}")
        return self.parts + (0,) * (N - len(self.parts))


class SdeConfig(Base):
    dt: float = Field(1e-3, gt=0)
    t_end: float = Field(..., ge=0)
    substep_factor: int = Field(2, ge=2)
    max_substep_depth: int = Field(20, ge=0, le=60)
    seed: int = Field(0, ge=0, lt=2**64)
    record_stride: int | None = Field(None, ge=1)
    block_size: int = Field(1024, ge=1)
    separation_floor: float = Field(1e-9, gt=0)
    noise_coarsening: int = Field(1, ge=1)

    @model_validator(mode="after")
    def check_grid(self) -> Self:
        if self.t_end > 0 and self.dt > self.t_end:
            raise ValueError(f"dt={self.dt} exceeds t_end={self.t_end}")
        steps = round(self.t_end / self.dt)
        if abs(steps * self.dt - self.t_end) > 1e-9 * max(1.0, self.t_end):
            raise ValueError(f"t_end={self.t_end} is not a multiple of dt={self.dt}")
        return self

    @property
    def n_steps(self) -> int:
        return round(self.t_end / self.dt)

    @property
    def stride(self) -> int:
        """Recording stride, by default keeping at most 4096 states per path."""
        if self.record_stride is not None:
            return self.record_stride
        return max(1, math.ceil(self.n_steps / 4095))

    def recorded_steps(self) -> np.ndarray:
        steps = np.arange(0, self.n_steps + 1, self.stride)
        if steps[-1] != self.n_steps:
            steps = np.append(steps, self.n_steps)
        return steps


class MonteCarloParams(Base):
    n_paths: int = Field(20000, ge=1)
    dt: float = Field(1e-3, gt=0)
    seed: int = Field(0, ge=0, lt=2**64)
    block_size: int = Field(1024, ge=1)
    substep_factor: int = Field(2, ge=2)
    max_substep_depth: int = Field(20, ge=0, le=60)
    separation_floor: float = Field(1e-9, gt=0)

    def sde_config(self, t_end: float, dt: float | None = None, noise_coarsening: int = 1) -> SdeConfig:
        step = self.dt if dt is None else dt
        # snap t_end onto the step grid
        t_grid = round(t_end / step) * step
        return SdeConfig(
            dt=step,
            t_end=t_grid,
            substep_factor=self.substep_factor,
            max_substep_depth=self.max_substep_depth,
            seed=self.seed,
            block_size=self.block_size,
            separation_floor=self.separation_floor,
            noise_coarsening=noise_coarsening,
        )


class CheckRequest(Base):
    """Inputs of one named verification check; unset fields take the check's defaults."""

    model: ModelSpec
    x0: tuple[float, ...] | None = None
    times: tuple[float, ...] = ()
    ls: tuple[int, ...] = ()
    y_values: tuple[float, ...] = ()
    t_long: float = Field(10.0, gt=0)
    kappa_alt: float | None = Field(None, gt=0)
    n_max: int | None = Field(None, ge=0)
    mc: MonteCarloParams = Field(default_factory=MonteCarloParams)


class McEstimate(Base):
    mean_re: float
    mean_im: float = 0.0
    stderr: float = Field(..., ge=0)
    n_paths: int = Field(..., ge=0)
    # pieces of the run that took a capped drift inside the collision layer
    capped_pieces: int = Field(0, ge=0)

    @property
    def mean(self) -> complex:
        return complex(self.mean_re, self.mean_im)


class CoeffTable(Base):
    """Expansion H_{λ(n)} = Σ_l c[n][l]·e_l∘cosh, normalized by H_{λ(n)}(0) = 1."""

    N: int = Field(..., ge=2)
    p: float
    q: float
    n_max: int = Field(..., ge=0)
    c: tuple[tuple[float, ...], ...]

    @model_validator(mode="after")
    def check_triangular(self) -> Self:
        if self.n_max > self.N:
            raise ValueError(f"n_max={self.n_max} exceeds N={self.N}")
        if len(self.c) != self.n_max + 1:
            raise ValueError("table needs n_max + 1 rows")
        for n, row in enumerate(self.c):
            if len(row) != n + 1:
                raise ValueError(f"row {n} must have {n + 1} entries")
            if row[n] == 0:
                raise ValueError(f"leading coefficient c[{n}][{n}] vanishes")
        return self

    def matrix(self) -> RealArray:
        size = self.n_max + 1
        out = np.zeros((size, size))
        for n, row in enumerate(self.c):
            out[n, : n + 1] = row
        return out

    def eigenvalues(self) -> RealArray:
        """r_n = n(p+q-n+1) for n = 0..n_max."""
        n = np.arange(self.n_max + 1, dtype=np.float64)
        return n * (self.p + self.q - n + 1.0)

    def h_values(self, x: np.ndarray, n: int) -> np.ndarray:
        """Batched H_{λ(n)} over the last axis of x."""
        basis = elementary_symmetric(np.cosh(np.asarray(x, dtype=np.float64)), n)
        return basis @ np.asarray(self.c[n])

    def h_value(self, n: int, x: Sequence[float] | np.ndarray) -> float:
        return float(self.h_values(np.asarray(x, dtype=np.float64), n))


class CheckRow(Base):
    label: str
    t: float
    predicted_re: float
    predicted_im: float
    mean_re: float
    mean_im: float
    stderr: float
    z: float
    bias_budget: float = 0.0
    capped_pieces: int = 0

    @classmethod
    def from_estimate(
        cls, label: str, t: float, predicted: complex, estimate: McEstimate, bias_budget: float = 0.0
    ) -> "CheckRow":
        """Compare a prediction against an estimate.

        z = max(|mean - predicted| - bias_budget, 0) / max(stderr, 1e-15)
        """
        deviation = abs(estimate.mean - predicted)
        z = max(deviation - bias_budget, 0.0) / max(estimate.stderr, STDERR_FLOOR)
        return cls(
            label=label,
            t=t,
            predicted_re=predicted.real,
            predicted_im=predicted.imag,
            mean_re=estimate.mean_re,
            mean_im=estimate.mean_im,
            stderr=estimate.stderr,
            z=z,
            bias_budget=bias_budget,
            capped_pieces=estimate.capped_pieces,
        )

    @property
    def predicted(self) -> complex:
        return complex(self.predicted_re, self.predicted_im)


class CheckReport(Base):
    name: str
    description: str = ""
    rows: tuple[CheckRow, ...]
    passed: bool = Field(..., serialization_alias="pass")
    notes: dict[str, str | float | int] = Field(default_factory=dict)

    @classmethod
    def build(
        cls, name: str, description: str, rows: Sequence[CheckRow], notes: Mapping[str, str | float | int] | None = None
    ) -> "CheckReport":
        """Report passing when every |z| ≤ 3; capped-drift pieces of its runs go into the notes."""
        merged = dict(notes or {})
        capped = max((row.capped_pieces for row in rows), default=0)
        if capped:
            merged["capped_pieces"] = capped
        return cls(
            name=name,
            description=description,
            rows=tuple(rows),
            passed=all(row.z <= Z_PASS for row in rows),
            notes=merged,
        )

    @property
    def times(self) -> list[float]:
        return [row.t for row in self.rows]

    @property
    def z_scores(self) -> list[float]:
        return [row.z for row in self.rows]

    def to_json_dict(self) -> dict[str, Any]:
        return self.model_dump(mode="json", by_alias=True)


class PathSample(Base):
    model_config = pydantic.ConfigDict(frozen=True, arbitrary_types_allowed=True)

    model: ModelSpec
    times: np.ndarray
    states: np.ndarray
    seed: int | None = None
    dt: float
    stream: int | None = None
    substeps: int = 0
    meta: dict[str, float | str] = Field(default_factory=dict)

    @model_validator(mode="after")
    def check_alignment(self) -> Self:
        if self.times.ndim != 1 or self.times.size == 0:
            raise ValueError("times must be a non-empty 1-d array")
        if self.times[0] != 0:
            raise ValueError("times must start at 0")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")
        if self.states.shape != (self.times.size, self.model.N):
            raise ValueError(f"states shape {self.states.shape} does not match ({self.times.size}, {self.model.N})")
        return self

    @property
    def final_state(self) -> RealArray:
        return np.asarray(self.states[-1], dtype=np.float64)
