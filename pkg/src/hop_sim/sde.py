"""
Euler-Maruyama integration of the renormalized SDEs.

States are kept unfolded: the drift field is equivariant under the chamber's
symmetry group, so stepping the unfolded state and folding on demand realizes
the process reflected at the chamber walls.
"""

import dataclasses
import logging
import math
from collections.abc import Sequence

import numpy as np
import numpy.typing as npt

from hop_sim.exceptions import ConfigurationError, StepFailureError, UnsupportedModelError
from hop_sim.models import chamber_gaps, drift_field, fold_states, validate_configuration
from hop_sim.schemas import ModelSpec, PathSample, SdeConfig
from hop_sim.types import RealArray
from hop_sim.utils import MAIN_NOISE, SUBSTEP_NOISE, noise_generator

logger = logging.getLogger(__name__)

# a lane is split when drift may move it by more than this share of its smallest gap
DRIFT_REACH = 0.25
# width of the collision layer, in diffusive lengths sqrt(dt·(1+2/κ))
COLLISION_LAYER = 10.0
# main-noise increments drawn per stream at once
STEP_CHUNK = 256


@dataclasses.dataclass(frozen=True)
class _StepContext:
    model: ModelSpec
    substep_factor: int
    max_depth: int
    separation_floor: float
    # one substep generator per lane; None shares the step's increment between pieces
    substep_rngs: Sequence[np.random.Generator] | None
    streams: np.ndarray


def _split_mask(ctx: _StepContext, x: np.ndarray, dt: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    gaps = chamber_gaps(ctx.model, fold_states(ctx.model, x)).min(axis=-1)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        b = drift_field(ctx.model, x)
    finite = np.isfinite(b).all(axis=-1)
    b = np.where(finite[:, None], b, 0.0)
    reach = np.abs(b).max(axis=-1) * dt
    need = (gaps < ctx.separation_floor) | ~finite | (reach > DRIFT_REACH * gaps)
    return need, gaps, b


def _substep_noise(ctx: _StepContext, noise: np.ndarray, lanes: np.ndarray) -> np.ndarray:
    if ctx.substep_rngs is None:
        return noise / math.sqrt(ctx.substep_factor)
    width = ctx.model.N
    return np.stack([ctx.substep_rngs[lane].standard_normal(width) for lane in lanes])


def _advance(
    ctx: _StepContext,
    x: np.ndarray,
    dt: float,
    noise: np.ndarray,
    depth: int,
    time: float,
    lanes: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """One step of length dt for every lane.

    ``lanes`` indexes the rows of x into the context's streams.

    Returns:
        tuple: new states, pieces used per lane, capped-drift pieces per lane
    """
    scale = ctx.model.noise_scale * math.sqrt(dt)
    need, gaps, b = _split_mask(ctx, x, dt)
    out = np.empty_like(x)
    pieces = np.ones(x.shape[0], dtype=np.int64)
    capped = np.zeros(x.shape[0], dtype=np.int64)
    keep = ~need
    out[keep] = x[keep] + b[keep] * dt + scale * noise[keep]
    if not need.any():
        return out, pieces, capped

    rows = np.flatnonzero(need)
    if depth >= ctx.max_depth:
        layer = COLLISION_LAYER * math.sqrt(dt * (1.0 + 2.0 / ctx.model.kappa))
        stuck = rows[gaps[rows] >= layer]
        if stuck.size:
            row = int(stuck[0])
            raise StepFailureError(
                f"substep depth {ctx.max_depth} exhausted at t={time:.6g} with gap {gaps[row]:.3g}",
                state=x[row].copy(),
                time=time,
                stream=int(ctx.streams[lanes[row]]),
            )
        # inside the collision layer the drift move is capped at DRIFT_REACH of the floored gap
        room = DRIFT_REACH * np.maximum(gaps[rows], ctx.separation_floor)
        reach = np.abs(b[rows]).max(axis=-1) * dt
        cap = np.minimum(1.0, room / np.maximum(reach, np.finfo(np.float64).tiny))
        out[rows] = x[rows] + b[rows] * (cap * dt)[:, None] + scale * noise[rows]
        capped[rows] = 1
        return out, pieces, capped

    factor = ctx.substep_factor
    sub_dt = dt / factor
    y = x[rows]
    sub_lanes = lanes[rows]
    count = np.zeros(rows.size, dtype=np.int64)
    capped_count = np.zeros(rows.size, dtype=np.int64)
    for piece in range(factor):
        sub_noise = _substep_noise(ctx, noise[rows], sub_lanes)
        y, used, hit = _advance(ctx, y, sub_dt, sub_noise, depth + 1, time + piece * sub_dt, sub_lanes)
        count += used
        capped_count += hit
    out[rows] = y
    pieces[rows] = count
    capped[rows] = capped_count
    return out, pieces, capped


def em_step(
    model: ModelSpec,
    x: npt.ArrayLike,
    dt: float,
    noise: npt.ArrayLike,
    *,
    substep_factor: int = 2,
    max_substep_depth: int = 20,
    separation_floor: float = 1e-9,
    rng: np.random.Generator | None = None,
    time: float = 0.0,
    stream: int = 0,
) -> RealArray:
    """Advance one unfolded state by one Euler-Maruyama step.

    Steps near a drift pole are split into ``substep_factor`` pieces,
    recursively. Pieces draw fresh noise from ``rng``; without one, the given
    increment is shared evenly between the pieces. At the depth cap, pieces
    inside the collision layer keep the drift direction with its move capped
    at a quarter of the gap.

    Raises:
        UnsupportedModelError: for κ=inf, which has no noise term
        StepFailureError: if the split depth is exhausted outside the collision layer
    """
    if model.is_frozen:
        raise UnsupportedModelError("κ=inf is deterministic, integrate it with ode.integrate_freezing")
    rngs = None if rng is None else [rng]
    ctx = _StepContext(model, substep_factor, max_substep_depth, separation_floor, rngs, np.array([stream]))
    state = np.asarray(x, dtype=np.float64)[None, :]
    z = np.asarray(noise, dtype=np.float64)[None, :]
    out, _, _ = _advance(ctx, state, dt, z, 0, time, np.zeros(1, dtype=np.int64))
    return out[0]


def _main_increments(rngs: Sequence[np.random.Generator], steps: int, coarsening: int, N: int) -> np.ndarray:
    """Standard normal increments of shape (steps, lanes, N).

    Coarsened increments are normalized sums of consecutive fine draws of the
    same stream, so a run at dt·c sees the Brownian path of the run at dt.
    """
    draws = np.stack([rng.standard_normal((steps, coarsening, N)) for rng in rngs], axis=1)
    return draws.sum(axis=2) / math.sqrt(coarsening)


def simulate_streams(
    model: ModelSpec,
    x0: npt.ArrayLike,
    cfg: SdeConfig,
    streams: Sequence[int] | np.ndarray,
    record_steps: Sequence[int] | np.ndarray,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Simulate the given streams side by side from a common start.

    Every stream owns its main and substep generators, so its trajectory is
    the same whichever streams it is simulated with.

    Returns:
        tuple: states of shape (len(record_steps), len(streams), N), pieces per
        stream and capped-drift pieces per stream
    """
    if model.is_frozen:
        raise UnsupportedModelError("κ=inf is deterministic, integrate it with ode.integrate_freezing")
    ids = np.asarray(streams, dtype=np.int64)
    steps = np.asarray(record_steps, dtype=np.int64)
    width = ids.size

    x = np.broadcast_to(np.asarray(x0, dtype=np.float64), (width, model.N)).copy()
    main = [noise_generator(cfg.seed, int(stream), MAIN_NOISE) for stream in ids]
    substep = [noise_generator(cfg.seed, int(stream), SUBSTEP_NOISE) for stream in ids]
    ctx = _StepContext(model, cfg.substep_factor, cfg.max_substep_depth, cfg.separation_floor, substep, ids)
    lanes = np.arange(width)

    out = np.empty((steps.size, width, model.N))
    pieces = np.zeros(width, dtype=np.int64)
    capped = np.zeros(width, dtype=np.int64)
    cursor = 0
    while cursor < steps.size and steps[cursor] == 0:
        out[cursor] = x
        cursor += 1
    increments = np.empty((0, width, model.N))
    for step in range(1, cfg.n_steps + 1):
        offset = (step - 1) % STEP_CHUNK
        if offset == 0:
            chunk = min(STEP_CHUNK, cfg.n_steps - step + 1)
            increments = _main_increments(main, chunk, cfg.noise_coarsening, model.N)
        x, used, hit = _advance(ctx, x, cfg.dt, increments[offset], 0, (step - 1) * cfg.dt, lanes)
        pieces += used
        capped += hit
        while cursor < steps.size and steps[cursor] == step:
            out[cursor] = x
            cursor += 1
    if capped.any():
        logger.debug(f"{int(capped.sum())} capped-drift pieces in {int(np.count_nonzero(capped))} streams")
    return out, pieces, capped


def steps_for_times(cfg: SdeConfig, times: Sequence[float] | np.ndarray) -> np.ndarray:
    """Map requested times onto recorded step indices.

    Raises:
        ConfigurationError: if a time is off the recorded grid
    """
    recorded = set(cfg.recorded_steps().tolist())
    out = []
    for t in times:
        step = round(t / cfg.dt)
        if abs(step * cfg.dt - t) > 1e-9 * max(1.0, abs(t)) or step not in recorded:
            raise ConfigurationError(f"t={t} is not on the recorded grid (dt={cfg.dt}, stride={cfg.stride})")
        out.append(step)
    return np.asarray(out, dtype=np.int64)


def simulate_path(model: ModelSpec, x0: npt.ArrayLike, cfg: SdeConfig, stream: int) -> PathSample:
    """Simulate path ``stream`` from x0 to cfg.t_end, keeping every stride-th state.

    Raises:
        StepFailureError: with the failing time stamp
    """
    start = validate_configuration(model, x0)
    steps = cfg.recorded_steps()
    states, pieces, capped = simulate_streams(model, start, cfg, [stream], steps)
    logger.debug(f"Path {stream} simulated: {cfg.n_steps} steps, {int(pieces[0])} pieces")
    return PathSample(
        model=model,
        times=steps * cfg.dt,
        states=states[:, 0, :],
        seed=cfg.seed,
        dt=cfg.dt,
        stream=stream,
        substeps=int(pieces[0]) - cfg.n_steps,
        meta={"capped_pieces": float(capped[0])},
    )
