import logging
import math
from collections.abc import Sequence
from concurrent.futures import ProcessPoolExecutor
from typing import NamedTuple

import numpy as np
import numpy.typing as npt

from hop_sim.models import validate_configuration
from hop_sim.observables import Observable
from hop_sim.schemas import McEstimate, ModelSpec, SdeConfig
from hop_sim.sde import simulate_streams, steps_for_times
from hop_sim.utils import mc_estimate

logger = logging.getLogger(__name__)

_BlockTask = tuple[ModelSpec, np.ndarray, SdeConfig, np.ndarray, np.ndarray, tuple[Observable, ...]]


class EnsembleSample(NamedTuple):
    values: np.ndarray
    capped_pieces: int


def _run_block(task: _BlockTask) -> tuple[np.ndarray, int]:
    """Simulate one block of streams and evaluate every observable at every requested step.

    Returns:
        tuple: values of shape (n_observables, n_times, n_streams) and the block's capped-drift pieces
    """
    model, x0, cfg, streams, steps, observables = task
    states, _, capped = simulate_streams(model, x0, cfg, streams, steps)
    out = np.empty((len(observables), steps.size, streams.size), dtype=np.complex128)
    for i, observable in enumerate(observables):
        for r in range(steps.size):
            out[i, r] = observable(states[r])
    return out, int(capped.sum())


class EnsembleService:
    """Parallel Monte Carlo runner over counter-based path streams.

    Results depend only on (seed, n_paths): every stream carries its own
    noise, blocks only group streams into worker tasks and are collected in
    block order.
    """

    def __init__(self, threads: int = 1):
        self.threads = max(1, threads)

    def sample(
        self,
        model: ModelSpec,
        x0: npt.ArrayLike,
        cfg: SdeConfig,
        n_paths: int,
        observables: Sequence[Observable],
        times: Sequence[float] | np.ndarray,
    ) -> EnsembleSample:
        """Per-path observable values.

        Args:
            model: process with finite κ
            x0: common start configuration
            cfg: integration settings; t_end must cover ``times``
            n_paths: number of paths, streams 0..n_paths-1
            observables: vectorized observables
            times: recorded times at which observables are evaluated

        Returns:
            EnsembleSample: complex values of shape (n_observables, n_times, n_paths)
            and the number of capped-drift pieces taken in the collision layer

        Raises:
            StepFailureError: first failing path, with its stream and time
            ConfigurationError: if a time is off the recorded grid
        """
        start = validate_configuration(model, x0)
        steps = steps_for_times(cfg, times)
        width = cfg.block_size
        n_blocks = math.ceil(n_paths / width)
        tasks: list[_BlockTask] = [
            (model, start, cfg, np.arange(block * width, min((block + 1) * width, n_paths)), steps, tuple(observables))
            for block in range(n_blocks)
        ]
        workers = min(self.threads, n_blocks)
        logger.info(
            f"Ensemble started: {model.kind} N={model.N} κ={model.kappa}, {n_paths} paths in {n_blocks} blocks, "
            f"{workers} workers"
        )
        if workers <= 1:
            results = [_run_block(task) for task in tasks]
        else:
            with ProcessPoolExecutor(max_workers=workers) as executor:
                results = list(executor.map(_run_block, tasks))
        capped = sum(count for _, count in results)
        if capped:
            logger.warning(f"{capped} pieces took a capped drift inside the collision layer")
        logger.info(f"Ensemble finished: {n_paths} paths")
        return EnsembleSample(np.concatenate([values for values, _ in results], axis=-1), capped)

    def simulate_ensemble(
        self,
        model: ModelSpec,
        x0: npt.ArrayLike,
        cfg: SdeConfig,
        n_paths: int,
        observables: Sequence[Observable],
        times: Sequence[float] | np.ndarray,
    ) -> list[list[McEstimate]]:
        """Mean and standard error per observable and time, tagged with the run's capped-drift pieces."""
        samples, capped = self.sample(model, x0, cfg, n_paths, observables, times)
        return [
            [mc_estimate(samples[i, r], capped) for r in range(samples.shape[1])]
            for i in range(samples.shape[0])
        ]


def simulate_ensemble(
    model: ModelSpec,
    x0: npt.ArrayLike,
    cfg: SdeConfig,
    n_paths: int,
    observable: Observable,
    times: Sequence[float] | np.ndarray,
    threads: int = 1,
) -> list[McEstimate]:
    """Per-time estimates of one observable over ``n_paths`` independent streams."""
    return EnsembleService(threads).simulate_ensemble(model, x0, cfg, n_paths, [observable], times)[0]
