"""
Utility functions: counter-based noise streams and Monte Carlo reductions.
"""

import logging

import numpy as np

from hop_sim.schemas import McEstimate

logger = logging.getLogger(__name__)

# spawn-key channels of a stream's noise
MAIN_NOISE = 0
SUBSTEP_NOISE = 1


def noise_generator(seed: int, stream: int, channel: int) -> np.random.Generator:
    """Counter-based generator for one path and one noise channel.

    Keyed by (seed, stream, channel) only, so a path sees the same noise on
    any worker and in any block. Draws are consumed step by step: the k-th
    step of a stream always gets the k-th increment.
    """
    sequence = np.random.SeedSequence(seed, spawn_key=(stream, channel))
    return np.random.Generator(np.random.Philox(sequence))


def mc_estimate(samples: np.ndarray, capped_pieces: int = 0) -> McEstimate:
    """Sample mean and standard error of a complex or real sample.

    The standard error combines both components: sqrt((var_re + var_im)/n).

    Args:
        samples: 1-d array of per-path values
        capped_pieces: capped-drift pieces of the run that produced the sample

    Returns:
        McEstimate: mean, standard error and path count
    """
    values = np.asarray(samples)
    n = values.size
    if n == 0:
        nan = float("nan")
        return McEstimate(mean_re=nan, mean_im=nan, stderr=0.0, n_paths=0, capped_pieces=capped_pieces)
    mean = complex(np.mean(values))
    if n > 1:
        variance = float(np.var(values.real, ddof=1) + np.var(np.imag(values), ddof=1))
        stderr = float(np.sqrt(variance / n))
    else:
        stderr = 0.0
    return McEstimate(mean_re=mean.real, mean_im=mean.imag, stderr=stderr, n_paths=n, capped_pieces=capped_pieces)


def correlation(first: np.ndarray, second: np.ndarray) -> float:
    """Modulus of the complex sample correlation coefficient."""
    a = np.asarray(first, dtype=np.complex128)
    b = np.asarray(second, dtype=np.complex128)
    a = a - a.mean()
    b = b - b.mean()
    denominator = np.sqrt(np.mean(np.abs(a) ** 2) * np.mean(np.abs(b) ** 2))
    if denominator == 0:
        return 0.0
    return float(abs(np.mean(a * np.conj(b))) / denominator)


def joint_difference(first: McEstimate, second: McEstimate) -> McEstimate:
    """Difference of two independent estimates with their combined standard error."""
    return McEstimate(
        mean_re=first.mean_re - second.mean_re,
        mean_im=first.mean_im - second.mean_im,
        stderr=float(np.hypot(first.stderr, second.stderr)),
        n_paths=min(first.n_paths, second.n_paths),
        capped_pieces=max(first.capped_pieces, second.capped_pieces),
    )
