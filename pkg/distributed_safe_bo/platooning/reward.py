import numpy as np

from distributed_safe_bo.platooning.platoon import EpisodeTrace


def platooning_reward(trace: EpisodeTrace, d_ref: float, num_followers: int, steps: int) -> float:
    """
    Reward of an episode; low average deviation from d_ref scores high and a crash scores exactly −1.

    f = −Σ_i Σ_t̂ |d − d_ref|·d_min / (1000·d_ref·N_f·steps) − (d_ref − d_min)·(1 − d_min) / d_ref

    Args:
        trace: complete or crash-terminated episode.
        d_ref: reference gap in meters.
        num_followers: N_f.
        steps: planned number of steps of the episode.

    Examples:
        >>> trace = EpisodeTrace(np.array([[110.]]), np.zeros((2, 2)), np.zeros((2, 2)), steps=1, dt=0.1)
        >>> round(platooning_reward(trace, 100., 1, 1), 6)
        -10.911
    """
    min_dist = trace.min_distance
    deviation = float(np.sum(np.abs(trace.distances - d_ref))) * min_dist
    tracking = deviation / (1000. * d_ref * num_followers * steps)
    spacing = (d_ref - min_dist) * (1. - min_dist) / d_ref
    return -tracking - spacing
