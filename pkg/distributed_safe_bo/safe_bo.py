import logging
from dataclasses import dataclass, replace
from typing import Dict, Iterable, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial import cKDTree

from distributed_safe_bo.errors import ConfigError, InputError, InternalError
from distributed_safe_bo.gaussian_process import Posterior, bounds_from_moments
from distributed_safe_bo.kernels.base_kernel import BaseKernel
from distributed_safe_bo.kernels.composite import CompositeKernel
from distributed_safe_bo.kernels.stationary import StationaryKernel

logger = logging.getLogger(__name__)

MAX_GRID_POINTS = 3_000_000
CERTIFICATE_CHUNK = 2_000_000


def default_resolution(dims: int) -> int:
    """Points per axis: 30 up to two dimensions, 12 for three, 7 beyond."""
    if dims <= 2:
        return 30
    if dims == 3:
        return 12
    return 7


class ParamGrid:
    def __init__(self, axes: Sequence[Sequence[float]]):
        """
        Lexicographically ordered product grid. The first axis varies slowest, so index order is lexicographic
        order of the points, which gives a deterministic tie-break.

        Args:
            axes: one strictly increasing sequence of values per dimension.
        """
        if len(axes) == 0:
            raise InputError("a grid needs at least one axis", axes)
        self._axes = tuple(np.unique(np.asarray(axis, dtype=float)) for axis in axes)
        for axis in self._axes:
            if axis.size == 0:
                raise InputError("grid axes must be non-empty", axes)
        mesh = np.meshgrid(*self._axes, indexing="ij")
        self._points = np.stack([m.ravel() for m in mesh], axis=1)
        self._index: Optional[Dict[Tuple[float, ...], int]] = None
        self._resolution: Optional[int] = None

    @classmethod
    def from_bounds(
        cls,
        bounds: Sequence[Tuple[float, float]],
        resolution: int,
        include: Optional[np.ndarray] = None,
        max_points: int = MAX_GRID_POINTS,
    ) -> "ParamGrid":
        """
        Uniform grid over a box with `resolution` points per axis, merged with the coordinates of `include`
        so those points lie on the grid. The resolution is lowered until the grid has at most `max_points` points.
        """
        box = np.asarray(bounds, dtype=float)
        include = None if include is None else np.atleast_2d(np.asarray(include, dtype=float))
        if include is not None and include.shape[1] != box.shape[0]:
            raise InputError("included points do not match the grid dimension", include.shape)
        if resolution < 1:
            raise ConfigError(f"resolution must be >= 1, got {resolution}", "resolution")
        requested = resolution
        while True:
            axes = []
            for d, (low, high) in enumerate(box):
                axis = np.linspace(low, high, resolution) if resolution > 1 else np.array([low])
                if include is not None:
                    axis = np.concatenate([axis, include[:, d]])
                axes.append(np.unique(axis))
            size = int(np.prod([axis.size for axis in axes], dtype=float))
            if size <= max_points or resolution == 1:
                break
            resolution -= 1
        if resolution != requested:
            logger.warning("grid resolution reduced from %d to %d to stay under %d points",
                           requested, resolution, max_points)
        grid = cls(axes)
        grid._resolution = resolution
        return grid

    @property
    def axes(self) -> Tuple[np.ndarray, ...]:
        return self._axes

    @property
    def points(self) -> np.ndarray:
        return self._points

    @property
    def dims(self) -> int:
        return self._points.shape[1]

    @property
    def resolution(self) -> int:
        return self._resolution or max(axis.size for axis in self._axes)

    def __len__(self) -> int:
        return self._points.shape[0]

    def index_of(self, point: Iterable[float]) -> Optional[int]:
        if self._index is None:
            self._index = {tuple(p): i for i, p in enumerate(self._points.tolist())}
        return self._index.get(tuple(float(v) for v in point))

    def inputs_at(self, time: Optional[float]) -> np.ndarray:
        """Grid points with the time column appended, or the bare points when `time` is None."""
        return with_time(self._points, time)


@dataclass
class SafeBoSets:
    safe_mask: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    maximizer_mask: Optional[np.ndarray] = None
    expander_mask: Optional[np.ndarray] = None
    mean: Optional[np.ndarray] = None
    std: Optional[np.ndarray] = None
    sweeps: int = 0

    def __post_init__(self):
        n = self.safe_mask.shape[0]
        if self.maximizer_mask is None:
            self.maximizer_mask = np.zeros(n, dtype=bool)
        if self.expander_mask is None:
            self.expander_mask = np.zeros(n, dtype=bool)


def with_time(points: np.ndarray, time: Optional[float]) -> np.ndarray:
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if time is None:
        return points
    return np.hstack([points, np.full((points.shape[0], 1), float(time))])


def kernel_metric(kernel: BaseKernel, x, x_prime, time: Optional[float] = None) -> float:
    """
    Kernel metric d_k between two spatial points at a shared time slice.

    d_k = sqrt(max(0, k(z, z) − 2k(z, z') + k(z', z'))) with z = (x, time).
    """
    z = with_time(np.asarray(x, dtype=float).ravel(), time)
    z_prime = with_time(np.asarray(x_prime, dtype=float).ravel(), time)
    return float(metric_matrix(kernel, z, z_prime)[0, 0])


def metric_matrix(kernel: BaseKernel, z1: np.ndarray, z2: np.ndarray) -> np.ndarray:
    squared = kernel.diag(z1)[:, None] - 2. * kernel(z1, z2) + kernel.diag(z2)[None, :]
    return np.sqrt(np.maximum(squared, 0.))


def compute_safe_set(
    grid: ParamGrid,
    posterior: Posterior,
    beta_value: float,
    bound_b: float,
    h: float,
    sampled_safe: Sequence[int],
    time: Optional[float] = None,
) -> SafeBoSets:
    """
    Safe set of the grid at one time slice, computed to a fixed point.

    A point z is safe if some anchor z' (a sampled safe point or an already certified grid point) satisfies
    lower(z') − B·d_k(z', z) ≥ h. Sampled safe points are always members.

    Args:
        grid: parameter grid of the agent.
        posterior: fitted posterior, queried at (grid point, time).
        beta_value: confidence scaling β.
        bound_b: RKHS norm bound B.
        h: safety threshold.
        sampled_safe: grid indices of sampled safe points, non-empty.
        time: prediction time, None for kernels without a time input.

    Returns:
        :obj:`SafeBoSets` with the safe mask and the bounds; maximizer and expander masks are empty.
    """
    anchors = np.unique(np.asarray(list(sampled_safe), dtype=int))
    if anchors.size == 0:
        raise InputError("the safe set needs at least one sampled safe point", sampled_safe)
    inputs = grid.inputs_at(time)
    mean, std = posterior.predict(inputs)
    lower, upper = bounds_from_moments(mean, std, beta_value)
    safe, sweeps = fixed_point_safe_mask(posterior.kernel, inputs, lower, bound_b, h, anchors)
    if not safe.any():
        raise InternalError("empty safe set despite sampled safe points", anchors)
    return SafeBoSets(safe_mask=safe, lower=lower, upper=upper, mean=mean, std=std, sweeps=sweeps)


def fixed_point_safe_mask(
    kernel: BaseKernel,
    inputs: np.ndarray,
    lower: np.ndarray,
    bound_b: float,
    h: float,
    anchors: np.ndarray,
) -> Tuple[np.ndarray, int]:
    """
    Returns:
        tuple (safe mask, number of sweeps). Each sweep only tests the points certified in the previous one as
        anchors, the bounds of older anchors do not change within a call.
    """
    n = inputs.shape[0]
    safe = np.zeros(n, dtype=bool)
    safe[anchors] = True

    frontier = anchors
    sweeps = 0
    with np.errstate(invalid="ignore", over="ignore"):
        while frontier.size and sweeps < n:
            sweeps += 1
            candidates = np.flatnonzero(~safe)
            if candidates.size == 0:
                break
            certified = np.zeros(candidates.size, dtype=bool)
            step = max(1, CERTIFICATE_CHUNK // max(candidates.size, 1))
            for start in range(0, frontier.size, step):
                chunk = frontier[start:start + step]
                d = metric_matrix(kernel, inputs[chunk], inputs[candidates])
                certified |= np.any(lower[chunk, None] - bound_b * d >= h, axis=0)
            frontier = candidates[certified]
            safe[frontier] = True
    logger.debug("safe set fixed point after %d sweeps: %d of %d points", sweeps, int(safe.sum()), n)
    return safe, sweeps


def compute_maximizers(sets: SafeBoSets) -> np.ndarray:
    """M = {z ∈ S : upper(z) ≥ max over S of lower}."""
    safe = sets.safe_mask
    if not safe.any():
        return np.zeros_like(safe)
    best_lower = np.max(sets.lower[safe])
    return safe & (sets.upper >= best_lower)


def compute_expanders(
    sets: SafeBoSets,
    grid: ParamGrid,
    kernel: BaseKernel,
    bound_b: float,
    h: float,
    time: Optional[float] = None,
) -> np.ndarray:
    """
    G = {z ∈ S : upper(z) − B·d_k(z, z'') ≥ h for some unsafe z''}.

    When d_k at a fixed time grows with the Euclidean distance of the parameters (see
    :func:`metric_follows_distance`), only the nearest unsafe point is checked for each safe candidate; any other
    kernel is checked against every unsafe point.
    """
    safe = sets.safe_mask
    expanders = np.zeros_like(safe)
    if safe.all() or not np.isfinite(bound_b):
        return expanders
    candidates = np.flatnonzero(safe & (sets.upper >= h))
    if candidates.size == 0:
        return expanders
    unsafe = np.flatnonzero(~safe)
    points = grid.points
    z = with_time(points[candidates], time)
    if metric_follows_distance(kernel, time):
        _, nearest = cKDTree(points[unsafe]).query(points[candidates], k=1)
        distance = paired_metric(kernel, z, with_time(points[unsafe[nearest]], time))
    else:
        z_unsafe = with_time(points[unsafe], time)
        distance = np.empty(candidates.size)
        step = max(1, CERTIFICATE_CHUNK // unsafe.size)
        for start in range(0, candidates.size, step):
            distance[start:start + step] = metric_matrix(kernel, z[start:start + step], z_unsafe).min(axis=1)
    expanders[candidates] = sets.upper[candidates] - bound_b * distance >= h
    return expanders


def metric_follows_distance(kernel: BaseKernel, time: Optional[float] = None) -> bool:
    """
    True if d_k between two grid points at one time slice is a nondecreasing function of their Euclidean
    distance. Holds for sums and products whose leaves are isotropic stationary kernels of the parameters or
    kernels of the time column alone.
    """
    if time is not None and kernel.inputs == "time":
        return True
    if isinstance(kernel, StationaryKernel):
        return kernel.inputs == "all" or (time is not None and kernel.inputs == "spatial")
    if isinstance(kernel, CompositeKernel) and kernel.inputs == "all":
        return all(metric_follows_distance(child, time) for child in kernel.children)
    return False


def paired_metric(kernel: BaseKernel, z1: np.ndarray, z2: np.ndarray) -> np.ndarray:
    """d_k(z1[i], z2[i]) for every row i."""
    squared = kernel.diag(z1) - 2. * kernel.paired(z1, z2) + kernel.diag(z2)
    return np.sqrt(np.maximum(squared, 0.))


def acquire(sets: SafeBoSets, std_next: np.ndarray) -> Tuple[int, bool]:
    """
    Grid index of the most uncertain point of M ∪ G; ties go to the lexicographically smallest point.

    Falls back to the safe point with the largest lower bound when M ∪ G is empty.

    Returns:
        tuple (index, fallback_used).
    """
    union = sets.maximizer_mask | sets.expander_mask
    if union.any():
        idx = np.flatnonzero(union)
        return int(idx[np.argmax(std_next[idx])]), False
    safe = np.flatnonzero(sets.safe_mask)
    if safe.size == 0:
        raise InternalError("acquisition on an empty safe set", None)
    logger.warning("no maximizers or expanders, exploiting the best lower bound")
    return int(safe[np.argmax(sets.lower[safe])]), True


def compute_sets(
    grid: ParamGrid,
    posterior: Posterior,
    beta_value: float,
    bound_b: float,
    h: float,
    sampled_safe: Sequence[int],
    time: Optional[float] = None,
) -> SafeBoSets:
    sets = compute_safe_set(grid, posterior, beta_value, bound_b, h, sampled_safe, time)
    return replace(
        sets,
        maximizer_mask=compute_maximizers(sets),
        expander_mask=compute_expanders(sets, grid, posterior.kernel, bound_b, h, time),
    )
