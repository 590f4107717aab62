import logging
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence

import numpy as np

from distributed_safe_bo.errors import InputError, InternalError
from distributed_safe_bo.gaussian_process import Dataset, beta, fit
from distributed_safe_bo.kernels.base_kernel import BaseKernel
from distributed_safe_bo.safe_bo import ParamGrid, SafeBoSets, acquire, compute_sets

logger = logging.getLogger(__name__)


@dataclass
class Proposal:
    """One agent's acquisition at an iteration, over its whole closed neighborhood."""

    agent_id: int
    neighborhood: tuple
    index: int
    point: np.ndarray
    std: float
    lower: float
    upper: float
    beta: float
    safe_size: int
    maximizer_size: int
    expander_size: int
    fallback: bool
    in_safe_set: bool

    def value_for(self, agent_id: int) -> np.ndarray:
        """The suggested parameter block of a member of the neighborhood."""
        if agent_id not in self.neighborhood:
            raise InputError(f"agent {agent_id} is not in the neighborhood {self.neighborhood}", agent_id)
        width = self.point.size // len(self.neighborhood)
        position = self.neighborhood.index(agent_id)
        return self.point[position * width:(position + 1) * width]

    @property
    def own_value(self) -> np.ndarray:
        return self.value_for(self.agent_id)


class Agent:
    def __init__(
        self,
        agent_id: int,
        neighborhood: Sequence[int],
        grid: ParamGrid,
        kernel: BaseKernel,
        safety_threshold: float,
        bound_b: float,
        noise_std: float = 0.,
        delta: float = 0.01,
        beta_override: Optional[float] = None,
        latent_time: bool = True,
        param_dim: int = 1,
    ):
        """
        One agent of the distributed optimizer. It only ever holds the parameters of its closed neighborhood
        N^i_+ and the shared rewards.

        Args:
            agent_id: id i of the agent.
            neighborhood: N^i_+; stored ascending, which fixes the column order of every row.
            grid: parameter grid over A^{|N^i_+|}.
            kernel: GP prior over (neighborhood parameters, time) or over the parameters alone.
            safety_threshold: h.
            bound_b: RKHS norm bound B.
            noise_std: observation noise used in the fit.
            delta: confidence parameter of β.
            beta_override: constant β instead of the data-dependent one.
            latent_time: whether inputs carry the iteration index.
            param_dim: parameters per agent n.
        """
        self._id = int(agent_id)
        self._neighborhood = tuple(sorted(int(j) for j in neighborhood))
        if self._id not in self._neighborhood:
            raise InputError(f"agent {agent_id} must belong to its own neighborhood", self._neighborhood)
        if grid.dims != len(self._neighborhood) * param_dim:
            raise InputError(
                f"grid dimension {grid.dims} does not match |N+| * n = {len(self._neighborhood) * param_dim}",
                grid.dims,
            )
        self._grid = grid
        self._kernel = kernel
        self._h = float(safety_threshold)
        self._bound_b = float(bound_b)
        self._noise_std = float(noise_std)
        self._delta = float(delta)
        self._beta_override = beta_override
        self._latent_time = latent_time
        self._param_dim = int(param_dim)
        self._rows: List[np.ndarray] = []
        self._times: List[float] = []
        self._rewards: List[float] = []
        self._last_sets: Optional[SafeBoSets] = None

    @property
    def id(self) -> int:
        return self._id

    @property
    def neighborhood(self) -> tuple:
        return self._neighborhood

    @property
    def grid(self) -> ParamGrid:
        return self._grid

    @property
    def kernel(self) -> BaseKernel:
        return self._kernel

    @property
    def latent_time(self) -> bool:
        return self._latent_time

    @property
    def last_sets(self) -> Optional[SafeBoSets]:
        return self._last_sets

    @property
    def rows(self) -> np.ndarray:
        width = len(self._neighborhood) * self._param_dim
        return np.array(self._rows).reshape(len(self._rows), width)

    @property
    def dataset(self) -> Dataset:
        rows = self.rows
        if self._latent_time:
            rows = np.hstack([rows, np.asarray(self._times, dtype=float)[:, None]])
        return Dataset(inputs=rows, targets=np.asarray(self._rewards, dtype=float), noise_std=self._noise_std)

    def __len__(self) -> int:
        return len(self._rewards)

    def observe(self, row: np.ndarray, time_index: float, reward: float) -> None:
        """Appends the applied neighborhood parameters of one iteration and the shared reward."""
        row = np.asarray(row, dtype=float).ravel()
        if row.size != len(self._neighborhood) * self._param_dim:
            raise InputError(f"agent {self._id} expects rows of {len(self._neighborhood) * self._param_dim} values",
                             row.size)
        self._rows.append(row)
        self._times.append(float(time_index))
        self._rewards.append(float(reward))

    def sampled_safe_indices(self) -> List[int]:
        """Grid indices of applied rows that lie on the grid: the initial row and every row observed safe."""
        indices = []
        for k, (row, reward) in enumerate(zip(self._rows, self._rewards)):
            if k > 0 and reward < self._h:
                continue
            index = self._grid.index_of(row)
            if index is not None:
                indices.append(index)
        if not indices:
            raise InternalError(f"agent {self._id} has no sampled safe point on its grid", self._id)
        return indices

    def propose(self, t: int) -> Proposal:
        """
        Fits the posterior on the data of iterations 1..t, computes the sets at time t+1 and acquires the most
        uncertain maximizer or expander.
        """
        time_next = float(t + 1) if self._latent_time else None
        posterior = fit(self.dataset, self._kernel)
        beta_value = (float(self._beta_override) if self._beta_override is not None
                      else beta(posterior, self._bound_b, self._noise_std, self._delta))
        sets = compute_sets(self._grid, posterior, beta_value, self._bound_b, self._h,
                            self.sampled_safe_indices(), time_next)
        index, fallback = acquire(sets, sets.std)
        self._last_sets = sets
        logger.debug("agent %d at t=%d: |S|=%d |M|=%d |G|=%d beta=%.4g", self._id, t, int(sets.safe_mask.sum()),
                     int(sets.maximizer_mask.sum()), int(sets.expander_mask.sum()), beta_value)
        return Proposal(
            agent_id=self._id,
            neighborhood=self._neighborhood,
            index=index,
            point=self._grid.points[index].copy(),
            std=float(sets.std[index]),
            lower=float(sets.lower[index]),
            upper=float(sets.upper[index]),
            beta=beta_value,
            safe_size=int(sets.safe_mask.sum()),
            maximizer_size=int(sets.maximizer_mask.sum()),
            expander_size=int(sets.expander_mask.sum()),
            fallback=fallback,
            in_safe_set=bool(sets.safe_mask[index]),
        )

    def mirror(self, proposal: Proposal, source: "Agent") -> Proposal:
        """
        Adopts the proposal of an agent with the same neighborhood, grid, kernel and data, which would compute
        exactly the same sets.
        """
        if source.neighborhood != self._neighborhood or source.grid is not self._grid:
            raise InternalError(f"agent {self._id} cannot mirror agent {source.id}", source.id)
        self._last_sets = source.last_sets
        return replace(proposal, agent_id=self._id)
