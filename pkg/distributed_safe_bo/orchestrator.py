import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from pandas import DataFrame

from distributed_safe_bo.agent import Agent, Proposal
from distributed_safe_bo.base_oracle import BaseOracle
from distributed_safe_bo.comm_graph import CommGraph
from distributed_safe_bo.errors import ConfigError, InputError, InternalError, OracleError, SafeBoError
from distributed_safe_bo.kernels.base_kernel import BaseKernel
from distributed_safe_bo.safe_bo import MAX_GRID_POINTS, ParamGrid, default_resolution

logger = logging.getLogger(__name__)

VARIANTS = ("full_algorithm", "no_latent", "no_comm", "full_comm")


def expert_index(t: int, num_agents: int) -> int:
    """
    Agent acting as expert in iteration t, cycling through 1..N.

    Examples:
        >>> expert_index(5, 4)
        1
    """
    if t < 1 or num_agents < 1:
        raise InputError(f"expert_index needs t >= 1 and N >= 1, got t={t}, N={num_agents}", (t, num_agents))
    return (t - 1) % num_agents + 1


def ablation_variant(config, variant: str):
    """
    Returns a copy of a run configuration switched to one of the ablation variants.

    `no_latent` drops the time input, `no_comm` removes every edge, `full_comm` connects all agents.
    The configuration is any dataclass with `variant`, `topology` and `latent_time` fields.
    """
    if variant not in VARIANTS:
        raise ConfigError(f"unknown variant '{variant}', expected one of {VARIANTS}", "variant")
    if variant == "no_latent":
        return replace(config, variant=variant, latent_time=False)
    if variant == "no_comm":
        return replace(config, variant=variant, topology="empty")
    if variant == "full_comm":
        return replace(config, variant=variant, topology="complete")
    return replace(config, variant=variant)


@dataclass
class AgentTrace:
    t: int
    agent: int
    expert: bool
    frozen: bool
    suggestion: np.ndarray
    applied: np.ndarray
    overridden: bool
    beta: float = float("nan")
    safe_size: int = 0
    maximizer_size: int = 0
    expander_size: int = 0
    fallback: bool = False
    std: float = float("nan")
    upper: float = float("nan")
    in_safe_set: bool = True


@dataclass
class IterationRecord:
    t: int
    expert: Optional[int]
    joint: np.ndarray
    reward: float
    noiseless_reward: float
    violation: bool
    agent_traces: List[AgentTrace] = field(default_factory=list)


@dataclass
class RunResult:
    """
    Applied joint parameters and rewards of a run. Row 0 holds the initial parameter a₀, row t the parameter
    applied in iteration t.
    """

    joint_params: np.ndarray
    rewards: np.ndarray
    noiseless_rewards: np.ndarray
    violations: np.ndarray
    safety_threshold: float
    experts: List[Optional[int]] = field(default_factory=list)
    per_agent_traces: List[AgentTrace] = field(default_factory=list)

    @property
    def best_index(self) -> int:
        return int(np.argmax(self.rewards))

    @property
    def best_param(self) -> np.ndarray:
        return self.joint_params[self.best_index]

    @property
    def best_reward(self) -> float:
        return float(self.rewards[self.best_index])

    @property
    def initial_reward(self) -> float:
        return float(self.rewards[0])

    @property
    def violation_count(self) -> int:
        return int(np.sum(self.violations))

    @property
    def iterations(self) -> int:
        return len(self.rewards) - 1

    def to_frame(self) -> DataFrame:
        """One row per iteration: t, reward, violation and the flattened joint parameter."""
        num_agents, param_dim = self.joint_params.shape[1:]
        df = DataFrame({"t": np.arange(len(self.rewards)), "reward": self.rewards, "violation": self.violations})
        for i in range(num_agents):
            for k in range(param_dim):
                col = f"a{i + 1}" if param_dim == 1 else f"a{i + 1}_{k + 1}"
                df[col] = self.joint_params[:, i, k]
        return df

    def traces_frame(self) -> DataFrame:
        rows = []
        for trace in self.per_agent_traces:
            rows.append({
                "t": trace.t,
                "agent": trace.agent,
                "expert": trace.expert,
                "frozen": trace.frozen,
                "suggestion": _scalar_text(trace.suggestion),
                "applied": _scalar_text(trace.applied),
                "overridden": trace.overridden,
                "beta": trace.beta,
                "safe_size": trace.safe_size,
                "maximizer_size": trace.maximizer_size,
                "expander_size": trace.expander_size,
                "fallback": trace.fallback,
                "std": trace.std,
                "upper": trace.upper,
                "in_safe_set": trace.in_safe_set,
            })
        return DataFrame(rows, columns=list(AgentTrace.__dataclass_fields__))


def _scalar_text(values: np.ndarray) -> str:
    return " ".join(repr(float(v)) for v in np.ravel(values))


class DistributedSafeBO:
    def __init__(
        self,
        graph: CommGraph,
        agents: Mapping[int, Agent],
        oracle: BaseOracle,
        safety_threshold: float,
        noise_std: float = 0.,
        rng: Optional[np.random.Generator] = None,
        frozen_agents: Iterable[int] = (),
        n_jobs: int = 1,
    ):
        """
        Runs the distributed safe optimization loop: local fits and acquisitions, the sequential expert override,
        nearest-neighbor exchange of the applied parameters and one oracle call per iteration.

        Args:
            graph: communication graph.
            agents: one :obj:`Agent` per graph vertex, keyed by id. Each agent's neighborhood must be its closed
                neighborhood in `graph`, or only itself when the agent models no neighbors.
            oracle: reward function of the joint parameter.
            safety_threshold: h; rewards below it are flagged as violations.
            noise_std: standard deviation of the Gaussian observation noise added to every oracle value.
            rng: generator of the observation noise.
            frozen_agents: agents that keep their initial parameter and are never overridden.
            n_jobs: worker threads for the per-agent computations of a step.
        """
        if set(agents) != set(graph.agents):
            raise InputError("agents must match the graph vertices", sorted(agents))
        for i, agent in agents.items():
            if not set(agent.neighborhood) <= set(graph.closed_neighborhood(i)):
                raise InputError(f"agent {i} models agents it cannot communicate with", agent.neighborhood)
        self._graph = graph
        self._agents = dict(agents)
        self._oracle = oracle
        self._h = float(safety_threshold)
        self._noise_std = float(noise_std)
        self._rng = rng if rng is not None else np.random.default_rng()
        self._frozen = frozenset(int(i) for i in frozen_agents)
        self._n_jobs = max(1, int(n_jobs))
        self._param_dim = oracle.param_dim
        self._records: List[IterationRecord] = []
        self._applied: Optional[Dict[int, np.ndarray]] = None
        self._groups = self._twin_groups()

    @property
    def graph(self) -> CommGraph:
        return self._graph

    @property
    def agents(self) -> Dict[int, Agent]:
        return self._agents

    @property
    def records(self) -> List[IterationRecord]:
        return self._records

    def _twin_groups(self) -> List[List[int]]:
        # Agents sharing neighborhood, grid and kernel see identical data and make identical proposals.
        groups: Dict[Tuple, List[int]] = {}
        for i in sorted(self._agents):
            if i in self._frozen:
                continue
            agent = self._agents[i]
            key = (agent.neighborhood, id(agent.grid), id(agent.kernel), agent.latent_time)
            groups.setdefault(key, []).append(i)
        return list(groups.values())

    def _draw_noise(self) -> float:
        return float(self._rng.normal(0., self._noise_std))

    def _evaluate(self, joint: np.ndarray) -> Tuple[float, float]:
        try:
            clean = self._oracle(joint)
        except Exception as e:
            message = e.message if isinstance(e, SafeBoError) else repr(e)
            partial = self.result() if self._records else None
            raise OracleError(f"oracle failed: {message}", joint, partial_result=partial) from e
        return clean + self._draw_noise(), clean

    def _joint(self, applied: Mapping[int, np.ndarray]) -> np.ndarray:
        return np.stack([np.asarray(applied[i], dtype=float).reshape(self._param_dim) for i in self._graph.agents])

    def _deliver(self, applied: Mapping[int, np.ndarray], time_index: float, reward: float) -> None:
        inbox = self._graph.exchange(applied)
        for i, agent in self._agents.items():
            row = np.concatenate([np.asarray(inbox[i][j], dtype=float).ravel() for j in agent.neighborhood])
            agent.observe(row, time_index, reward)

    def initialize(self, initial_params: np.ndarray) -> IterationRecord:
        """
        Evaluates the initial joint parameter a₀ and stores it as the first sample (time index 1) of every agent.
        """
        if self._records:
            raise InternalError("optimizer already initialized", len(self._records))
        initial = np.asarray(initial_params, dtype=float).reshape(self._graph.num_agents, self._param_dim)
        applied = {i: initial[i - 1].copy() for i in self._graph.agents}
        reward, clean = self._evaluate(initial)
        if reward < self._h:
            logger.warning("initial reward %.6g is below the safety threshold %.6g", reward, self._h)
        self._deliver(applied, 1., reward)
        self._applied = applied
        record = IterationRecord(t=0, expert=None, joint=initial, reward=reward, noiseless_reward=clean,
                                 violation=reward < self._h)
        self._records.append(record)
        logger.info("t=0 initial reward %.6g (h=%.6g)", reward, self._h)
        return record

    def _proposals(self, t: int) -> Dict[int, Proposal]:
        leaders = [group[0] for group in self._groups]
        if self._n_jobs > 1 and len(leaders) > 1:
            with ThreadPoolExecutor(max_workers=self._n_jobs) as pool:
                computed = dict(zip(leaders, pool.map(lambda i: self._agents[i].propose(t), leaders)))
        else:
            computed = {i: self._agents[i].propose(t) for i in leaders}
        proposals: Dict[int, Proposal] = {}
        for group in self._groups:
            leader = group[0]
            proposals[leader] = computed[leader]
            for i in group[1:]:
                if np.array_equal(self._agents[i].rows, self._agents[leader].rows):
                    proposals[i] = self._agents[i].mirror(computed[leader], self._agents[leader])
                else:
                    proposals[i] = self._agents[i].propose(t)
        return proposals

    def step(self, t: int) -> IterationRecord:
        """
        Runs iteration t: every agent proposes from data 1..t at time t+1, the expert of iteration t overrides
        its neighbors' own coordinates, the applied parameters are exchanged along the edges, the oracle is
        evaluated once and every agent stores its neighborhood row with the shared reward.
        """
        if self._applied is None:
            raise InternalError("initialize must run before step", t)
        proposals = self._proposals(t)
        applied = {i: self._applied[i].copy() for i in self._graph.agents}
        for i, proposal in proposals.items():
            applied[i] = proposal.own_value.copy()

        expert = expert_index(t, self._graph.num_agents)
        overridden = set()
        if expert in proposals:
            expert_proposal = proposals[expert]
            if not expert_proposal.in_safe_set:
                raise InternalError(f"expert {expert} suggested a point outside its safe set", t)
            for i in self._graph.neighbors(expert):
                if i in self._frozen or i not in expert_proposal.neighborhood:
                    continue
                applied[i] = expert_proposal.value_for(i).copy()
                overridden.add(i)

        joint = self._joint(applied)
        reward, clean = self._evaluate(joint)
        self._deliver(applied, float(t + 1), reward)
        self._applied = applied

        traces = []
        for i in self._graph.agents:
            proposal = proposals.get(i)
            traces.append(AgentTrace(
                t=t,
                agent=i,
                expert=i == expert,
                frozen=i in self._frozen,
                suggestion=applied[i] if proposal is None else proposal.own_value,
                applied=applied[i],
                overridden=i in overridden,
                **({} if proposal is None else {
                    "beta": proposal.beta,
                    "safe_size": proposal.safe_size,
                    "maximizer_size": proposal.maximizer_size,
                    "expander_size": proposal.expander_size,
                    "fallback": proposal.fallback,
                    "std": proposal.std,
                    "upper": proposal.upper,
                    "in_safe_set": proposal.in_safe_set,
                }),
            ))
        violation = reward < self._h
        if violation:
            logger.warning("t=%d reward %.6g below the safety threshold %.6g", t, reward, self._h)
        record = IterationRecord(t=t, expert=expert, joint=joint, reward=reward, noiseless_reward=clean,
                                 violation=violation, agent_traces=traces)
        self._records.append(record)
        logger.info("t=%d expert=%d reward=%.6g", t, expert, reward)
        return record

    def run(self, num_iterations: int, initial_params: Optional[np.ndarray] = None) -> RunResult:
        """
        Executes iterations 1..T after the initial evaluation and returns the run result; the best parameter is
        the applied joint parameter with the highest observed reward (first one on ties).
        """
        if num_iterations < 0:
            raise InputError(f"number of iterations must be nonnegative, got {num_iterations}", num_iterations)
        if initial_params is not None:
            self.initialize(initial_params)
        for t in range(1, num_iterations + 1):
            self.step(t)
        return self.result()

    def result(self) -> RunResult:
        if not self._records:
            raise InternalError("no iterations recorded", None)
        return RunResult(
            joint_params=np.stack([r.joint for r in self._records]),
            rewards=np.array([r.reward for r in self._records]),
            noiseless_rewards=np.array([r.noiseless_reward for r in self._records]),
            violations=np.array([r.violation for r in self._records], dtype=bool),
            safety_threshold=self._h,
            experts=[r.expert for r in self._records],
            per_agent_traces=[trace for r in self._records for trace in r.agent_traces],
        )


def build_agents(
    graph: CommGraph,
    param_bounds: Sequence[Tuple[float, float]],
    initial_params: np.ndarray,
    kernel_for_dims: Callable[[int], BaseKernel],
    safety_threshold: float,
    bound_b: float,
    noise_std: float = 0.,
    delta: float = 0.01,
    beta_override: Optional[float] = None,
    latent_time: bool = True,
    resolution: Optional[int] = None,
    max_grid_points: int = MAX_GRID_POINTS,
) -> Dict[int, Agent]:
    """
    Creates one agent per vertex with a grid over its closed neighborhood. The grids contain the agents' initial
    parameters. Agents with the same neighborhood share grid and kernel objects.

    Args:
        graph: communication graph.
        param_bounds: box A of a single agent's parameter, one (low, high) pair per parameter.
        initial_params: a₀ of shape (N, n).
        kernel_for_dims: builds the prior for a given spatial dimension.
        resolution: points per axis; None picks `default_resolution` of the grid dimension.
    """
    param_dim = len(param_bounds)
    initial = np.asarray(initial_params, dtype=float).reshape(graph.num_agents, param_dim)
    grids: Dict[Tuple[int, ...], ParamGrid] = {}
    kernels: Dict[int, BaseKernel] = {}
    agents = {}
    for i in graph.agents:
        neighborhood = graph.closed_neighborhood(i)
        dims = len(neighborhood) * param_dim
        if neighborhood not in grids:
            bounds = [b for _ in neighborhood for b in param_bounds]
            grids[neighborhood] = ParamGrid.from_bounds(
                bounds,
                resolution or default_resolution(dims),
                include=np.concatenate([initial[j - 1] for j in neighborhood]),
                max_points=max_grid_points,
            )
        if dims not in kernels:
            kernels[dims] = kernel_for_dims(dims)
        agents[i] = Agent(
            agent_id=i,
            neighborhood=neighborhood,
            grid=grids[neighborhood],
            kernel=kernels[dims],
            safety_threshold=safety_threshold,
            bound_b=bound_b,
            noise_std=noise_std,
            delta=delta,
            beta_override=beta_override,
            latent_time=latent_time,
            param_dim=param_dim,
        )
    return agents
