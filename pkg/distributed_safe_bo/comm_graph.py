from typing import Dict, FrozenSet, Iterable, Mapping, Set, Tuple

from distributed_safe_bo.errors import InputError, InternalError


class CommGraph:
    def __init__(self, num_agents: int, edges: Iterable[Tuple[int, int]] = ()):
        """
        Undirected communication graph over agents 1..N.

        Args:
            num_agents: number of agents N ≥ 1.
            edges: unordered agent pairs; self-loops are rejected.

        Examples:
            >>> CommGraph.path(3).neighbors(2)
            (1, 3)
        """
        if num_agents < 1:
            raise InputError(f"a graph needs at least one agent, got {num_agents}", num_agents)
        self._num_agents = int(num_agents)
        normalized: Set[FrozenSet[int]] = set()
        for i, j in edges:
            if i == j:
                raise InputError(f"self-loop at agent {i}", (i, j))
            for k in (i, j):
                if not 1 <= k <= num_agents:
                    raise InputError(f"agent {k} outside 1..{num_agents}", (i, j))
            normalized.add(frozenset((int(i), int(j))))
        self._edges = frozenset(normalized)
        self._neighbors: Dict[int, Tuple[int, ...]] = {
            i: tuple(sorted(j for e in self._edges if i in e for j in e if j != i))
            for i in self.agents
        }

    @classmethod
    def path(cls, num_agents: int) -> "CommGraph":
        return cls(num_agents, [(i, i + 1) for i in range(1, num_agents)])

    @classmethod
    def complete(cls, num_agents: int) -> "CommGraph":
        return cls(num_agents, [(i, j) for i in range(1, num_agents + 1) for j in range(i + 1, num_agents + 1)])

    @classmethod
    def empty(cls, num_agents: int) -> "CommGraph":
        return cls(num_agents)

    @classmethod
    def from_topology(cls, topology: str, num_agents: int) -> "CommGraph":
        builders = {"path": cls.path, "complete": cls.complete, "empty": cls.empty}
        if topology not in builders:
            raise InputError(f"unknown topology '{topology}', expected one of {sorted(builders)}", topology)
        return builders[topology](num_agents)

    @property
    def num_agents(self) -> int:
        return self._num_agents

    @property
    def agents(self) -> range:
        return range(1, self._num_agents + 1)

    @property
    def edges(self) -> FrozenSet[FrozenSet[int]]:
        return self._edges

    def has_edge(self, i: int, j: int) -> bool:
        return frozenset((i, j)) in self._edges

    def neighbors(self, i: int) -> Tuple[int, ...]:
        """N^i, ascending."""
        return self._neighbors[i]

    def closed_neighborhood(self, i: int) -> Tuple[int, ...]:
        """N^i_+ = N^i ∪ {i}, ascending."""
        return tuple(sorted(self._neighbors[i] + (i,)))

    def exchange(self, own_values: Mapping[int, object]) -> Dict[int, Dict[int, object]]:
        """
        One round of first-order communication: every agent sends its own value to each neighbor.

        Args:
            own_values: the value each agent applies, keyed by agent id.

        Returns:
            for every agent, the values it knows afterwards (its own and its neighbors'), keyed by sender.
        """
        inbox: Dict[int, Dict[int, object]] = {i: {i: own_values[i]} for i in self.agents}
        for edge in self._edges:
            i, j = tuple(edge)
            inbox[j][i] = own_values[i]
            inbox[i][j] = own_values[j]
        for i, received in inbox.items():
            if set(received) != set(self.closed_neighborhood(i)):
                raise InternalError(f"agent {i} received values outside its neighborhood", sorted(received))
        return inbox
