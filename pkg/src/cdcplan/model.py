"""Domain types and closed-form expected-time formulas.

An edge fleet is a set of nodes with heterogeneous communication and
computation characteristics.  A task of size ``D`` computations is split
into ``k`` equal sub-tasks of size ``d = D / k``, encoded into ``n >= k``
coded sub-tasks, and dispatched to ``n`` selected nodes; the result is
recoverable as soon as the first ``k`` of them finish.

Per node, the expected time to finish one sub-task decomposes as

    expected comm time   2 * tau / p          (round trip, geometric retries)
    expected comp time   D / (k * eta) + D / (k * eta * alpha)
                         (deterministic part plus the mean of the
                         exponential stochastic part)

and the expected completion time of a plan is the maximum expected node
time over the ``k`` designated nodes.
"""

from dataclasses import dataclass


class PlanMismatchError(ValueError):
    """A CodePlan references nodes that do not exist in the fleet."""


@dataclass(frozen=True)
class NodeProfile:
    """Communication and computation parameters of one edge node.

    Attributes:
        id: opaque unique identifier.
        tau: seconds per single transmission attempt (one direction).
        p: per-attempt transmission success probability.
        eta: computations per second.
        alpha: stochastic computation coefficient; the random part of the
            compute time for a sub-task of size d is exponential with
            rate alpha * eta / d.
    """

    id: str
    tau: float
    p: float
    eta: float
    alpha: float

    def __post_init__(self) -> None:
        if not self.tau > 0:
            raise ValueError(f"node {self.id!r}: tau must be > 0, got {self.tau}")
        if not 0 < self.p <= 1:
            raise ValueError(f"node {self.id!r}: p must be in (0, 1], got {self.p}")
        if not self.eta > 0:
            raise ValueError(f"node {self.id!r}: eta must be > 0, got {self.eta}")
        if not self.alpha > 0:
            raise ValueError(f"node {self.id!r}: alpha must be > 0, got {self.alpha}")


@dataclass(frozen=True)
class Fleet:
    """Ordered collection of candidate nodes.

    The order of ``nodes`` is the canonical iteration order; every
    deterministic tie-break downstream (node selection, plan reporting)
    follows it.
    """

    nodes: tuple[NodeProfile, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "nodes", tuple(self.nodes))
        if len(self.nodes) < 1:
            raise ValueError("fleet must contain at least one node")
        ids = [node.id for node in self.nodes]
        if len(set(ids)) != len(ids):
            dupes = sorted({i for i in ids if ids.count(i) > 1})
            raise ValueError(f"duplicate node ids in fleet: {dupes}")

    @property
    def size(self) -> int:
        return len(self.nodes)

    def __len__(self) -> int:
        return len(self.nodes)

    def __iter__(self):
        return iter(self.nodes)

    def node(self, node_id: str) -> NodeProfile:
        for node in self.nodes:
            if node.id == node_id:
                return node
        raise PlanMismatchError(f"node id {node_id!r} not in fleet")


@dataclass(frozen=True)
class TaskSpec:
    """A computing task: an identifier and its total size in computations."""

    id: str
    size: float

    def __post_init__(self) -> None:
        if not self.size > 0:
            raise ValueError(f"task {self.id!r}: size must be > 0, got {self.size}")


@dataclass(frozen=True)
class CodePlan:
    """A joint code and node-selection decision.

    ``selected`` is the ordered list of the ``n`` nodes that receive coded
    sub-tasks; ``designated`` is the subset of ``k`` nodes whose completion
    the expected-value objective waits for.  ``expected_T`` is the maximum
    expected node time over the designated set.
    """

    k: int
    n: int
    selected: tuple[str, ...]
    designated: tuple[str, ...]
    expected_T: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "selected", tuple(self.selected))
        object.__setattr__(self, "designated", tuple(self.designated))
        if not 1 <= self.k <= self.n:
            raise ValueError(f"need 1 <= k <= n, got k={self.k}, n={self.n}")
        if len(self.selected) != self.n:
            raise ValueError(
                f"selected holds {len(self.selected)} ids but n={self.n}"
            )
        if len(self.designated) != self.k:
            raise ValueError(
                f"designated holds {len(self.designated)} ids but k={self.k}"
            )
        if len(set(self.selected)) != len(self.selected):
            raise ValueError("selected ids must be unique")
        if not set(self.designated) <= set(self.selected):
            raise ValueError("designated must be a subset of selected")


def expected_comm_time(node: NodeProfile) -> float:
    """Expected round-trip communication time: 2 * tau / p.

    One upload and one download, each needing a geometric number of
    attempts with success probability p and tau seconds per attempt.
    """
    return 2.0 * node.tau / node.p


def expected_comp_time(node: NodeProfile, D: float, k: int) -> float:
    """Expected computation time for a sub-task of size D / k.

    Deterministic part D / (k * eta) plus the mean D / (k * eta * alpha)
    of the exponential stochastic part.
    """
    d = D / k
    return d / node.eta + d / (node.eta * node.alpha)


def expected_node_time(node: NodeProfile, D: float, k: int) -> float:
    """Expected total time for one node: comm + comp."""
    return expected_comm_time(node) + expected_comp_time(node, D, k)


def plan_objective(fleet: Fleet, plan: CodePlan, D: float) -> float:
    """Expected completion time of a plan: max expected node time over
    the designated set.

    Raises PlanMismatchError if the plan references ids missing from the
    fleet, and ValueError if the plan does not fit the fleet size.
    """
    if plan.n > fleet.size:
        raise ValueError(f"plan selects {plan.n} nodes but fleet has {fleet.size}")
    return max(
        expected_node_time(fleet.node(node_id), D, plan.k)
        for node_id in plan.designated
    )
