"""Exact joint code/node-selection solvers and baseline policies.

The objective is separable in k: once k is fixed, the best designated set
is simply the k nodes with the smallest expected node time at that k, so
the global optimum is found by sweeping k = 1..N.  A subset-enumerating
brute-force solver is kept alongside as a validation oracle.
"""

import itertools
import math
from dataclasses import dataclass

from .lambertw import lambert_w_m1
from .model import CodePlan, Fleet, expected_node_time

BRUTEFORCE_MAX_NODES = 20

STATIC_ROUNDING_MODES = ("half-up", "ceil", "floor")


@dataclass(frozen=True)
class SweepRecord:
    """Best achievable expected time for one value of k.

    ``selection`` holds the k fleet-wide fastest nodes at this k (ties by
    fleet order), ordered fastest first; ``best_T`` is the slowest of them.
    """

    k: int
    best_T: float
    selection: tuple[str, ...]


def _check_task_size(D: float) -> None:
    if not D > 0:
        raise ValueError(f"task size must be > 0, got {D}")


def k_sweep(fleet: Fleet, D: float) -> list[SweepRecord]:
    """Best designated set and objective for every k = 1..N."""
    _check_task_size(D)
    records = []
    for k in range(1, fleet.size + 1):
        times = [expected_node_time(node, D, k) for node in fleet]
        # stable sort: equal times keep fleet order
        order = sorted(range(fleet.size), key=times.__getitem__)
        chosen = order[:k]
        records.append(
            SweepRecord(
                k=k,
                best_T=times[chosen[-1]],
                selection=tuple(fleet.nodes[i].id for i in chosen),
            )
        )
    return records


def solve_exact(fleet: Fleet, D: float) -> CodePlan:
    """Globally optimal plan over all (k, designated set) choices.

    Ties across k break toward smaller k.  The returned plan has n = k
    (spare nodes never improve the expected objective); use inflate_plan
    to add redundancy for simulation studies.  The per-k table behind the
    decision is available from k_sweep.
    """
    best: SweepRecord | None = None
    for record in k_sweep(fleet, D):
        if best is None or record.best_T < best.best_T:
            best = record
    return CodePlan(
        k=best.k,
        n=best.k,
        selected=best.selection,
        designated=best.selection,
        expected_T=best.best_T,
    )


def solve_bruteforce(fleet: Fleet, D: float) -> CodePlan:
    """Exhaustive oracle: enumerate every k and every k-subset.

    Only intended for validation; refuses fleets larger than
    BRUTEFORCE_MAX_NODES.
    """
    _check_task_size(D)
    if fleet.size > BRUTEFORCE_MAX_NODES:
        raise ValueError(
            f"brute force is limited to {BRUTEFORCE_MAX_NODES} nodes, "
            f"fleet has {fleet.size}"
        )
    best_T = math.inf
    best_k = 0
    best_combo: tuple[int, ...] = ()
    for k in range(1, fleet.size + 1):
        times = [expected_node_time(node, D, k) for node in fleet]
        for combo in itertools.combinations(range(fleet.size), k):
            T = max(times[i] for i in combo)
            if T < best_T:
                best_T = T
                best_k = k
                best_combo = combo
    ids = tuple(fleet.nodes[i].id for i in best_combo)
    return CodePlan(
        k=best_k, n=best_k, selected=ids, designated=ids, expected_T=best_T
    )


def baseline_myopic(fleet: Fleet, D: float) -> CodePlan:
    """Use every node: k = n = N."""
    _check_task_size(D)
    N = fleet.size
    ids = tuple(node.id for node in fleet)
    T = max(expected_node_time(node, D, N) for node in fleet)
    return CodePlan(k=N, n=N, selected=ids, designated=ids, expected_T=T)


def baseline_onenode(fleet: Fleet, D: float) -> CodePlan:
    """Send the whole task to the single fastest node: k = n = 1."""
    _check_task_size(D)
    times = [expected_node_time(node, D, 1) for node in fleet]
    i = min(range(fleet.size), key=times.__getitem__)
    ids = (fleet.nodes[i].id,)
    return CodePlan(k=1, n=1, selected=ids, designated=ids, expected_T=times[i])


def static_code_k(fleet: Fleet, rounding: str = "half-up") -> int:
    """Code dimension of the static policy, independent of the task size.

    The fleet-average straggling coefficient lambda = mean(alpha) sets a
    target fraction 1 + 1/W_-1(-exp(-lambda-1)) of the fleet to wait for;
    the fraction is scaled by N, rounded per ``rounding`` and clamped to
    [1, N].
    """
    if rounding not in STATIC_ROUNDING_MODES:
        raise ValueError(
            f"rounding must be one of {STATIC_ROUNDING_MODES}, got {rounding!r}"
        )
    lam = sum(node.alpha for node in fleet) / fleet.size
    x = -math.exp(-lam - 1.0)
    if x == 0.0:
        # exp underflow for huge alpha: W_-1 -> -inf, ratio -> 1
        ratio = 1.0
    else:
        ratio = 1.0 + 1.0 / lambert_w_m1(x)
    raw = ratio * fleet.size
    if rounding == "half-up":
        k = math.floor(raw + 0.5)
    elif rounding == "ceil":
        k = math.ceil(raw)
    else:
        k = math.floor(raw)
    return min(max(k, 1), fleet.size)


def baseline_static(fleet: Fleet, D: float, rounding: str = "half-up") -> CodePlan:
    """Static code dimension plus this toolkit's node selection.

    k comes from static_code_k; the designated set is then the k fastest
    nodes at that k, exactly as in the exact solver's fixed-k step.
    """
    _check_task_size(D)
    k = static_code_k(fleet, rounding)
    record = k_sweep(fleet, D)[k - 1]
    return CodePlan(
        k=k,
        n=k,
        selected=record.selection,
        designated=record.selection,
        expected_T=record.best_T,
    )


def inflate_plan(fleet: Fleet, plan: CodePlan, D: float, extra: int) -> CodePlan:
    """Add up to ``extra`` spare nodes to a plan's selected set.

    Spares are the next-fastest non-selected nodes at the plan's k (ties
    by fleet order).  The designated set and expected objective are
    unchanged; redundancy only matters under realized randomness.
    """
    if extra <= 0:
        return plan
    taken = set(plan.selected)
    candidates = [
        (expected_node_time(node, D, plan.k), i)
        for i, node in enumerate(fleet)
        if node.id not in taken
    ]
    candidates.sort()
    added = tuple(fleet.nodes[i].id for _, i in candidates[:extra])
    selected = plan.selected + added
    return CodePlan(
        k=plan.k,
        n=len(selected),
        selected=selected,
        designated=plan.designated,
        expected_T=plan.expected_T,
    )
