"""Seeded Monte Carlo realization of the stochastic timing model.

Sampling is counter-based: each (seed, node id) pair owns a Philox stream
whose counter is the replication index, and the per-replication block
supplies that node's uniforms (word 0 drives communication, word 1 drives
computation).  Consequences:

* the draw for replication r is a pure function of (seed, r, node id),
  independent of draw order, chunking, or thread count;
* two plans simulated under the same seed share per-node randomness
  (common random numbers), so plan comparisons are variance-reduced and
  adding spare nodes can only reduce the realized completion time;
* replication ranges can be evaluated in parallel and merged without
  affecting a single bit of the output.

Communication samples a geometric attempt count per direction (shared
between upload and download), computation adds an exponential tail on
top of the deterministic sub-task time.  Decoding at the server is
modeled as zero-cost.
"""

import hashlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .model import CodePlan, Fleet, NodeProfile

_CHUNK = 32768  # replications per work unit; fixed so chunk sums never move


@dataclass(frozen=True)
class RngStream:
    """Addresses one replication's randomness under a master seed."""

    seed: int
    replication: int

    def __post_init__(self) -> None:
        if self.replication < 0:
            raise ValueError(f"replication must be >= 0, got {self.replication}")


@dataclass(frozen=True)
class NodeBreakdown:
    node_id: str
    comm: float
    det_comp: float
    stoch_comp: float
    total: float


@dataclass(frozen=True)
class SimOutcome:
    """One realized replication: completion time plus per-node detail."""

    realized_T: float
    breakdown: tuple[NodeBreakdown, ...]  # in plan.selected order
    finisher_order: tuple[str, ...]  # node ids sorted by realized total


@dataclass(frozen=True)
class NodeShare:
    """Mean fraction of a node's realized total spent in each component."""

    node_id: str
    comm: float
    det_comp: float
    stoch_comp: float


@dataclass(frozen=True)
class SimStats:
    count: int
    mean: float
    std: float
    min: float
    max: float
    p50: float
    p90: float
    p99: float
    node_shares: tuple[NodeShare, ...]

    def __post_init__(self) -> None:
        if self.count < 1:
            raise ValueError("SimStats needs at least one replication")
        if not (self.min <= self.p50 <= self.p90 <= self.p99 <= self.max):
            raise ValueError("quantiles out of order")


def _node_key(seed: int, node_id: str) -> int:
    digest = hashlib.blake2b(
        f"{seed}\x1f{node_id}".encode("utf-8"), digest_size=16
    ).digest()
    return int.from_bytes(digest, "little")


def _node_components(
    node: NodeProfile, D: float, k: int, seed: int, start: int, count: int
):
    """Comm, deterministic-comp and stochastic-comp times for replications
    start..start+count-1 of one node.  All sampling funnels through here so
    scalar and batched paths are bit-identical."""
    bg = np.random.Philox(key=_node_key(seed, node.id), counter=start)
    words = bg.random_raw(4 * count).reshape(count, 4)
    # (0, 1) uniforms from the top 53 bits; +0.5 keeps both endpoints open
    u = ((words >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53
    u_comm, u_comp = u[:, 0], u[:, 1]

    if node.p == 1.0:
        attempts = np.ones(count)
    else:
        attempts = np.maximum(1.0, np.ceil(np.log(u_comm) / np.log1p(-node.p)))
    comm = 2.0 * node.tau * attempts

    d = D / k
    det = d / node.eta
    rate = node.alpha * node.eta / d
    stoch = -np.log(u_comp) / rate
    return comm, det, stoch


def sample_comm_time(node: NodeProfile, rng: RngStream) -> float:
    """One round-trip communication time: tau * 2G with G geometric(p).

    Upload and download share the same attempt count G.
    """
    comm, _, _ = _node_components(node, 1.0, 1, rng.seed, rng.replication, 1)
    return float(comm[0])


def sample_comp_time(node: NodeProfile, D: float, k: int, rng: RngStream) -> float:
    """One computation time: d/eta plus an Exp(alpha*eta/d) tail, d = D/k."""
    if not D > 0:
        raise ValueError(f"task size must be > 0, got {D}")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    _, det, stoch = _node_components(node, D, k, rng.seed, rng.replication, 1)
    return float(det + stoch[0])


def first_k_completion(totals, k: int) -> float:
    """k-th smallest of the realized per-node totals: the moment the
    server holds enough results to decode."""
    values = sorted(totals)
    if not 1 <= k <= len(values):
        raise ValueError(f"need 1 <= k <= {len(values)}, got k={k}")
    return values[k - 1]


def _check_plan(fleet: Fleet, plan: CodePlan) -> list[NodeProfile]:
    if plan.n > fleet.size:
        raise ValueError(f"plan selects {plan.n} nodes but fleet has {fleet.size}")
    return [fleet.node(node_id) for node_id in plan.selected]


def simulate_once(fleet: Fleet, plan: CodePlan, D: float, rng: RngStream) -> SimOutcome:
    """Realize one replication of a plan over its n selected nodes."""
    nodes = _check_plan(fleet, plan)
    breakdown = []
    for node in nodes:
        comm, det, stoch = _node_components(
            node, D, plan.k, rng.seed, rng.replication, 1
        )
        total = comm + det + stoch
        breakdown.append(
            NodeBreakdown(
                node_id=node.id,
                comm=float(comm[0]),
                det_comp=float(det),
                stoch_comp=float(stoch[0]),
                total=float(total[0]),
            )
        )
    realized = first_k_completion([b.total for b in breakdown], plan.k)
    order = sorted(range(len(breakdown)), key=lambda i: (breakdown[i].total, i))
    return SimOutcome(
        realized_T=realized,
        breakdown=tuple(breakdown),
        finisher_order=tuple(breakdown[i].node_id for i in order),
    )


def _replication_chunk(
    nodes: list[NodeProfile], D: float, k: int, seed: int, start: int, count: int
):
    comm = np.empty((len(nodes), count))
    totals = np.empty((len(nodes), count))
    stoch = np.empty((len(nodes), count))
    det = np.empty(len(nodes))
    for i, node in enumerate(nodes):
        comm_i, det_i, stoch_i = _node_components(node, D, k, seed, start, count)
        comm[i] = comm_i
        det[i] = det_i
        stoch[i] = stoch_i
        totals[i] = comm_i + det_i + stoch_i
    realized = np.partition(totals, k - 1, axis=0)[k - 1]
    return realized, comm, det, stoch, totals


def realized_times(
    fleet: Fleet,
    plan: CodePlan,
    D: float,
    reps: int,
    seed: int,
    workers: int = 1,
) -> np.ndarray:
    """Realized completion times for replications 0..reps-1."""
    realized, _ = _run(fleet, plan, D, reps, seed, workers, want_shares=False)
    return realized


def _run(fleet, plan, D, reps, seed, workers, want_shares):
    if reps < 1:
        raise ValueError(f"need at least 1 replication, got {reps}")
    nodes = _check_plan(fleet, plan)
    spans = [(s, min(_CHUNK, reps - s)) for s in range(0, reps, _CHUNK)]

    def work(span):
        return _replication_chunk(nodes, D, plan.k, seed, span[0], span[1])

    if workers > 1 and len(spans) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(work, spans))
    else:
        chunks = [work(span) for span in spans]

    realized = np.concatenate([c[0] for c in chunks])
    if not want_shares:
        return realized, None

    comm = np.concatenate([c[1] for c in chunks], axis=1)
    stoch = np.concatenate([c[3] for c in chunks], axis=1)
    totals = np.concatenate([c[4] for c in chunks], axis=1)
    det = chunks[0][2]
    shares = []
    for i, node in enumerate(nodes):
        shares.append(
            NodeShare(
                node_id=node.id,
                comm=float(np.mean(comm[i] / totals[i])),
                det_comp=float(np.mean(det[i] / totals[i])),
                stoch_comp=float(np.mean(stoch[i] / totals[i])),
            )
        )
    return realized, tuple(shares)


def run_replications(
    fleet: Fleet,
    plan: CodePlan,
    D: float,
    reps: int,
    seed: int,
    workers: int = 1,
) -> SimStats:
    """Aggregate ``reps`` independent replications into summary statistics.

    Output is a pure function of (fleet, plan, D, reps, seed) and does not
    depend on ``workers``.
    """
    realized, shares = _run(fleet, plan, D, reps, seed, workers, want_shares=True)
    q50, q90, q99 = np.quantile(realized, [0.5, 0.9, 0.99])
    return SimStats(
        count=reps,
        mean=float(np.mean(realized)),
        std=float(np.std(realized, ddof=1)) if reps > 1 else 0.0,
        min=float(np.min(realized)),
        max=float(np.max(realized)),
        p50=float(q50),
        p90=float(q90),
        p99=float(q99),
        node_shares=shares,
    )
