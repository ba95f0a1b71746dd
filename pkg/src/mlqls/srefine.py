"""Scalable heuristic layout synthesis: annealed initial mapping plus
multi-SWAP lookahead routing, usable standalone or as the refinement step of
the multilevel flow.

The annealing cost charges each two-qubit gate its mapped distance, decayed by
circuit position, plus a related-qubit term pulling consecutively-interacting
qubits together. Routing searches over SWAP sequences with a trimmed best-first
frontier, scoring states by a four-term normalized lookahead heuristic; forward
and backward passes then iterate while the SWAP count keeps improving.
"""

from __future__ import annotations

import heapq
import itertools
import math
import random
from collections import deque
from dataclasses import dataclass, field

from .cluster import MappingRegion
from .model import Circuit, CouplingGraph, Mapping, build_dag, uncommon_qubits
from .verify import QlsSolution, SolutionBuilder, SwapOp, asap_depth, swap_count, verify

_MAPPER_NODES_PER_SECOND = 50_000


@dataclass
class SaConfig:
    """Annealing schedule and cost parameters for the initial mapping."""

    gate_weight_decay: float = 0.9
    iterations: int | None = None  # default: 50 * |Q|^2 moves
    initial_temp: float | None = None  # default: calibrated on a 100-move probe
    cooling: float | None = None  # default: reach T0/1000 by the last move
    region_bias: float = 0.1  # probability of proposing an out-of-region target

    def __post_init__(self) -> None:
        if not 0.0 < self.gate_weight_decay < 1.0:
            raise ValueError("gate_weight_decay must be in (0,1)")
        if not 0.0 < self.region_bias < 1.0:
            raise ValueError("region_bias must be in (0,1)")


@dataclass
class AStarConfig:
    """Search parameters for SWAP-insertion routing."""

    alpha: float = 0.5
    beta: float = 0.5
    gamma: float = 0.1
    state_threshold: int = 100  # trim the frontier beyond this many open states
    trim_keep: int = 50
    region_escape_prob: float = 0.1
    max_candidate_gates: int = 16  # cap on ready gates generating candidate SWAPs

    def __post_init__(self) -> None:
        if self.state_threshold < self.trim_keep or self.trim_keep < 1:
            raise ValueError("need state_threshold >= trim_keep >= 1")
        if min(self.alpha, self.beta, self.gamma) < 0:
            raise ValueError("weights must be non-negative")


@dataclass
class SrefineConfig:
    """Bundle of knobs for a full synthesis run."""

    sa: SaConfig = field(default_factory=SaConfig)
    astar: AStarConfig = field(default_factory=AStarConfig)
    candidates: int = 5
    mapper_first_budget: float = 10.0
    mapper_next_budget: float = 1.0
    mapper_qubit_limit: int = 100


# ---------------------------------------------------------------------------
# Annealing cost
# ---------------------------------------------------------------------------


def _cost_terms(circuit: Circuit, decay: float) -> list[tuple[float, int, int]]:
    """Weighted distance terms: one per two-qubit gate, plus one per
    (gate, parent) related-qubit pair."""
    dag = build_dag(circuit)
    terms: list[tuple[float, int, int]] = []
    for g in circuit.gates:
        if not g.is_two_qubit:
            continue
        w = decay ** dag.depth2[g.id]
        terms.append((w, g.qubits[0], g.qubits[1]))
        for pid in dag.parents2[g.id]:
            pair = uncommon_qubits(g, circuit.gates[pid])
            if pair is not None:
                terms.append((w, pair[0], pair[1]))
    return terms


def sa_cost(
    circuit: Circuit,
    mapping: Mapping,
    graph: CouplingGraph,
    cfg: SaConfig | None = None,
) -> float:
    """Distance cost of a mapping: decayed gate distances plus related-qubit
    distances for consecutive gates sharing a qubit."""
    cfg = cfg or SaConfig()
    dist = graph.dist
    pos = mapping.assignment
    return sum(w * dist[pos[a]][pos[b]] for w, a, b in _cost_terms(circuit, cfg.gate_weight_decay))


def sa_initial_mapping(
    circuit: Circuit,
    graph: CouplingGraph,
    start: Mapping,
    regions: MappingRegion | None = None,
    cfg: SaConfig | None = None,
    rng: random.Random | None = None,
) -> Mapping:
    """Simulated annealing over mappings; a move relocates one qubit to a free
    position or exchanges it with the occupant. Returns the best mapping seen.

    With regions, in-region targets are proposed with probability
    ``1 - region_bias``.
    """
    cfg = cfg or SaConfig()
    rng = rng or random.Random(0)
    n = circuit.num_qubits
    num_p = graph.num_physical
    dist = graph.dist
    terms = _cost_terms(circuit, cfg.gate_weight_decay)
    by_qubit: list[list[int]] = [[] for _ in range(n)]
    for idx, (_, a, b) in enumerate(terms):
        by_qubit[a].append(idx)
        by_qubit[b].append(idx)
    region_lists = None
    if regions is not None:
        region_lists = [sorted(regions[q]) for q in range(n)]

    pos = list(start.assignment)
    occ = [-1] * num_p
    for q, p in enumerate(pos):
        occ[p] = q
    cur = sum(w * dist[pos[a]][pos[b]] for w, a, b in terms)
    best_cost = cur
    best_pos = pos[:]
    iters = cfg.iterations if cfg.iterations is not None else 50 * n * n

    def propose() -> tuple[int, int]:
        q = rng.randrange(n)
        if region_lists is not None and rng.random() >= cfg.region_bias:
            p = region_lists[q][rng.randrange(len(region_lists[q]))]
        else:
            p = rng.randrange(num_p)
        return q, p

    def move_delta(q: int, p: int) -> tuple[float, int]:
        r = occ[p]
        affected = set(by_qubit[q])
        if r != -1:
            affected.update(by_qubit[r])
        old_p = pos[q]
        before = sum(terms[i][0] * dist[pos[terms[i][1]]][pos[terms[i][2]]] for i in affected)
        pos[q] = p
        if r != -1:
            pos[r] = old_p
        after = sum(terms[i][0] * dist[pos[terms[i][1]]][pos[terms[i][2]]] for i in affected)
        pos[q] = old_p
        if r != -1:
            pos[r] = p
        return after - before, r

    temp = cfg.initial_temp
    if temp is None:
        probe_rng = random.Random(rng.randrange(1 << 62))
        uphill = []
        for _ in range(100):
            q = probe_rng.randrange(n)
            p = probe_rng.randrange(num_p)
            if p == pos[q]:
                continue
            d, _ = move_delta(q, p)
            if d > 0:
                uphill.append(d)
        temp = (sum(uphill) / len(uphill)) / math.log(2) if uphill else 1.0
    cooling = cfg.cooling
    if cooling is None:
        cooling = (1e-3) ** (1.0 / max(iters, 1))

    for _ in range(iters):
        q, p = propose()
        if p != pos[q]:
            delta, r = move_delta(q, p)
            if delta <= 0 or rng.random() < math.exp(-delta / temp):
                old_p = pos[q]
                pos[q] = p
                occ[p] = q
                occ[old_p] = r
                if r != -1:
                    pos[r] = old_p
                cur += delta
                if cur < best_cost:
                    best_cost = cur
                    best_pos = pos[:]
        temp *= cooling
    return Mapping(tuple(best_pos))


# ---------------------------------------------------------------------------
# Region matching
# ---------------------------------------------------------------------------


def initial_matching(regions: MappingRegion, graph: CouplingGraph) -> Mapping:
    """Maximum-cardinality matching of qubits to positions inside their
    regions (augmenting paths); unmatched qubits take the nearest free
    position outside."""
    n = len(regions)
    if n > graph.num_physical:
        raise ValueError("more program qubits than physical qubits")
    adj = [sorted(regions[q]) for q in range(n)]
    match_p: dict[int, int] = {}
    match_q = [-1] * n

    def augment(q: int, seen: set[int]) -> bool:
        for p in adj[q]:
            if p in seen:
                continue
            seen.add(p)
            if p not in match_p or augment(match_p[p], seen):
                match_p[p] = q
                match_q[q] = p
                return True
        return False

    for q in range(n):
        augment(q, set())
    for q in range(n):
        if match_q[q] != -1:
            continue
        p = _nearest_free(graph, adj[q], set(match_p))
        match_p[p] = q
        match_q[q] = p
    return Mapping(tuple(match_q))


def _nearest_free(graph: CouplingGraph, seeds, taken: set[int]) -> int:
    queue = deque(sorted(seeds))
    seen = set(queue)
    while queue:
        p = queue.popleft()
        if p not in taken:
            return p
        for nb in graph.neighbors[p]:
            if nb not in seen:
                seen.add(nb)
                queue.append(nb)
    raise ValueError("no free physical qubit reachable")


# ---------------------------------------------------------------------------
# SWAP-insertion search
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AStarState:
    """Public snapshot of one search state (contract surface; the search
    itself uses a leaner internal node)."""

    swap_edge: tuple[int, int] | None
    ready: frozenset[int]
    unexecuted: frozenset[int]
    mapping: Mapping
    parent: "AStarState | None"
    g_cost: int
    h_cost: float = 0.0


def heuristic_h(
    state: AStarState,
    circuit: Circuit,
    graph: CouplingGraph,
    cfg: AStarConfig | None = None,
) -> float:
    """Four-term lookahead estimate: normalized ready-gate distance, one-hop
    child distance, related-qubit distance, and the count of gates not yet
    executed. Empty gate sets contribute zero."""
    cfg = cfg or AStarConfig()
    dag = build_dag(circuit)
    dist = graph.dist
    pos = state.mapping.assignment
    nq = circuit.num_qubits
    h = 0.0
    if state.ready:
        s = sum(
            dist[pos[circuit.gates[gid].qubits[0]]][pos[circuit.gates[gid].qubits[1]]]
            for gid in state.ready
        )
        h += s / (len(state.ready) * nq)
    onehop = {cid for gid in state.ready for cid in dag.children2[gid]}
    if onehop:
        s2 = sum(
            dist[pos[circuit.gates[gid].qubits[0]]][pos[circuit.gates[gid].qubits[1]]]
            for gid in onehop
        )
        s3 = 0
        for gid in onehop:
            for pid in dag.parents2[gid]:
                pair = uncommon_qubits(circuit.gates[gid], circuit.gates[pid])
                if pair is not None:
                    s3 += dist[pos[pair[0]]][pos[pair[1]]]
        h += (cfg.alpha * s2 + cfg.beta * s3) / (len(onehop) * nq)
    h += cfg.gamma * (len(state.ready) + len(state.unexecuted))
    return h


class _Node:
    __slots__ = (
        "pos",
        "occ",
        "ready",
        "onehop",
        "rsum",
        "osum",
        "psum",
        "exec_mask",
        "exec_count",
        "exec2",
        "indeg",
        "g_cost",
        "h",
        "parent",
        "edge",
        "done_here",
    )


class _RouteContext:
    """Static data shared by all nodes of one routing run."""

    def __init__(
        self,
        circuit: Circuit,
        graph: CouplingGraph,
        cfg: AStarConfig,
        regions: MappingRegion | None,
    ):
        self.circuit = circuit
        self.graph = graph
        self.cfg = cfg
        self.regions = regions
        self.dist = graph.dist
        self.neighbors = graph.neighbors
        self.nq = circuit.num_qubits
        self.num_gates = len(circuit.gates)
        dag = build_dag(circuit)
        self.dag = dag
        self.base_indeg = bytes(min(d, 255) for d in dag.indegrees())
        self.is2 = [g.is_two_qubit for g in circuit.gates]
        self.q2 = [g.qubits if g.is_two_qubit else None for g in circuit.gates]
        self.num2 = sum(1 for f in self.is2 if f)
        self.gates_on_qubit: list[list[int]] = [[] for _ in range(self.nq)]
        for g in circuit.gates:
            if g.is_two_qubit:
                for q in g.qubits:
                    self.gates_on_qubit[q].append(g.id)
        self.related_pairs: list[list[tuple[int, int]]] = [[] for _ in range(self.num_gates)]
        self.related_by_qubit: list[list[tuple[int, int, int]]] = [[] for _ in range(self.nq)]
        for g in circuit.gates:
            if not g.is_two_qubit:
                continue
            for pid in dag.parents2[g.id]:
                pair = uncommon_qubits(g, circuit.gates[pid])
                if pair is not None:
                    self.related_pairs[g.id].append(pair)
                    self.related_by_qubit[pair[0]].append((g.id, pair[0], pair[1]))
                    self.related_by_qubit[pair[1]].append((g.id, pair[0], pair[1]))

    # -- node construction -------------------------------------------------

    def make_root(self, m0: Mapping) -> _Node:
        node = _Node()
        node.pos = list(m0.assignment)
        node.occ = [-1] * self.graph.num_physical
        for q, p in enumerate(node.pos):
            node.occ[p] = q
        node.indeg = bytearray(self.base_indeg)
        node.exec_mask = 0
        node.exec_count = 0
        node.exec2 = 0
        node.g_cost = 0
        node.parent = None
        node.edge = None
        node.done_here = []
        seeds = [gid for gid in range(self.num_gates) if node.indeg[gid] == 0]
        self._run_closure(node, seeds)
        self._recompute_sets(node)
        node.h = self._node_h(node)
        return node

    def _run_closure(self, node: _Node, candidates: list[int]) -> None:
        """Execute every executable gate reachable from the candidate seeds."""
        queue = deque(candidates)
        while queue:
            gid = queue.popleft()
            if node.exec_mask & (1 << gid) or node.indeg[gid] != 0:
                continue
            if self.is2[gid]:
                qa, qb = self.q2[gid]
                if self.dist[node.pos[qa]][node.pos[qb]] != 1:
                    continue
            node.exec_mask |= 1 << gid
            node.exec_count += 1
            if self.is2[gid]:
                node.exec2 += 1
            node.done_here.append(gid)
            for succ in self.dag.succs[gid]:
                node.indeg[succ] -= 1
                if node.indeg[succ] == 0:
                    queue.append(succ)

    def _recompute_sets(self, node: _Node) -> None:
        ready = set()
        for gid in range(self.num_gates):
            if self.is2[gid] and node.indeg[gid] == 0 and not node.exec_mask & (1 << gid):
                ready.add(gid)
        node.ready = ready
        node.rsum = sum(
            self.dist[node.pos[self.q2[g][0]]][node.pos[self.q2[g][1]]] for g in ready
        )
        onehop = {cid for gid in ready for cid in self.dag.children2[gid]}
        node.onehop = onehop
        node.osum = sum(
            self.dist[node.pos[self.q2[g][0]]][node.pos[self.q2[g][1]]] for g in onehop
        )
        node.psum = sum(
            self.dist[node.pos[a]][node.pos[b]]
            for g in onehop
            for a, b in self.related_pairs[g]
        )

    def _node_h(self, node: _Node) -> float:
        cfg = self.cfg
        h = 0.0
        if node.ready:
            h += node.rsum / (len(node.ready) * self.nq)
        if node.onehop:
            h += (cfg.alpha * node.osum + cfg.beta * node.psum) / (len(node.onehop) * self.nq)
        h += cfg.gamma * (self.num2 - node.exec2)
        return h

    def make_child(self, node: _Node, a: int, b: int) -> _Node:
        child = _Node()
        child.pos = node.pos.copy()
        child.occ = node.occ.copy()
        qa, qb = node.occ[a], node.occ[b]
        child.occ[a], child.occ[b] = qb, qa
        if qa != -1:
            child.pos[qa] = b
        if qb != -1:
            child.pos[qb] = a
        child.parent = node
        child.edge = (min(a, b), max(a, b))
        child.g_cost = node.g_cost + 1
        child.done_here = []
        moved = [q for q in (qa, qb) if q != -1]
        touched = set()
        for q in moved:
            touched.update(self.gates_on_qubit[q])
        executable = [
            gid
            for gid in touched
            if gid in node.ready
            and self.dist[child.pos[self.q2[gid][0]]][child.pos[self.q2[gid][1]]] == 1
        ]
        if executable:
            child.indeg = bytearray(node.indeg)
            child.exec_mask = node.exec_mask
            child.exec_count = node.exec_count
            child.exec2 = node.exec2
            self._run_closure(child, executable)
            self._recompute_sets(child)
        else:
            child.indeg = node.indeg
            child.exec_mask = node.exec_mask
            child.exec_count = node.exec_count
            child.exec2 = node.exec2
            child.ready = node.ready
            child.onehop = node.onehop
            dist = self.dist
            drsum = 0
            for gid in touched:
                if gid in node.ready:
                    x, y = self.q2[gid]
                    drsum += dist[child.pos[x]][child.pos[y]] - dist[node.pos[x]][node.pos[y]]
            dosum = 0
            for gid in touched:
                if gid in node.onehop:
                    x, y = self.q2[gid]
                    dosum += dist[child.pos[x]][child.pos[y]] - dist[node.pos[x]][node.pos[y]]
            dpsum = 0
            seen_pairs = set()
            for q in moved:
                for entry in self.related_by_qubit[q]:
                    if entry[0] in node.onehop and entry not in seen_pairs:
                        seen_pairs.add(entry)
                        _, x, y = entry
                        dpsum += dist[child.pos[x]][child.pos[y]] - dist[node.pos[x]][node.pos[y]]
            child.rsum = node.rsum + drsum
            child.osum = node.osum + dosum
            child.psum = node.psum + dpsum
        child.h = self._node_h(child)
        return child

    # -- expansion ----------------------------------------------------------

    def candidate_edges(self, node: _Node) -> list[tuple[int, int]]:
        """Edges touching the target qubits of (the most urgent) ready gates."""
        ready = node.ready
        cap = self.cfg.max_candidate_gates
        if cap and len(ready) > cap:
            dist = self.dist
            pos = node.pos
            chosen = heapq.nsmallest(
                cap,
                ready,
                key=lambda gid: (dist[pos[self.q2[gid][0]]][pos[self.q2[gid][1]]], gid),
            )
        else:
            chosen = ready
        edges = set()
        for gid in chosen:
            for q in self.q2[gid]:
                p = node.pos[q]
                for nb in self.neighbors[p]:
                    edges.add((min(p, nb), max(p, nb)))
        return sorted(edges)

    def _improves(self, node: _Node, a: int, b: int) -> bool:
        """True when the swap moves some ready-gate target strictly closer to
        its partner."""
        dist = self.dist
        for q, old_p, new_p in ((node.occ[a], a, b), (node.occ[b], b, a)):
            if q == -1:
                continue
            for gid in self.gates_on_qubit[q]:
                if gid not in node.ready:
                    continue
                x, y = self.q2[gid]
                other = y if x == q else x
                po = node.pos[other]
                if dist[new_p][po] < dist[old_p][po]:
                    return True
        return False

    def expand(self, node: _Node, rng: random.Random) -> list[_Node]:
        children = []
        regions = self.regions
        for a, b in self.candidate_edges(node):
            if not self._improves(node, a, b):
                continue
            if regions is not None:
                escapes = False
                for q, new_p in ((node.occ[a], b), (node.occ[b], a)):
                    if q != -1 and new_p not in regions[q]:
                        escapes = True
                        break
                if escapes and rng.random() >= self.cfg.region_escape_prob:
                    continue
            children.append(self.make_child(node, a, b))
        return children


def astar_insert(
    circuit: Circuit,
    graph: CouplingGraph,
    m0: Mapping,
    regions: MappingRegion | None = None,
    cfg: AStarConfig | None = None,
    rng: random.Random | None = None,
) -> QlsSolution:
    """Route a circuit from a fixed initial mapping by searching over SWAP
    sequences; gates execute as soon as they become adjacent, forming blocks.

    Always returns a verified solution. If frontier trimming strands the
    search, the best partial state is committed and the cheapest SWAP is
    forced, so progress never stalls.
    """
    cfg = cfg or AStarConfig()
    rng = rng or random.Random(0)
    if circuit.num_qubits > graph.num_physical:
        raise ValueError("more program qubits than physical qubits")
    ctx = _RouteContext(circuit, graph, cfg, regions)
    builder = SolutionBuilder(ctx.num_gates, m0)
    node = ctx.make_root(m0)
    for gid in node.done_here:
        builder.execute(gid)
    forced_streak = 0
    while node.exec_count < ctx.num_gates:
        goal, partial = _episode(ctx, node, cfg, rng)
        if goal is not None:
            _commit_path(builder, node, goal)
            node = goal
            break
        _commit_path(builder, node, partial)
        node = partial
        edges = ctx.candidate_edges(node)
        forced = min(
            (ctx.make_child(node, a, b) for a, b in edges),
            key=lambda ch: (ch.h, ch.edge),
        )
        builder.add_swap(forced.edge)
        for gid in forced.done_here:
            builder.execute(gid)
        forced_streak = 0 if forced.done_here else forced_streak + 1
        node = forced
        if forced_streak > 2 * graph.num_physical:
            node = _force_nearest_gate(ctx, node, builder)
            forced_streak = 0
    assert node.exec_count == ctx.num_gates
    sol = builder.build()
    sol = QlsSolution(
        sol.block_mappings, sol.gate_block, sol.swaps, asap_depth(circuit, sol)
    )
    report = verify(circuit, graph, sol)
    if not report.ok:
        raise AssertionError(f"router produced invalid solution: {report.first_failure()}")
    return sol


def _episode(ctx: _RouteContext, root: _Node, cfg: AStarConfig, rng: random.Random):
    """One best-first search run; returns (goal, best_partial)."""
    seq = itertools.count()
    open_heap = [(root.h, -root.exec_count, next(seq), root)]
    visited = {(tuple(root.pos), root.exec_mask): 0}
    best_partial = root
    while open_heap:
        _, _, _, node = heapq.heappop(open_heap)
        key = (tuple(node.pos), node.exec_mask)
        if visited.get(key, node.g_cost) < node.g_cost:
            continue
        if node.exec_count == ctx.num_gates:
            return node, best_partial
        if (node.exec_count, -node.h) > (best_partial.exec_count, -best_partial.h):
            best_partial = node
        for child in ctx.expand(node, rng):
            ckey = (tuple(child.pos), child.exec_mask)
            prev = visited.get(ckey)
            if prev is not None and prev <= child.g_cost:
                continue
            visited[ckey] = child.g_cost
            heapq.heappush(
                open_heap,
                (child.g_cost + child.h, -child.exec_count, next(seq), child),
            )
        if len(open_heap) > cfg.state_threshold:
            open_heap = heapq.nsmallest(cfg.trim_keep, open_heap)
            heapq.heapify(open_heap)
    return None, best_partial


def _commit_path(builder: SolutionBuilder, root: _Node, target: _Node) -> None:
    chain = []
    node = target
    while node is not root:
        chain.append(node)
        node = node.parent
    for node in reversed(chain):
        builder.add_swap(node.edge)
        for gid in node.done_here:
            builder.execute(gid)


def _force_nearest_gate(ctx: _RouteContext, node: _Node, builder: SolutionBuilder) -> _Node:
    """Last-resort progress: walk the closest ready gate together along a
    shortest path, committing every SWAP."""
    dist = ctx.dist
    gid = min(
        node.ready,
        key=lambda g: (dist[node.pos[ctx.q2[g][0]]][node.pos[ctx.q2[g][1]]], g),
    )
    qa, qb = ctx.q2[gid]
    while dist[node.pos[qa]][node.pos[qb]] > 1:
        pa, pb = node.pos[qa], node.pos[qb]
        step = min(ctx.neighbors[pa], key=lambda nb: (dist[nb][pb], nb))
        node = ctx.make_child(node, pa, step)
        builder.add_swap(node.edge)
        for done in node.done_here:
            builder.execute(done)
    return node


# ---------------------------------------------------------------------------
# Forward/backward passes
# ---------------------------------------------------------------------------


def reverse_solution(sol: QlsSolution) -> QlsSolution:
    """Turn a solution of the reversed circuit into one of the original:
    blocks reverse, gate blocks mirror, gap swaps replay backwards."""
    nb = sol.num_blocks
    ng = len(sol.gate_block)
    mappings = tuple(reversed(sol.block_mappings))
    gate_block = tuple((nb - 1) - sol.gate_block[ng - 1 - i] for i in range(ng))
    by_gap: dict[int, list[tuple[int, int]]] = {}
    for sw in sol.swaps:
        by_gap.setdefault(sw.gap, []).append(sw.edge)
    swaps = []
    for new_gap in range(nb - 1):
        old_gap = nb - 2 - new_gap
        for edge in reversed(by_gap.get(old_gap, [])):
            swaps.append(SwapOp(edge, new_gap))
    return QlsSolution(mappings, gate_block, tuple(swaps), None)


def forward_backward(
    circuit: Circuit,
    graph: CouplingGraph,
    m0: Mapping,
    regions: MappingRegion | None = None,
    cfg: AStarConfig | None = None,
    rng: random.Random | None = None,
    max_passes: int = 20,
) -> QlsSolution:
    """Alternate forward and reversed compilation passes, each starting from
    the previous final mapping, until the SWAP count stops improving; the best
    pass (re-oriented forward) wins."""
    rng = rng or random.Random(0)
    rev = circuit.reversed()
    mapping = m0
    best: QlsSolution | None = None
    best_n = None
    prev = None
    forward = True
    for _ in range(max_passes):
        circ = circuit if forward else rev
        sol = astar_insert(circ, graph, mapping, regions, cfg, rng)
        n = swap_count(sol)
        oriented = sol if forward else reverse_solution(sol)
        if best_n is None or n < best_n:
            best, best_n = oriented, n
        if prev is not None and n >= prev:
            break
        prev = n
        mapping = sol.block_mappings[-1]
        forward = not forward
    assert best is not None
    if best.depth is None:
        best = QlsSolution(
            best.block_mappings, best.gate_block, best.swaps, asap_depth(circuit, best)
        )
    return best


# ---------------------------------------------------------------------------
# Constraint-growing initial mapper
# ---------------------------------------------------------------------------


class _BudgetExhausted(Exception):
    pass


def initial_mapper(
    circuit: Circuit,
    graph: CouplingGraph,
    budget_seconds: float = 10.0,
    rng: random.Random | None = None,
) -> Mapping | None:
    """Grow a set of gate-adjacency constraints in random order, keeping each
    gate only while the conjunction stays satisfiable; returns the satisfying
    mapping with the lowest annealing cost.

    Satisfiability is decided by backtracking embedding search with a
    deterministic node budget derived from ``budget_seconds``.
    """
    mapping, _, _ = _initial_mapper_ex(circuit, graph, budget_seconds, rng)
    return mapping


def _initial_mapper_ex(
    circuit: Circuit,
    graph: CouplingGraph,
    budget_seconds: float,
    rng: random.Random | None,
) -> tuple[Mapping | None, int, int]:
    rng = rng or random.Random(0)
    if circuit.num_qubits > graph.num_physical:
        raise ValueError("more program qubits than physical qubits")
    order = [g for g in circuit.gates if g.is_two_qubit]
    rng.shuffle(order)
    budget = [max(1000, int(budget_seconds * _MAPPER_NODES_PER_SECOND))]
    required: dict[int, set[int]] = {}
    assign: dict[int, int] = {}
    accepted_pairs: set[tuple[int, int]] = set()
    best_map: Mapping | None = None
    best_cost = math.inf
    total = len({(min(g.qubits), max(g.qubits)) for g in order})

    def consider(candidate: dict[int, int]) -> None:
        nonlocal best_map, best_cost
        full = _extend_partial(candidate, circuit.num_qubits, graph)
        cost = sa_cost(circuit, full, graph)
        if cost < best_cost:
            best_cost = cost
            best_map = full

    for gate in order:
        a, b = gate.qubits
        pair = (min(a, b), max(a, b))
        if pair in accepted_pairs:
            continue
        trial = {q: set(nbrs) for q, nbrs in required.items()}
        trial.setdefault(a, set()).add(b)
        trial.setdefault(b, set()).add(a)
        solution = _embed(trial, graph, assign, budget)
        if solution is not None:
            accepted_pairs.add(pair)
            required = trial
            assign = solution
            consider(assign)
        if budget[0] <= 0:
            break
    if best_map is None and not order:
        best_map = _extend_partial({}, circuit.num_qubits, graph)
    return best_map, len(accepted_pairs), total


def _embed(
    constraints: dict[int, set[int]],
    graph: CouplingGraph,
    hint: dict[int, int],
    budget: list[int],
) -> dict[int, int] | None:
    """Backtracking search for an injective placement making every constrained
    pair adjacent. Treats budget exhaustion as unsatisfiable."""
    variables = sorted(constraints)
    if not variables:
        return {}
    assign: dict[int, int] = {}
    used: set[int] = set()
    nbr_sets = [set(ns) for ns in graph.neighbors]

    def pick() -> int | None:
        best_q, best_key = None, None
        for q in variables:
            if q in assign:
                continue
            placed = sum(1 for r in constraints[q] if r in assign)
            key = (-placed, -len(constraints[q]), q)
            if best_key is None or key < best_key:
                best_q, best_key = q, key
        return best_q

    def candidates(q: int) -> list[int]:
        placed = [assign[r] for r in constraints[q] if r in assign]
        if placed:
            cands = set.intersection(*(nbr_sets[p] for p in placed)) - used
        else:
            cands = set(range(graph.num_physical)) - used
        out = sorted(cands)
        hinted = hint.get(q)
        if hinted in cands:
            out.remove(hinted)
            out.insert(0, hinted)
        return out

    def bt() -> bool:
        q = pick()
        if q is None:
            return True
        for p in candidates(q):
            budget[0] -= 1
            if budget[0] <= 0:
                raise _BudgetExhausted
            assign[q] = p
            used.add(p)
            if bt():
                return True
            del assign[q]
            used.discard(p)
        return False

    try:
        return dict(assign) if bt() else None
    except _BudgetExhausted:
        return None


def _extend_partial(partial: dict[int, int], num_qubits: int, graph: CouplingGraph) -> Mapping:
    """Total injective mapping extending a partial one; spare qubits take the
    free positions closest to the placed ones."""
    taken = set(partial.values())
    if partial:
        seeds = sorted(taken)
    else:
        seeds = [0]
    order = []
    seen = set(seeds)
    queue = deque(seeds)
    while queue:
        p = queue.popleft()
        order.append(p)
        for nb in graph.neighbors[p]:
            if nb not in seen:
                seen.add(nb)
                queue.append(nb)
    free = [p for p in order if p not in taken]
    it = iter(free)
    assignment = []
    for q in range(num_qubits):
        assignment.append(partial[q] if q in partial else next(it))
    return Mapping(tuple(assignment))


# ---------------------------------------------------------------------------
# Full synthesis run
# ---------------------------------------------------------------------------


def srefine_run(
    circuit: Circuit,
    graph: CouplingGraph,
    regions: MappingRegion | None = None,
    cfgs: SrefineConfig | None = None,
    rng: random.Random | None = None,
) -> QlsSolution:
    """Synthesize with several independently-seeded candidate pipelines and
    keep the best verified solution.

    Standalone mode (no regions) seeds candidates from the constraint-growing
    mapper (small circuits) or random placements; refinement mode seeds from
    the region matching. Each candidate runs annealing plus forward/backward
    routing. Ties break toward the earlier candidate, so runs are reproducible
    per seed.
    """
    cfgs = cfgs or SrefineConfig()
    rng = rng or random.Random(0)
    if circuit.num_qubits > graph.num_physical:
        raise ValueError("more program qubits than physical qubits")
    best: QlsSolution | None = None
    best_n = None
    for i in range(cfgs.candidates):
        crng = random.Random(rng.randrange(1 << 62))
        embedded_all = False
        if regions is None:
            start = None
            if circuit.num_qubits < cfgs.mapper_qubit_limit:
                budget = cfgs.mapper_first_budget if i == 0 else cfgs.mapper_next_budget
                start, accepted, total = _initial_mapper_ex(circuit, graph, budget, crng)
                embedded_all = start is not None and accepted == total
            if start is None:
                start = Mapping(tuple(crng.sample(range(graph.num_physical), circuit.num_qubits)))
        else:
            start = initial_matching(regions, graph)
        annealed = sa_initial_mapping(circuit, graph, start, regions, cfgs.sa, crng)
        candidates = [annealed]
        # A start that already executes every gate routes SWAP-free; keep it
        # alongside the annealed mapping rather than risk losing it.
        if embedded_all and annealed.assignment != start.assignment:
            candidates.append(start)
        for m in candidates:
            sol = forward_backward(circuit, graph, m, regions, cfgs.astar, crng)
            n = swap_count(sol)
            if best_n is None or n < best_n:
                best, best_n = sol, n
            if best_n == 0:
                break
        if best_n == 0:
            break
    assert best is not None
    return best
