"""Exact block-based layout synthesis for small instances.

``solve_exact`` sweeps block count and SWAP budget in Pareto order, running a
depth-first branch-and-bound per block count: program qubits are bound to
physical positions lazily when a gate first needs them, SWAPs are branched
inside inter-block gaps, and the incumbent SWAP count prunes the rest. The
sweep stops once the incumbent is provably optimal (S <= B - 1).

``optimal_oracle`` is a deliberately independent check: exhaustive BFS over
(total mapping, executed set) states with no pruning beyond visited-state
deduplication. Keep it that way; it is the reference the solver is tested
against.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass

from .model import Circuit, CouplingGraph, Mapping, build_dag
from .verify import QlsSolution, SolutionBuilder, SwapOp, asap_depth, swap_count, verify


class InstanceTooLarge(ValueError):
    """Instance exceeds the configured exact-solver limits."""


@dataclass
class ExactConfig:
    """Size limits and runtime budgets for the exact solver."""

    max_qubits: int = 16
    max_gates: int = 50
    post_first_solution_budget: float = 100.0
    overall_budget: float = 300.0

    def __post_init__(self) -> None:
        if self.post_first_solution_budget <= 0 or self.overall_budget <= 0:
            raise ValueError("budgets must be positive")


@dataclass
class ExactResult:
    solution: QlsSolution
    proven_optimal: bool
    timed_out: bool

    @property
    def swaps(self) -> int:
        return swap_count(self.solution)


class _Deadline(Exception):
    pass


def solve_exact(
    circuit: Circuit,
    graph: CouplingGraph,
    cfg: ExactConfig | None = None,
    warm_start: QlsSolution | None = None,
) -> ExactResult:
    """Minimize inserted SWAPs by branch and bound under a runtime budget.

    Always returns a verified solution; ``timed_out`` marks best-so-far results
    whose optimality was not proven before the budget ran out. A verified
    ``warm_start`` solution tightens the incumbent from the outset.
    """
    cfg = cfg or ExactConfig()
    if circuit.num_qubits > cfg.max_qubits or len(circuit.gates) > cfg.max_gates:
        raise InstanceTooLarge(
            f"{circuit.num_qubits} qubits / {len(circuit.gates)} gates exceed "
            f"limits ({cfg.max_qubits}, {cfg.max_gates})"
        )
    if circuit.num_qubits > graph.num_physical:
        raise ValueError("more program qubits than physical qubits")

    incumbent = _greedy_route(circuit, graph)
    if (
        warm_start is not None
        and swap_count(warm_start) < swap_count(incumbent)
        and verify(circuit, graph, warm_start).ok
    ):
        incumbent = warm_start
    best_s = swap_count(incumbent)
    start = time.monotonic()
    overall_deadline = start + cfg.overall_budget
    first_solution_at: float | None = None
    timed_out = False
    proven = False
    searcher = _BlockSearch(circuit, graph)
    b = 1
    while best_s > b - 1:
        deadline = overall_deadline
        if first_solution_at is not None:
            deadline = min(deadline, first_solution_at + cfg.post_first_solution_budget)
        try:
            found = searcher.search(max_blocks=b, swap_cap=best_s - 1, deadline=deadline)
        except _Deadline:
            timed_out = True
            break
        if found is not None:
            incumbent = found
            best_s = swap_count(found)
            if first_solution_at is None:
                first_solution_at = time.monotonic()
        b += 1
    else:
        proven = True
    depth = asap_depth(circuit, incumbent)
    incumbent = QlsSolution(
        incumbent.block_mappings, incumbent.gate_block, incumbent.swaps, depth
    )
    report = verify(circuit, graph, incumbent)
    if not report.ok:  # internal bug guard; solutions must always verify
        raise AssertionError(f"exact solver produced invalid solution: {report.first_failure()}")
    return ExactResult(incumbent, proven, timed_out)


# ---------------------------------------------------------------------------
# Branch and bound
# ---------------------------------------------------------------------------


class _BlockSearch:
    """DFS over lazy qubit bindings and per-gap SWAP sequences."""

    _TICK_MASK = 0x1FF

    def __init__(self, circuit: Circuit, graph: CouplingGraph):
        self.circuit = circuit
        self.graph = graph
        self.dist = graph.dist
        self.neighbors = graph.neighbors
        self.edge_list = graph.sorted_edges()
        self.dag = build_dag(circuit)
        self.num_gates = len(circuit.gates)
        self.gate_qubits = [g.qubits for g in circuit.gates]
        self.is2 = [g.is_two_qubit for g in circuit.gates]
        deg = [0] * circuit.num_qubits
        for g in circuit.gates:
            if g.is_two_qubit:
                for q in g.qubits:
                    deg[q] += 1
        self.anchor = max(range(circuit.num_qubits), key=lambda q: (deg[q], -q)) if deg else 0
        self.anchor_positions = _symmetry_positions(graph) or list(range(graph.num_physical))

    def search(
        self, max_blocks: int, swap_cap: int, deadline: float
    ) -> QlsSolution | None:
        """Best solution using at most ``max_blocks`` blocks and ``swap_cap``
        SWAPs, or None. Raises _Deadline when the clock runs out."""
        if swap_cap < 0:
            return None
        self.max_blocks = max_blocks
        self.swap_cap = swap_cap
        self.deadline = deadline
        self.best: QlsSolution | None = None
        self.occ = [-1] * self.graph.num_physical
        self.pos = [-1] * self.circuit.num_qubits
        self.indeg = self.dag.indegrees()
        self.executed = [False] * self.num_gates
        self.exec_count = 0
        self.ready2: set[int] = set()
        self.deferred: set[int] = set()
        self.gate_block = [-1] * self.num_gates
        self.swaps: list[SwapOp] = []
        self.visited: dict = {}
        self._nodes = 0
        for gid in range(self.num_gates):
            if self.indeg[gid] == 0 and self.is2[gid]:
                self.ready2.add(gid)
        if any(self.is2):
            for p in self.anchor_positions:
                self._bind(self.anchor, p)
                self._dfs_block(0)
                self._unbind(self.anchor, p)
        else:
            self._dfs_block(0)
        return self.best

    # -- primitive state updates ------------------------------------------

    def _bind(self, q: int, p: int) -> None:
        self.pos[q] = p
        self.occ[p] = q

    def _unbind(self, q: int, p: int) -> None:
        self.pos[q] = -1
        self.occ[p] = -1

    def _tick(self) -> None:
        self._nodes += 1
        if (self._nodes & self._TICK_MASK) == 0 and time.monotonic() > self.deadline:
            raise _Deadline

    def _execute(self, gid: int, block: int, undo: list) -> None:
        self.executed[gid] = True
        self.exec_count += 1
        self.gate_block[gid] = block
        if self.is2[gid]:
            self.ready2.discard(gid)
        undo.append(("exec", gid))
        for succ in self.dag.succs[gid]:
            self.indeg[succ] -= 1
            undo.append(("indeg", succ))
            if self.indeg[succ] == 0 and self.is2[succ]:
                self.ready2.add(succ)
                undo.append(("ready", succ))

    def _closure(self, block: int) -> list:
        """Execute every gate that is executable under the current bindings."""
        undo: list = []
        progress = True
        while progress:
            progress = False
            for gid in range(self.num_gates):
                if self.executed[gid] or self.indeg[gid] != 0:
                    continue
                if self.is2[gid]:
                    qa, qb = self.gate_qubits[gid]
                    pa, pb = self.pos[qa], self.pos[qb]
                    if pa < 0 or pb < 0 or self.dist[pa][pb] != 1:
                        continue
                self._execute(gid, block, undo)
                progress = True
        return undo

    def _undo(self, undo: list) -> None:
        for kind, arg in reversed(undo):
            if kind == "exec":
                self.executed[arg] = False
                self.exec_count -= 1
                self.gate_block[arg] = -1
                if self.is2[arg]:
                    self.ready2.add(arg)
            elif kind == "indeg":
                self.indeg[arg] += 1
            elif kind == "ready":
                self.ready2.discard(arg)

    def _lower_bound(self) -> int:
        worst = 0
        for gid in range(self.num_gates):
            if self.executed[gid] or not self.is2[gid]:
                continue
            qa, qb = self.gate_qubits[gid]
            pa, pb = self.pos[qa], self.pos[qb]
            if pa >= 0 and pb >= 0:
                need = self.dist[pa][pb] - 1
                if need > worst:
                    worst = need
        return worst

    def _state_key(self, tag, block: int):
        mask = 0
        for gid in range(self.num_gates):
            if self.executed[gid]:
                mask |= 1 << gid
        return (tag, block, tuple(self.occ), mask, frozenset(self.deferred))

    # -- search ------------------------------------------------------------

    def _dfs_block(self, block: int) -> None:
        self._tick()
        undo = self._closure(block)
        try:
            if self.exec_count == self.num_gates:
                self._record(block)
                return
            if len(self.swaps) + self._lower_bound() > self.swap_cap:
                return
            key = self._state_key("b", block)
            prev = self.visited.get(key)
            if prev is not None and prev <= len(self.swaps):
                return
            self.visited[key] = len(self.swaps)
            gid = self._pick_bindable()
            if gid is not None:
                self._branch_bindings(block, gid)
                return
            if block == self.max_blocks - 1:
                return
            self._dfs_gap(block, last_idx=-1, in_gap=0)
        finally:
            self._undo(undo)

    def _pick_bindable(self) -> int | None:
        best = None
        for gid in sorted(self.ready2):
            if gid in self.deferred:
                continue
            qa, qb = self.gate_qubits[gid]
            if self.pos[qa] < 0 or self.pos[qb] < 0:
                best = gid
                break
        return best

    def _branch_bindings(self, block: int, gid: int) -> None:
        qa, qb = self.gate_qubits[gid]
        if self.pos[qa] >= 0 and self.pos[qb] < 0:
            qa, qb = qb, qa
        if self.pos[qb] >= 0:  # qa unbound, qb bound
            anchor_p = self.pos[qb]
            for p in self.neighbors[anchor_p]:
                if self.occ[p] == -1:
                    self._bind(qa, p)
                    self._dfs_block(block)
                    self._unbind(qa, p)
        else:  # both unbound: place on any free adjacent pair
            for a, b in self.edge_list:
                if self.occ[a] != -1 or self.occ[b] != -1:
                    continue
                for pa, pb in ((a, b), (b, a)):
                    self._bind(qa, pa)
                    self._bind(qb, pb)
                    self._dfs_block(block)
                    self._unbind(qb, pb)
                    self._unbind(qa, pa)
        self.deferred.add(gid)
        self._dfs_block(block)
        self.deferred.discard(gid)

    def _dfs_gap(self, block: int, last_idx: int, in_gap: int) -> None:
        self._tick()
        if in_gap > 0:
            saved_deferred = self.deferred
            self.deferred = set()
            self._dfs_block(block + 1)
            self.deferred = saved_deferred
        if len(self.swaps) >= self.swap_cap:
            return
        for idx, (a, b) in enumerate(self.edge_list):
            if self.occ[a] == -1 and self.occ[b] == -1:
                continue
            if idx < last_idx:
                la, lb = self.edge_list[last_idx]
                if a != la and a != lb and b != la and b != lb:
                    continue  # canonical order for commuting swaps
            self._apply_swap(a, b, block)
            if len(self.swaps) + self._lower_bound() <= self.swap_cap:
                key = self._state_key(("g", idx), block)
                prev = self.visited.get(key)
                if prev is None or prev > len(self.swaps):
                    self.visited[key] = len(self.swaps)
                    self._dfs_gap(block, idx, in_gap + 1)
            self._pop_swap(a, b)

    def _apply_swap(self, a: int, b: int, block: int) -> None:
        qa, qb = self.occ[a], self.occ[b]
        self.occ[a], self.occ[b] = qb, qa
        if qa != -1:
            self.pos[qa] = b
        if qb != -1:
            self.pos[qb] = a
        self.swaps.append(SwapOp((a, b), block))

    def _pop_swap(self, a: int, b: int) -> None:
        self.swaps.pop()
        qa, qb = self.occ[a], self.occ[b]
        self.occ[a], self.occ[b] = qb, qa
        if qa != -1:
            self.pos[qa] = b
        if qb != -1:
            self.pos[qb] = a

    def _record(self, last_block: int) -> None:
        final_pos = list(self.pos)
        free = [p for p in range(self.graph.num_physical) if self.occ[p] == -1]
        it = iter(free)
        for q in range(len(final_pos)):
            if final_pos[q] == -1:
                final_pos[q] = next(it)
        num_blocks = last_block + 1
        by_gap: dict[int, list[tuple[int, int]]] = {}
        for sw in self.swaps:
            by_gap.setdefault(sw.gap, []).append(sw.edge)
        mappings = [None] * num_blocks
        mappings[num_blocks - 1] = tuple(final_pos)
        cur = list(final_pos)
        for gap in range(num_blocks - 2, -1, -1):
            for a, b in reversed(by_gap.get(gap, [])):
                for q, p in enumerate(cur):
                    if p == a:
                        cur[q] = b
                    elif p == b:
                        cur[q] = a
            mappings[gap] = tuple(cur)
        sol = QlsSolution(
            tuple(Mapping(m) for m in mappings),
            tuple(self.gate_block),
            tuple(sw for sw in self.swaps if sw.gap < num_blocks - 1),
            None,
        )
        n = swap_count(sol)
        if self.best is None or n < swap_count(self.best):
            self.best = sol
            self.swap_cap = n - 1


def _symmetry_positions(graph: CouplingGraph) -> list[int] | None:
    """One anchor position per symmetry orbit, for library devices only."""
    name = graph.name
    if name.startswith("path:"):
        n = graph.num_physical
        return list(range((n + 1) // 2))
    if name.startswith("grid:"):
        n = int(name.split(":")[1])
        return [r * n + c for r in range(n) for c in range(n) if r <= c <= (n - 1) // 2]
    return None


# ---------------------------------------------------------------------------
# Greedy fallback router (upper bound / timeout floor)
# ---------------------------------------------------------------------------


def _greedy_route(circuit: Circuit, graph: CouplingGraph, start: Mapping | None = None) -> QlsSolution:
    """Route by walking one blocked gate at a time along shortest paths.

    Never optimal, always valid; supplies the initial incumbent and the
    timeout floor.
    """
    if start is None:
        order = _bfs_positions(graph)
        start = Mapping(tuple(order[: circuit.num_qubits]))
    dag = build_dag(circuit)
    indeg = dag.indegrees()
    executed = [False] * len(circuit.gates)
    builder = SolutionBuilder(len(circuit.gates), start)
    pos = list(start.assignment)
    occ = [-1] * graph.num_physical
    for q, p in enumerate(pos):
        occ[p] = q
    remaining = len(circuit.gates)
    dist = graph.dist

    def run_ready() -> bool:
        nonlocal remaining
        progress = False
        again = True
        while again:
            again = False
            for g in circuit.gates:
                if executed[g.id] or indeg[g.id] != 0:
                    continue
                if g.is_two_qubit:
                    pa, pb = pos[g.qubits[0]], pos[g.qubits[1]]
                    if dist[pa][pb] != 1:
                        continue
                executed[g.id] = True
                builder.execute(g.id)
                remaining -= 1
                for s in dag.succs[g.id]:
                    indeg[s] -= 1
                progress = again = True
        return progress

    while remaining:
        if run_ready():
            continue
        blocked = next(
            g
            for g in circuit.gates
            if not executed[g.id] and indeg[g.id] == 0 and g.is_two_qubit
        )
        qa, qb = blocked.qubits
        pa, pb = pos[qa], pos[qb]
        step = min(graph.neighbors[pa], key=lambda nb: (dist[nb][pb], nb))
        builder.add_swap((pa, step))
        other = occ[step]
        occ[pa], occ[step] = other, qa
        pos[qa] = step
        if other != -1:
            pos[other] = pa
    return builder.build()


def _bfs_positions(graph: CouplingGraph) -> list[int]:
    from collections import deque

    seen = [False] * graph.num_physical
    order: list[int] = []
    queue = deque([0])
    seen[0] = True
    while queue:
        u = queue.popleft()
        order.append(u)
        for v in graph.neighbors[u]:
            if not seen[v]:
                seen[v] = True
                queue.append(v)
    return order


# ---------------------------------------------------------------------------
# Exhaustive oracle
# ---------------------------------------------------------------------------

_ORACLE_MAX_PHYSICAL = 6
_ORACLE_MAX_GATES = 10


class OracleLimitError(ValueError):
    pass


def optimal_oracle(circuit: Circuit, graph: CouplingGraph, max_swaps: int) -> int | None:
    """Minimum SWAP count by exhaustive breadth-first search, or None if it
    exceeds ``max_swaps``. No pruning beyond visited-state deduplication."""
    if graph.num_physical > _ORACLE_MAX_PHYSICAL:
        raise OracleLimitError("oracle limited to 6 physical qubits")
    if len(circuit.gates) > _ORACLE_MAX_GATES:
        raise OracleLimitError("oracle limited to 10 gates")
    if circuit.num_qubits > graph.num_physical:
        raise ValueError("more program qubits than physical qubits")
    dag = build_dag(circuit)
    base_indeg = tuple(dag.indegrees())
    dist = graph.dist
    gates = circuit.gates
    all_mask = (1 << len(gates)) - 1

    def closed(assignment: tuple[int, ...], mask: int) -> int:
        indeg = list(base_indeg)
        for gid in range(len(gates)):
            if mask & (1 << gid):
                for s in dag.succs[gid]:
                    indeg[s] -= 1
        progress = True
        while progress:
            progress = False
            for g in gates:
                if mask & (1 << g.id) or indeg[g.id] != 0:
                    continue
                if g.is_two_qubit:
                    pa, pb = assignment[g.qubits[0]], assignment[g.qubits[1]]
                    if dist[pa][pb] != 1:
                        continue
                mask |= 1 << g.id
                for s in dag.succs[g.id]:
                    indeg[s] -= 1
                progress = True
        return mask

    frontier: set[tuple[tuple[int, ...], int]] = set()
    for perm in itertools.permutations(range(graph.num_physical), circuit.num_qubits):
        mask = closed(perm, 0)
        if mask == all_mask:
            return 0
        frontier.add((perm, mask))
    visited = set(frontier)
    edges = graph.sorted_edges()
    for level in range(1, max_swaps + 1):
        nxt: set[tuple[tuple[int, ...], int]] = set()
        for assignment, mask in frontier:
            for a, b in edges:
                new = list(assignment)
                for q, p in enumerate(new):
                    if p == a:
                        new[q] = b
                    elif p == b:
                        new[q] = a
                new_t = tuple(new)
                new_mask = closed(new_t, mask)
                if new_mask == all_mask:
                    return level
                state = (new_t, new_mask)
                if state not in visited:
                    visited.add(state)
                    nxt.add(state)
        if not nxt:
            return None
        frontier = nxt
    return None
