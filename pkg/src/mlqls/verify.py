"""Independent validity checking of layout-synthesis solutions, plus cost metrics.

A solution is a sequence of blocks (constant-mapping circuit segments), a
gate-to-block schedule, and the SWAPs inserted between consecutive blocks.
The checker tests the four validity constraints: per-block injectivity, gate
dependency order, two-qubit adjacency, and SWAP/mapping consistency.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

from .model import Circuit, CouplingGraph, Mapping, build_dag


class SwapOp(NamedTuple):
    """One SWAP on a device edge, inserted in the gap after block ``gap``."""

    edge: tuple[int, int]
    gap: int


@dataclass(frozen=True)
class QlsSolution:
    """A block-structured layout synthesis result."""

    block_mappings: tuple[Mapping, ...]
    gate_block: tuple[int, ...]
    swaps: tuple[SwapOp, ...]
    depth: int | None = None

    @property
    def num_blocks(self) -> int:
        return len(self.block_mappings)


def swap_count(sol: QlsSolution) -> int:
    """Number of inserted SWAP gates, the primary cost metric."""
    return len(sol.swaps)


@dataclass(frozen=True)
class ConstraintCheck:
    ok: bool
    witness: str | None = None


@dataclass(frozen=True)
class VerifyReport:
    structure: ConstraintCheck
    injectivity: ConstraintCheck
    dependency: ConstraintCheck
    adjacency: ConstraintCheck
    swap_consistency: ConstraintCheck
    overlapping_gaps: tuple[int, ...] = ()  # informational only

    @property
    def ok(self) -> bool:
        return all(
            c.ok
            for c in (
                self.structure,
                self.injectivity,
                self.dependency,
                self.adjacency,
                self.swap_consistency,
            )
        )

    def first_failure(self) -> str | None:
        for name in ("structure", "injectivity", "dependency", "adjacency", "swap_consistency"):
            check: ConstraintCheck = getattr(self, name)
            if not check.ok:
                return f"{name}: {check.witness}"
        return None


_PASS = ConstraintCheck(True)


def verify(circuit: Circuit, graph: CouplingGraph, sol: QlsSolution) -> VerifyReport:
    """Check a solution against all validity constraints.

    Failures are reported with the first violating witness; nothing raises.
    """
    structure = _check_structure(circuit, graph, sol)
    if not structure.ok:
        fail = ConstraintCheck(False, "skipped: structural failure")
        return VerifyReport(structure, fail, fail, fail, fail)
    injectivity = _check_injectivity(circuit, sol)
    dependency = _check_dependency(circuit, sol)
    adjacency = _check_adjacency(circuit, graph, sol)
    consistency = _check_swap_consistency(sol)
    overlapping = _overlapping_gaps(sol)
    return VerifyReport(structure, injectivity, dependency, adjacency, consistency, overlapping)


def _check_structure(circuit: Circuit, graph: CouplingGraph, sol: QlsSolution) -> ConstraintCheck:
    if not sol.block_mappings:
        return ConstraintCheck(False, "no blocks")
    num_blocks = sol.num_blocks
    if len(sol.gate_block) != len(circuit.gates):
        return ConstraintCheck(
            False,
            f"gate_block has {len(sol.gate_block)} entries for {len(circuit.gates)} gates",
        )
    for gid, b in enumerate(sol.gate_block):
        if not 0 <= b < num_blocks:
            return ConstraintCheck(False, f"gate {gid} assigned to invalid block {b}")
    for m in sol.block_mappings:
        if len(m) != circuit.num_qubits:
            return ConstraintCheck(False, "block mapping is not total over program qubits")
        if any(p >= graph.num_physical for p in m.assignment):
            return ConstraintCheck(False, "block mapping leaves the device")
    for i, sw in enumerate(sol.swaps):
        if not graph.has_edge(*sw.edge):
            return ConstraintCheck(False, f"swap {i} uses non-edge {sw.edge}")
        if not 0 <= sw.gap < num_blocks - 1:
            return ConstraintCheck(False, f"swap {i} in invalid gap {sw.gap}")
    return _PASS


def _check_injectivity(circuit: Circuit, sol: QlsSolution) -> ConstraintCheck:
    for b, m in enumerate(sol.block_mappings):
        if len(set(m.assignment)) != len(m.assignment):
            return ConstraintCheck(False, f"block {b} maps two program qubits together")
    return _PASS


def _check_dependency(circuit: Circuit, sol: QlsSolution) -> ConstraintCheck:
    dag = build_dag(circuit)
    for gid in range(len(circuit.gates)):
        for succ in dag.succs[gid]:
            if sol.gate_block[gid] > sol.gate_block[succ]:
                return ConstraintCheck(
                    False,
                    f"gate {gid} (block {sol.gate_block[gid]}) must precede "
                    f"gate {succ} (block {sol.gate_block[succ]})",
                )
    return _PASS


def _check_adjacency(circuit: Circuit, graph: CouplingGraph, sol: QlsSolution) -> ConstraintCheck:
    for g in circuit.gates:
        if not g.is_two_qubit:
            continue
        m = sol.block_mappings[sol.gate_block[g.id]]
        pa, pb = m[g.qubits[0]], m[g.qubits[1]]
        if not graph.has_edge(pa, pb):
            return ConstraintCheck(
                False,
                f"gate {g.id} on qubits {g.qubits} sits on non-adjacent ({pa},{pb}) "
                f"in block {sol.gate_block[g.id]}",
            )
    return _PASS


def _check_swap_consistency(sol: QlsSolution) -> ConstraintCheck:
    by_gap: dict[int, list[tuple[int, int]]] = {}
    for sw in sol.swaps:
        by_gap.setdefault(sw.gap, []).append(sw.edge)
    for b in range(sol.num_blocks - 1):
        expected = sol.block_mappings[b].apply_swaps(by_gap.get(b, []))
        if expected.assignment != sol.block_mappings[b + 1].assignment:
            return ConstraintCheck(
                False,
                f"composing gap-{b} swaps onto block {b} does not give block {b + 1}",
            )
    return _PASS


def _overlapping_gaps(sol: QlsSolution) -> tuple[int, ...]:
    by_gap: dict[int, list[tuple[int, int]]] = {}
    for sw in sol.swaps:
        by_gap.setdefault(sw.gap, []).append(sw.edge)
    flagged = []
    for gap, edges in sorted(by_gap.items()):
        touched: set[int] = set()
        for a, b in edges:
            if a in touched or b in touched:
                flagged.append(gap)
                break
            touched.update((a, b))
    return tuple(flagged)


def asap_depth(circuit: Circuit, sol: QlsSolution, graph: CouplingGraph | None = None) -> int:
    """Cycle count under as-soon-as-possible scheduling, every gate one cycle.

    SWAPs occupy their physical qubits for a cycle between blocks. Requires a
    verified solution when ``graph`` is given; raises ValueError otherwise.
    """
    if graph is not None:
        report = verify(circuit, graph, sol)
        if not report.ok:
            raise ValueError(f"cannot schedule an invalid solution: {report.first_failure()}")
    highest = max(
        (max(m.assignment, default=-1) for m in sol.block_mappings), default=-1
    )
    for sw in sol.swaps:
        highest = max(highest, sw.edge[0], sw.edge[1])
    num_physical = highest + 1
    busy = [0] * num_physical
    by_gap: dict[int, list[tuple[int, int]]] = {}
    for sw in sol.swaps:
        by_gap.setdefault(sw.gap, []).append(sw.edge)
    gates_by_block: dict[int, list[int]] = {}
    for gid, b in enumerate(sol.gate_block):
        gates_by_block.setdefault(b, []).append(gid)
    depth = 0
    for b in range(sol.num_blocks):
        m = sol.block_mappings[b]
        for gid in sorted(gates_by_block.get(b, [])):
            phys = [m[q] for q in circuit.gates[gid].qubits]
            t = max(busy[p] for p in phys) + 1
            for p in phys:
                busy[p] = t
            depth = max(depth, t)
        for a, bb in by_gap.get(b, []):
            t = max(busy[a], busy[bb]) + 1
            busy[a] = busy[bb] = t
            depth = max(depth, t)
    return depth


# ---------------------------------------------------------------------------
# Solution construction and serialization
# ---------------------------------------------------------------------------


class SolutionBuilder:
    """Accumulates executed gates and SWAPs while routing, folding runs of
    SWAPs into inter-block gaps. Trailing SWAPs after the last gate are dropped.
    """

    def __init__(self, num_gates: int, start: Mapping):
        self._current = list(start.assignment)
        self._pos = {p: q for q, p in enumerate(start.assignment)}
        self._blocks = [tuple(start.assignment)]
        self._gate_block = [-1] * num_gates
        self._swaps: list[SwapOp] = []
        self._pending: list[tuple[int, int]] = []

    @property
    def current_mapping(self) -> Mapping:
        return Mapping(tuple(self._current))

    def add_swap(self, edge: tuple[int, int]) -> None:
        a, b = min(edge), max(edge)
        qa, qb = self._pos.pop(a, None), self._pos.pop(b, None)
        if qa is not None:
            self._current[qa] = b
            self._pos[b] = qa
        if qb is not None:
            self._current[qb] = a
            self._pos[a] = qb
        self._pending.append((a, b))

    def execute(self, gate_id: int) -> None:
        if self._pending:
            gap = len(self._blocks) - 1
            self._swaps.extend(SwapOp(e, gap) for e in self._pending)
            self._pending = []
            self._blocks.append(tuple(self._current))
        self._gate_block[gate_id] = len(self._blocks) - 1

    def build(self, depth: int | None = None) -> QlsSolution:
        if any(b < 0 for b in self._gate_block):
            missing = [i for i, b in enumerate(self._gate_block) if b < 0]
            raise ValueError(f"gates never executed: {missing[:5]}")
        return QlsSolution(
            tuple(Mapping(m) for m in self._blocks),
            tuple(self._gate_block),
            tuple(self._swaps),
            depth,
        )


def solution_to_json(sol: QlsSolution) -> dict:
    return {
        "blocks": [{"mapping": list(m.assignment)} for m in sol.block_mappings],
        "gate_block": list(sol.gate_block),
        "swaps": [{"edge": list(sw.edge), "gap": sw.gap} for sw in sol.swaps],
        "swap_count": swap_count(sol),
        "depth": sol.depth,
    }


def solution_from_json(data: dict) -> QlsSolution:
    return QlsSolution(
        tuple(Mapping(tuple(b["mapping"])) for b in data["blocks"]),
        tuple(data["gate_block"]),
        tuple(SwapOp((sw["edge"][0], sw["edge"][1]), sw["gap"]) for sw in data["swaps"]),
        data.get("depth"),
    )
