"""Two-stage multilevel flow: standalone synthesis, then V cycles of
coarsen -> exact coarsest solve -> interpolate -> refine.

Each stage yields a full verified solution; the best one (fewest SWAPs, then
lowest depth) is kept, so the final result never regresses below stage one.
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass, field
from enum import Enum

from .cluster import (
    Level,
    LevelHierarchy,
    cluster_physical,
    cluster_program,
    coarsen,
    identity_cluster_map,
    induced_coarse_mapping,
    interpolate,
)
from .exact import ExactConfig, InstanceTooLarge, solve_exact
from .model import Circuit, CouplingGraph, Mapping
from .srefine import SrefineConfig, srefine_run
from .verify import QlsSolution, asap_depth, swap_count, verify


class GuardDecision(Enum):
    CONTINUE = "continue"
    STOP = "stop"


_MIN_SHRINK = 0.10


def compression_guard(hierarchy: LevelHierarchy) -> GuardDecision:
    """Stop coarsening when the last level shrank by less than 10%."""
    counts = hierarchy.qubit_counts()
    if len(counts) < 2:
        return GuardDecision.STOP
    prev, cur = counts[-2], counts[-1]
    if prev <= 0 or (prev - cur) / prev < _MIN_SHRINK:
        return GuardDecision.STOP
    return GuardDecision.CONTINUE


@dataclass
class FlowConfig:
    coarsest_qubit_limit: int = 16
    coarsest_gate_limit: int = 50
    num_vcycles: int = 1
    seed: int = 0
    srefine: SrefineConfig = field(default_factory=SrefineConfig)
    exact: ExactConfig | None = None  # None: desk-scale budgets
    max_levels: int = 32
    regions_use_all_blocks: bool = False

    def __post_init__(self) -> None:
        if self.coarsest_qubit_limit < 2 or self.coarsest_gate_limit < 2:
            raise ValueError("coarsest limits must be >= 2")
        if self.num_vcycles < 0:
            raise ValueError("num_vcycles must be >= 0")

    def exact_config(self) -> ExactConfig:
        if self.exact is not None:
            return self.exact
        return ExactConfig(post_first_solution_budget=1.0, overall_budget=5.0)


@dataclass
class StageStat:
    stage: str
    swaps: int
    depth: int | None
    seconds: float


@dataclass
class FlowResult:
    initial: QlsSolution
    final: QlsSolution
    levels: LevelHierarchy
    stats: list[StageStat]

    def to_json(self) -> dict:
        from .verify import solution_to_json

        return {
            "initial": solution_to_json(self.initial),
            "final": solution_to_json(self.final),
            "stats": [
                {"stage": s.stage, "swaps": s.swaps, "depth": s.depth, "seconds": round(s.seconds, 3)}
                for s in self.stats
            ],
            "levels": self.levels.to_json(),
        }


def run_mlqls(circuit: Circuit, graph: CouplingGraph, cfg: FlowConfig | None = None) -> FlowResult:
    """Run the full two-stage flow and return every stage's best solution."""
    cfg = cfg or FlowConfig()
    if circuit.num_qubits > graph.num_physical:
        raise ValueError("more program qubits than physical qubits")
    rng = random.Random(cfg.seed)
    stats: list[StageStat] = []

    t0 = time.monotonic()
    initial = srefine_run(circuit, graph, None, cfg.srefine, random.Random(rng.randrange(1 << 62)))
    stats.append(StageStat("srefine", swap_count(initial), initial.depth, time.monotonic() - t0))

    best = initial
    hierarchy = LevelHierarchy([Level(circuit, graph, None, None)])
    if swap_count(initial) == 0:  # already optimal; nothing to refine
        return FlowResult(initial, initial, hierarchy, stats)
    for cycle in range(cfg.num_vcycles):
        t0 = time.monotonic()
        hierarchy = _build_hierarchy(circuit, graph, best.block_mappings[0], cfg, rng)
        candidate = _solve_hierarchy(hierarchy, cfg, rng)
        stats.append(
            StageStat(
                f"vcycle{cycle + 1}",
                swap_count(candidate),
                candidate.depth,
                time.monotonic() - t0,
            )
        )
        if _better(circuit, candidate, best):
            best = candidate
    return FlowResult(initial, best, hierarchy, stats)


def _better(circuit: Circuit, a: QlsSolution, b: QlsSolution) -> bool:
    ka = (swap_count(a), a.depth if a.depth is not None else asap_depth(circuit, a))
    kb = (swap_count(b), b.depth if b.depth is not None else asap_depth(circuit, b))
    return ka < kb


def _build_hierarchy(
    circuit: Circuit,
    graph: CouplingGraph,
    guide: Mapping,
    cfg: FlowConfig,
    rng: random.Random,
) -> LevelHierarchy:
    """Cluster repeatedly, guided by the current solution's first-block
    mapping, until the coarsest instance fits the exact-solver limits or
    compression stalls."""
    hierarchy = LevelHierarchy([Level(circuit, graph, None, None)])
    cur_c, cur_g, cur_m = circuit, graph, guide
    while (
        cur_c.num_qubits > cfg.coarsest_qubit_limit
        or len(cur_c.gates) > cfg.coarsest_gate_limit
    ) and len(hierarchy) < cfg.max_levels:
        prog_cm = cluster_program(cur_c, cur_m, cur_g, rng)
        phys_cm = cluster_physical(cur_g, prog_cm, cur_m)
        coarse_c, coarse_g = coarsen(cur_c, cur_g, prog_cm, phys_cm)
        coarse_m = induced_coarse_mapping(prog_cm, phys_cm, cur_m)
        hierarchy.levels[-1] = Level(cur_c, cur_g, prog_cm, phys_cm)
        hierarchy.levels.append(Level(coarse_c, coarse_g, None, None))
        cur_c, cur_g, cur_m = coarse_c, coarse_g, coarse_m
        if compression_guard(hierarchy) is GuardDecision.STOP:
            break
    return hierarchy


def _quick_srefine(base: SrefineConfig) -> SrefineConfig:
    """Cheap configuration for warm-starting the exact coarsest solve."""
    return SrefineConfig(
        sa=base.sa,
        astar=base.astar,
        candidates=2,
        mapper_first_budget=min(base.mapper_first_budget, 1.0),
        mapper_next_budget=min(base.mapper_next_budget, 0.5),
        mapper_qubit_limit=base.mapper_qubit_limit,
    )


def _solve_hierarchy(
    hierarchy: LevelHierarchy, cfg: FlowConfig, rng: random.Random
) -> QlsSolution:
    """Solve the coarsest level (exactly when it fits), then interpolate and
    refine back down to the finest level."""
    coarsest = hierarchy.levels[-1]
    exact_cfg = cfg.exact_config()
    coarse_sol: QlsSolution | None = None
    if (
        coarsest.circuit.num_qubits <= exact_cfg.max_qubits
        and len(coarsest.circuit.gates) <= exact_cfg.max_gates
    ):
        warm = srefine_run(
            coarsest.circuit,
            coarsest.graph,
            None,
            _quick_srefine(cfg.srefine),
            random.Random(rng.randrange(1 << 62)),
        )
        try:
            coarse_sol = solve_exact(
                coarsest.circuit, coarsest.graph, exact_cfg, warm_start=warm
            ).solution
        except InstanceTooLarge:  # defensive; the size check above covers it
            coarse_sol = None
    if coarse_sol is None:
        coarse_sol = srefine_run(
            coarsest.circuit,
            coarsest.graph,
            None,
            cfg.srefine,
            random.Random(rng.randrange(1 << 62)),
        )
    if len(hierarchy) == 1:
        # Degenerate V: refine the finest level around the exact solution.
        level = hierarchy.levels[0]
        regions = interpolate(
            coarse_sol,
            identity_cluster_map(level.circuit.num_qubits, "program"),
            identity_cluster_map(level.graph.num_physical, "physical"),
            level.graph,
            cfg.regions_use_all_blocks,
        )
        refined = srefine_run(
            level.circuit, level.graph, regions, cfg.srefine, random.Random(rng.randrange(1 << 62))
        )
        return refined if _better(level.circuit, refined, coarse_sol) else coarse_sol
    for i in range(len(hierarchy) - 2, -1, -1):
        level = hierarchy.levels[i]
        assert level.prog_map is not None and level.phys_map is not None
        report = verify(hierarchy.levels[i + 1].circuit, hierarchy.levels[i + 1].graph, coarse_sol)
        if not report.ok:
            raise AssertionError(f"coarse solution invalid at level {i + 1}: {report.first_failure()}")
        regions = interpolate(
            coarse_sol, level.prog_map, level.phys_map, level.graph, cfg.regions_use_all_blocks
        )
        coarse_sol = srefine_run(
            level.circuit, level.graph, regions, cfg.srefine, random.Random(rng.randrange(1 << 62))
        )
    return coarse_sol
