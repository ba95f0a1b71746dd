"""Command-line front end: compile circuits onto devices, verify solution
files, and run benchmark suites into CSV/Markdown tables."""

from __future__ import annotations

import argparse
import json
import math
import os
import random
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from .exact import ExactConfig, solve_exact
from .flow import FlowConfig, run_mlqls
from .model import (
    Circuit,
    CouplingGraph,
    circuit_from_json,
    circuit_to_json,
    device_from_json,
    device_to_json,
    gen_chain,
    gen_qaoa,
    gen_queko,
    load_device,
    make_device,
    parse_qasm,
)
from .srefine import SrefineConfig, srefine_run
from .verify import (
    asap_depth,
    solution_from_json,
    solution_to_json,
    swap_count,
    verify,
)

# Paper-scale wall-clock limits, multiplied by --budget-scale.
_MAPPER_FIRST_SECONDS = 1000.0
_MAPPER_NEXT_SECONDS = 100.0
_EXACT_POST_FIRST_SECONDS = 100.0
_EXACT_OVERALL_SECONDS = 300.0


@dataclass
class RunSpec:
    """One compile invocation."""

    mode: str
    device: str | None = None
    circuit_file: str | None = None
    gen: str | None = None
    solution_file: str | None = None
    seed: int = 0
    out: str | None = None
    budget_scale: float = 0.01
    dump_levels: bool = False


def parse_device_spec(spec: str) -> CouplingGraph:
    if spec.startswith("grid:"):
        return make_device("grid", int(spec.split(":")[1]))
    if spec.startswith("path:"):
        return make_device("path", int(spec.split(":")[1]))
    if spec in ("sycamore", "sycamore54"):
        return make_device("sycamore54")
    if spec in ("eagle", "eagle127"):
        return make_device("eagle127")
    if spec.startswith("file:"):
        return load_device(spec.split(":", 1)[1])
    raise ValueError(f"unknown device spec {spec!r}")


def _parse_kv(text: str) -> dict[str, str]:
    out = {}
    for part in text.split(","):
        if not part:
            continue
        key, _, value = part.partition("=")
        out[key.strip()] = value.strip()
    return out


def build_circuit(spec: RunSpec, device: CouplingGraph) -> Circuit:
    if (spec.circuit_file is None) == (spec.gen is None):
        raise ValueError("exactly one of --circuit and --gen is required")
    if spec.circuit_file is not None:
        if spec.circuit_file.endswith(".json"):
            with open(spec.circuit_file) as fh:
                return circuit_from_json(json.load(fh))
        with open(spec.circuit_file) as fh:
            return parse_qasm(fh.read())
    kind, _, rest = spec.gen.partition(":")
    kv = _parse_kv(rest)
    if kind == "queko":
        depth = int(kv.get("depth", "10"))
        density = float(kv.get("density", "0.5"))
        circuit, _ = gen_queko(device, depth, density, spec.seed)
        return circuit
    if kind == "qaoa":
        return gen_qaoa(int(kv["n"]), spec.seed)
    if kind == "chain":
        return gen_chain(int(kv["n"]))
    raise ValueError(f"unknown generator {kind!r}")


def _srefine_config(scale: float) -> SrefineConfig:
    return SrefineConfig(
        mapper_first_budget=_MAPPER_FIRST_SECONDS * scale,
        mapper_next_budget=_MAPPER_NEXT_SECONDS * scale,
    )


def _flow_config(seed: int, scale: float) -> FlowConfig:
    return FlowConfig(
        seed=seed,
        srefine=_srefine_config(scale),
        exact=ExactConfig(
            post_first_solution_budget=_EXACT_POST_FIRST_SECONDS * scale,
            overall_budget=_EXACT_OVERALL_SECONDS * scale,
        ),
    )


def cmd_compile(spec: RunSpec) -> int:
    device = parse_device_spec(spec.device) if spec.device else None
    if spec.mode == "verify":
        return _cmd_verify(spec, device)
    if device is None:
        raise ValueError("--device is required")
    circuit = build_circuit(spec, device)
    t0 = time.monotonic()
    extra: dict = {}
    if spec.mode == "srefine":
        sol = srefine_run(
            circuit, device, None, _srefine_config(spec.budget_scale), random.Random(spec.seed)
        )
    elif spec.mode == "vcycle":
        result = run_mlqls(circuit, device, _flow_config(spec.seed, spec.budget_scale))
        sol = result.final
        extra["initial_swaps"] = swap_count(result.initial)
        extra["stats"] = [
            {"stage": s.stage, "swaps": s.swaps, "seconds": round(s.seconds, 3)}
            for s in result.stats
        ]
        if spec.dump_levels:
            extra["levels"] = result.levels.to_json()
    elif spec.mode == "exact":
        res = solve_exact(
            circuit,
            device,
            ExactConfig(
                post_first_solution_budget=_EXACT_POST_FIRST_SECONDS * spec.budget_scale,
                overall_budget=_EXACT_OVERALL_SECONDS * spec.budget_scale,
            ),
        )
        sol = res.solution
        extra["proven_optimal"] = res.proven_optimal
        extra["timed_out"] = res.timed_out
    else:
        raise ValueError(f"unknown mode {spec.mode!r}")
    seconds = time.monotonic() - t0
    report = verify(circuit, device, sol)
    if not report.ok:  # internal bug: solvers must emit valid solutions
        print(f"INTERNAL ERROR: solution failed verification: {report.first_failure()}")
        return 1
    bundle = {
        "device": device_to_json(device),
        "circuit": circuit_to_json(circuit),
        "solution": solution_to_json(sol),
        "meta": {
            "mode": spec.mode,
            "seed": spec.seed,
            "swaps": swap_count(sol),
            "depth": sol.depth,
            "seconds": round(seconds, 3),
            **extra,
        },
    }
    if spec.out:
        with open(spec.out, "w") as fh:
            json.dump(bundle, fh, indent=2)
    print(
        f"mode={spec.mode} qubits={circuit.num_qubits} gates={len(circuit.gates)} "
        f"swaps={swap_count(sol)} depth={sol.depth} seconds={seconds:.2f}"
    )
    return 0


def _cmd_verify(spec: RunSpec, device: CouplingGraph | None) -> int:
    if not spec.solution_file:
        raise ValueError("--mode verify requires --solution")
    with open(spec.solution_file) as fh:
        data = json.load(fh)
    if "solution" in data:  # bundle written by cmd_compile
        circuit = circuit_from_json(data["circuit"])
        device = device_from_json(data["device"])
        sol = solution_from_json(data["solution"])
    else:
        if spec.circuit_file is None or device is None:
            raise ValueError("bare solution file needs --circuit and --device")
        circuit = build_circuit(spec, device)
        sol = solution_from_json(data)
    report = verify(circuit, device, sol)
    if report.ok:
        depth = asap_depth(circuit, sol)
        print(f"OK swaps={swap_count(sol)} depth={depth}")
        if report.overlapping_gaps:
            print(f"note: gaps with overlapping swaps: {list(report.overlapping_gaps)}")
        return 0
    print(f"FAIL {report.first_failure()}")
    return 1


# ---------------------------------------------------------------------------
# Benchmark harness
# ---------------------------------------------------------------------------

_CSV_HEADER = "suite,circuit,device,mode,seed,qubits,gates,swaps,depth,seconds,verified"


def _bench_jobs(suite: str, devices: list[str], depths: list[int], sizes: list[int],
                seeds: int, modes: list[str], density: float) -> list[dict]:
    jobs = []
    if suite == "queko":
        for dev in devices:
            for depth in depths:
                for seed in range(seeds):
                    for mode in modes:
                        jobs.append(
                            dict(suite=suite, device=dev, gen=f"queko:depth={depth},density={density}",
                                 label=f"queko_d{depth}_s{seed}", seed=seed, mode=mode)
                        )
    elif suite == "qaoa":
        for n in sizes:
            for seed in range(seeds):
                for mode in modes:
                    dev = devices[0] if devices else f"grid:{math.isqrt(n - 1) + 1}"
                    jobs.append(
                        dict(suite=suite, device=dev, gen=f"qaoa:n={n}",
                             label=f"qaoa_{n}_s{seed}", seed=seed, mode=mode)
                    )
    elif suite == "chain":
        for n in sizes:
            for seed in range(seeds):
                for mode in modes:
                    dev = devices[0] if devices else f"grid:{math.isqrt(n - 1) + 1}"
                    jobs.append(
                        dict(suite=suite, device=dev, gen=f"chain:n={n}",
                             label=f"chain_{n}", seed=seed, mode=mode)
                    )
    else:
        raise ValueError(f"unknown suite {suite!r}")
    return jobs


def _run_bench_job(job: dict) -> dict:
    scale = job.get("budget_scale", 0.01)
    spec = RunSpec(mode=job["mode"], device=job["device"], gen=job["gen"], seed=job["seed"],
                   budget_scale=scale)
    device = parse_device_spec(spec.device)
    circuit = build_circuit(spec, device)
    t0 = time.monotonic()
    if job["mode"] == "srefine":
        sol = srefine_run(circuit, device, None, _srefine_config(scale), random.Random(spec.seed))
    elif job["mode"] == "vcycle":
        sol = run_mlqls(circuit, device, _flow_config(spec.seed, scale)).final
    elif job["mode"] == "exact":
        sol = solve_exact(circuit, device).solution
    else:
        raise ValueError(f"unknown mode {job['mode']!r}")
    seconds = time.monotonic() - t0
    ok = verify(circuit, device, sol).ok
    return dict(
        suite=job["suite"], circuit=job["label"], device=job["device"], mode=job["mode"],
        seed=job["seed"], qubits=circuit.num_qubits, gates=len(circuit.gates),
        swaps=swap_count(sol), depth=sol.depth, seconds=round(seconds, 3), verified=ok,
    )


def cmd_bench(suite: str, devices: list[str], depths: list[int], sizes: list[int],
              seeds: int, modes: list[str], density: float = 0.5,
              out: str | None = None, budget_scale: float = 0.01) -> int:
    jobs = _bench_jobs(suite, devices, depths, sizes, seeds, modes, density)
    for job in jobs:
        job["budget_scale"] = budget_scale
    workers = int(os.environ.get("MLQLS_THREADS", "1"))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_run_bench_job, jobs))
    else:
        rows = [_run_bench_job(job) for job in jobs]
    rows.sort(key=lambda r: (r["suite"], r["circuit"], r["device"], r["mode"], r["seed"]))
    csv_lines = [_CSV_HEADER]
    for r in rows:
        csv_lines.append(
            f"{r['suite']},{r['circuit']},{r['device']},{r['mode']},{r['seed']},"
            f"{r['qubits']},{r['gates']},{r['swaps']},{r['depth']},{r['seconds']},{r['verified']}"
        )
    csv_text = "\n".join(csv_lines) + "\n"
    md_text = _markdown_table(rows, modes)
    if out:
        with open(out, "w") as fh:
            fh.write(csv_text)
        md_path = out.rsplit(".", 1)[0] + ".md"
        with open(md_path, "w") as fh:
            fh.write(md_text)
    print(md_text)
    return 0


def _markdown_table(rows: list[dict], modes: list[str]) -> str:
    lines = [
        "| circuit | device | mode | swaps | depth | seconds |",
        "|---|---|---|---:|---:|---:|",
    ]
    for r in rows:
        lines.append(
            f"| {r['circuit']} | {r['device']} | {r['mode']} | {r['swaps']} "
            f"| {r['depth']} | {r['seconds']} |"
        )
    baseline = modes[-1]
    by_instance: dict[tuple, dict[str, int]] = {}
    for r in rows:
        by_instance.setdefault((r["circuit"], r["device"], r["seed"]), {})[r["mode"]] = r["swaps"]
    ratio_cells = []
    for mode in modes:
        ratios = [
            (per_mode[mode] + 1) / (per_mode[baseline] + 1)
            for per_mode in by_instance.values()
            if mode in per_mode and baseline in per_mode
        ]
        if ratios:
            geo = math.exp(sum(math.log(x) for x in ratios) / len(ratios))
            ratio_cells.append(f"{mode}={geo:.2f}")
    lines.append("")
    lines.append(
        f"Geo. ratio of (swaps+1) vs {baseline}: " + ", ".join(ratio_cells)
    )
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mlqls", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    pc = sub.add_parser("compile", help="compile one circuit onto a device (or verify a solution)")
    pc.add_argument("--device", default=None,
                    help="grid:N | path:N | sycamore | eagle | file:PATH")
    pc.add_argument("--circuit", help="QASM or circuit-JSON file")
    pc.add_argument("--gen", help="queko:depth=D,density=X | qaoa:n=N | chain:n=N")
    pc.add_argument("--mode", default="vcycle", choices=["srefine", "vcycle", "exact", "verify"])
    pc.add_argument("--solution", help="solution JSON for --mode verify")
    pc.add_argument("--seed", type=int, default=0)
    pc.add_argument("--budget-scale", type=float, default=0.01)
    pc.add_argument("--dump-levels", action="store_true")
    pc.add_argument("--out", help="write solution bundle JSON here")

    pb = sub.add_parser("bench", help="run a benchmark suite")
    pb.add_argument("--suite", required=True, choices=["queko", "qaoa", "chain"])
    pb.add_argument("--devices", default="", help="comma-separated device specs")
    pb.add_argument("--depths", default="5,10", help="queko optimal depths")
    pb.add_argument("--sizes", default="", help="qaoa/chain qubit counts")
    pb.add_argument("--seeds", type=int, default=3)
    pb.add_argument("--modes", default="srefine,vcycle")
    pb.add_argument("--density", type=float, default=0.5)
    pb.add_argument("--budget-scale", type=float, default=0.01)
    pb.add_argument("--out", help="CSV output path (Markdown written alongside)")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "compile":
            spec = RunSpec(
                mode=args.mode,
                device=args.device,
                circuit_file=args.circuit,
                gen=args.gen,
                solution_file=args.solution,
                seed=args.seed,
                out=args.out,
                budget_scale=args.budget_scale,
                dump_levels=args.dump_levels,
            )
            return cmd_compile(spec)
        devices = [d for d in args.devices.split(",") if d]
        depths = [int(x) for x in args.depths.split(",") if x]
        sizes = [int(x) for x in args.sizes.split(",") if x]
        modes = [m for m in args.modes.split(",") if m]
        if args.suite == "queko" and not devices:
            devices = ["grid:4"]
        return cmd_bench(
            args.suite, devices, depths, sizes, args.seeds, modes,
            density=args.density, out=args.out, budget_scale=args.budget_scale,
        )
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
