import random

import pytest

from mlqls import Circuit, make_device
from mlqls.exact import (
    ExactConfig,
    InstanceTooLarge,
    OracleLimitError,
    optimal_oracle,
    solve_exact,
)
from mlqls.verify import verify


def random_instance(rng, num_qubits, num_gates, commutable=False):
    pairs = [tuple(rng.sample(range(num_qubits), 2)) for _ in range(num_gates)]
    return Circuit.from_pairs(num_qubits, pairs, commutable)


class TestOracle:
    def test_executable_in_place(self, path4):
        c = Circuit.from_pairs(4, [(0, 1), (1, 2), (2, 3)])
        assert optimal_oracle(c, path4, 5) == 0

    def test_one_transposition_on_path3(self):
        p3 = make_device("path", 3)
        # whatever the placement, (0,1),(0,2),(1,2) cannot all sit adjacent:
        # a path has no triangle, so exactly one swap is needed.
        c = Circuit.from_pairs(3, [(0, 1), (0, 2), (1, 2)])
        assert optimal_oracle(c, p3, 5) == 1

    def test_scenario_instance(self, tshape5, triangle_circuit):
        assert optimal_oracle(triangle_circuit, tshape5, 5) == 1

    def test_cap_returns_none(self, path4):
        c = Circuit.from_pairs(4, [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)])
        need = optimal_oracle(c, path4, 10)
        assert need is not None and need >= 1
        assert optimal_oracle(c, path4, need - 1) is None

    def test_limits_enforced(self, path4):
        big_graph = make_device("path", 7)
        c = Circuit.from_pairs(2, [(0, 1)])
        with pytest.raises(OracleLimitError):
            optimal_oracle(c, big_graph, 2)
        c11 = Circuit.from_pairs(4, [(0, 1)] * 11)
        with pytest.raises(OracleLimitError):
            optimal_oracle(c11, path4, 2)


class TestSolveExact:
    def test_embeddable_zero_swaps_one_block(self, path4):
        c = Circuit.from_pairs(4, [(2, 3), (0, 1), (1, 2)])
        res = solve_exact(c, path4)
        assert res.swaps == 0
        assert res.solution.num_blocks == 1
        assert res.proven_optimal

    def test_scenario_needs_one_swap(self, tshape5, triangle_circuit):
        res = solve_exact(triangle_circuit, tshape5)
        assert res.swaps == 1
        assert verify(triangle_circuit, tshape5, res.solution).ok

    @pytest.mark.parametrize("seed", range(6))
    def test_matches_oracle_on_random_instances(self, path4, seed):
        rng = random.Random(seed)
        c = random_instance(rng, 4, rng.randint(2, 6))
        assert solve_exact(c, path4).swaps == optimal_oracle(c, path4, 10)

    def test_matches_oracle_commutable(self, path4):
        rng = random.Random(99)
        for _ in range(5):
            c = random_instance(rng, 4, rng.randint(2, 6), commutable=True)
            assert solve_exact(c, path4).swaps == optimal_oracle(c, path4, 10)

    def test_solution_always_verifies(self, tshape5):
        rng = random.Random(3)
        for _ in range(10):
            c = random_instance(rng, rng.randint(2, 5), rng.randint(1, 7))
            res = solve_exact(c, tshape5)
            assert verify(c, tshape5, res.solution).ok

    def test_monotone_in_gate_prefix(self, path4):
        rng = random.Random(17)
        pairs = [tuple(rng.sample(range(4), 2)) for _ in range(7)]
        prev = 0
        for k in range(1, 8):
            swaps = solve_exact(Circuit.from_pairs(4, pairs[:k]), path4).swaps
            assert swaps >= prev
            prev = swaps

    def test_deterministic(self, tshape5):
        rng = random.Random(4)
        c = random_instance(rng, 5, 6)
        a = solve_exact(c, tshape5)
        b = solve_exact(c, tshape5)
        assert a.solution == b.solution

    def test_instance_too_large(self, path4):
        c = Circuit.from_pairs(4, [(0, 1)] * 51)
        with pytest.raises(InstanceTooLarge):
            solve_exact(c, path4)
        cfg = ExactConfig(max_qubits=3)
        with pytest.raises(InstanceTooLarge):
            solve_exact(Circuit.from_pairs(4, [(0, 1)]), path4, cfg)

    def test_more_program_than_physical(self):
        p2 = make_device("path", 2)
        with pytest.raises(ValueError):
            solve_exact(Circuit.from_pairs(3, [(0, 1)]), p2)

    def test_one_qubit_gates_only(self, path4):
        from mlqls import Gate

        c = Circuit(3, (Gate(0, (0,), "h"), Gate(1, (2,), "t")))
        res = solve_exact(c, path4)
        assert res.swaps == 0
        assert verify(c, path4, res.solution).ok

    def test_depth_populated(self, tshape5, triangle_circuit):
        res = solve_exact(triangle_circuit, tshape5)
        assert res.solution.depth is not None and res.solution.depth >= 3

    def test_budget_config_validated(self):
        with pytest.raises(ValueError):
            ExactConfig(post_first_solution_budget=0)

    def test_timeout_still_returns_verified_solution(self):
        # a dense commutable instance with a near-zero budget forces best-so-far
        g = make_device("grid", 4)
        rng = random.Random(0)
        pairs = [tuple(rng.sample(range(14), 2)) for _ in range(40)]
        c = Circuit.from_pairs(14, pairs, commutable=True)
        cfg = ExactConfig(post_first_solution_budget=0.05, overall_budget=0.05)
        res = solve_exact(c, g, cfg)
        assert res.timed_out
        assert not res.proven_optimal
        assert verify(c, g, res.solution).ok

    def test_warm_start_tightens_incumbent(self, tshape5, triangle_circuit):
        from mlqls.srefine import srefine_run
        from mlqls.srefine import SrefineConfig

        warm = srefine_run(
            triangle_circuit, tshape5, None,
            SrefineConfig(candidates=1, mapper_first_budget=0.2),
            random.Random(0),
        )
        res = solve_exact(triangle_circuit, tshape5, warm_start=warm)
        assert res.swaps == 1 and res.proven_optimal
