import random

import pytest

from mlqls import Circuit, Mapping, make_device


@pytest.fixture(scope="session")
def path4():
    return make_device("path", 4)


@pytest.fixture(scope="session")
def path5():
    return make_device("path", 5)


@pytest.fixture(scope="session")
def tshape5():
    """5-qubit T-shaped device: a hub at 1, a second hub at 3."""
    return make_device("custom", edges=[(0, 1), (1, 2), (1, 3), (3, 4)])


@pytest.fixture(scope="session")
def grid3():
    return make_device("grid", 3)


@pytest.fixture(scope="session")
def grid4():
    return make_device("grid", 4)


@pytest.fixture
def triangle_circuit():
    """Three mutually-interacting qubits; needs one SWAP on any triangle-free
    device."""
    return Circuit.from_pairs(3, [(0, 1), (1, 2), (0, 2)])


@pytest.fixture
def scenario_mapping():
    """Initial placement used with triangle_circuit on tshape5:
    q0 -> p3, q1 -> p1, q2 -> p2."""
    return Mapping((3, 1, 2))


def random_connected_graph(rng: random.Random, n: int, extra: int):
    """Spanning tree plus `extra` random chords."""
    edges = set()
    nodes = list(range(n))
    rng.shuffle(nodes)
    for i in range(1, n):
        a = nodes[rng.randrange(i)]
        edges.add((min(a, nodes[i]), max(a, nodes[i])))
    while extra > 0:
        a, b = rng.sample(range(n), 2)
        e = (min(a, b), max(a, b))
        if e not in edges:
            edges.add(e)
            extra -= 1
        elif len(edges) >= n * (n - 1) // 2:
            break
    return edges
