import numpy as np
import pytest

from seedmin.graph import ProbGraph


@pytest.fixture
def diamond() -> ProbGraph:
    """Node 0 reaches 1 and 2 with p=1/2 each; both reach 3 deterministically.

    Small enough that every expectation has a closed form: four equally
    likely live-edge realizations.
    """
    return ProbGraph.from_edges(4, [0, 0, 1, 2], [1, 2, 3, 3],
                                [0.5, 0.5, 1.0, 1.0], "ic")


@pytest.fixture
def chain6() -> ProbGraph:
    """Six nodes, five half-probability edges; used for scripted cascades."""
    return ProbGraph.from_edges(6, [0, 0, 3, 2, 5], [1, 3, 5, 4, 4],
                                [0.5] * 5, "ic")


@pytest.fixture
def lt5() -> ProbGraph:
    """Five-node threshold-model instance with in-weight sums below one."""
    return ProbGraph.from_edges(5, [0, 0, 1, 2, 3], [1, 2, 3, 3, 4],
                                [0.6, 0.4, 0.5, 0.5, 0.7], "lt")


def make_pa_graph(n: int, seed: int = 11) -> ProbGraph:
    """Undirected preferential-attachment graph with 1/indegree weights.

    Every node past the first pair attaches to two degree-proportional
    targets; each undirected edge becomes two directed ones.
    """
    rng = np.random.default_rng(seed)
    und = {(0, 1)}
    targets = [0, 1]
    for v in range(2, n):
        for u in sorted(set(rng.choice(targets, size=2).tolist())):
            und.add((min(u, v), max(u, v)))
            targets.extend([u, v])
    src, dst = [], []
    for u, v in sorted(und):
        src += [u, v]
        dst += [v, u]
    dst = np.asarray(dst)
    p = 1.0 / np.bincount(dst, minlength=n)[dst]
    return ProbGraph.from_edges(n, src, dst, p, "ic")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Repeat the acceptance verdict lines after the captured output."""
    import sys
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    lines = getattr(mod, "RESULTS", None) if mod else None
    if not lines:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for line in lines:
        terminalreporter.write_line(line)
