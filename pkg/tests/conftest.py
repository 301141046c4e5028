import numpy as np
import pytest

from spectra.ensemble import SparseMatrix

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance_log():
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def random_digraph(rng: np.random.Generator, n: int, p: float, self_loops: bool = False) -> SparseMatrix:
    adj = rng.random((n, n)) < p
    if not self_loops:
        np.fill_diagonal(adj, False)
    rows, cols = np.nonzero(adj)
    return SparseMatrix.from_coo(n, rows, cols, rng.standard_normal(rows.size))


def cycle_matrix(n: int, cycle, weights=None) -> SparseMatrix:
    cycle = list(cycle)
    edges = [(cycle[i], cycle[(i + 1) % len(cycle)]) for i in range(len(cycle))]
    return SparseMatrix.from_edges(n, edges, weights)
