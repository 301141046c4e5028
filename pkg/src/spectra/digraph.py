"""Strongly connected components and cycle structure of the mask digraph."""
from __future__ import annotations

from dataclasses import dataclass, field

import numba
import numpy as np

from .ensemble import SparseMatrix

__all__ = [
    "Complex",
    "ComponentClass",
    "SccDecomposition",
    "SimpleCycle",
    "StructureReport",
    "Trivial",
    "classify_components",
    "cycle_count_ge",
    "scc_decompose",
    "structure_report",
]


@numba.njit(cache=True, nogil=True)
def _tarjan(n, indptr, indices):
    # Iterative Tarjan: explicit call stack of (vertex, next edge position).
    index = np.full(n, -1, dtype=np.int64)
    low = np.zeros(n, dtype=np.int64)
    on_stack = np.zeros(n, dtype=np.bool_)
    comp = np.full(n, -1, dtype=np.int64)
    scc_stack = np.empty(n, dtype=np.int64)
    call_v = np.empty(n, dtype=np.int64)
    call_e = np.empty(n, dtype=np.int64)
    sp = 0
    depth = 0
    counter = 0
    ncomp = 0
    for root in range(n):
        if index[root] >= 0:
            continue
        index[root] = counter
        low[root] = counter
        counter += 1
        scc_stack[sp] = root
        sp += 1
        on_stack[root] = True
        call_v[0] = root
        call_e[0] = indptr[root]
        depth = 1
        while depth > 0:
            v = call_v[depth - 1]
            e = call_e[depth - 1]
            if e < indptr[v + 1]:
                call_e[depth - 1] = e + 1
                w = indices[e]
                if index[w] < 0:
                    index[w] = counter
                    low[w] = counter
                    counter += 1
                    scc_stack[sp] = w
                    sp += 1
                    on_stack[w] = True
                    call_v[depth] = w
                    call_e[depth] = indptr[w]
                    depth += 1
                elif on_stack[w] and index[w] < low[v]:
                    low[v] = index[w]
            else:
                depth -= 1
                if depth > 0:
                    parent = call_v[depth - 1]
                    if low[v] < low[parent]:
                        low[parent] = low[v]
                if low[v] == index[v]:
                    while True:
                        sp -= 1
                        w = scc_stack[sp]
                        on_stack[w] = False
                        comp[w] = ncomp
                        if w == v:
                            break
                    ncomp += 1
    return comp, ncomp


@dataclass(frozen=True, eq=False)
class SccDecomposition:
    """Component ids are assigned in emission order, which is reverse topological:
    every edge between two components points from a higher id to a lower one."""

    component_of: np.ndarray
    num_components: int

    @property
    def component_order(self) -> np.ndarray:
        return np.arange(self.num_components)

    @property
    def sizes(self) -> np.ndarray:
        return np.bincount(self.component_of, minlength=self.num_components)

    @property
    def component_members(self) -> list[np.ndarray]:
        order = np.argsort(self.component_of, kind="stable")
        bounds = np.cumsum(self.sizes)[:-1]
        return np.split(order, bounds)


def scc_decompose(pattern: SparseMatrix) -> SccDecomposition:
    comp, ncomp = _tarjan(pattern.n, pattern.row_offsets, pattern.col_indices)
    return SccDecomposition(comp, int(ncomp))


@dataclass(frozen=True)
class Trivial:
    vertex: int


@dataclass(frozen=True)
class SimpleCycle:
    length: int
    vertices: tuple[int, ...]


@dataclass(frozen=True)
class Complex:
    num_vertices: int
    num_internal_edges: int
    self_loop: bool = False


ComponentClass = Trivial | SimpleCycle | Complex


def _internal_counts(pattern: SparseMatrix, scc: SccDecomposition):
    rows, cols = pattern.row_indices, pattern.col_indices
    comp = scc.component_of
    internal = comp[rows] == comp[cols]
    edges_per_comp = np.bincount(comp[rows[internal]], minlength=scc.num_components)
    return internal, edges_per_comp


def _cycle_vertices(pattern: SparseMatrix, internal: np.ndarray, members: np.ndarray):
    # unique internal successor of each member vertex
    start = int(members.min())
    succ = {}
    cols = pattern.col_indices
    for v in members.tolist():
        lo, hi = pattern.row_offsets[v], pattern.row_offsets[v + 1]
        hit = np.flatnonzero(internal[lo:hi])
        succ[v] = int(cols[lo + hit[0]])
    order = [start]
    v = succ[start]
    while v != start:
        order.append(v)
        v = succ[v]
    return tuple(order)


def classify_components(pattern: SparseMatrix, scc: SccDecomposition) -> list[ComponentClass]:
    """One class per component id.

    A strongly connected component of size m >= 2 with exactly m internal edges
    has every internal in- and out-degree equal to 1, so it is a simple cycle.
    """
    internal, edges_per_comp = _internal_counts(pattern, scc)
    sizes = scc.sizes
    members = scc.component_members
    out: list[ComponentClass] = []
    for c in range(scc.num_components):
        size, m = int(sizes[c]), int(edges_per_comp[c])
        if size == 1 and m == 0:
            out.append(Trivial(int(members[c][0])))
        elif size >= 2 and m == size:
            verts = _cycle_vertices(pattern, internal, members[c])
            out.append(SimpleCycle(size, verts))
        else:
            out.append(Complex(size, m, self_loop=(size == 1)))
    return out


@dataclass
class StructureReport:
    acyclic: bool
    num_trivial: int
    num_simple_cycles: int
    num_complex: int
    max_cycle_length: int
    largest_component_size: int
    cycle_inventory: list[SimpleCycle] = field(default_factory=list)
    # self-loop singletons, kept apart because they still have an exact radius
    self_loops: list[int] = field(default_factory=list)

    @property
    def num_components(self) -> int:
        return self.num_trivial + self.num_simple_cycles + self.num_complex

    @property
    def cycles_only(self) -> bool:
        """True when every nontrivial component is a directed cycle (or a self-loop)."""
        return self.num_complex == len(self.self_loops)

    def to_dict(self) -> dict:
        return {
            "acyclic": self.acyclic,
            "num_trivial": self.num_trivial,
            "num_simple_cycles": self.num_simple_cycles,
            "num_complex": self.num_complex,
            "max_cycle_length": self.max_cycle_length,
            "largest_component_size": self.largest_component_size,
            "cycle_inventory": [
                {"length": c.length, "vertices": list(c.vertices)} for c in self.cycle_inventory
            ],
            "self_loops": list(self.self_loops),
        }


def structure_report(pattern: SparseMatrix, scc: SccDecomposition | None = None) -> StructureReport:
    scc = scc_decompose(pattern) if scc is None else scc
    sizes = scc.sizes
    internal, edges_per_comp = _internal_counts(pattern, scc)
    trivial = (sizes == 1) & (edges_per_comp == 0)
    cyc = (sizes >= 2) & (edges_per_comp == sizes)
    ids = np.flatnonzero(cyc)
    inventory = []
    self_loops = []
    if ids.size or not np.all(trivial | cyc):
        members = scc.component_members
        for c in ids.tolist():
            inventory.append(SimpleCycle(int(sizes[c]), _cycle_vertices(pattern, internal, members[c])))
        for c in np.flatnonzero((sizes == 1) & (edges_per_comp == 1)).tolist():
            self_loops.append(int(members[c][0]))
    n_cyc = int(ids.size)
    n_complex = int(scc.num_components - trivial.sum() - n_cyc)
    return StructureReport(
        acyclic=(n_cyc == 0 and n_complex == 0),
        num_trivial=int(trivial.sum()),
        num_simple_cycles=n_cyc,
        num_complex=n_complex,
        max_cycle_length=int(sizes[ids].max()) if n_cyc else 0,
        largest_component_size=int(sizes.max()),
        cycle_inventory=sorted(inventory, key=lambda c: c.vertices[0]),
        self_loops=sorted(self_loops),
    )


def cycle_count_ge(report: StructureReport, m: int) -> int:
    """Number of simple-cycle components of length >= m."""
    if m < 2:
        raise ValueError("cycle length threshold must be at least 2")
    return sum(1 for c in report.cycle_inventory if c.length >= m)
