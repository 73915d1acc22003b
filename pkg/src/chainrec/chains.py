"""Delta-chain digraphs: chain recurrence, chain components, chain stability."""

from __future__ import annotations

from dataclasses import dataclass, replace
from math import gcd
from typing import Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components as _cc

from .space import CellSet, GridSpace
from .systems import CellMap, PointMap, build_cell_map, neighborhood_matrix


class ChainGraph:
    """Digraph whose edges are single delta-chain steps at cell resolution.

    c -> c' iff c' meets the delta-fattened forward image of c.  Paths of
    length k correspond to grid delta'-chains of the underlying map with
    delta' <= delta + 2 * cell_radius * (1 + lipschitz_bound).
    """

    def __init__(self, cell_map: CellMap, delta: float):
        if delta <= 0:
            raise ValueError("delta must be positive")
        self.cell_map = cell_map
        self.space = cell_map.space
        self.delta = delta
        D = neighborhood_matrix(self.space, delta)
        E = (cell_map.forward.astype(np.int32) @ D.astype(np.int32)) > 0
        self.edges = E.tocsr().astype(bool)
        self._edges_rev = None
        lip = cell_map.point_map.lipschitz_bound if cell_map.point_map else 1.0
        self.soundness_bound = delta + 2.0 * self.space.cell_radius * (1.0 + lip)

    @property
    def edges_rev(self) -> sp.csr_matrix:
        if self._edges_rev is None:
            self._edges_rev = self.edges.T.tocsr()
        return self._edges_rev

    def successors(self, S: CellSet) -> CellSet:
        v = self.edges.T @ S.mask.astype(np.int32)
        return CellSet(v > 0)

    def predecessors(self, S: CellSet) -> CellSet:
        v = self.edges @ S.mask.astype(np.int32)
        return CellSet(v > 0)

    def forward_reach(self, S: CellSet) -> CellSet:
        """All cells reachable from S by a path of length >= 1."""
        reach = self.successors(S)
        frontier = reach
        while frontier:
            nxt = self.successors(frontier) - reach
            reach = reach | nxt
            frontier = nxt
        return reach

    def backward_reach(self, S: CellSet) -> CellSet:
        reach = self.predecessors(S)
        frontier = reach
        while frontier:
            nxt = self.predecessors(frontier) - reach
            reach = reach | nxt
            frontier = nxt
        return reach

    def reversed_view(self) -> "ChainGraph":
        g = object.__new__(ChainGraph)
        g.cell_map = self.cell_map.reversed()
        g.space = self.space
        g.delta = self.delta
        g.edges = self.edges_rev
        g._edges_rev = self.edges
        g.soundness_bound = self.soundness_bound
        return g


def build_chain_graph(F: CellMap, delta: float) -> ChainGraph:
    return ChainGraph(F, delta)


def _bfs_path(E: sp.csr_matrix, start: np.ndarray, goal: np.ndarray) -> list[int] | None:
    """Shortest path (length >= 1) from any start cell into goal; None if none."""
    n = E.shape[0]
    parent = np.full(n, -1, dtype=np.int64)
    visited = np.zeros(n, dtype=bool)
    frontier = list(np.flatnonzero(start))
    first = True
    while frontier:
        nxt = []
        for u in frontier:
            row = E.indices[E.indptr[u]:E.indptr[u + 1]]
            for v in row:
                if not visited[v]:
                    visited[v] = True
                    parent[v] = u
                    if goal[v]:
                        path = [int(v)]
                        while parent[path[-1]] >= 0:
                            path.append(int(parent[path[-1]]))
                            if start[path[-1]] and len(path) > 1:
                                break
                        return path[::-1]
                    nxt.append(int(v))
        frontier = nxt
        first = False
    return None


def chain_reaches(g: ChainGraph, a: int, b: int) -> bool:
    """True iff a path of length >= 1 leads from cell a to cell b."""
    start = np.zeros(g.space.n_cells, dtype=bool)
    start[a] = True
    goal = np.zeros(g.space.n_cells, dtype=bool)
    goal[b] = True
    return _bfs_path(g.edges, start, goal) is not None


@dataclass(frozen=True)
class ChainDecomposition:
    graph: ChainGraph
    recurrent_cells: CellSet
    components: tuple[CellSet, ...]
    scc_labels: np.ndarray          # SCC id per cell (includes transient singletons)
    comp_index: np.ndarray          # component id per cell, -1 for transient cells
    is_terminal: tuple[bool, ...] | None = None
    is_initial: tuple[bool, ...] | None = None
    escape_radius: tuple[float, ...] | None = None
    epsilon: float | None = None

    def component_of(self, cell: int) -> int | None:
        ci = int(self.comp_index[cell])
        return ci if ci >= 0 else None


def chain_recurrent_set(g: ChainGraph) -> CellSet:
    """Cells lying on a cycle of length >= 1 (self-loops count)."""
    return chain_components(g).recurrent_cells


def chain_components(g: ChainGraph) -> ChainDecomposition:
    """Partition of the chain-recurrent cells into chain components.

    On metric grids, recurrent SCCs that touch under cell adjacency are not
    separable at the current resolution and are reported as one component
    (the adjacency-connected enclosures of the recurrent set).  On abstract
    spaces (identity adjacency by default) this reduces to the plain SCC
    partition.
    """
    n = g.space.n_cells
    k, labels = _cc(g.edges, directed=True, connection="strong")
    counts = np.bincount(labels, minlength=k)
    selfloop = g.edges.diagonal().astype(bool)
    rec_scc = np.zeros(k, dtype=bool)
    rec_scc[labels[selfloop]] = True
    rec_scc[np.flatnonzero(counts >= 2)] = True
    recurrent = CellSet(rec_scc[labels])
    if g.space.kind == "abstract":
        comps = [CellSet.from_indices(n, np.flatnonzero(labels == s))
                 for s in np.flatnonzero(rec_scc)]
        comps.sort(key=lambda c: int(c.indices()[0]))
    else:
        comps = g.space.connected_components(recurrent)
    comp_index = np.full(n, -1, dtype=np.int64)
    for i, c in enumerate(comps):
        comp_index[c.mask] = i
    return ChainDecomposition(g, recurrent, tuple(comps), labels, comp_index)


def classify_components(g: ChainGraph, d: ChainDecomposition,
                        epsilon: float) -> ChainDecomposition:
    """Terminal/initial flags and escape radii at tolerance epsilon."""
    if epsilon < 0:
        raise ValueError("epsilon must be >= 0")
    term, init, esc = [], [], []
    rev = g.reversed_view()
    for C in d.components:
        reach = g.forward_reach(C)
        others = (d.recurrent_cells - C) & reach
        halo = g.space.closed_neighborhood(C, epsilon)
        term.append((not others) and reach.issubset(halo))
        extra = reach - C
        if extra:
            D = g.space.pairwise_dist(extra.indices(), C.indices())
            esc.append(float(D.min(axis=1).max()))
        else:
            esc.append(0.0)
        breach = rev.forward_reach(C)
        bothers = (d.recurrent_cells - C) & breach
        init.append((not bothers) and breach.issubset(halo))
    return replace(d, is_terminal=tuple(term), is_initial=tuple(init),
                   escape_radius=tuple(esc), epsilon=epsilon)


def is_chain_stable(g: ChainGraph, S: CellSet, epsilon: float):
    """Whether every chain from S stays within epsilon of S; witness on failure.

    With epsilon == 0 this is the exact forward-closedness check
    (reach(S) contained in S).
    """
    if not S:
        raise ValueError("S must be nonempty")
    reach = g.forward_reach(S)
    target = S if epsilon == 0 else g.space.closed_neighborhood(S, epsilon)
    if reach.issubset(target):
        return True, None
    witness = _bfs_path(g.edges, S.mask, (reach - target).mask)
    return False, witness


def is_chain_transitive(g: ChainGraph) -> bool:
    k, _ = _cc(g.edges, directed=True, connection="strong")
    return k == 1


def graph_period(g: ChainGraph) -> int:
    """gcd of all cycle lengths of a strongly connected chain graph."""
    E = g.edges.tocoo()
    n = g.space.n_cells
    level = np.full(n, -1, dtype=np.int64)
    level[0] = 0
    frontier = np.zeros(n, dtype=bool)
    frontier[0] = True
    ET = g.edges_rev
    lv = 0
    while frontier.any():
        nxt = ((ET @ frontier.astype(np.int32)) > 0) & (level < 0)
        level[nxt] = lv + 1
        frontier = nxt
        lv += 1
    diffs = level[E.row] + 1 - level[E.col]
    p = 0
    for dval in np.unique(np.abs(diffs)):
        p = gcd(p, int(dval))
        if p == 1:
            break
    return p if p > 0 else 1


def is_chain_mixing(g: ChainGraph) -> bool:
    return is_chain_transitive(g) and graph_period(g) == 1


def component_separation(d: ChainDecomposition) -> np.ndarray:
    """Pairwise min center-distance between distinct chain components."""
    comps = d.components
    m = len(comps)
    space = d.graph.space
    out = np.zeros((m, m))
    for i in range(m):
        for j in range(i + 1, m):
            D = space.pairwise_dist(comps[i].indices(), comps[j].indices())
            out[i, j] = out[j, i] = float(D.min())
    return out


def clopen_in_cr(d: ChainDecomposition, ci: int) -> bool:
    """True iff component ci touches no other recurrent cell under adjacency."""
    C = d.components[ci]
    space = d.graph.space
    closure = space.closure(C)
    return not ((d.recurrent_cells - C) & closure)


@dataclass
class RefinementLevel:
    resolution: int
    delta: float
    component_count: int
    flags: tuple          # (is_terminal, is_initial) per component
    recurrent: CellSet
    decomposition: ChainDecomposition
    space: GridSpace


@dataclass
class RefinementReport:
    levels: list[RefinementLevel]
    matches: list[list[int]]       # per transition, fine comp -> coarse comp
    counts_stable: bool
    flags_stable: bool
    cr_monotone: bool


def refine(point_map: PointMap, grid_kind: str, resolutions: Sequence[int],
           delta_cells: float = 1.0, epsilon_cells: float = 5.0) -> RefinementReport:
    """Decompose at increasing resolutions and match components across levels.

    delta at each level is delta_cells * (cell diameter), so the ladder of
    deltas decreases as the grid refines (the for-every-delta quantifier is
    realized as this sweep).
    """
    if len(resolutions) < 2 or any(b <= a for a, b in zip(resolutions, resolutions[1:])):
        raise ValueError("resolutions must be strictly increasing, >= 2 entries")
    levels = []
    for n in resolutions:
        space = make_grid(grid_kind, n)
        F = build_cell_map(point_map, space)
        step = max(ax.step for ax in space.axes)
        delta = delta_cells * step
        g = ChainGraph(F, delta)
        d = classify_components(g, chain_components(g), epsilon_cells * step)
        flags = tuple(zip(d.is_terminal, d.is_initial))
        levels.append(RefinementLevel(n, delta, len(d.components), flags,
                                      d.recurrent_cells, d, space))
    matches = []
    cr_monotone = True
    for coarse, fine in zip(levels, levels[1:]):
        # map fine centers into coarse cells
        fine_centers = fine.space.centers()
        into_coarse = coarse.space.cell_of(fine_centers)
        match = []
        for C in fine.decomposition.components:
            best, best_ov = -1, -1
            for ci, D in enumerate(coarse.decomposition.components):
                ov = int(D.mask[into_coarse[C.mask]].sum())
                if ov > best_ov:
                    best, best_ov = ci, ov
            match.append(best)
        matches.append(match)
        fat = coarse.space.closed_neighborhood(
            coarse.recurrent, 2.0 * coarse.space.cell_radius)
        if not np.all(fat.mask[into_coarse[fine.recurrent.mask]]):
            cr_monotone = False
    counts_stable = len({lv.component_count for lv in levels}) == 1
    flags_stable = all(
        sorted(lv.flags) == sorted(levels[0].flags) for lv in levels)
    return RefinementReport(levels, matches, counts_stable, flags_stable,
                            cr_monotone)


def make_grid(kind: str, n: int) -> GridSpace:
    if kind == "circle":
        return GridSpace.circle(n)
    if kind == "torus2":
        return GridSpace.torus2(n)
    if kind == "interval":
        return GridSpace.interval(n)
    raise ValueError(f"unknown grid kind: {kind!r}")


def minimality_and_separation_checks(g: ChainGraph, d: ChainDecomposition,
                                     orbit_steps: int = 400,
                                     samples: int = 8) -> dict:
    """Grid checks for minimal-set clopenness and separation from initial sets.

    (a) a component that is initial, terminal, clopen in CR, and has nonempty
    grid interior must be clopen in the space; (b) the forward cell orbit of
    a cell outside an initial component never enters the component.
    """
    if d.is_terminal is None:
        d = classify_components(g, d, 5.0 * 2.0 * g.space.cell_radius)
    space = g.space
    F = g.cell_map
    report = {"clopen_checks": [], "separation_checks": []}
    for ci, C in enumerate(d.components):
        interior = space.interior(C)
        if d.is_terminal[ci] and d.is_initial[ci] and clopen_in_cr(d, ci) and interior:
            report["clopen_checks"].append((ci, space.is_clopen(C)))
    for ci, C in enumerate(d.components):
        if not (d.is_initial[ci] and not d.is_terminal[ci]):
            continue
        halo = space.closed_neighborhood(C, 0.0)
        outside = (space.closed_neighborhood(C, 6.0 * space.cell_radius) - halo)
        cells = outside.indices()
        if cells.size == 0:
            continue
        pick = cells[np.linspace(0, cells.size - 1, min(samples, cells.size),
                                 dtype=int)]
        for c in pick:
            mask = CellSet.from_indices(space.n_cells, [c])
            ok = True
            for _ in range(orbit_steps):
                mask = F.image(mask)
                if mask & halo:
                    ok = False
                    break
            report["separation_checks"].append((ci, int(c), ok))
    return report
