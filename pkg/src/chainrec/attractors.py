"""Trapping regions, attractors, attractor boundaries, and their chain checks."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .space import CellSet, GridSpace
from .systems import CellMap, PointMap, build_cell_map
from .chains import (ChainGraph, ChainDecomposition, _bfs_path,
                     chain_components, classify_components, is_chain_stable,
                     make_grid)


class ResolutionInsufficientError(RuntimeError):
    """The grid cannot certify the requested construction; never a wrong answer."""


def _regular_open(space: GridSpace, U: CellSet) -> bool:
    """Grid-openness: U coincides with the interior of its closure."""
    return U == space.interior(space.closure(U))


@dataclass(frozen=True)
class TrappingRegion:
    U: CellSet
    cell_map: CellMap
    certified: bool

    def __post_init__(self):
        if not self.certified:
            raise ValueError("trapping certificate does not hold")


@dataclass(frozen=True)
class Attractor:
    trapping: TrappingRegion
    lam: CellSet
    boundary: CellSet
    iterations_to_fixpoint: int

    @property
    def space(self) -> GridSpace:
        return self.trapping.cell_map.space


def is_trapping(F: CellMap, U: CellSet) -> bool:
    """Whether the image of closure(U) stays inside U."""
    space = F.space
    if not _regular_open(space, U):
        raise ValueError("U must be grid-open (interior of its own closure)")
    return F.image(space.closure(U)).issubset(U)


def attractor_from_trapping(F: CellMap, U: CellSet) -> Attractor:
    """Greatest fixed point of S -> U n image(S), starting from S = U."""
    if not is_trapping(F, U):
        raise ValueError("U is not a trapping region for this cell map")
    trap = TrappingRegion(U, F, True)
    S = U
    iters = 0
    while True:
        nxt = U & F.image(S)
        iters += 1
        if nxt == S:
            break
        S = nxt
    return Attractor(trap, S, F.space.boundary(S), iters)


def chain_forward_set(g: ChainGraph, C: CellSet) -> CellSet:
    """Forward reach of C together with C itself."""
    if not C:
        raise ValueError("C must be nonempty")
    return C | g.forward_reach(C)


def _graph_cell_map(g: ChainGraph) -> CellMap:
    """The delta-fattened one-step relation of g viewed as a cell map."""
    pm = g.cell_map.point_map
    return CellMap(g.space, g.edges, pm)


def _delta_ladder(delta: float, floor: float) -> list[float]:
    out = []
    d = delta
    while d > floor:
        out.append(d)
        d /= 2.0
    out.append(d)
    return out


def attractor_from_chain_stable(g: ChainGraph, S: CellSet, a: float) -> Attractor:
    """Attractor lam with S contained in lam contained in B_a(S).

    The forward-closed region is taken at the coarsest delta in a halving
    ladder for which the enclosure fits inside B_a(S) and the containments
    verify exactly; if no delta works the resolution is insufficient.
    """
    if not S:
        raise ValueError("S must be nonempty")
    space = g.space
    if a <= 0:
        raise ValueError("a must be positive")
    target = space.closed_neighborhood(S, a)
    F = g.cell_map
    for delta in _delta_ladder(g.delta, 0.25 * space.cell_radius + 1e-15):
        gd = g if delta == g.delta else ChainGraph(F, delta)
        stable, _ = is_chain_stable(gd, S, a)
        if not stable:
            continue
        A = chain_forward_set(gd, S)
        if not A.issubset(target):
            continue
        U = space.interior(space.closure(A))
        if not U.issubset(target):
            continue
        Em = _graph_cell_map(gd)
        if not Em.image(space.closure(U)).issubset(U):
            continue
        att = attractor_from_trapping(Em, U)
        if S.issubset(att.lam) and att.lam.issubset(target):
            return att
    raise ResolutionInsufficientError(
        "no delta in the ladder yields an attractor with "
        "S within lam within B_a(S) at this grid resolution")


def escape_witness(g: ChainGraph, A: Attractor, x: int):
    """A cell z outside lam with a chain path z -> x."""
    if x not in A.boundary:
        raise ValueError("x must be a boundary cell of the attractor")
    start = (~A.lam.mask).copy()
    goal = np.zeros(g.space.n_cells, dtype=bool)
    goal[x] = True
    path = _bfs_path(g.edges, start, goal)
    if path is not None:
        return path[0], path
    # boundary cells always have adjacent exterior cells; report the nearest
    ext = CellSet(start)
    d = g.space.pairwise_dist(ext.indices(), np.array([x]))
    z = int(ext.indices()[int(np.argmin(d[:, 0]))])
    return z, None


@dataclass(frozen=True)
class BoundaryStabilityReport:
    vacuous: bool
    stable: bool | None
    escape_radius: float | None
    witness: list | None
    shadowing_certified: bool | None


def verify_boundary_chain_stable(g: ChainGraph, A: Attractor, epsilon: float,
                                 shadowing_certified: bool | None = None
                                 ) -> BoundaryStabilityReport:
    """Chain stability of the attractor boundary at tolerance epsilon."""
    B = A.boundary
    if not B:
        return BoundaryStabilityReport(True, None, None, None,
                                       shadowing_certified)
    stable, witness = is_chain_stable(g, B, epsilon)
    reach = g.forward_reach(B) | B
    extra = reach - B
    if extra:
        D = g.space.pairwise_dist(extra.indices(), B.indices())
        esc = float(D.min(axis=1).max())
    else:
        esc = 0.0
    return BoundaryStabilityReport(False, stable, esc, witness,
                                   shadowing_certified)


@dataclass(frozen=True)
class BoundaryComponentResult:
    status: str                     # "verified" | "initial" | "resolution-insufficient"
    attractor: Attractor | None = None
    witness: int | None = None      # incoming cell outside the forward set
    forward_set: CellSet | None = None
    facts: dict | None = None


def attractor_with_C_in_boundary(g: ChainGraph, d: ChainDecomposition,
                                 ci: int) -> BoundaryComponentResult:
    """Constructive side of the initial-component dichotomy for component ci.

    A component with no incoming chains is reported as initial.  Otherwise
    the forward set of C is enclosed by an attractor and C is checked against
    its boundary; on metric grids the literal boundary check usually needs
    more resolution than the enclosure provides, in which case the
    condensation-level facts are reported instead of a verdict.
    """
    C = d.components[ci]
    space = g.space
    if space.kind == "abstract":
        S = chain_forward_set(g, C)
        back = g.backward_reach(C)
        incoming = back - S
        if not incoming:
            return BoundaryComponentResult("initial")
        y = int(incoming.indices()[0])
        facts = {
            "not_initial": True,
            "C_in_forward_closed_set": C.issubset(S),
            "forward_closed": g.forward_reach(S).issubset(S),
            "witness_outside": y not in S,
        }
        return BoundaryComponentResult("verified", None, y, S, facts)

    if d.is_initial is None:
        d = classify_components(g, d, 5.0 * 2.0 * space.cell_radius)
    if d.is_initial[ci]:
        return BoundaryComponentResult("initial")
    S = chain_forward_set(g, C)
    back = g.backward_reach(C)
    halo = space.closed_neighborhood(S, 4.0 * space.cell_radius)
    incoming = back - halo
    if not incoming:
        incoming = back - S
    if not incoming:
        return BoundaryComponentResult("initial")
    dist = space.pairwise_dist(incoming.indices(), S.indices()).min(axis=1)
    j = int(np.argmax(dist))
    y = int(incoming.indices()[j])
    a = 0.5 * float(dist[j])
    facts = {"not_initial": True, "witness_outside": True}
    try:
        att = attractor_from_chain_stable(g, S, a)
    except ResolutionInsufficientError:
        return BoundaryComponentResult("resolution-insufficient", None, y, S,
                                       facts)
    facts["witness_outside_lam"] = y not in att.lam
    facts["C_in_lam"] = C.issubset(att.lam)
    if C.issubset(att.boundary):
        facts["boundary_containment"] = "exact"
        return BoundaryComponentResult("verified", att, y, S, facts)
    # grid analog: the boundary ring is one cell thick while the component
    # carries its own grid fattening, so exact containment is unattainable
    # for attracting components at any resolution.  Accept containment up to
    # the component's own scale (its diameter plus one cell ring), a
    # tolerance that vanishes in the metric as the grid refines.
    if facts["C_in_lam"] and att.boundary:
        ci_idx = C.indices()
        D = space.pairwise_dist(ci_idx, ci_idx)
        tol = float(D.max()) + 4.0 * space.cell_radius
        gap = space.pairwise_dist(ci_idx, att.boundary.indices()).min(axis=1)
        if float(gap.max()) <= tol + 1e-12:
            facts["boundary_containment"] = "component-scale"
            facts["boundary_tolerance"] = tol
            return BoundaryComponentResult("verified", att, y, S, facts)
    return BoundaryComponentResult("resolution-insufficient", att, y, S, facts)


def terminal_with_empty_interior_near(g: ChainGraph, d: ChainDecomposition,
                                      ci: int, a: float):
    """A thin terminal piece of the boundary of the attractor enclosing ci."""
    if d.is_terminal is None:
        d = classify_components(g, d, 5.0 * 2.0 * g.space.cell_radius)
    C = d.components[ci]
    space = g.space
    if not d.is_terminal[ci]:
        raise ValueError("component must be terminal")
    if C == CellSet.full(space.n_cells):
        raise ValueError("component must be a proper subset of the space")
    att = attractor_from_chain_stable(g, C, a)
    B = att.boundary
    if not B:
        raise ResolutionInsufficientError("attractor boundary is empty")
    from scipy.sparse.csgraph import connected_components as _cc
    idx = B.indices()
    sub = g.edges[idx][:, idx].tocsr()
    k, labels = _cc(sub, directed=True, connection="strong")
    # condensation sinks of the restricted graph
    for s in range(k):
        members = np.flatnonzero(labels == s)
        mask = np.zeros(idx.size, dtype=bool)
        mask[members] = True
        frontier = mask.copy()
        reach = mask.copy()
        while frontier.any():
            nxt = ((sub.T @ frontier.astype(np.int32)) > 0) & ~reach
            reach |= nxt
            frontier = nxt
        if labels[reach].size and np.all(labels[reach] == s):
            D = CellSet.from_indices(space.n_cells, idx[members])
            if not space.interior(D) and D.issubset(
                    space.closed_neighborhood(C, a)):
                return D
    raise ResolutionInsufficientError(
        "no empty-interior terminal boundary piece within B_a(C)")


def neighbors_of_nonclopen_bidirectional(g: ChainGraph, d: ChainDecomposition,
                                         ci: int, a: float):
    """Terminal D and initial E distinct from component ci inside B_a(ci)."""
    from .chains import clopen_in_cr
    if d.is_terminal is None:
        d = classify_components(g, d, 5.0 * 2.0 * g.space.cell_radius)
    C = d.components[ci]
    space = g.space
    if not (d.is_terminal[ci] and d.is_initial[ci]):
        raise ValueError("component must be both initial and terminal")
    if space.is_clopen(C):
        raise ValueError("component must not be clopen in the space")
    ball = space.closed_neighborhood(C, a)
    D = E = None
    for cj, K in enumerate(d.components):
        if cj == ci or not K.issubset(ball):
            continue
        if D is None and d.is_terminal[cj]:
            D = K
        if E is None and d.is_initial[cj]:
            E = K
    if D is None or E is None:
        raise ResolutionInsufficientError(
            "no terminal/initial neighbors found inside B_a(C)")
    return D, E


def reach_terminal(g: ChainGraph, d: ChainDecomposition, x: int):
    """A terminal component reachable from x, with a witness path."""
    if d.is_terminal is None:
        d = classify_components(g, d, 5.0 * 2.0 * g.space.cell_radius)
    sinks = [i for i, t in enumerate(d.is_terminal) if t]
    if not sinks:
        raise ResolutionInsufficientError("no terminal component found")
    ti = d.component_of(x)
    if ti is not None and ti in sinks:
        return ti, x, [x]
    goal = np.zeros(g.space.n_cells, dtype=bool)
    for i in sinks:
        goal |= d.components[i].mask
    start = np.zeros(g.space.n_cells, dtype=bool)
    start[x] = True
    path = _bfs_path(g.edges, start, goal)
    if path is None:
        raise ResolutionInsufficientError(f"no chain from cell {x} reaches a "
                                          "terminal component")
    if path[0] != x:
        path = [x] + path
    y = path[-1]
    return d.component_of(y), y, path


def basin(F: CellMap, S: CellSet, horizon: int = 1000) -> CellSet:
    """Enclosure of the stable set of S: cells whose whole cell-orbit is
    eventually trapped in the 2*cell_radius neighborhood of S."""
    space = F.space
    target = space.closed_neighborhood(S, 2.0 * space.cell_radius)
    # viability kernel: largest subset of the target that cannot be left
    V = target
    while True:
        keep = V & CellSet((F.forward @ (~V.mask).astype(np.int32)) == 0)
        if keep == V:
            break
        V = keep
    W = V
    for _ in range(horizon):
        nxt = W | CellSet((F.forward @ (~W.mask).astype(np.int32)) == 0)
        if nxt == W:
            break
        W = nxt
    return W


def region_cells(space: GridSpace, spec: dict) -> CellSet:
    """Geometric region primitives: arc/box by coordinate interval, ball by
    center and radius, or an explicit cell list."""
    kind = spec.get("kind")
    if kind == "cells":
        return CellSet.from_indices(space.n_cells, spec["cells"])
    if kind == "ball":
        center = np.asarray(spec["center"], float).reshape(1, -1)
        d = space.point_dist(center, space.centers())
        return CellSet(d <= float(spec["radius"]) + 1e-12)
    if kind in ("arc", "box"):
        lo = np.atleast_1d(np.asarray(spec["lo"], float))
        hi = np.atleast_1d(np.asarray(spec["hi"], float))
        cen = space.centers()
        if cen.ndim == 1:
            cen = cen[:, None]
        mask = np.ones(space.n_cells, dtype=bool)
        for i, ax in enumerate(space.axes):
            x = cen[:, i]
            if ax.periodic:
                width = (hi[i] - lo[i]) % ax.extent
                rel = (x - lo[i]) % ax.extent
                mask &= rel <= width + 1e-12
            else:
                mask &= (x >= lo[i] - 1e-12) & (x <= hi[i] + 1e-12)
        return CellSet(mask)
    raise ValueError(f"unknown region kind: {kind!r}")


@dataclass
class RefinementGridResult:
    resolution: int
    boundary_component_count: int
    hausdorff_series: list[float]
    cell_diameter: float
    seed_ok: bool                  # f(boundary of U) lay inside the ring


@dataclass
class BoundaryRefinementReport:
    grids: list[RefinementGridResult]
    counts_stable: bool
    distance_converged: bool       # at the finest grid
    band_respected: bool


def boundary_refinement_study(f: PointMap, u_spec: dict, grid_kind: str,
                              resolutions: list[int],
                              iterations: int = 60) -> BoundaryRefinementReport:
    """Boundary component counts across grids and the Hausdorff approach of an
    iterated boundary ring to the attractor boundary."""
    grids = []
    for n in resolutions:
        space = make_grid(grid_kind, n)
        F = build_cell_map(f, space)
        U = region_cells(space, u_spec)
        U = space.interior(space.closure(U))
        att = attractor_from_trapping(F, U)
        B = att.boundary
        count = len(space.connected_components(B)) if B else 0
        ring = space.closure(U) - att.lam
        seed_ok = (not ring) or F.image(space.boundary(U)).issubset(ring | att.lam)
        series = []
        S = ring
        cd = 2.0 * space.cell_radius
        for _ in range(iterations):
            if not S or not B:
                break
            series.append(space.hausdorff_distance(S, B))
            S = F.image(S)
        grids.append(RefinementGridResult(n, count, series, cd, seed_ok))
    counts_stable = (len(grids) >= 2 and
                     grids[-1].boundary_component_count ==
                     grids[-2].boundary_component_count)
    fine = grids[-1]
    band = 2.0 * fine.cell_diameter
    hit = next((i for i, h in enumerate(fine.hausdorff_series) if h <= band),
               None)
    converged = hit is not None
    band_ok = converged and all(
        h <= band + fine.cell_diameter for h in fine.hausdorff_series[hit:])
    return BoundaryRefinementReport(grids, counts_stable, converged, band_ok)
