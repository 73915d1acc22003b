"""Verification suites: each suite runs a family of checks on a scenario and
returns verdict records.  Verdicts are one of pass | fail |
hypotheses-not-met | resolution-insufficient; a suite never reports pass for
a conclusion whose certification step did not pass."""
from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..space import GridSpace, CellSet
from ..systems import (PointMap, CellMap, build_cell_map,
                       cell_map_from_relation, ConfigurationError, builtin)
from ..chains import (ChainGraph, chain_components, classify_components,
                      clopen_in_cr, is_chain_mixing, is_chain_transitive,
                      make_grid, refine)
from ..attractors import (ResolutionInsufficientError, attractor_from_trapping,
                          attractor_with_C_in_boundary, boundary_refinement_study,
                          escape_witness, is_trapping,
                          neighbors_of_nonclopen_bidirectional, region_cells,
                          terminal_with_empty_interior_near,
                          verify_boundary_chain_stable)
from ..shadowing import (estimate_expansivity, estimate_shadowing_modulus,
                         lemma21_pipeline)
from .config import Scenario
from .report import Check, Report

PASS = "pass"
FAIL = "fail"
HNM = "hypotheses-not-met"
RI = "resolution-insufficient"


def _timed(suite: str, name: str, fn) -> Check:
    t0 = time.perf_counter()
    try:
        verdict, details, witness = fn()
    except ResolutionInsufficientError as e:
        verdict, details, witness = RI, {"reason": str(e)}, None
    dt = time.perf_counter() - t0
    return Check(suite, name, verdict, details, witness, dt)


def _point_map(scn: Scenario) -> PointMap:
    sys = scn.system
    return builtin(sys["builtin"], tuple(sys.get("params", ())))


def _delta_in_space(space: GridSpace, delta_cells: float) -> float:
    return delta_cells * 2.0 * space.cell_radius


@dataclass
class _Level:
    """Built objects for one grid resolution, graphs cached per delta."""
    space: GridSpace
    F: CellMap
    _graphs: dict = field(default_factory=dict)

    def graph(self, delta_cells: float) -> ChainGraph:
        if delta_cells not in self._graphs:
            d = _delta_in_space(self.space, delta_cells)
            self._graphs[delta_cells] = ChainGraph(self.F, d)
        return self._graphs[delta_cells]


def _levels(scn: Scenario, f: PointMap) -> dict[int, _Level]:
    out = {}
    for n in scn.grid["resolutions"]:
        space = make_grid(scn.grid["kind"], n)
        out[n] = _Level(space, build_cell_map(f, space))
    return out


# ---------------------------------------------------------------------------
# components

def suite_components(scn: Scenario, levels=None) -> list[Check]:
    f = _point_map(scn)
    levels = levels or _levels(scn, f)
    checks = []
    counts = []
    for n, lv in levels.items():
        def one(n=n, lv=lv):
            g = lv.graph(scn.deltas[0])
            eps = 5.0 * _delta_in_space(lv.space, scn.deltas[0])
            d = classify_components(g, chain_components(g), eps)
            sizes = [c.count() for c in d.components]
            union = d.components[0]
            disjoint = True
            for i, c in enumerate(d.components[1:], 1):
                if c & union:
                    disjoint = False
                union = union | c
            partition_ok = disjoint and union == d.recurrent_cells
            details = {
                "resolution": n,
                "delta": _delta_in_space(lv.space, scn.deltas[0]),
                "component_count": len(d.components),
                "component_sizes": sizes,
                "is_terminal": list(d.is_terminal),
                "is_initial": list(d.is_initial),
                "escape_radius": list(d.escape_radius),
                "recurrent_cells": d.recurrent_cells.count(),
            }
            counts.append((n, len(d.components)))
            return (PASS if partition_ok else FAIL), details, None
        checks.append(_timed("components", f"decomposition[n={n}]", one))
    checks.append(Check("components", "counts_by_resolution", PASS,
                        {"component_counts_series": counts}, None, 0.0))
    return checks


# ---------------------------------------------------------------------------
# transitive set with nonempty interior -> clopen / whole space / mixing

def suite_theorem_1_1(scn: Scenario, levels=None) -> list[Check]:
    """Hypotheses in order (interior, transitivity, shadowing certification),
    then the clopen / whole-space / mixing conclusions plus the
    initial-and-terminal and clopen-in-CR sub-verdicts."""
    f = _point_map(scn)
    levels = levels or _levels(scn, f)
    n = scn.grid["resolutions"][-1]
    lv = levels[n]
    space = lv.space
    suite = "transitive_interior"
    checks = []

    if scn.lambda_region:
        lam = region_cells(space, scn.regions[scn.lambda_region])
    else:
        lam = CellSet.full(space.n_cells)

    state = {"hyp_ok": True}

    def interior_check():
        ok = bool(space.interior(lam))
        state["hyp_ok"] &= ok
        return (PASS if ok else HNM), {"resolution": n,
                                       "interior_cells": space.interior(lam).count(),
                                       "lambda_cells": lam.count()}, None
    checks.append(_timed(suite, "interior_nonempty", interior_check))

    g = lv.graph(scn.deltas[0])

    def transitive_check():
        if not state["hyp_ok"]:
            return HNM, {"skipped": "earlier hypothesis failed"}, None
        if lam == CellSet.full(space.n_cells):
            ok = is_chain_transitive(g)
        else:
            from scipy.sparse.csgraph import connected_components as _cc
            idx = lam.indices()
            sub = g.edges[idx][:, idx]
            k, _ = _cc(sub, directed=True, connection="strong")
            ok = k == 1
        state["hyp_ok"] &= ok
        return (PASS if ok else HNM), {"restricted_to": lam.count()}, None
    checks.append(_timed(suite, "chain_transitive_on_lambda", transitive_check))

    def certification():
        if not state["hyp_ok"]:
            return HNM, {"skipped": "earlier hypothesis failed"}, None
        b = 0.05 * space.diameter()
        rep = lemma21_pipeline(space, f, lam, b=b, c=3.0 * b,
                               trials=4, seed=scn.seed)
        ok = rep.hypotheses_met and bool(rep.l_shadowing_pass)
        state["hyp_ok"] &= ok
        details = {"expansivity_estimate": rep.expansivity.e_estimate,
                   "modulus_estimate":
                       rep.modulus.delta_estimate if rep.modulus else None,
                   "l_shadowing_pass": rep.l_shadowing_pass}
        return (PASS if ok else HNM), details, None
    checks.append(_timed(suite, "shadowing_certification", certification))

    d = classify_components(g, chain_components(g),
                            5.0 * _delta_in_space(space, scn.deltas[0]))

    def conclusion(fn, details_fn=None):
        def run():
            if not state["hyp_ok"]:
                return HNM, {"skipped": "hypotheses not certified"}, None
            ok = fn()
            return (PASS if ok else FAIL), (details_fn() if details_fn else {}), None
        return run

    checks.append(_timed(suite, "lambda_clopen",
                         conclusion(lambda: space.is_clopen(lam))))
    checks.append(_timed(suite, "lambda_is_whole_space",
                         conclusion(lambda: lam == CellSet.full(space.n_cells))))
    checks.append(_timed(suite, "chain_mixing", conclusion(lambda: is_chain_mixing(g))))

    def both_flags():
        cis = sorted({ci for ci in (d.component_of(c) for c in lam.indices())
                      if ci is not None})
        ok = bool(cis) and all(d.is_terminal[ci] and d.is_initial[ci]
                               for ci in cis)
        return ok
    checks.append(_timed(suite, "initial_and_terminal", conclusion(both_flags)))

    def clopen_cr():
        cis = sorted({ci for ci in (d.component_of(c) for c in lam.indices())
                      if ci is not None})
        return bool(cis) and all(clopen_in_cr(d, ci) for ci in cis)
    checks.append(_timed(suite, "clopen_in_recurrent_set", conclusion(clopen_cr)))
    return checks


# ---------------------------------------------------------------------------
# attractor boundary chain stability

def _trapping_specs(scn: Scenario):
    names = scn.trapping_regions
    if names is None:
        names = sorted(scn.regions)
    return [(t, scn.regions[t]) for t in names]


def suite_theorem_1_2(scn: Scenario, levels=None) -> list[Check]:
    """Attractor boundaries stay chain stable: escape radius at most 5*delta
    whenever shadowing is certified; identity control reports
    hypotheses-not-met because no trapping region exists for it."""
    f = _point_map(scn)
    levels = levels or _levels(scn, f)
    suite = "boundary_stability"
    checks = []
    specs = _trapping_specs(scn)
    for n, lv in levels.items():
        space = lv.space
        for rname, spec in specs:
            U = space.interior(space.closure(region_cells(space, spec)))
            if not is_trapping(lv.F, U):
                img = lv.F.image(space.closure(U))
                checks.append(Check(suite, f"stability[n={n},U={rname}]", HNM,
                                    {"reason": "region is not trapping",
                                     "escaping_cells": (img - U).count()},
                                    None, 0.0))
                continue
            att = attractor_from_trapping(lv.F, U)
            ring = space.closed_neighborhood(
                att.boundary, 0.1 * space.diameter())
            mod = estimate_shadowing_modulus(
                space, f, ring, min(scn.epsilons), trials=3,
                chain_length=200, seed=scn.seed)
            certified = mod.delta_estimate > 1e-6
            for dc in scn.deltas:
                def one(n=n, lv=lv, dc=dc, att=att, certified=certified,
                        rname=rname, mod=mod):
                    space = lv.space
                    g = lv.graph(dc)
                    eps = 5.0 * _delta_in_space(space, dc)
                    rep = verify_boundary_chain_stable(g, att, eps, certified)
                    details = {"resolution": n, "region": rname,
                               "delta": _delta_in_space(space, dc),
                               "epsilon": eps,
                               "vacuous": rep.vacuous,
                               "stable": rep.stable,
                               "escape_radius": rep.escape_radius,
                               "modulus_estimate": mod.delta_estimate,
                               "shadowing_certified": certified}
                    if rep.vacuous:
                        return PASS, details, None
                    if not certified:
                        return HNM, details, rep.witness
                    ok = bool(rep.stable) and rep.escape_radius <= eps + 1e-12
                    return (PASS if ok else FAIL), details, rep.witness
                checks.append(_timed(
                    suite, f"stability[n={n},U={rname},delta={dc}]", one))

    # identity control on the same grid: no trapping region can exist
    def control():
        n = scn.grid["resolutions"][-1]
        space = levels[n].space
        ident = builtin("identity")
        F = build_cell_map(ident, space)
        witnesses = []
        for rname, spec in specs:
            U = space.interior(space.closure(region_cells(space, spec)))
            if U and is_trapping(F, U):
                witnesses.append(rname)
        if witnesses:
            return FAIL, {"trapping_under_identity": witnesses}, witnesses
        return HNM, {"reason": "no trapping region exists for the identity "
                               "control; stability hypothesis cannot be met"}, None
    checks.append(_timed(suite, "identity_control", control))
    return checks


# ---------------------------------------------------------------------------
# attractor boundaries around non-initial components

def suite_corollaries_5(scn: Scenario, levels=None) -> list[Check]:
    """Constructive dichotomy per chain component: either it is initial, or
    an attractor encloses its forward set with the component meeting the
    boundary and an outside witness chain (checked both directions)."""
    if "digraph" in scn.system:
        return _digraph_equivalence_checks(scn)
    f = _point_map(scn)
    levels = levels or _levels(scn, f)
    n = scn.grid["resolutions"][-1]
    lv = levels[n]
    space = lv.space
    g = lv.graph(scn.deltas[0])
    eps = 5.0 * _delta_in_space(space, scn.deltas[0])
    d = classify_components(g, chain_components(g), eps)
    suite = "attractor_boundaries"
    checks = []
    for ci, C in enumerate(d.components):
        def dichotomy(ci=ci, C=C):
            r = attractor_with_C_in_boundary(g, d, ci)
            details = {"component": ci, "cells": C.count(),
                       "status": r.status,
                       "is_initial": bool(d.is_initial[ci]),
                       "facts": r.facts}
            if r.status == "initial":
                ok = d.is_initial[ci]
                return (PASS if ok else FAIL), details, None
            if r.status == "resolution-insufficient":
                return RI, details, r.witness
            # back direction: a boundary point of the attractor must be
            # chain-reachable from outside it
            ok = not d.is_initial[ci] and bool(r.facts.get("witness_outside"))
            if r.attractor is not None and r.attractor.boundary:
                # back direction is checked from the boundary cell nearest C
                bidx = r.attractor.boundary.indices()
                x = int(bidx[int(np.argmin(
                    space.pairwise_dist(bidx, C.indices()).min(axis=1)))])
                z, path = escape_witness(g, r.attractor, x)
                details["escape_witness"] = z
                ok = ok and path is not None
                return (PASS if ok else FAIL), details, path
            return (PASS if ok else FAIL), details, r.witness
        checks.append(_timed(suite, f"dichotomy[component={ci}]", dichotomy))

        if d.is_terminal[ci] and C != CellSet.full(space.n_cells):
            for a in scn.epsilons:
                def thin(ci=ci, a=a):
                    D = terminal_with_empty_interior_near(g, d, ci, a)
                    return PASS, {"component": ci, "a": a,
                                  "piece_cells": D.count()}, sorted(D.indices().tolist())
                checks.append(_timed(suite, f"thin_terminal[component={ci},a={a}]", thin))

        if (d.is_terminal[ci] and d.is_initial[ci]
                and not space.is_clopen(C)):
            for a in scn.epsilons:
                def nbrs(ci=ci, a=a):
                    D, E = neighbors_of_nonclopen_bidirectional(g, d, ci, a)
                    return PASS, {"component": ci, "a": a,
                                  "terminal_cells": D.count(),
                                  "initial_cells": E.count()}, None
                checks.append(_timed(
                    suite, f"bidirectional_neighbors[component={ci},a={a}]", nbrs))
    return checks


# ---------------------------------------------------------------------------
# random digraph oracle

@dataclass
class DigraphOracle:
    space: GridSpace
    cell_map: CellMap
    graph: ChainGraph
    adjacency: np.ndarray        # boolean (n, n)
    reach: np.ndarray            # boolean (n, n), paths of length >= 1
    components: list[frozenset]
    initial: list[bool]
    terminal: list[bool]


def random_digraph_oracle(n: int, density: float, seed: int) -> DigraphOracle:
    """Random digraph with total out-relation plus brute-force answers
    (reachability closure, strongly connected components, initial/terminal)."""
    if n > 16:
        raise ValueError("oracle does full reachability closure; n <= 16")
    rng = np.random.default_rng(seed)
    adj = rng.random((n, n)) < density
    for i in range(n):
        if not adj[i].any():
            adj[i, int(rng.integers(n))] = True
    # reachability by paths of length >= 1: iterate R <- A | A R to a fixpoint
    reach = adj.copy()
    while True:
        nxt = reach | (adj @ reach)
        if (nxt == reach).all():
            break
        reach = nxt
    recurrent = np.diag(reach)
    mutual = reach & reach.T
    comps, seen = [], set()
    for i in range(n):
        if not recurrent[i] or i in seen:
            continue
        members = frozenset(j for j in range(n) if recurrent[j]
                            and (j == i or mutual[i, j]))
        comps.append(members)
        seen |= members
    comps.sort(key=min)
    initial, terminal = [], []
    for C in comps:
        cm = np.zeros(n, dtype=bool)
        cm[list(C)] = True
        fwd = reach[cm].any(axis=0)
        bwd = reach[:, cm].any(axis=1)
        terminal.append(bool(not (fwd & ~cm).any()))
        initial.append(bool(not (bwd & ~cm).any()))
    space = GridSpace.discrete(n)
    F = cell_map_from_relation(space, list(zip(*np.nonzero(adj))))
    g = ChainGraph(F, 0.5)
    return DigraphOracle(space, F, g, adj, reach, comps, initial, terminal)


def _digraph_engine_vs_oracle(oracle: DigraphOracle) -> dict:
    """Compare the engine's decomposition and constructive dichotomy against
    the brute-force answers; mismatches are returned, agreement is a count."""
    g = oracle.graph
    n = oracle.space.n_cells
    d = classify_components(g, chain_components(g), 0.0)
    mism = []
    engine_comps = sorted((frozenset(C.indices().tolist())
                           for C in d.components), key=min)
    if engine_comps != oracle.components:
        mism.append("components")
    order = {min(C): i for i, C in enumerate(engine_comps)}
    eng_init = [None] * len(engine_comps)
    eng_term = [None] * len(engine_comps)
    for ci, C in enumerate(d.components):
        k = order[int(C.indices().min())]
        eng_init[k] = d.is_initial[ci]
        eng_term[k] = d.is_terminal[ci]
    if engine_comps == oracle.components:
        if eng_init != oracle.initial:
            mism.append("initial flags")
        if eng_term != oracle.terminal:
            mism.append("terminal flags")
    for i in range(n):
        S = CellSet.from_indices(n, [i])
        eng = set(g.forward_reach(S).indices().tolist())
        if eng != set(np.flatnonzero(oracle.reach[i]).tolist()):
            mism.append(f"reach[{i}]")
    agree = 0
    total = 0
    for ci, C in enumerate(d.components):
        total += 1
        r = attractor_with_C_in_boundary(g, d, ci)
        constructed = (r.status == "verified" and r.facts is not None
                       and r.facts.get("C_in_forward_closed_set")
                       and r.facts.get("forward_closed")
                       and r.facts.get("witness_outside"))
        k = order.get(int(C.indices().min()))
        not_initial = (k is not None and not oracle.initial[k])
        if constructed == not_initial:
            # back direction: the witness must actually chain into C
            if constructed:
                w_ok = bool(oracle.reach[r.witness][list(
                    C.indices().tolist())].any())
                agree += int(w_ok)
                if not w_ok:
                    mism.append(f"witness[{ci}]")
            else:
                agree += 1
        else:
            mism.append(f"dichotomy[{ci}]")
    return {"mismatches": mism, "components": len(d.components),
            "dichotomy_agree": agree, "dichotomy_total": total}


def _digraph_equivalence_checks(scn: Scenario) -> list[Check]:
    dg = scn.system["digraph"]
    seeds = range(dg.get("seed", 0), dg.get("seed", 0) + dg.get("count", 1))
    suite = "attractor_boundaries"
    checks = []
    for s in seeds:
        def one(s=s):
            oracle = random_digraph_oracle(dg["nodes"], dg["density"], s)
            res = _digraph_engine_vs_oracle(oracle)
            ok = not res["mismatches"] and res["dichotomy_agree"] == res["dichotomy_total"]
            return (PASS if ok else FAIL), {"seed": s, **res}, None
        checks.append(_timed(suite, f"digraph_oracle[seed={s}]", one))
    return checks


def suite_digraph_oracle(scn: Scenario, levels=None) -> list[Check]:
    if "digraph" in scn.system:
        return _digraph_equivalence_checks(scn)
    return [Check("digraph_oracle", "skipped", HNM,
                  {"reason": "scenario has no digraph system"}, None, 0.0)]


# ---------------------------------------------------------------------------
# negative controls

def suite_negative_controls(scn: Scenario, levels=None) -> list[Check]:
    """Hypothesis necessity: the shadowing modulus collapses for the identity
    and an irrational rotation, and the expansivity estimate separates them
    from a genuinely expansive system."""
    suite = "negative_controls"
    n = scn.grid["resolutions"][-1] if scn.grid else 360
    kind = scn.grid.get("kind", "circle") if scn.grid else "circle"
    checks = []
    res = min(n, 360)
    controls = [("identity", ()), ("rotation_circle",
                                   (np.pi * (3 - np.sqrt(5)),))]
    space = make_grid("circle", res)
    region = CellSet.full(space.n_cells)
    for cname, params in controls:
        f = builtin(cname, params)
        for eps in [e for e in scn.epsilons if e <= 0.01] or [0.01]:
            def collapse(f=f, eps=eps, cname=cname):
                mod = estimate_shadowing_modulus(
                    space, f, region, eps, trials=4,
                    chain_length=10 * res, seed=scn.seed)
                ok = mod.delta_estimate < 1e-4
                return (PASS if ok else FAIL), {
                    "system": cname, "epsilon": eps,
                    "modulus_estimate": mod.delta_estimate,
                    "chain_length": 10 * res}, None
            checks.append(_timed(suite, f"modulus_collapse[{cname},eps={eps}]",
                                 collapse))

    def expansivity_gap():
        ident = builtin("identity")
        e_id = estimate_expansivity(space, ident, region, seed=scn.seed)
        tor = GridSpace.torus2(64)
        cat = builtin("cat_torus")
        e_cat = estimate_expansivity(tor, cat, CellSet.full(tor.n_cells),
                                     seed=scn.seed)
        baseline = 0.1  # regression floor for the hyperbolic control
        ok = (e_id.e_estimate <= 2.0e-4 * space.diameter()
              and e_cat.e_estimate > baseline)
        return (PASS if ok else FAIL), {
            "identity_estimate": e_id.e_estimate,
            "expansive_control_estimate": e_cat.e_estimate,
            "baseline": baseline}, None
    checks.append(_timed(suite, "expansivity_gap", expansivity_gap))
    return checks


# ---------------------------------------------------------------------------
# refinement

def suite_refinement(scn: Scenario, levels=None) -> list[Check]:
    f = _point_map(scn)
    suite = "refinement"
    checks = []
    res = scn.grid["resolutions"]
    if len(res) >= 2:
        def comp_refine():
            rep = refine(f, scn.grid["kind"], res, delta_cells=scn.deltas[0])
            counts = [(lv.resolution, lv.component_count) for lv in rep.levels]
            ok = rep.counts_stable and rep.flags_stable and rep.cr_monotone
            return (PASS if ok else FAIL), {
                "component_counts_series": counts,
                "counts_stable": rep.counts_stable,
                "flags_stable": rep.flags_stable,
                "cr_monotone": rep.cr_monotone}, rep.matches
        checks.append(_timed(suite, "component_stability", comp_refine))
    for rname, spec in _trapping_specs(scn):
        def boundary(rname=rname, spec=spec):
            rep = boundary_refinement_study(f, spec, scn.grid["kind"], res)
            fine = rep.grids[-1]
            details = {
                "region": rname,
                "boundary_counts_series": [(gr.resolution,
                                            gr.boundary_component_count)
                                           for gr in rep.grids],
                "hausdorff_series": [(i, h) for i, h in
                                     enumerate(fine.hausdorff_series)],
                "cell_diameter": fine.cell_diameter,
                "counts_stable": rep.counts_stable,
                "distance_converged": rep.distance_converged,
                "band_respected": rep.band_respected}
            ok = (rep.counts_stable and rep.distance_converged
                  and rep.band_respected)
            return (PASS if ok else FAIL), details, None
        checks.append(_timed(suite, f"boundary_refinement[U={rname}]", boundary))
    return checks


# ---------------------------------------------------------------------------
# scenario driver

_SUITES = {
    "components": suite_components,
    "transitive_interior": suite_theorem_1_1,
    "boundary_stability": suite_theorem_1_2,
    "attractor_boundaries": suite_corollaries_5,
    "negative_controls": suite_negative_controls,
    "refinement": suite_refinement,
    "digraph_oracle": suite_digraph_oracle,
}

# dependency order: graphs and decompositions feed attractor checks, which
# feed the shadowing-dependent suites
_ORDER = ("components", "refinement", "transitive_interior",
          "boundary_stability", "attractor_boundaries", "digraph_oracle",
          "negative_controls")


def run_scenario(scn: Scenario) -> Report:
    """Execute the selected suites; shared grid objects are built once, then
    independent suites run concurrently and are assembled in a fixed order."""
    t0 = time.perf_counter()
    if "digraph" in scn.system:
        levels = None
    else:
        levels = _levels(scn, _point_map(scn))
    selected = [s for s in _ORDER if s in scn.suites]
    results = {}
    with ThreadPoolExecutor(max_workers=min(4, max(1, len(selected)))) as ex:
        futures = {s: ex.submit(_SUITES[s], scn, levels) for s in selected}
        for s in selected:
            results[s] = futures[s].result()
    checks = [c for s in selected for c in results[s]]
    return Report.build(scn, checks, time.perf_counter() - t0)
