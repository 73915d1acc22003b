"""Acceptance checks, one per criterion, each with its stated tolerance and
runtime budget and a single pass/fail line on stdout."""
import os
import time

import numpy as np
import pytest

from chainrec.space import CellSet, GridSpace
from chainrec.systems import (build_cell_map, builtin, generate_pseudo_orbit,
                              generate_pseudo_orbit_batch)
from chainrec.chains import ChainGraph, chain_components, classify_components
from chainrec.attractors import (attractor_from_chain_stable,
                                 boundary_refinement_study, region_cells)
from chainrec.shadowing import (HyperbolicSplitting, estimate_expansivity,
                                estimate_shadowing_modulus, shadow_linear_batch,
                                shadow_linear_hyperbolic)
from chainrec.harness import run_scenario, scenario_from_dict, random_digraph_oracle
from chainrec.harness.report import render_text
from chainrec.harness.suites import _digraph_engine_vs_oracle

from test_shadowing import brute_force_minimax

CAT = np.array([[2, 1], [1, 1]], dtype=np.int64)


def report(name, cond, elapsed, budget):
    line = f"[acceptance] {name}: {'PASS' if cond else 'FAIL'} ({elapsed:.1f}s)"
    print(line)
    assert cond, line
    assert elapsed < budget, f"{name}: {elapsed:.1f}s exceeds {budget}s budget"


def decompose(name, params, n):
    sp = GridSpace.circle(n)
    g = ChainGraph(build_cell_map(builtin(name, params), sp),
                   2 * sp.cell_radius)
    return sp, g, classify_components(g, chain_components(g),
                                      10 * sp.cell_radius)


def test_1_chain_decomposition_correctness():
    t0 = time.perf_counter()
    sp, _, d = decompose("ns_circle", (0.5,), 720)
    ok = len(d.components) == 2
    zero = int(d.component_of(int(sp.cell_of(np.array([[0.0]]))[0])))
    pi = 1 - zero
    ok &= d.is_terminal[zero] and not d.is_initial[zero]
    ok &= d.is_initial[pi] and not d.is_terminal[pi]
    t_ns = time.perf_counter() - t0

    t0 = time.perf_counter()
    sp4, _, d4 = decompose("ms4_circle", (0.3,), 720)
    ok &= len(d4.components) == 4
    # attracting at 0 and pi, repelling at pi/2 and 3pi/2, in cell order
    ok &= list(d4.is_terminal) == [True, False, True, False]
    ok &= list(d4.is_initial) == [False, True, False, True]
    t_ms = time.perf_counter() - t0

    # oracle: independent dense reachability at n = 90
    sp90, g90, d90 = decompose("ns_circle", (0.5,), 90)
    adj = g90.edges.toarray()
    reach = adj.copy()
    for _ in range(90):
        reach = reach | (reach @ adj) | adj
    ok &= np.array_equal(d90.recurrent_cells.mask, np.diag(reach))
    mutual = reach & reach.T
    for i in np.flatnonzero(np.diag(reach)):
        cls = [int(j) for j in np.flatnonzero(np.diag(reach))
               if j == i or mutual[i, j]]
        ok &= len({d90.component_of(j) for j in cls}) == 1
    report("1 chain decomposition", ok, max(t_ns, t_ms), 5.0)


def test_2_transitive_whole_space_grid_analog():
    t0 = time.perf_counter()
    scn = scenario_from_dict({
        "system": {"builtin": "cat_torus"},
        "grid": {"kind": "torus2", "resolutions": [101]},
        "deltas": [1.0],
        "suites": ["components", "transitive_interior"],
        "seed": 7,
    })
    rep = run_scenario(scn)
    by_name = {c.name: c for c in rep.checks}
    ok = by_name["decomposition[n=101]"].details["component_count"] == 1
    for name in ("interior_nonempty", "chain_transitive_on_lambda",
                 "shadowing_certification", "lambda_clopen",
                 "lambda_is_whole_space", "chain_mixing",
                 "initial_and_terminal", "clopen_in_recurrent_set"):
        ok &= by_name[name].verdict == "pass"
    report("2 transitive whole space", ok, time.perf_counter() - t0, 60.0)


def test_3_linear_shadowing_bound():
    t0 = time.perf_counter()
    H = HyperbolicSplitting.from_matrix(CAT)
    K = 1.0 / (1.0 - H.lam_s) + 1.0 / (H.lam_u - 1.0)
    assert K == pytest.approx(np.sqrt(5.0))
    sp = GridSpace.torus2(64)
    f = builtin("cat_torus")
    delta = 1e-8
    ok = True
    rng = np.random.default_rng(0)
    for noise in ("uniform", "adversarial"):
        x0s = rng.uniform(size=(500, 2))
        batch = generate_pseudo_orbit_batch(sp, f, x0s, 10_000, delta,
                                            noise, seed=11)
        sups, max_res = shadow_linear_batch(H, batch, delta)
        ok &= bool(sups.max() <= K * delta) and max_res <= 1e-10

    # brute-force minimax oracle on 100 short chains, 10% agreement
    worst = 0.0
    for t in range(100):
        k = int(rng.integers(4, 13))
        po = generate_pseudo_orbit(sp, f, rng.uniform(size=2), k, 1e-5,
                                   noise="uniform", seed=500 + t)
        _, _, cert = shadow_linear_hyperbolic(H, po, polish=True)
        oracle = brute_force_minimax(H, po.points)
        worst = max(worst, abs(cert.sup_error - oracle) / max(oracle, 1e-15))
    ok &= worst <= 0.1
    report("3 linear shadowing bound", ok, time.perf_counter() - t0, 30.0)


def test_4_boundary_chain_stable():
    t0 = time.perf_counter()
    scn = scenario_from_dict({
        "system": {"builtin": "ms4_circle", "params": [0.3]},
        "grid": {"kind": "circle", "resolutions": [180, 360, 720]},
        "deltas": [1.0],
        "epsilons": [0.01],
        "regions": {"U": {"kind": "arc", "lo": -0.3, "hi": np.pi + 0.3}},
        "suites": ["boundary_stability"],
    })
    rep = run_scenario(scn)
    ok = True
    seen = 0
    for c in rep.checks:
        if c.name.startswith("stability["):
            seen += 1
            ok &= c.verdict == "pass"
            ok &= c.details["escape_radius"] <= 5 * c.details["delta"] + 1e-12
        if c.name == "identity_control":
            ok &= c.verdict == "hypotheses-not-met"
    ok &= seen == 3
    report("4 boundary chain stability", ok, time.perf_counter() - t0, 20.0)


def test_5_enclosure_containments_exact():
    t0 = time.perf_counter()
    a_cells = 10
    ok = True
    # attracting component of the north-south map
    sp, g, d = decompose("ns_circle", (0.5,), 720)
    zero = d.components[int(d.component_of(int(sp.cell_of(np.array([[0.0]]))[0])))]
    a = a_cells * 2 * sp.cell_radius
    att = attractor_from_chain_stable(g, zero, a)   # raises if insufficient
    ok &= zero.issubset(att.lam)
    ok &= att.lam.issubset(sp.closed_neighborhood(zero, a))

    # arc enclosure between the two attracting points of the ms4 map
    sp4, g4, _ = decompose("ms4_circle", (0.3,), 720)
    S = region_cells(sp4, {"kind": "arc", "lo": 0.0, "hi": np.pi})
    a4 = a_cells * 2 * sp4.cell_radius
    att4 = attractor_from_chain_stable(g4, S, a4)
    ok &= S.issubset(att4.lam)
    ok &= att4.lam.issubset(sp4.closed_neighborhood(S, a4))
    report("5 enclosure containments", ok, time.perf_counter() - t0, 30.0)


def test_6_digraph_equivalence_sweep():
    t0 = time.perf_counter()
    ok = True
    count = 0
    for density in (0.1, 0.2, 0.4):
        for seed in range(334):
            o = random_digraph_oracle(12, density, seed)
            res = _digraph_engine_vs_oracle(o)
            ok &= not res["mismatches"]
            ok &= res["dichotomy_agree"] == res["dichotomy_total"]
            count += 1
    ok &= count >= 1000
    report("6 digraph equivalence", ok, time.perf_counter() - t0, 10.0)


def test_7_boundary_count_and_hausdorff_convergence():
    t0 = time.perf_counter()
    rep = boundary_refinement_study(
        builtin("ms4_circle", (0.3,)),
        {"kind": "arc", "lo": -0.3, "hi": np.pi + 0.3},
        "circle", [360, 720], iterations=60)
    ok = all(g.boundary_component_count == 2 for g in rep.grids)
    fine = rep.grids[-1]
    band = 2 * fine.cell_diameter
    hit = next((i for i, h in enumerate(fine.hausdorff_series) if h < band),
               None)
    ok &= hit is not None and hit <= 50
    ok &= all(h <= band + fine.cell_diameter
              for h in fine.hausdorff_series[hit:])
    report("7 boundary count and Hausdorff", ok, time.perf_counter() - t0, 30.0)


def test_8_negative_controls():
    t0 = time.perf_counter()
    sp = GridSpace.circle(360)
    region = CellSet.full(360)
    ok = True
    for name, params in [("identity", ()),
                         ("rotation_circle", (np.pi * (3 - np.sqrt(5)),))]:
        f = builtin(name, params)
        for eps in (0.01, 0.005, 0.001):
            mod = estimate_shadowing_modulus(sp, f, region, eps, trials=3,
                                             chain_length=3600, seed=0)
            ok &= mod.delta_estimate < 1e-4
    e_id = estimate_expansivity(sp, builtin("identity"), region, seed=0)
    ok &= e_id.e_estimate <= 1e-3                    # ~0 at estimator floor
    tor = GridSpace.torus2(64)
    e_cat = estimate_expansivity(tor, builtin("cat_torus"),
                                 CellSet.full(tor.n_cells), seed=0)
    ok &= e_cat.e_estimate > 0.1                     # regression baseline
    report("8 negative controls", ok, time.perf_counter() - t0, 60.0)


def test_9_full_suite_determinism(tmp_path):
    t0 = time.perf_counter()
    doc = {
        "name": "cat_full",
        "seed": 7,
        "system": {"builtin": "cat_torus"},
        "grid": {"kind": "torus2", "resolutions": [64, 101]},
        "deltas": [1.0],
        "epsilons": [0.05, 0.01],
        "suites": ["components", "refinement", "transitive_interior",
                   "boundary_stability", "attractor_boundaries",
                   "negative_controls"],
    }
    texts = []
    for _ in range(2):
        rep = run_scenario(scenario_from_dict(doc))
        texts.append(render_text(rep))
        assert rep.exit_code() == 0
    ok = texts[0] == texts[1]
    report("9 full-suite determinism", ok, time.perf_counter() - t0, 120.0)
