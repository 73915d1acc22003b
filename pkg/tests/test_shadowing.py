import numpy as np
import pytest

from chainrec.space import CellSet, GridSpace
from chainrec.systems import builtin, generate_pseudo_orbit, generate_pseudo_orbit_batch
from chainrec.shadowing import (HyperbolicSplitting, estimate_expansivity,
                                estimate_shadowing_modulus, glue_orbits_linear,
                                lemma21_pipeline, shadow_linear_batch,
                                shadow_linear_hyperbolic, stable_unstable_membership,
                                verify_limit_shadowing, verify_shadowing, _nearest_lift)

CAT = np.array([[2, 1], [1, 1]], dtype=np.int64)


@pytest.fixture(scope="module")
def H():
    return HyperbolicSplitting.from_matrix(CAT)


@pytest.fixture(scope="module")
def torus():
    return GridSpace.torus2(64)


def brute_force_minimax(H, pts):
    """Global minimax over all true orbits by nested grid search over the
    two-parameter family of homogeneous corrections."""
    _, _, cert = shadow_linear_hyperbolic(H, _as_po(pts), polish=False)
    k = pts.shape[0] - 1
    i = np.arange(k + 1)         # cs profile lam_s^i, cu profile lam_u^(i-k)
    prof_s = H.lam_s ** i
    prof_u = H.lam_u ** (i - k)
    # base orbit = chain + corrections; deviation from the chain is then
    # corrections plus any homogeneous orbit shift
    diffs = -cert.corrections

    def sup_err(alpha, beta):
        # deviation of the shifted orbit from the chain, max metric
        v = (alpha[..., None, None] * prof_s[:, None] * H.w_s
             + beta[..., None, None] * prof_u[:, None] * H.w_u)
        return np.abs(diffs - v).max(axis=(-1, -2))

    lo_a = lo_b = -4 * np.abs(diffs).max() - 1e-12
    hi_a = hi_b = -lo_a
    best = (0.0, 0.0)
    for _ in range(24):
        a = np.linspace(lo_a, hi_a, 33)
        b = np.linspace(lo_b, hi_b, 33)
        A, B = np.meshgrid(a, b, indexing="ij")
        errs = sup_err(A, B)
        ia, ib = np.unravel_index(np.argmin(errs), errs.shape)
        best = (a[ia], b[ib])
        span_a, span_b = (hi_a - lo_a) / 8, (hi_b - lo_b) / 8
        lo_a, hi_a = best[0] - span_a, best[0] + span_a
        lo_b, hi_b = best[1] - span_b, best[1] + span_b
    return float(sup_err(np.array(best[0]), np.array(best[1])))


def _as_po(pts):
    from chainrec.systems import PseudoOrbit
    return PseudoOrbit(pts, 1.0, None)


def test_splitting_constants(H):
    assert H.lam_s == pytest.approx((3 - np.sqrt(5)) / 2)
    assert H.lam_u == pytest.approx((3 + np.sqrt(5)) / 2)
    assert H.K == pytest.approx(np.sqrt(5.0))


def test_single_error_corrections_decay_geometrically(H):
    # one unit step error in the middle: corrections decay at lam_s forward
    # and 1/lam_u backward from the error position
    k, j = 20, 10
    pts = np.zeros((k + 1, 2))
    x = np.array([0.2, 0.7])
    pts[0] = x
    e = 1e-9 * (H.w_s + H.w_u)
    for i in range(1, k + 1):
        x = x @ CAT.T % 1.0
        if i == j + 1:
            x = (x + e) % 1.0          # single step error at index j
        pts[i] = x
    _, _, cert = shadow_linear_hyperbolic(H, _as_po(pts))
    cs = cert.corrections @ H.w_s
    cu = cert.corrections @ H.w_u
    for i in range(j + 1, k):
        assert cs[i + 1] / cs[i] == pytest.approx(H.lam_s, rel=1e-6)
    for i in range(0, j - 1):
        assert cu[i] / cu[i + 1] == pytest.approx(1 / H.lam_u, rel=1e-6)


def test_solver_matches_brute_force_minimax(H, torus):
    f = builtin("cat_torus")
    rng = np.random.default_rng(0)
    rel = []
    for t in range(25):
        k = int(rng.integers(4, 13))
        po = generate_pseudo_orbit(torus, f, rng.uniform(size=2), k, 1e-5,
                                   noise="uniform", seed=100 + t)
        _, _, cert = shadow_linear_hyperbolic(H, po, polish=True)
        oracle = brute_force_minimax(H, po.points)
        assert cert.sup_error <= oracle * 1.1 + 1e-15
        rel.append(abs(cert.sup_error - oracle) / max(oracle, 1e-15))
    assert max(rel) <= 0.1


def test_shadow_bound_and_residuals(H, torus):
    f = builtin("cat_torus")
    delta = 1e-8
    for noise in ("uniform", "adversarial"):
        x0s = np.random.default_rng(1).uniform(size=(20, 2))
        batch = generate_pseudo_orbit_batch(torus, f, x0s, 500, delta, noise, 9)
        sups, max_res = shadow_linear_batch(H, batch, delta)
        assert sups.max() <= H.K * delta
        assert max_res <= 1e-10


def test_verify_shadowing_direct_simulation(H, torus):
    f = builtin("cat_torus")
    po = generate_pseudo_orbit(torus, f, np.array([0.2, 0.4]), 8, 1e-6,
                               noise="uniform", seed=4)
    x, bound, cert = shadow_linear_hyperbolic(H, po)
    assert verify_shadowing(torus, f, po, x, bound + 1e-12)
    assert not verify_shadowing(torus, f, po, (x + 0.25) % 1.0, bound)


def test_glue_orbits_limit_shadowing(H, torus):
    rng = np.random.default_rng(3)
    x = rng.uniform(size=2)
    y = (x + 0.3 * rng.uniform(size=2)) % 1.0
    lpo, z, z_hp = glue_orbits_linear(H, torus, x, y, half_window=20)
    # step errors decay geometrically in both directions
    m = 20
    errs = lpo.step_errors
    assert errs[:5].max() < 1e-12 and errs[-5:].max() < 1e-12
    sched = np.maximum(lpo.decay_schedule * H.K * 4.0, 1e-7)
    f = builtin("cat_torus")
    assert verify_limit_shadowing(torus, f, lpo, z_hp, 0.45, sched)


def test_stable_unstable_membership(H, torus):
    f = builtin("cat_torus")
    x = np.array([0.37, 0.81])
    s_probe = (x + 1e-4 * H.w_s) % 1.0
    u_probe = (x + 1e-4 * H.w_u) % 1.0
    assert stable_unstable_membership(torus, f, x, s_probe) == (True, False)
    assert stable_unstable_membership(torus, f, x, u_probe) == (False, True)
    assert stable_unstable_membership(torus, f, x, x.copy()) == (True, True)


def test_modulus_positive_for_shadowing_systems():
    sp = GridSpace.circle(360)
    f = builtin("ns_circle", (0.5,))
    mod = estimate_shadowing_modulus(sp, f, CellSet.full(360), 0.01,
                                     trials=4, chain_length=300, seed=0)
    assert mod.delta_estimate > 0


def test_modulus_collapses_for_isometries():
    sp = GridSpace.circle(360)
    region = CellSet.full(360)
    for name, params in [("identity", ()),
                         ("rotation_circle", (np.pi * (3 - np.sqrt(5)),))]:
        f = builtin(name, params)
        mod = estimate_shadowing_modulus(sp, f, region, 0.01, trials=3,
                                         chain_length=3600, seed=0)
        assert mod.delta_estimate < 1e-4


def test_expansivity_separates_hyperbolic_from_isometry(torus):
    cat = builtin("cat_torus")
    e_cat = estimate_expansivity(torus, cat, CellSet.full(torus.n_cells), seed=0)
    assert e_cat.e_estimate > 0.1
    sp = GridSpace.circle(360)
    ident = builtin("identity")
    e_id = estimate_expansivity(sp, ident, CellSet.full(360), seed=0)
    assert e_id.e_estimate <= 2e-4 * sp.diameter()   # at the probe floor


def test_pipeline_verdicts(torus):
    cat = builtin("cat_torus")
    rep = lemma21_pipeline(torus, cat, CellSet.full(torus.n_cells),
                           b=0.1, c=0.3, trials=3, seed=1)
    assert rep.hypotheses_met and rep.l_shadowing_pass
    assert not rep.counterexamples

    sp = GridSpace.circle(360)
    ident = builtin("identity")
    rep = lemma21_pipeline(sp, ident, CellSet.full(360), b=0.1, c=0.3,
                           trials=3, seed=1)
    assert not rep.hypotheses_met
    assert rep.l_shadowing_pass is None      # no conclusion claimed
