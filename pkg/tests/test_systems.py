import numpy as np
import pytest

from chainrec.space import CellSet, GridSpace
from chainrec.systems import (ConfigurationError, build_cell_map, builtin,
                              cell_map_from_relation, generate_pseudo_orbit,
                              generate_pseudo_orbit_batch, neighborhood_matrix,
                              step_errors)

SYSTEMS = [
    ("ns_circle", (0.5,), GridSpace.circle(90)),
    ("ms4_circle", (0.3,), GridSpace.circle(90)),
    ("rotation_circle", (0.7,), GridSpace.circle(90)),
    ("cat_torus", (), GridSpace.torus2(24)),
    ("square_interval", (), GridSpace.interval(64)),
    ("identity", (), GridSpace.circle(90)),
]


def test_builtin_validation():
    with pytest.raises(ConfigurationError):
        builtin("nope")
    with pytest.raises(ConfigurationError):
        builtin("ns_circle", (1.5,))        # outside the homeomorphism range
    with pytest.raises(ConfigurationError):
        builtin("ms4_circle", ())
    with pytest.raises(ConfigurationError):
        builtin("identity", (1.0,))


@pytest.mark.parametrize("name,params,sp", SYSTEMS)
def test_cell_map_is_outer_approximation(name, params, sp):
    # soundness: f(x) for any x in cell c must land in a cell of image(c)
    f = builtin(name, params)
    F = build_cell_map(f, sp)
    rng = np.random.default_rng(0)
    centers = sp.centers()
    if centers.ndim == 1:
        centers = centers[:, None]
    for _ in range(300):
        c = int(rng.integers(sp.n_cells))
        x = centers[c] + rng.uniform(-1, 1, size=sp.dim) * sp.cell_radius
        y = np.atleast_1d(f.forward_wrapped(sp, x))
        img_cell = int(sp.cell_of(y[None])[0])
        assert img_cell in F.image(CellSet.from_indices(sp.n_cells, [c]))


@pytest.mark.parametrize("name,params,sp", SYSTEMS)
def test_inverse_is_inverse(name, params, sp):
    f = builtin(name, params)
    rng = np.random.default_rng(1)
    centers = sp.centers()
    if centers.ndim == 1:
        centers = centers[:, None]
    x = centers[rng.integers(sp.n_cells, size=50)]
    y = f.forward_wrapped(sp, x)
    back = f.inverse_wrapped(sp, np.asarray(y))
    assert sp.point_dist(np.atleast_2d(back), np.atleast_2d(x)).max() < 1e-8


def test_neighborhood_matrix_brute_force():
    sp = GridSpace.circle(30)
    r = 0.3
    N = neighborhood_matrix(sp, r).toarray()
    for a in range(30):
        for b in range(30):
            assert N[a, b] == (sp.metric(a, b) <= r + sp.cell_radius)
    assert (N == N.T).all()


def test_pseudo_orbit_steps_within_delta():
    sp = GridSpace.torus2(32)
    f = builtin("cat_torus")
    for noise in ("uniform", "adversarial"):
        po = generate_pseudo_orbit(sp, f, np.array([0.3, 0.7]), 200, 1e-3,
                                   noise=noise, seed=5)
        errs = step_errors(sp, f, po.points)
        assert errs.max() <= 1e-3 + 1e-12
        assert po.points.shape == (201, 2)


def test_pseudo_orbit_batch_matches_shapes_and_delta():
    sp = GridSpace.torus2(32)
    f = builtin("cat_torus")
    x0s = np.random.default_rng(0).uniform(size=(8, 2))
    batch = generate_pseudo_orbit_batch(sp, f, x0s, 50, 1e-4, "uniform", 3)
    assert batch.shape == (8, 51, 2)
    for b in range(8):
        assert step_errors(sp, f, batch[b]).max() <= 1e-4 + 1e-12


def test_adversarial_noise_is_unit_drift():
    # adversarial chains drift in a fixed direction, so the end-to-end
    # displacement of an identity chain is k * delta exactly
    sp = GridSpace.circle(90)
    f = builtin("identity")
    po = generate_pseudo_orbit(sp, f, np.array([1.0]), 100, 1e-4,
                               noise="adversarial", seed=2)
    disp = sp.point_dist(po.points[:1], po.points[-1:])[0]
    assert disp == pytest.approx(100 * 1e-4, rel=1e-6)


def test_cell_map_from_relation():
    sp = GridSpace.discrete(4)
    F = cell_map_from_relation(sp, [(0, 1), (1, 2), (2, 0), (3, 3)])
    img = F.image(CellSet.from_indices(4, [0, 3]))
    assert set(img.indices()) == {1, 3}
    pre = F.preimage(CellSet.from_indices(4, [0]))
    assert set(pre.indices()) == {2}
