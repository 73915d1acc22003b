"""Concrete homeomorphisms and their cell-level outer approximations."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp

from .space import CellSet, GridSpace


class ConfigurationError(ValueError):
    pass


@dataclass
class PointMap:
    """A homeomorphism given by vectorized forward/inverse evaluators.

    Evaluators act on coordinate arrays of shape (..., dim) in the ambient
    coordinates of the matching GridSpace kind (circle: angle in [0, 2pi);
    torus2: [0,1)^2; interval: [0,1]).  For one-dimensional kinds the
    forward evaluator doubles as a monotone lift (no wrapping applied), which
    build_cell_map exploits to get tight interval images.
    """

    name: str
    params: tuple
    domain_kind: str
    forward: Callable[[np.ndarray], np.ndarray]
    inverse: Callable[[np.ndarray], np.ndarray]
    lipschitz_bound: float
    matrix: np.ndarray | None = None  # integer matrix for linear torus maps

    def forward_wrapped(self, space: GridSpace, pts: np.ndarray) -> np.ndarray:
        return space.wrap(self.forward(np.asarray(pts, float)))

    def inverse_wrapped(self, space: GridSpace, pts: np.ndarray) -> np.ndarray:
        return space.wrap(self.inverse(np.asarray(pts, float)))


def _newton_circle_inverse(g, gprime, y, iters=60):
    """Solve g(theta) = y for the monotone lift g (vectorized)."""
    th = np.asarray(y, float).copy()
    for _ in range(iters):
        step = (g(th) - y) / gprime(th)
        th = th - step
        if np.max(np.abs(step)) < 1e-15:
            break
    return th


def builtin(name: str, params: tuple | list = ()) -> PointMap:
    """Construct one of the built-in test systems by name."""
    params = tuple(float(p) for p in params)
    if name == "cat_torus":
        A = np.array([[2, 1], [1, 1]], dtype=np.int64)
        Ainv = np.array([[1, -1], [-1, 2]], dtype=np.int64)

        def fwd(p):
            return np.asarray(p, float) @ A.T % 1.0

        def inv(p):
            return np.asarray(p, float) @ Ainv.T % 1.0

        return PointMap(name, params, "torus2", fwd, inv, 3.0, matrix=A)

    if name in ("ns_circle", "ms4_circle"):
        if len(params) != 1:
            raise ConfigurationError(f"{name} needs one parameter")
        a = params[0]
        mult = 1.0 if name == "ns_circle" else 2.0
        amax = 1.0 / mult
        if not 0.0 < a < amax:
            raise ConfigurationError(f"{name} parameter must be in (0, {amax})")

        def fwd(th, a=a, m=mult):
            th = np.asarray(th, float)
            return th - a * np.sin(m * th)

        def gprime(th, a=a, m=mult):
            return 1.0 - a * m * np.cos(m * np.asarray(th, float))

        def inv(y, a=a, m=mult):
            return _newton_circle_inverse(lambda t: t - a * np.sin(m * t),
                                          gprime, y)

        return PointMap(name, params, "circle", fwd, inv, 1.0 + a * mult)

    if name == "rotation_circle":
        if len(params) != 1:
            raise ConfigurationError("rotation_circle needs one parameter")
        alpha = params[0]

        def fwd(th):
            return np.asarray(th, float) + alpha

        def inv(th):
            return np.asarray(th, float) - alpha

        return PointMap(name, params, "circle", fwd, inv, 1.0)

    if name == "identity":
        if params:
            raise ConfigurationError("identity takes no parameters")
        ident = lambda p: np.asarray(p, float)
        return PointMap(name, params, "any", ident, ident, 1.0,
                        matrix=np.eye(2, dtype=np.int64))

    if name == "square_interval":
        def fwd(x):
            return np.asarray(x, float) ** 2

        def inv(x):
            return np.sqrt(np.asarray(x, float))

        return PointMap(name, params, "interval", fwd, inv, 2.0)

    raise ConfigurationError(f"unknown builtin map: {name!r}")


@dataclass
class CellMap:
    """Combinatorial outer approximation of a map at cell resolution.

    forward[c, c'] is True iff c' belongs to the forward image of cell c.
    The approximation is outer: the true image of every point of c lies in
    some cell of forward_images(c).
    """

    space: GridSpace
    forward: sp.csr_matrix
    point_map: PointMap | None = None
    _backward: sp.csr_matrix | None = field(default=None, repr=False)

    @property
    def backward(self) -> sp.csr_matrix:
        if self._backward is None:
            self._backward = self.forward.T.tocsr()
        return self._backward

    def forward_images(self, c: int) -> CellSet:
        row = self.forward.getrow(c)
        return CellSet.from_indices(self.space.n_cells, row.indices)

    def inverse_images(self, c: int) -> CellSet:
        row = self.backward.getrow(c)
        return CellSet.from_indices(self.space.n_cells, row.indices)

    def image(self, S: CellSet) -> CellSet:
        v = self.forward.T @ S.mask.astype(np.int32)
        return CellSet(v > 0)

    def preimage(self, S: CellSet) -> CellSet:
        v = self.forward @ S.mask.astype(np.int32)
        return CellSet(v > 0)

    def reversed(self) -> "CellMap":
        return CellMap(self.space, self.backward, self.point_map)


def _csr_from_ranges(n_cells, lo, hi, axis_n, periodic):
    """CSR with row i covering flat 1-D indices lo[i]..hi[i] (inclusive)."""
    counts = (hi - lo + 1).astype(np.int64)
    indptr = np.concatenate([[0], np.cumsum(counts)])
    indices = np.concatenate([np.arange(l, h + 1) for l, h in zip(lo, hi)])
    if periodic:
        indices %= axis_n
    data = np.ones(indices.size, dtype=bool)
    M = sp.csr_matrix((data, indices, indptr), shape=(n_cells, axis_n), dtype=bool)
    M.sum_duplicates()
    return M


def build_cell_map(f: PointMap, space: GridSpace) -> CellMap:
    """Outer approximation of f on the grid.

    One-dimensional kinds use the monotone lift of f, so the image of a cell
    is exactly the cells meeting the image interval of its closure.  The cat
    map uses the bounding box of the corner images (exact for a linear map).
    A generic sample-and-fatten fallback covers anything else.
    """
    if f.domain_kind != "any" and f.domain_kind != space.kind:
        raise ConfigurationError("map/space kind mismatch")

    n = space.n_cells
    tol = 1e-12

    if space.dim == 1:
        ax = space.axes[0]
        c = ax.coords()
        h = ax.step / 2.0
        lo_pt = f.forward(c - h)
        hi_pt = f.forward(c + h)
        # orientation-preserving lifts are nondecreasing; guard anyway
        lo_img = np.minimum(lo_pt, hi_pt)
        hi_img = np.maximum(lo_pt, hi_pt)
        # center of cell j sits at (j + off) * step
        off = 0.0 if ax.periodic else 0.5
        lo_idx = np.ceil((lo_img - h - tol) / ax.step - off).astype(np.int64)
        hi_idx = np.floor((hi_img + h + tol) / ax.step - off).astype(np.int64)
        hi_idx = np.maximum(hi_idx, lo_idx)
        if ax.periodic:
            hi_idx = np.minimum(hi_idx, lo_idx + ax.n - 1)
        else:
            lo_idx = np.clip(lo_idx, 0, ax.n - 1)
            hi_idx = np.clip(hi_idx, 0, ax.n - 1)
        F = _csr_from_ranges(n, lo_idx, hi_idx, ax.n, ax.periodic)
        return CellMap(space, F, f)

    if f.matrix is not None and space.kind == "torus2":
        ax0, ax1 = space.axes
        cen = space.centers()
        h0, h1 = ax0.step / 2.0, ax1.step / 2.0
        corners = np.stack([cen + [sx * h0, sy * h1]
                            for sx in (-1, 1) for sy in (-1, 1)], axis=0)
        imgs = corners @ np.asarray(f.matrix, float).T  # (4, N, 2), unwrapped
        lo = imgs.min(axis=0)
        hi = imgs.max(axis=0)
        rows, cols = [], []
        base = np.arange(n, dtype=np.int64)
        lo0 = np.ceil((lo[:, 0] - h0 - tol) / ax0.step).astype(np.int64)
        hi0 = np.floor((hi[:, 0] + h0 + tol) / ax0.step).astype(np.int64)
        lo1 = np.ceil((lo[:, 1] - h1 - tol) / ax1.step).astype(np.int64)
        hi1 = np.floor((hi[:, 1] + h1 + tol) / ax1.step).astype(np.int64)
        hi0 = np.minimum(hi0, lo0 + ax0.n - 1)
        hi1 = np.minimum(hi1, lo1 + ax1.n - 1)
        w0 = hi0 - lo0 + 1
        w1 = hi1 - lo1 + 1
        counts = w0 * w1
        rows = np.repeat(base, counts)
        cols = np.empty(counts.sum(), dtype=np.int64)
        pos = 0
        for i in range(n):
            ii = (np.arange(lo0[i], hi0[i] + 1) % ax0.n)
            jj = (np.arange(lo1[i], hi1[i] + 1) % ax1.n)
            cols[pos:pos + counts[i]] = (ii[:, None] * ax1.n + jj[None, :]).ravel()
            pos += counts[i]
        F = sp.csr_matrix((np.ones(cols.size, dtype=bool), (rows, cols)),
                          shape=(n, n), dtype=bool)
        F.sum_duplicates()
        return CellMap(space, F, f)

    # generic fallback: center + corners, fattened by lipschitz * cell_radius
    cen = space.centers()
    halves = np.array([ax.step / 2.0 for ax in space.axes])
    samples = [cen]
    for signs in np.ndindex(*([2] * space.dim)):
        off = halves * (np.array(signs) * 2.0 - 1.0)
        samples.append(cen + off)
    rho = f.lipschitz_bound * space.cell_radius
    rows_all, cols_all = [], []
    base = np.arange(n, dtype=np.int64)
    for pts in samples:
        img = f.forward(pts)
        target = space.cell_of(space.wrap(img))
        rows_all.append(base)
        cols_all.append(target)
    F = sp.csr_matrix((np.ones(n * len(samples), dtype=bool),
                       (np.concatenate(rows_all), np.concatenate(cols_all))),
                      shape=(n, n), dtype=bool)
    F.sum_duplicates()
    # fatten targets to cover rho plus in-cell rounding
    D = neighborhood_matrix(space, rho)
    F = ((F.astype(np.int32) @ D.astype(np.int32)) > 0).tocsr()
    return CellMap(space, F.astype(bool), f)


def cell_map_from_relation(space: GridSpace, edges) -> CellMap:
    """CellMap from an explicit successor relation (abstract spaces)."""
    n = space.n_cells
    rows = np.array([e[0] for e in edges], dtype=np.int64)
    cols = np.array([e[1] for e in edges], dtype=np.int64)
    F = sp.csr_matrix((np.ones(rows.size, dtype=bool), (rows, cols)),
                      shape=(n, n), dtype=bool)
    F.sum_duplicates()
    return CellMap(space, F)


def neighborhood_matrix(space: GridSpace, r: float) -> sp.csr_matrix:
    """Sparse matrix N with N[a, b] = (d(center_a, center_b) <= r + cell_radius)."""
    n = space.n_cells
    r_eff = r + space.cell_radius + 1e-12
    if space.kind == "abstract":
        return sp.csr_matrix(space._dist <= r_eff)
    rows, cols = [], []
    base = np.arange(n, dtype=np.int64)
    multi = np.unravel_index(base, space.shape)
    ks = [min(int(np.floor(r_eff / ax.step)), ax.n // 2 if ax.periodic else ax.n)
          for ax in space.axes]
    for off in np.ndindex(*[2 * k + 1 for k in ks]):
        shift = [o - k for o, k in zip(off, ks)]
        tgt = []
        ok = np.ones(n, dtype=bool)
        for i, ax in enumerate(space.axes):
            t = multi[i] + shift[i]
            if ax.periodic:
                t %= ax.n
            else:
                ok &= (t >= 0) & (t < ax.n)
                t = np.clip(t, 0, ax.n - 1)
            tgt.append(t)
        j = np.ravel_multi_index(tgt, space.shape)
        rows.append(base[ok])
        cols.append(j[ok])
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    M = sp.csr_matrix((np.ones(rows.size, dtype=bool), (rows, cols)),
                      shape=(n, n), dtype=bool)
    M.sum_duplicates()
    return M


@dataclass
class PseudoOrbit:
    """Finite delta-chain: step i error is d(f(x_i), x_{i+1})."""

    points: np.ndarray  # (k+1, dim)
    delta: float
    step_errors: np.ndarray

    @property
    def length(self) -> int:
        return self.points.shape[0] - 1

    def validate(self) -> bool:
        return bool(self.step_errors.size == 0 or
                    self.step_errors.max() <= self.delta + 1e-12)


@dataclass
class LimitPseudoOrbit:
    """Window truncation of a bi-infinite limit-pseudo-orbit.

    points[j] is the orbit point at time index j - m for a window -m..+m.
    decay_schedule[j] bounds the step error at distance j from index 0.
    """

    points: np.ndarray
    delta: float
    decay_schedule: np.ndarray
    step_errors: np.ndarray

    @property
    def half_window(self) -> int:
        return (self.points.shape[0] - 1) // 2

    def validate(self) -> bool:
        if self.step_errors.size and self.step_errors.max() > self.delta + 1e-12:
            return False
        m = self.half_window
        for i, err in enumerate(self.step_errors):
            # error of the step from time index (i - m) to (i - m + 1)
            j = min(abs(i - m), abs(i - m + 1), len(self.decay_schedule) - 1)
            if err > self.decay_schedule[j] + 1e-12:
                return False
        return True


def step_errors(space: GridSpace, f: PointMap, points: np.ndarray) -> np.ndarray:
    imgs = f.forward_wrapped(space, points[:-1])
    return space.point_dist(imgs, points[1:])


def _noise_directions(rng, noise: str, shape: tuple) -> np.ndarray:
    """Constant per-chain drift directions for adversarial noise; None for
    uniform (drawn fresh each step).  Directions have unit Euclidean norm, so
    every perturbation is a valid delta-kick in any of the grid metrics."""
    if noise == "uniform":
        return None
    if noise == "adversarial":
        s = np.where(rng.random(shape) < 0.5, -1.0, 1.0)
        return s / np.linalg.norm(s, axis=-1, keepdims=True)
    raise ValueError(f"unknown noise mode: {noise!r}")


def _noise_step(rng, directions, delta: float, shape: tuple) -> np.ndarray:
    """One perturbation of Euclidean norm <= delta."""
    if directions is not None:
        return delta * directions
    pert = rng.uniform(-delta, delta, size=shape)
    if shape[-1] > 1:
        norm = np.linalg.norm(pert, axis=-1, keepdims=True)
        pert = np.where(norm > delta,
                        pert * (delta / np.maximum(norm, 1e-300)), pert)
    return pert


def generate_pseudo_orbit(space: GridSpace, f: PointMap, x0, k: int,
                          delta: float, noise: str = "uniform",
                          seed: int = 0) -> PseudoOrbit:
    """Seeded delta-chain of length k from x0 (noise: uniform | adversarial)."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if delta < 0:
        raise ValueError("delta must be >= 0")
    rng = np.random.default_rng(seed)
    dim = space.dim
    dirs = _noise_directions(rng, noise, (dim,))
    pts = np.empty((k + 1, dim))
    pts[0] = np.atleast_1d(np.asarray(x0, float))
    for i in range(k):
        y = f.forward_wrapped(space, pts[i])
        if delta > 0:
            y = space.wrap(y + _noise_step(rng, dirs, delta, (dim,)))
        pts[i + 1] = y
    errs = step_errors(space, f, pts)
    return PseudoOrbit(pts, delta, errs)


def generate_pseudo_orbit_batch(space: GridSpace, f: PointMap, x0s: np.ndarray,
                                k: int, delta: float, noise: str = "uniform",
                                seed: int = 0) -> np.ndarray:
    """(B, k+1, dim) array of seeded delta-chains, one per row of x0s."""
    x0s = np.atleast_2d(np.asarray(x0s, float))
    B, dim = x0s.shape
    rng = np.random.default_rng(seed)
    dirs = _noise_directions(rng, noise, (B, dim))
    pts = np.empty((B, k + 1, dim))
    pts[:, 0] = x0s
    for i in range(k):
        y = f.forward(pts[:, i])
        if delta > 0:
            y = y + _noise_step(rng, dirs, delta, (B, dim))
        pts[:, i + 1] = space.wrap(y)
    return pts


def omega_limit(F: CellMap, c: int, burn_in: int = 1, horizon: int = 1,
                max_steps: int = 100000) -> CellSet:
    """Outer enclosure of the omega-limit set of cell c under the cell map.

    Iterates the cell image of {c}; the mask sequence on a finite grid is
    eventually periodic, so the enclosure is the union over one period after
    the transient (at least burn_in steps in).
    """
    if burn_in < 1 or horizon < 1:
        raise ValueError("burn_in and horizon must be >= 1")
    n = F.space.n_cells
    mask = CellSet.from_indices(n, [c])
    seen: dict[bytes, int] = {}
    history = []
    t = 0
    while t < max_steps:
        mask = F.image(mask)
        key = mask.mask.tobytes()
        if t >= burn_in and key in seen:
            start = seen[key]
            cycle = history[start:]
            out = CellSet.empty(n)
            for m in cycle:
                out = out | m
            return out
        seen[key] = t
        history.append(mask)
        t += 1
    out = CellSet.empty(n)
    for m in history[-horizon:]:
        out = out | m
    return out
