"""Finite cell models of compact metric spaces.

A GridSpace is a uniform cell decomposition of a circle, torus, interval,
or a product of these, plus an "abstract" kind for finite metric spaces
given by an explicit distance matrix.  All topology (closure, interior,
boundary, connectedness) is read off the cell adjacency relation: two
cells are adjacent iff their closures intersect.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components as _cc

TOL = 1e-12


class CellSet:
    """Immutable subset of the cells of a GridSpace (bitmask over indices)."""

    __slots__ = ("mask",)

    def __init__(self, mask):
        m = np.array(mask, dtype=bool, copy=True)
        if m.ndim != 1:
            m = m.ravel()
        m.setflags(write=False)
        self.mask = m

    @classmethod
    def empty(cls, n: int) -> "CellSet":
        return cls(np.zeros(n, dtype=bool))

    @classmethod
    def full(cls, n: int) -> "CellSet":
        return cls(np.ones(n, dtype=bool))

    @classmethod
    def from_indices(cls, n: int, idx: Iterable[int]) -> "CellSet":
        m = np.zeros(n, dtype=bool)
        idx = np.asarray(list(idx), dtype=np.int64)
        if idx.size:
            if idx.min() < 0 or idx.max() >= n:
                raise ValueError("cell index out of range")
            m[idx] = True
        return cls(m)

    @property
    def n(self) -> int:
        return self.mask.size

    def indices(self) -> np.ndarray:
        return np.flatnonzero(self.mask)

    def count(self) -> int:
        return int(self.mask.sum())

    def __len__(self) -> int:
        return self.count()

    def __bool__(self) -> bool:
        return bool(self.mask.any())

    def __contains__(self, i: int) -> bool:
        return bool(self.mask[i])

    def __iter__(self):
        return iter(self.indices())

    def __or__(self, other: "CellSet") -> "CellSet":
        return CellSet(self.mask | other.mask)

    def __and__(self, other: "CellSet") -> "CellSet":
        return CellSet(self.mask & other.mask)

    def __sub__(self, other: "CellSet") -> "CellSet":
        return CellSet(self.mask & ~other.mask)

    def complement(self) -> "CellSet":
        return CellSet(~self.mask)

    def issubset(self, other: "CellSet") -> bool:
        return bool(np.all(self.mask <= other.mask))

    def __le__(self, other: "CellSet") -> bool:
        return self.issubset(other)

    def __eq__(self, other) -> bool:
        return isinstance(other, CellSet) and np.array_equal(self.mask, other.mask)

    def __hash__(self):
        return hash(self.mask.tobytes())

    def __repr__(self):
        return f"CellSet({self.count()}/{self.n})"


@dataclass(frozen=True)
class Axis:
    n: int
    extent: float
    periodic: bool

    @property
    def step(self) -> float:
        return self.extent / self.n

    def coords(self) -> np.ndarray:
        if self.periodic:
            return np.arange(self.n) * self.step
        return (np.arange(self.n) + 0.5) * self.step

    def dist(self, da: np.ndarray) -> np.ndarray:
        a = np.abs(da)
        if self.periodic:
            a = a % self.extent
            return np.minimum(a, self.extent - a)
        return a


class GridSpace:
    """Cell decomposition of a compact space with the max metric over axes.

    kind: circle | torus2 | interval | product | abstract.
    For grid kinds the metric is the max over axes of per-axis (wrapped)
    distance, which is the arc length on the circle and the flat max-metric
    on the torus.  Abstract spaces carry an explicit distance matrix and an
    explicit adjacency (default: identity, i.e. the discrete topology).
    """

    def __init__(self, kind: str, axes: Sequence[Axis] = (),
                 dist_matrix: np.ndarray | None = None,
                 adjacency: sp.spmatrix | None = None):
        self.kind = kind
        self.axes = tuple(axes)
        if kind == "abstract":
            if dist_matrix is None:
                raise ValueError("abstract space needs a distance matrix")
            D = np.asarray(dist_matrix, dtype=float)
            if D.shape[0] != D.shape[1]:
                raise ValueError("distance matrix must be square")
            self._dist = D
            self.n_cells = D.shape[0]
            self.cell_radius = 0.0
            if adjacency is None:
                adjacency = sp.identity(self.n_cells, dtype=bool, format="csr")
            self._adj = sp.csr_matrix(adjacency).astype(bool)
        else:
            if not axes:
                raise ValueError("grid space needs at least one axis")
            self._dist = None
            self.n_cells = int(np.prod([a.n for a in self.axes]))
            self.cell_radius = max(a.step / 2.0 for a in self.axes)
            self._adj = None
        self._centers = None

    # -- constructors ------------------------------------------------------

    @classmethod
    def circle(cls, n: int) -> "GridSpace":
        return cls("circle", [Axis(n, 2.0 * np.pi, True)])

    @classmethod
    def torus2(cls, n: int, m: int | None = None) -> "GridSpace":
        m = n if m is None else m
        return cls("torus2", [Axis(n, 1.0, True), Axis(m, 1.0, True)])

    @classmethod
    def interval(cls, n: int) -> "GridSpace":
        return cls("interval", [Axis(n, 1.0, False)])

    @classmethod
    def product(cls, a: "GridSpace", b: "GridSpace") -> "GridSpace":
        if a.kind == "abstract" or b.kind == "abstract":
            raise ValueError("product of abstract spaces is not supported")
        return cls("product", a.axes + b.axes)

    @classmethod
    def abstract(cls, dist_matrix, adjacency=None) -> "GridSpace":
        return cls("abstract", dist_matrix=dist_matrix, adjacency=adjacency)

    @classmethod
    def discrete(cls, n: int) -> "GridSpace":
        D = 1.0 - np.eye(n)
        return cls.abstract(D)

    # -- geometry ----------------------------------------------------------

    @property
    def shape(self) -> tuple:
        return tuple(a.n for a in self.axes)

    @property
    def dim(self) -> int:
        return len(self.axes)

    def centers(self) -> np.ndarray:
        """(n_cells, dim) array of cell center coordinates."""
        if self._centers is None:
            if self.kind == "abstract":
                self._centers = np.arange(self.n_cells, dtype=float)[:, None]
            else:
                grids = np.meshgrid(*[a.coords() for a in self.axes], indexing="ij")
                self._centers = np.stack([g.ravel() for g in grids], axis=-1)
        return self._centers

    def point_dist(self, p: np.ndarray, q: np.ndarray) -> np.ndarray:
        """Distance between point arrays of shape (..., dim)."""
        if self.kind == "abstract":
            raise ValueError("abstract spaces have no ambient points")
        p = np.asarray(p, float)
        q = np.asarray(q, float)
        per = [ax.dist(p[..., i] - q[..., i]) for i, ax in enumerate(self.axes)]
        return np.max(np.stack(per, axis=-1), axis=-1)

    def metric(self, a: int, b: int) -> float:
        if not (0 <= a < self.n_cells and 0 <= b < self.n_cells):
            raise ValueError("invalid cell index")
        if self.kind == "abstract":
            return float(self._dist[a, b])
        c = self.centers()
        return float(self.point_dist(c[a], c[b]))

    def pairwise_dist(self, idx_a: np.ndarray, idx_b: np.ndarray) -> np.ndarray:
        """(len(a), len(b)) matrix of center-to-center distances."""
        idx_a = np.asarray(idx_a, dtype=np.int64)
        idx_b = np.asarray(idx_b, dtype=np.int64)
        if self.kind == "abstract":
            return self._dist[np.ix_(idx_a, idx_b)]
        c = self.centers()
        return self.point_dist(c[idx_a][:, None, :], c[idx_b][None, :, :])

    def dist_to_set(self, S: CellSet, chunk: int = 2048) -> np.ndarray:
        """d(center, S) for every cell; +inf when S is empty."""
        out = np.full(self.n_cells, np.inf)
        idx_s = S.indices()
        if idx_s.size == 0:
            return out
        for lo in range(0, self.n_cells, chunk):
            hi = min(lo + chunk, self.n_cells)
            out[lo:hi] = self.pairwise_dist(np.arange(lo, hi), idx_s).min(axis=1)
        return out

    def cell_of(self, pts: np.ndarray) -> np.ndarray:
        """Flat index of the cell containing each ambient point."""
        pts = np.atleast_2d(np.asarray(pts, float))
        idxs = []
        for i, ax in enumerate(self.axes):
            x = pts[:, i]
            if ax.periodic:
                k = np.rint(x / ax.step).astype(np.int64) % ax.n
            else:
                k = np.clip(np.floor(x / ax.step).astype(np.int64), 0, ax.n - 1)
            idxs.append(k)
        return np.ravel_multi_index(idxs, self.shape)

    def wrap(self, pts: np.ndarray) -> np.ndarray:
        """Map ambient points into the fundamental domain."""
        pts = np.array(pts, dtype=float, copy=True)
        for i, ax in enumerate(self.axes):
            if ax.periodic:
                pts[..., i] %= ax.extent
            else:
                pts[..., i] = np.clip(pts[..., i], 0.0, ax.extent)
        return pts

    # -- adjacency & morphology --------------------------------------------

    def adjacency(self) -> sp.csr_matrix:
        """Symmetric, reflexive cell adjacency (closures intersect)."""
        if self._adj is None:
            n = self.n_cells
            rows, cols = [], []
            base = np.arange(n, dtype=np.int64)
            multi = np.unravel_index(base, self.shape)
            for off in np.ndindex(*([3] * self.dim)):
                shift = [o - 1 for o in off]
                tgt = []
                ok = np.ones(n, dtype=bool)
                for i, ax in enumerate(self.axes):
                    t = multi[i] + shift[i]
                    if ax.periodic:
                        t %= ax.n
                    else:
                        ok &= (t >= 0) & (t < ax.n)
                        t = np.clip(t, 0, ax.n - 1)
                    tgt.append(t)
                j = np.ravel_multi_index(tgt, self.shape)
                rows.append(base[ok])
                cols.append(j[ok])
            rows = np.concatenate(rows)
            cols = np.concatenate(cols)
            data = np.ones(rows.size, dtype=bool)
            self._adj = sp.csr_matrix((data, (rows, cols)), shape=(n, n), dtype=bool)
        return self._adj

    def _dilate_axis(self, grid: np.ndarray, axis: int, k: int) -> np.ndarray:
        if k <= 0:
            return grid
        ax = self.axes[axis]
        out = grid.copy()
        for o in range(1, k + 1):
            if ax.periodic:
                out |= np.roll(grid, o, axis=axis)
                out |= np.roll(grid, -o, axis=axis)
            else:
                s = np.zeros_like(grid)
                sl_to = [slice(None)] * grid.ndim
                sl_from = [slice(None)] * grid.ndim
                sl_to[axis] = slice(o, None)
                sl_from[axis] = slice(None, -o)
                s[tuple(sl_to)] = grid[tuple(sl_from)]
                out |= s
                s = np.zeros_like(grid)
                sl_to[axis] = slice(None, -o)
                sl_from[axis] = slice(o, None)
                s[tuple(sl_to)] = grid[tuple(sl_from)]
                out |= s
        return out

    def _box_dilate(self, mask: np.ndarray, ks: Sequence[int]) -> np.ndarray:
        grid = mask.reshape(self.shape)
        for i, k in enumerate(ks):
            grid = self._dilate_axis(grid, i, k)
        return grid.ravel()

    def closed_neighborhood(self, S: CellSet, r: float) -> CellSet:
        """Outer enclosure of B_r(S): cells with center within r + cell_radius."""
        if r < 0:
            raise ValueError("r must be nonnegative")
        if not S:
            return CellSet.empty(self.n_cells)
        r_eff = r + self.cell_radius + TOL
        if self.kind == "abstract":
            d = self._dist[:, S.indices()].min(axis=1)
            return CellSet((d <= r_eff) | S.mask)
        # under the max metric the r-ball is a per-axis box, so the
        # neighborhood is an exact separable box dilation
        ks = [int(np.floor(r_eff / ax.step)) for ax in self.axes]
        return CellSet(self._box_dilate(S.mask, ks))

    def closure(self, S: CellSet) -> CellSet:
        if self.kind == "abstract":
            return CellSet((self.adjacency() @ S.mask.astype(np.int32)) > 0) | S
        return CellSet(self._box_dilate(S.mask, [1] * self.dim)) | S

    def interior(self, S: CellSet) -> CellSet:
        comp = S.complement()
        return self.closure(comp).complement()

    def topology(self, S: CellSet) -> tuple[CellSet, CellSet, CellSet]:
        """(closure, interior, boundary) of S in the adjacency topology."""
        cl = self.closure(S)
        it = self.interior(S)
        return cl, it, cl - it

    def boundary(self, S: CellSet) -> CellSet:
        return self.topology(S)[2]

    def is_clopen(self, S: CellSet) -> bool:
        return not self.boundary(S)

    def connected_components(self, S: CellSet) -> list[CellSet]:
        """Maximal adjacency-connected pieces of S, ordered by least cell."""
        idx = S.indices()
        if idx.size == 0:
            return []
        sub = self.adjacency()[idx][:, idx]
        k, labels = _cc(sub, directed=False)
        out = []
        for lab in range(k):
            out.append(CellSet.from_indices(self.n_cells, idx[labels == lab]))
        out.sort(key=lambda cs: int(cs.indices()[0]))
        return out

    def hausdorff_distance(self, S: CellSet, T: CellSet) -> float:
        if not S or not T:
            raise ValueError("hausdorff_distance needs nonempty sets")
        a, b = S.indices(), T.indices()
        d_st = d_ts = 0.0
        chunk = 2048
        for lo in range(0, a.size, chunk):
            D = self.pairwise_dist(a[lo:lo + chunk], b)
            d_st = max(d_st, float(D.min(axis=1).max()))
        for lo in range(0, b.size, chunk):
            D = self.pairwise_dist(b[lo:lo + chunk], a)
            d_ts = max(d_ts, float(D.min(axis=1).max()))
        return max(d_st, d_ts)

    def diameter(self) -> float:
        if self.kind == "abstract":
            return float(self._dist.max())
        return max((ax.extent / 2.0 if ax.periodic else ax.extent) for ax in self.axes)

    def __repr__(self):
        if self.kind == "abstract":
            return f"GridSpace(abstract, n={self.n_cells})"
        return f"GridSpace({self.kind}, shape={self.shape})"
