"""
Zero loci: real components on the real locus, complex winding census (n=1)
and the equidistribution statistic.

Real components
---------------
A symmetric section is real-valued on R^n. On a grid of R^n a crossing is a
grid edge whose endpoint values change sign. Crossings are joined inside
every 2-face of the grid: two crossings on a face are linked directly; four
crossings are paired by the asymptotic decider. Linked crossings are merged
with a union-find; each resulting class is one component of the real zero
locus. Torus adjacency wraps. For n = 1 every crossing is its own component.

Per-component inradius is the largest grid ball inside the component's own
neighbourhood: the grid vertices whose nearest crossing belongs to it.
Neighbourhoods are disjoint, so the balls pack the real locus.
"""

import math
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional

import numpy as np
import pandas as pd
from scipy import ndimage
from scipy.spatial import cKDTree

from src import config
from src.errors import DegenerateVertexError, ResolutionError, SymmetryError
from src.fields import SectionField, symmetry_certificate
from src.model import GridSpec, ModelManifold, ScaledFrame, real_grid
from src.analysis import coefficient_of_variation
from src.utils import DisjointSet

logger = logging.getLogger(__name__)

MAX_JITTER_ATTEMPTS = 4


# ---------------------------------------------------------------- real components

@dataclass(frozen=True)
class Component:
    id: int
    size: int                   # number of crossing edges
    inradius: float             # g units
    bbox_lo: np.ndarray
    bbox_hi: np.ndarray
    points: np.ndarray          # (size, n) crossing positions on R^n
    edges: np.ndarray           # (size,) crossing node ids (axis * N + flat vertex index)
    ball_center: Optional[np.ndarray] = None    # centre of the inradius ball, g units


@dataclass
class ComponentInventory:
    components: List[Component]
    grid: GridSpec
    k: int
    jittered: bool = False
    segments: Optional[np.ndarray] = None       # (S, 2, n) marching segments, n >= 2

    @property
    def count(self) -> int:
        return len(self.components)

    @property
    def min_inradius(self) -> float:
        return min((c.inradius for c in self.components), default=np.inf)

    def to_frame(self) -> pd.DataFrame:
        rows = []
        sk = math.sqrt(self.k)
        for c in self.components:
            row = {'component': c.id, 'size': c.size, 'inradius_g': c.inradius, 'inradius_gk': c.inradius * sk}
            for j, (lo, hi) in enumerate(zip(c.bbox_lo, c.bbox_hi), 1):
                row[f'x{j}_lo'] = lo
                row[f'x{j}_hi'] = hi
            rows.append(row)
        return pd.DataFrame(rows)


def _jittered(g: GridSpec, attempt: int, seed: int) -> GridSpec:
    rng = np.random.default_rng(seed + attempt)
    shift = rng.uniform(0.1, 0.4, size=len(g.shape)) * g.spacing
    lo = tuple(np.array(g.lower) + shift)
    hi = tuple(np.array(g.upper) + shift)
    return GridSpec(lo, hi, g.shape, g.periodic, g.k)


def _shift(a: np.ndarray, axis: int) -> np.ndarray:
    """Value at v + e_axis (wrapping)."""
    return np.roll(a, -1, axis=axis)


def _grid_values(s: SectionField, m: ModelManifold, g: GridSpec):
    pts = g.points()
    z = pts.astype(complex)
    values = s.evaluate(z)
    valid = np.ones(len(pts), dtype=bool)
    if not m.is_torus:
        valid = np.sqrt(np.sum(pts ** 2, axis=1)) <= m.ball_radius + 1e-12
    return values.reshape(g.shape), valid.reshape(g.shape), pts


def real_components(s: SectionField, m: ModelManifold, g: GridSpec = None,
                    seed: int = config.DEFAULT_SEED, check_symmetry: bool = True) -> ComponentInventory:
    """Components of the real zero locus of a symmetric section, via marching + union-find."""
    f = ScaledFrame(s.k)
    g = real_grid(m, f) if g is None else g
    g.require(config.MAX_AH_CELL)
    if check_symmetry:
        cert = symmetry_certificate(s, g.points().astype(complex))
        if not cert.symmetric:
            raise SymmetryError(f"section is not symmetric (certificate {cert.value:.3g})", cert.value)
    grid, jittered = g, False
    for attempt in range(MAX_JITTER_ATTEMPTS + 1):
        try:
            inv = _components_on(s, m, grid)
            inv.jittered = jittered
            return inv
        except DegenerateVertexError as exc:
            logger.warning("degenerate vertex on attempt %d (%s); re-running on a jittered grid", attempt, exc)
            grid, jittered = _jittered(g, attempt, seed), True
    raise DegenerateVertexError("grid vertices keep landing on the zero set after jitter")


def _components_on(s: SectionField, m: ModelManifold, g: GridSpec) -> ComponentInventory:
    values, valid, pts = _grid_values(s, m, g)
    V = values.real
    if np.any(valid & (np.abs(V) < config.VERTEX_DEGENERACY_TOL)):
        where = np.argwhere(valid & (np.abs(V) < config.VERTEX_DEGENERACY_TOL))[0]
        raise DegenerateVertexError(f"|s| below {config.VERTEX_DEGENERACY_TOL} at vertex {tuple(where)}", tuple(where))
    n = V.ndim
    shape = V.shape
    N = V.size
    idx = np.arange(N).reshape(shape)
    positive = V > 0

    edge_valid, cross = [], []
    for a in range(n):
        ev = valid & _shift(valid, a)
        if not g.periodic:
            along = np.ones(shape, dtype=bool)
            sl = [slice(None)] * n
            sl[a] = -1
            along[tuple(sl)] = False
            ev &= along
        edge_valid.append(ev)
        cross.append(ev & (positive != _shift(positive, a)))

    ds = DisjointSet()
    node_ids = np.concatenate([a * N + idx[cross[a]] for a in range(n)])
    for node in node_ids.tolist():
        ds.makeset(node)

    segments = []
    h = g.spacing
    crossing_pos = {}
    for a in range(n):
        v0 = V[cross[a]]
        v1 = _shift(V, a)[cross[a]]
        t = v0 / (v0 - v1)
        base = pts.reshape(shape + (n,))[cross[a]]
        pos = base.copy()
        pos[:, a] += t * h[a]
        for node, p in zip((a * N + idx[cross[a]]).tolist(), pos):
            crossing_pos[node] = p

    for a in range(n):
        for b in range(a + 1, n):
            fv = (edge_valid[a] & edge_valid[b] & _shift(edge_valid[a], b) & _shift(edge_valid[b], a))
            c = [cross[a], _shift(cross[b], a), _shift(cross[a], b), cross[b]]
            ids = [a * N + idx, b * N + _shift(idx, a), a * N + _shift(idx, b), b * N + idx]
            flags = np.stack([ci[fv] for ci in c], axis=-1)
            id_arr = np.stack([ii[fv] for ii in ids], axis=-1)
            count = flags.sum(axis=1)

            two = count == 2
            if np.any(two):
                order = np.argsort(~flags[two], axis=1, kind='stable')
                rows = id_arr[two]
                first = rows[np.arange(len(rows)), order[:, 0]]
                second = rows[np.arange(len(rows)), order[:, 1]]
                ds.union_pairs(first.tolist(), second.tolist())
                segments.extend(zip(first.tolist(), second.tolist()))

            four = count == 4
            if np.any(four):
                f00 = V[fv][four]
                f10 = _shift(V, a)[fv][four]
                f01 = _shift(V, b)[fv][four]
                f11 = _shift(_shift(V, a), b)[fv][four]
                denom = f00 + f11 - f10 - f01
                safe = np.where(denom != 0, denom, 1.0)
                mu = np.where(denom != 0, (f00 * f11 - f10 * f01) / safe, f00)
                same = np.sign(mu) == np.sign(f00)
                rows = id_arr[four]
                # saddle on the f00 side: cut off corners v10 and v01
                pair_a = np.where(same[:, None], rows[:, [0, 2]], rows[:, [0, 1]])
                pair_b = np.where(same[:, None], rows[:, [1, 3]], rows[:, [3, 2]])
                ds.union_pairs(pair_a[:, 0].tolist(), pair_b[:, 0].tolist())
                ds.union_pairs(pair_a[:, 1].tolist(), pair_b[:, 1].tolist())
                segments.extend(zip(pair_a[:, 0].tolist(), pair_b[:, 0].tolist()))
                segments.extend(zip(pair_a[:, 1].tolist(), pair_b[:, 1].tolist()))

    labels = ds.labels(node_ids.tolist()) if len(node_ids) else np.zeros(0, dtype=int)
    n_comp = int(labels.max()) + 1 if len(labels) else 0
    node_pts = np.array([crossing_pos[int(node)] for node in node_ids]).reshape(-1, n)
    radii, centers = _neighbourhood_balls(valid, g, pts, node_pts, labels, n_comp)

    components = []
    for comp in range(n_comp):
        nodes = node_ids[labels == comp]
        p = node_pts[labels == comp]
        radius = max(float(radii[comp]), float(np.min(h)))
        components.append(Component(comp, len(nodes), radius, p.min(axis=0), p.max(axis=0), p, nodes,
                                    centers[comp]))

    seg_arr = None
    if n >= 2 and segments:
        seg_arr = np.array([[crossing_pos[a_], crossing_pos[b_]] for a_, b_ in segments])
    logger.debug("real components k=%d grid=%s: N=%d", s.k, g.shape, len(components))
    return ComponentInventory(components, g, s.k, False, seg_arr)


def _wrap_box(x: np.ndarray, lower: np.ndarray, extent: np.ndarray) -> np.ndarray:
    y = np.mod(x - lower, extent)
    return np.where(y >= extent, y - extent, y)


def _seam_shift(occupied: np.ndarray) -> int:
    """Roll that moves the widest cyclic gap of an occupancy mask onto the array seam."""
    L = len(occupied)
    if occupied.all() or not occupied.any():
        return 0
    best, best_gap = 0, -1
    for i in np.flatnonzero(occupied & ~np.roll(occupied, 1)):
        gap, j = 0, (i - 1) % L
        while not occupied[j]:
            gap += 1
            j = (j - 1) % L
        if gap > best_gap:
            best, best_gap = int(i), gap
    return -best


def _neighbourhood_balls(valid: np.ndarray, g: GridSpec, pts: np.ndarray, crossings: np.ndarray,
                         owner: np.ndarray, count: int):
    """
    Largest grid ball (radius in g units, centre) inside each component's own neighbourhood.

    A grid vertex belongs to the component owning its nearest crossing, so the
    neighbourhoods partition the real locus and the balls are pairwise disjoint.
    """
    radii = np.zeros(count)
    centers = np.full((count, valid.ndim), np.nan)
    if count == 0:
        return radii, centers
    shape = valid.shape
    n = valid.ndim
    h = g.spacing
    lower = np.array(g.lower, dtype=float)
    if g.periodic:
        extent = np.array(g.upper, dtype=float) - lower
        tree = cKDTree(_wrap_box(crossings, lower, extent), boxsize=extent)
        _, nearest = tree.query(_wrap_box(pts, lower, extent))
    else:
        _, nearest = cKDTree(crossings).query(pts)
    lab = np.where(valid.ravel(), owner[nearest], -1).reshape(shape)

    for c in range(count):
        own = lab == c
        if not own.any():
            continue
        shift = [0] * n
        if g.periodic:
            for a in range(n):
                shift[a] = _seam_shift(own.any(axis=tuple(b for b in range(n) if b != a)))
            own = np.roll(own, shift, axis=tuple(range(n)))
        idx = np.nonzero(own)
        start = np.array([int(i.min()) for i in idx])
        window = own[tuple(slice(s0, int(i.max()) + 1) for s0, i in zip(start, idx))]
        # the False border stands for foreign vertices beyond the window
        dist = ndimage.distance_transform_edt(np.pad(window, 1), sampling=h)
        best = np.array(np.unravel_index(int(np.argmax(dist)), dist.shape))
        vertex = best - 1 + start - np.array(shift)
        if g.periodic:
            vertex = np.mod(vertex, shape)
        radii[c] = float(dist[tuple(best)])
        centers[c] = lower + vertex * h
    return radii, centers


@dataclass(frozen=True)
class PackingCertificate:
    count: int
    min_inradius: float         # g units
    lhs: float                  # N * r_min^n
    volume: float
    implied_C: float            # N / k^(n/2)
    ok: bool
    eta_ok: Optional[bool] = None


def packing_check(inv: ComponentInventory, m: ModelManifold, f: ScaledFrame,
                  eta: float = None) -> PackingCertificate:
    """N * (min inradius)^n <= vol(real locus); implied C = N / k^(n/2)."""
    N = inv.count
    implied = N / f.k ** (m.n / 2.0)
    if N == 0:
        return PackingCertificate(0, np.inf, 0.0, m.real_volume(), 0.0, True, True if eta is not None else None)
    r = inv.min_inradius
    lhs = N * r ** m.n
    ok = lhs <= m.real_volume() + 1e-12
    if not ok:
        logger.error("packing violated: N r^n = %.4g > %.4g (marching bug?)", lhs, m.real_volume())
    eta_ok = None
    if eta is not None and np.isfinite(eta):
        eta_ok = bool(r >= 0.5 * eta / f.sqrt_k)
    return PackingCertificate(N, r, lhs, m.real_volume(), implied, bool(ok), eta_ok)


def export_segments(inv: ComponentInventory, path) -> Path:
    """Marching segments (n >= 2) or crossing points (n = 1) as whitespace text for external plotting."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8') as fh:
        if inv.segments is not None:
            fh.write("# component-free marching segments: x_a... x_b...\n")
            for a, b in inv.segments:
                fh.write(' '.join(f"{v:.10g}" for v in np.concatenate([a, b])) + '\n')
        else:
            fh.write("# component crossing points: id x...\n")
            for c in inv.components:
                for p in c.points:
                    fh.write(f"{c.id} " + ' '.join(f"{v:.10g}" for v in p) + '\n')
    return path


# ---------------------------------------------------------------- complex winding census

@dataclass(frozen=True)
class WindingCensus:
    total: int                  # signed zero count
    positive: int
    negative: int
    per_cell: np.ndarray        # (M, M) integer windings
    origin: complex
    cell_size: float            # g units

    def __int__(self):
        return self.total


def _census_once(s: SectionField, m: ModelManifold, lower: complex, size: float, cells: int,
                 samples: int):
    """Windings of s around every cell of a cells x cells partition of the square [lower, lower+size]."""
    step = size / (cells * samples)
    L = cells * samples
    periodic = m.is_torus and abs(size - 1.0) < 1e-12
    count = L if periodic else L + 1
    t = np.arange(count) * step
    # horizontal lines: row j at imag offset j * cell
    rows = np.arange(cells + 1) * (size / cells)
    hz = lower + t[None, :] + 1j * rows[:, None]                 # (cells+1, count)
    vt = lower + rows[:, None] + 1j * t[None, :]                 # column i at real offset
    hv = s.evaluate(hz.reshape(-1, 1)).reshape(hz.shape)
    vv = s.evaluate(vt.reshape(-1, 1)).reshape(vt.shape)
    scale = max(np.max(np.abs(hv)), np.max(np.abs(vv)))
    if scale == 0:
        raise ResolutionError("section vanishes identically on the partition", hint="nothing to count")
    if min(np.min(np.abs(hv)), np.min(np.abs(vv))) < 1e-10 * scale:
        return None
    def increments(line):
        nxt = np.roll(line, -1, axis=1) if periodic else line[:, 1:]
        cur = line if periodic else line[:, :-1]
        return np.angle(nxt / cur)
    dh = increments(hv)      # (cells+1, L)
    dv = increments(vv)      # (cells+1, L)
    hsum = dh.reshape(cells + 1, cells, samples).sum(axis=2)     # [row, col]: along bottom edge of cell col
    vsum = dv.reshape(cells + 1, cells, samples).sum(axis=2)     # [col, row]: along left edge of cell row
    # cell (row r, col c): bottom + right - top - left
    wind = (hsum[:-1, :] + vsum[1:, :].T - hsum[1:, :] - vsum[:-1, :].T) / (2 * np.pi)
    if np.max(np.abs(wind - np.round(wind))) > config.WINDING_TOL:
        return None
    return np.round(wind).astype(int)


def complex_zero_count(s: SectionField, m: ModelManifold, cells: int = None, samples: int = 12,
                       lower: complex = None, size: float = None, seed: int = config.DEFAULT_SEED) -> WindingCensus:
    """Sum of cell windings of s (n = 1) over a square partition; jitters the origin on failure."""
    if s.n != 1:
        raise ValueError("complex_zero_count needs n = 1")
    f = ScaledFrame(s.k)
    if lower is None:
        lower = 0.0 if m.is_torus else -m.ball_radius * (1 + 1j) / math.sqrt(2)
    if size is None:
        size = 1.0 if m.is_torus else math.sqrt(2) * m.ball_radius
    if cells is None:
        cells = max(2, int(math.ceil(2.0 * f.sqrt_k * size)))
    rng = np.random.default_rng(seed)
    origin = complex(lower)
    for attempt in range(MAX_JITTER_ATTEMPTS + 1):
        wind = _census_once(s, m, origin, size, cells, samples)
        if wind is not None:
            return WindingCensus(int(wind.sum()), int(wind[wind > 0].sum()), int(-wind[wind < 0].sum()),
                                 wind, origin, size / cells)
        logger.warning("winding census failed at origin %s; jittering", origin)
        jitter = rng.uniform(0.05, 0.45, size=2) * size / cells
        origin = complex(lower) + jitter[0] + 1j * jitter[1]
        if attempt == MAX_JITTER_ATTEMPTS - 1:
            samples *= 2
    raise ResolutionError("winding numbers not integral after jitter", hint="raise samples per cell edge")


# ---------------------------------------------------------------- equidistribution

@dataclass(frozen=True)
class EquidistributionStat:
    cell_measures: np.ndarray       # scaled by 1/k
    cv: float

    @property
    def cells(self) -> int:
        return self.cell_measures.size


def equidistribution(s: SectionField, m: ModelManifold, cells: int = 16, sub: int = None,
                     per_gk_unit: float = 4.0, smoothing: float = 1.0,
                     seed: int = config.DEFAULT_SEED) -> EquidistributionStat:
    """
    Per-cell zero measure of s over an equal-volume partition of the torus, scaled by 1/k.

    For n = 1 the zeros found by the winding census are polished by Newton
    steps and each carries its multiplicity spread uniformly over a square
    of side `smoothing` g_k units, so the cell measures test the zero current
    against cell indicators mollified at the scale 1/sqrt(k). smoothing = 0
    bins the polished zeros as points.
    """
    if not m.is_torus:
        raise ValueError("equidistribution is defined on the torus")
    f = ScaledFrame(s.k)
    if s.n == 1:
        per_axis = int(round(math.sqrt(cells)))
        if per_axis ** 2 != cells:
            raise ValueError("cells must be a perfect square for n = 1")
        sub = sub or max(1, int(math.ceil(2.0 * f.sqrt_k / per_axis)))
        census = complex_zero_count(s, m, cells=per_axis * sub, seed=seed)
        zeros, weight = polish_zeros(s, census)
        zeros = (zeros.real % 1.0) + 1j * (zeros.imag % 1.0)
        width = smoothing / f.sqrt_k
        wx = _cell_shares(zeros.real, width, per_axis)
        wy = _cell_shares(zeros.imag, width, per_axis)
        measures = np.einsum('p,pi,pj->ij', weight, wy, wx).ravel() / s.k
        return EquidistributionStat(measures, coefficient_of_variation(measures))
    return _coarea_equidistribution(s, m, f, cells, per_gk_unit)


def polish_zeros(s: SectionField, census: WindingCensus, steps: int = 12):
    """
    Zeros located by the census, refined by Newton steps on the real 2 x 2 Jacobian.

    Returns (points, multiplicities). A step that would leave the census
    cell is cut back to the cell centre.
    """
    rows, cols = np.nonzero(census.per_cell)
    h = census.cell_size
    start = census.origin + (cols + 0.5) * h + 1j * (rows + 0.5) * h
    weight = np.abs(census.per_cell[rows, cols]).astype(float)
    z = start.copy()
    for _ in range(steps):
        v, grad = s.value_and_gradient(z.reshape(-1, 1))
        a, b = grad[:, 0].real, grad[:, 1].real
        c, d = grad[:, 0].imag, grad[:, 1].imag
        det = a * d - b * c
        ok = np.abs(det) > 0
        safe = np.where(ok, det, 1.0)
        dx = np.where(ok, -(d * v.real - b * v.imag) / safe, 0.0)
        dy = np.where(ok, -(a * v.imag - c * v.real) / safe, 0.0)
        z = z + dx + 1j * dy
        z = np.where(np.maximum(np.abs((z - start).real), np.abs((z - start).imag)) <= h, z, start)
    return z, weight


def _cell_shares(x: np.ndarray, width: float, per_axis: int) -> np.ndarray:
    """(P, per_axis) share of the periodic interval [x - width/2, x + width/2] in each cell of [0, 1)."""
    edges = np.arange(per_axis) / per_axis
    if width <= 0:
        out = np.zeros((len(x), per_axis))
        out[np.arange(len(x)), np.minimum((x * per_axis).astype(int), per_axis - 1)] = 1.0
        return out
    lo = (x - width / 2.0)[:, None]
    hi = (x + width / 2.0)[:, None]
    share = np.zeros((len(x), per_axis))
    for t in (-1.0, 0.0, 1.0):
        a = edges[None, :] + t
        share += np.clip(np.minimum(hi, a + 1.0 / per_axis) - np.maximum(lo, a), 0.0, None)
    return share / width


def _coarea_equidistribution(s, m, f, cells, per_gk_unit):
    """Coarea proxy for the (2n-2)-measure: (1/(pi eps^2)) sum over {|s| < eps} of J * cell volume."""
    dim = 2 * m.n
    per_axis = int(round(cells ** (1.0 / dim)))
    if per_axis ** dim != cells:
        raise ValueError(f"cells must be a perfect {dim}-th power for n = {m.n}")
    res = max(per_axis, int(math.ceil(f.sqrt_k * per_gk_unit / per_axis)) * per_axis)
    ticks = (np.arange(res) + 0.5) / res
    eps = 0.25
    measures = np.zeros((per_axis,) * dim)
    cell_vol = (1.0 / res) ** dim
    # slab along the first axis to bound memory
    rest = np.stack(np.meshgrid(*[ticks] * (dim - 1), indexing='ij'), axis=-1).reshape(-1, dim - 1)
    for i, x0 in enumerate(ticks):
        pts = np.column_stack([np.full(len(rest), x0), rest])
        z = to_complex(pts)
        v, grad = s.value_and_gradient(z)
        near = np.abs(v) < eps
        if not np.any(near):
            continue
        re, im = grad[near].real, grad[near].imag
        gram = np.stack([[np.sum(re * re, 1), np.sum(re * im, 1)], [np.sum(re * im, 1), np.sum(im * im, 1)]])
        J = np.sqrt(np.maximum(gram[0, 0] * gram[1, 1] - gram[0, 1] ** 2, 0.0))
        bins = np.minimum((pts[near] * per_axis).astype(int), per_axis - 1)
        np.add.at(measures, tuple(bins.T), J * cell_vol / (math.pi * eps ** 2))
    measures = measures.ravel() / s.k
    return EquidistributionStat(measures, coefficient_of_variation(measures))
