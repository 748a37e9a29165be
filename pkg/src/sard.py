"""
Real quantitative Sard: pick a constant w so that f - w is sigma-transverse.

f is a complex function on the ball B(0, 11/10) in C^n, given with its real
gradient. f is sigma-transverse on the unit ball when |f(u)| < sigma forces
the least singular value of the real Jacobian of f at u to exceed sigma.

The forbidden set is built directly: cells of an adaptive grid where the
Jacobian may drop below sigma (Y) are pushed forward by f and fattened into
disks of radius sigma plus the cell's image spread (Z). Its trace on R is a
union of intervals; w is chosen in [-delta, delta] as far from it as possible,
then the certificate f - w is re-verified on the unit ball.

The path variant searches a (t, complex w) admissibility graph for a
shortest path of admissible perturbations f_t - w_t - conj(w_t) h_t.
"""

import math
import logging
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import dijkstra
from scipy.spatial import cKDTree

from src import config
from src.errors import ConfigError, NoAdmissibleW, NoAdmissiblePath, ResolutionError
from src.fields import BumpModel, kappa, symmetry_certificate
from src.model import to_complex
from src.transversality import eta_transversality, grid_points, jacobian_singular_values

logger = logging.getLogger(__name__)

OUTER_RADIUS = 1.1


@dataclass(frozen=True)
class SardParams:
    delta: float = 0.1
    p: int = config.SARD_P

    def __post_init__(self):
        if not 0 < self.delta <= config.SARD_DELTA0:
            raise ConfigError(f"delta must lie in (0, {config.SARD_DELTA0}], got {self.delta}")
        if self.p < 1:
            raise ConfigError(f"p must be >= 1, got {self.p}")

    @property
    def sigma(self) -> float:
        return self.delta * math.log(1.0 / self.delta) ** (-self.p)


@dataclass
class LocalFunction:
    """A complex function on C^n with its real gradient (P, 2n), both vectorized over (P, n)."""
    n: int
    value: Callable[[np.ndarray], np.ndarray]
    gradient: Callable[[np.ndarray], np.ndarray]
    label: str = ''

    @classmethod
    def from_model(cls, model: BumpModel, n: int, scale: complex = 1.0, shift: complex = 0.0) -> 'LocalFunction':
        """scale * f(u) + shift for a holomorphic bump model f."""
        def value(u):
            return scale * model.evaluate(np.asarray(u, dtype=complex).reshape(-1, n))[0] + shift

        def gradient(u):
            df = scale * model.evaluate(np.asarray(u, dtype=complex).reshape(-1, n))[1]
            out = np.empty((df.shape[0], 2 * n), dtype=complex)
            out[:, 0::2] = df
            out[:, 1::2] = 1j * df
            return out
        return cls(n, value, gradient, model.tag)

    @classmethod
    def constant(cls, n: int, c: complex) -> 'LocalFunction':
        return cls(n, lambda u: np.full(np.asarray(u).reshape(-1, n).shape[0], complex(c)),
                   lambda u: np.zeros((np.asarray(u).reshape(-1, n).shape[0], 2 * n), dtype=complex),
                   f"const {c}")

    def minus(self, w: complex, h: Optional['LocalFunction'] = None) -> 'LocalFunction':
        """f - w, or f - w - conj(w) h."""
        if h is None:
            return LocalFunction(self.n, lambda u: self.value(u) - w, self.gradient, f"{self.label} - w")
        wb = np.conj(w)
        return LocalFunction(self.n, lambda u: self.value(u) - w - wb * h.value(u),
                             lambda u: self.gradient(u) - wb * h.gradient(u), f"{self.label} - w - w'h")


@dataclass(frozen=True)
class ForbiddenTrace:
    intervals: Tuple[Tuple[float, float], ...]
    sigma: float
    resolution: float       # finest cell diameter used

    @property
    def total_length(self) -> float:
        return float(sum(b - a for a, b in self.intervals))

    def contains(self, w: float) -> bool:
        return any(a <= w <= b for a, b in self.intervals)

    def distance(self, w: float) -> float:
        if not self.intervals:
            return np.inf
        if self.contains(w):
            return 0.0
        return float(min(min(abs(w - a), abs(w - b)) for a, b in self.intervals))


# ---------------------------------------------------------------- adaptive cells

def hessian_bound(f: LocalFunction, radius: float = OUTER_RADIUS, per_axis: int = None) -> float:
    """Sampled sup of the real Hessian spectral norm over the box, with a safety factor."""
    dim = 2 * f.n
    per_axis = per_axis or (17 if f.n == 1 else 7)
    ticks = np.linspace(-radius, radius, per_axis)
    pts = np.stack(np.meshgrid(*[ticks] * dim, indexing='ij'), axis=-1).reshape(-1, dim)
    return 1.5 * float(local_hessian(f, to_complex(pts)).max()) + 1e-9


def local_hessian(f: LocalFunction, u: np.ndarray, h: float = 1e-5) -> np.ndarray:
    """Spectral norm of the real Hessians of Re f and Im f at each point (max of the two)."""
    rows = []
    for axis in range(2 * f.n):
        e = np.zeros(f.n, dtype=complex)
        e[axis // 2] = 1.0 if axis % 2 == 0 else 1j
        rows.append((f.gradient(u + h * e) - f.gradient(u - h * e)) / (2 * h))
    H = np.stack(rows, axis=1)
    return math.sqrt(2.0) * np.maximum(np.linalg.norm(H.real, ord=2, axis=(1, 2)),
                                       np.linalg.norm(H.imag, ord=2, axis=(1, 2)))


def _refine(f: LocalFunction, radius: float, min_diam: float, classify, H: float,
            start_per_axis: int = None):
    """
    Adaptive subdivision of the box [-radius, radius]^2n restricted to the ball.

    classify(values, smin, smax, slack_rate, diam) -> (take, split): boolean masks,
    where slack_rate bounds how fast the Jacobian can change across the cell.
    Cells reaching min_diam are taken if take or split is set. Returns the
    concatenated (centers, values, smin, smax, diam) of taken cells.
    """
    dim = 2 * f.n
    start_per_axis = start_per_axis or (16 if f.n == 1 else 6)
    side = 2.0 * radius / start_per_axis
    ticks = -radius + side * (np.arange(start_per_axis) + 0.5)
    centers = np.stack(np.meshgrid(*[ticks] * dim, indexing='ij'), axis=-1).reshape(-1, dim)
    children = np.stack(np.meshgrid(*[[-0.25, 0.25]] * dim, indexing='ij'), axis=-1).reshape(-1, dim)
    taken = []
    while len(centers):
        diam = side * math.sqrt(dim)
        inside = np.sqrt(np.sum(centers ** 2, axis=1)) <= radius + diam / 2
        centers = centers[inside]
        if not len(centers):
            break
        u = to_complex(centers)
        values = f.value(u)
        smax, smin = jacobian_singular_values(f.gradient(u))
        rate = np.minimum(H, 2.0 * local_hessian(f, u) + H * diam)
        take, split = classify(values, smin, smax, rate, diam)
        if diam <= min_diam:
            take = take | split
            split = np.zeros_like(split)
        if np.any(take):
            taken.append((centers[take], values[take], smin[take], smax[take], np.full(take.sum(), diam)))
        centers = (centers[split][:, None, :] + side * children[None, :, :]).reshape(-1, dim)
        side /= 2.0
        if len(centers) > 4_000_000:
            raise ResolutionError("adaptive refinement exploded", hint="the function is nearly critical on an open set")
    if not taken:
        empty = np.zeros(0)
        return np.zeros((0, dim)), empty.astype(complex), empty, empty, empty
    return tuple(np.concatenate(parts) for parts in zip(*taken))


def forbidden_trace(f: LocalFunction, sigma: float, window: Tuple[float, float] = None,
                    min_diam: float = None, H: float = None) -> ForbiddenTrace:
    """Intervals of R within sigma (plus cell spread) of f(Y), Y = {smin(df) <= sigma} on B(0, 11/10)."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    min_diam = sigma / 4.0 if min_diam is None else min_diam
    if min_diam > sigma / 4.0 + 1e-15:
        raise ResolutionError(f"cell diameter {min_diam:.3g} coarser than sigma/4", hint="pass min_diam <= sigma/4")
    H = hessian_bound(f) if H is None else H

    def classify(values, smin, smax, rate, diam):
        slack = rate * diam / 2.0
        certain = smin + slack <= sigma
        possible = smin - slack <= sigma
        return certain, possible & ~certain

    _, values, smin, smax, diam = _refine(f, OUTER_RADIUS, min_diam, classify, H)
    rho = sigma + (smax + H * diam / 2.0) * diam / 2.0
    reach = rho ** 2 - values.imag ** 2
    hit = reach > 0
    half = np.sqrt(reach[hit])
    lo = values.real[hit] - half
    hi = values.real[hit] + half
    intervals = _merge_intervals(lo, hi)
    if window is not None:
        a, b = window
        intervals = [(max(x, a), min(y, b)) for x, y in intervals if y >= a and x <= b]
    logger.debug("forbidden trace: %d cells in Y, %d intervals", int(hit.sum()), len(intervals))
    return ForbiddenTrace(tuple(intervals), sigma, min_diam)


def _merge_intervals(lo: np.ndarray, hi: np.ndarray) -> List[Tuple[float, float]]:
    if len(lo) == 0:
        return []
    order = np.argsort(lo, kind='stable')
    merged = []
    cur_lo, cur_hi = lo[order[0]], hi[order[0]]
    for a, b in zip(lo[order[1:]], hi[order[1:]]):
        if a <= cur_hi:
            cur_hi = max(cur_hi, b)
        else:
            merged.append((float(cur_lo), float(cur_hi)))
            cur_lo, cur_hi = a, b
    merged.append((float(cur_lo), float(cur_hi)))
    return merged


def verify_transverse(f: LocalFunction, sigma: float, radius: float = 1.0,
                      min_diam: float = None, H: float = None):
    """
    Grid certificate that |f| < sigma implies smin(df) > sigma on B(0, radius).

    Returns (ok, margin) where margin is the least smin - sigma over final cells
    with |f| < sigma (inf if there are none).
    """
    min_diam = sigma / 4.0 if min_diam is None else min_diam
    H = hessian_bound(f) if H is None else H

    def classify(values, smin, smax, rate, diam):
        spread = (smax + rate * diam / 2.0) * diam / 2.0
        near = np.abs(values) - spread < sigma
        return np.zeros_like(near), near

    _, values, smin, _, _ = _refine(f, radius, min_diam, classify, H)
    sub = np.abs(values) < sigma
    if not np.any(sub):
        return True, np.inf
    margin = float(np.min(smin[sub]) - sigma)
    return margin > 0, margin


# ---------------------------------------------------------------- pickers

def _best_gap(trace: ForbiddenTrace, delta: float):
    """Point of [-delta, delta] farthest from the trace, ties to smaller |w| then positive."""
    if not trace.intervals:
        return 0.0, np.inf
    candidates = []
    cuts = [(-np.inf, -np.inf)] + list(trace.intervals) + [(np.inf, np.inf)]
    for (_, left), (right, _) in zip(cuts[:-1], cuts[1:]):
        a, b = max(left, -delta), min(right, delta)
        if a > b:
            continue
        if left == -np.inf and right == np.inf:
            w = 0.0
        elif left == -np.inf:
            w = -delta
        elif right == np.inf:
            w = delta
        else:
            w = float(np.clip(0.5 * (left + right), -delta, delta))
        clearance = trace.distance(w)
        if clearance > 0:
            candidates.append((clearance, -abs(w), w > 0, w))
    if not candidates:
        return None, 0.0
    best = max(candidates)
    return best[3], best[0]


def pick_real_w(f: LocalFunction, params: SardParams, verify: bool = True) -> float:
    """Real w in [-delta, delta] farthest from the forbidden trace, with a verified certificate."""
    sigma = params.sigma
    H = hessian_bound(f)
    full = forbidden_trace(f, sigma, H=H)
    window = (-params.delta, params.delta)
    trace = ForbiddenTrace(tuple((max(a, window[0]), min(b, window[1])) for a, b in full.intervals
                                 if b >= window[0] and a <= window[1]), sigma, full.resolution)
    w, clearance = _best_gap(full, params.delta)
    if w is None:
        raise NoAdmissibleW(f"trace covers [-{params.delta}, {params.delta}]", trace=trace)
    if verify:
        ok, margin = verify_transverse(f.minus(w), sigma, H=H)
        if not ok:
            raise NoAdmissibleW(f"w={w:.6g} failed verification (margin {margin:.3g})", trace=trace)
    logger.debug("picked w=%.6g clearance=%.3g", w, clearance)
    return float(w)


@dataclass(frozen=True)
class PathResult:
    t: np.ndarray
    w: np.ndarray               # complex, one per slice
    margins: np.ndarray         # per-slice sigma-transversality margin
    step_bound: float


def slice_scores(f: LocalFunction, h: Optional[LocalFunction], W: np.ndarray, sigma: float,
                  u: np.ndarray) -> np.ndarray:
    """Score per candidate w: min over u of max(|g|, smin(dg)) / sigma - 1 (admissible iff > 0)."""
    fv, fg = f.value(u), f.gradient(u)
    if h is not None:
        hv, hg = h.value(u), h.gradient(u)
    scores = np.empty(len(W))
    for i, w in enumerate(W):
        if h is None:
            gv, gg = fv - w, fg
        else:
            gv, gg = fv - w - np.conj(w) * hv, fg - np.conj(w) * hg
        near = np.abs(gv) < sigma
        if not np.any(near):
            scores[i] = np.min(np.abs(gv)) / sigma - 1.0
            continue
        _, smin = jacobian_singular_values(gg[near])
        scores[i] = min(np.min(smin) / sigma - 1.0, np.min(np.abs(gv[~near])) / sigma - 1.0
                        if np.any(~near) else np.inf)
    return scores


def ball_samples(n: int, spacing: float) -> np.ndarray:
    """Grid points of the closed unit ball of C^n at the given real spacing, as (N, n) complex."""
    dim = 2 * n
    ticks = np.arange(-1.0, 1.0 + 1e-12, spacing)
    pts = np.stack(np.meshgrid(*[ticks] * dim, indexing='ij'), axis=-1).reshape(-1, dim)
    return to_complex(pts[np.sum(pts ** 2, axis=1) <= 1.0 + 1e-12])


def pick_path_w(f_t: Sequence[LocalFunction], h_t: Optional[Sequence[LocalFunction]], params: SardParams,
                t: Sequence[float] = None, w_spacing: float = None, u_spacing: float = None) -> PathResult:
    """Shortest admissible path w_t in the delta-disk over the t-slices."""
    T = len(f_t)
    t = np.linspace(0.0, 1.0, T) if t is None else np.asarray(t, dtype=float)
    sigma = params.sigma
    n = f_t[0].n
    w_spacing = w_spacing or sigma / 2.0
    u_spacing = u_spacing or (sigma / 2.0 if n == 1 else 0.1)
    ticks = np.arange(-params.delta, params.delta + 1e-15, w_spacing)
    W = (ticks[:, None] + 1j * ticks[None, :]).ravel()
    W = W[np.abs(W) <= params.delta + 1e-15]
    u = ball_samples(n, u_spacing)

    modulus = 0.0
    for a, b in zip(f_t[:-1], f_t[1:]):
        modulus = max(modulus, float(np.max(np.abs(a.value(u) - b.value(u)))))
    step_bound = 2.0 * w_spacing + modulus
    logger.info("path search: %d slices, %d candidates, step bound %.3g", T, len(W), step_bound)

    scores = np.stack([slice_scores(f_t[i], None if h_t is None else h_t[i], W, sigma, u)
                       for i in range(T)])
    admissible = scores > 0

    # layered reachability for the bottleneck report
    if not admissible[0].any():
        raise NoAdmissiblePath(f"no admissible w at t={t[0]:.3f}", bottleneck_t=float(t[0]))
    reach = admissible[0].copy()
    tree = cKDTree(np.column_stack([W.real, W.imag]))
    neighbours = tree.query_ball_point(np.column_stack([W.real, W.imag]), step_bound)
    for i in range(1, T):
        nxt = np.zeros(len(W), dtype=bool)
        for j in np.nonzero(reach)[0]:
            nxt[neighbours[j]] = True
        reach = nxt & admissible[i]
        if not reach.any():
            raise NoAdmissiblePath(f"no admissible continuation at t={t[i]:.3f}", bottleneck_t=float(t[i]))

    # graph: source -> layer 0 -> ... -> layer T-1 -> sink
    N = len(W)
    src, sink = T * N, T * N + 1
    rows, cols, data = [], [], []
    penalty = 0.01 * params.delta
    for j in np.nonzero(admissible[0])[0]:
        rows.append(src); cols.append(j); data.append(penalty / (scores[0, j] + 0.05))
    for i in range(T - 1):
        for j in np.nonzero(admissible[i])[0]:
            for l in neighbours[j]:
                if admissible[i + 1, l]:
                    rows.append(i * N + j)
                    cols.append((i + 1) * N + l)
                    data.append(abs(W[j] - W[l]) + penalty / (scores[i + 1, l] + 0.05) + 1e-12)
    for j in np.nonzero(admissible[T - 1])[0]:
        rows.append((T - 1) * N + j); cols.append(sink); data.append(1e-12)
    graph = coo_matrix((data, (rows, cols)), shape=(T * N + 2, T * N + 2)).tocsr()
    dist, pred = dijkstra(graph, directed=True, indices=src, return_predecessors=True)
    if not np.isfinite(dist[sink]):
        raise NoAdmissiblePath("admissibility graph disconnected", bottleneck_t=float(t[-1]))
    path = []
    node = pred[sink]
    while node != src:
        path.append(node)
        node = pred[node]
    path = path[::-1]
    idx = np.array([p % N for p in path])
    return PathResult(t, W[idx], scores[np.arange(T), idx] * sigma, step_bound)



def isotopy_slices(sections, sigma_field, w_path, g, epsilon: float) -> pd.DataFrame:
    """
    Slice-wise check of the isotopy s_t + w_t sigma + conj(w_t) kappa(sigma):
    eta over a grid and the symmetry certificate, one row per slice.
    """
    if len(sections) != len(w_path):
        raise ValueError("one w per section slice")
    ksig = kappa(sigma_field)
    pts = grid_points(sections[0], g)
    rows = []
    for i, (s, w) in enumerate(zip(sections, w_path)):
        st = (s + sigma_field.scale(complex(w)) + ksig.scale(complex(np.conj(w)))).merged()
        report = eta_transversality(st, g, epsilon, points=pts)
        cert = symmetry_certificate(st, pts)
        rows.append({'slice': i, 'w_re': float(np.real(w)), 'w_im': float(np.imag(w)),
                     'eta': report.eta, 'symmetry': cert.value, 'symmetric': cert.symmetric})
    return pd.DataFrame(rows)


if __name__ == '__main__':
    from src.fields import QUADRIC
    params = SardParams(0.1, 2)
    print(f"sigma(delta=0.1, p=2) = {params.sigma:.5f}")
    f = LocalFunction.from_model(QUADRIC, 1, scale=1.0, shift=0.45)   # z^2 - 0.05
    print(f"picked w = {pick_real_w(f, params):.5f}")
