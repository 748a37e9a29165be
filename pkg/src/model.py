"""
Ambient models: the flat ball in C^n and the torus C^n / (Z^n + iZ^n).

Both carry the standard symplectic form, the flat metric g, the scaled
metric g_k = k g and the involution c(z) = conj(z). Points are complex
arrays of shape (..., n); real coordinates interleave as
[x1, y1, x2, y2, ...].

Also houses grid generation (GridSpec), the lattice of sites on the real
locus, and the colored ball net used by the transversalization recursion.
"""

import math
import logging
import itertools
from dataclasses import dataclass
from enum import Enum
from typing import List, Tuple

import numpy as np

from src.errors import DomainError, ResolutionError

logger = logging.getLogger(__name__)

DOMAIN_TOL = 1e-12


class ModelKind(str, Enum):
    FLAT_BALL = 'flat'
    TORUS = 'torus'


def to_real(z: np.ndarray) -> np.ndarray:
    """(..., n) complex -> (..., 2n) real, interleaved."""
    z = np.asarray(z, dtype=complex)
    out = np.empty(z.shape[:-1] + (2 * z.shape[-1],))
    out[..., 0::2] = z.real
    out[..., 1::2] = z.imag
    return out


def to_complex(r: np.ndarray) -> np.ndarray:
    """(..., 2n) real interleaved -> (..., n) complex."""
    r = np.asarray(r, dtype=float)
    return r[..., 0::2] + 1j * r[..., 1::2]


@dataclass(frozen=True)
class ModelManifold:
    kind: ModelKind
    n: int
    ball_radius: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, 'kind', ModelKind(self.kind))
        if not 1 <= self.n <= 3:
            raise DomainError(f"complex dimension must be 1..3, got {self.n}")
        if self.ball_radius <= 0:
            raise DomainError("ball_radius must be positive")

    @classmethod
    def torus(cls, n: int) -> 'ModelManifold':
        return cls(ModelKind.TORUS, n)

    @classmethod
    def flat(cls, n: int, ball_radius: float = 1.0) -> 'ModelManifold':
        return cls(ModelKind.FLAT_BALL, n, ball_radius)

    @property
    def is_torus(self) -> bool:
        return self.kind is ModelKind.TORUS

    def involution(self, z):
        """c(z) = conj(z). On the torus the result is wrapped back."""
        w = np.conj(np.asarray(z, dtype=complex))
        return self.wrap(w) if self.is_torus else w

    def wrap(self, z):
        """Fundamental-domain representative: real and imaginary parts in [0, 1)."""
        z = np.asarray(z, dtype=complex)
        if not self.is_torus:
            return z
        re = np.mod(z.real, 1.0)
        im = np.mod(z.imag, 1.0)
        re[re >= 1.0] = 0.0
        im[im >= 1.0] = 0.0
        return re + 1j * im

    def check_domain(self, z):
        if self.is_torus:
            return
        z = np.asarray(z, dtype=complex)
        norms = np.sqrt(np.sum(np.abs(z) ** 2, axis=-1))
        if np.any(norms > self.ball_radius + DOMAIN_TOL):
            raise DomainError(f"point outside the ball of radius {self.ball_radius}")

    def real_volume(self) -> float:
        """g-volume of the real locus."""
        if self.is_torus:
            return 1.0
        r = self.ball_radius
        return math.pi ** (self.n / 2) / math.gamma(self.n / 2 + 1) * r ** self.n

    def extent(self) -> float:
        """Side length of the bounding box of the domain along one real axis (g units)."""
        return 1.0 if self.is_torus else 2.0 * self.ball_radius

    def displacement(self, x, y):
        """y - x, reduced to the shortest period translate on the torus."""
        d = np.asarray(y, dtype=complex) - np.asarray(x, dtype=complex)
        if self.is_torus:
            d = (d.real - np.round(d.real)) + 1j * (d.imag - np.round(d.imag))
        return d


@dataclass(frozen=True)
class ScaledFrame:
    k: int

    def __post_init__(self):
        if self.k < 1:
            raise DomainError(f"k must be a positive integer, got {self.k}")

    @property
    def sqrt_k(self) -> float:
        return math.sqrt(self.k)

    def to_gk(self, length):
        return self.sqrt_k * length

    def to_g(self, length):
        return length / self.sqrt_k


def gk_distance(m: ModelManifold, f: ScaledFrame, x, y):
    """sqrt(k) times the g-distance; min over period translates on the torus."""
    m.check_domain(x)
    m.check_domain(y)
    d = m.displacement(x, y)
    return f.sqrt_k * np.sqrt(np.sum(np.abs(d) ** 2, axis=-1))


@dataclass(frozen=True)
class GridSpec:
    """Regular grid over a box. axes holds one 1-D coordinate array per real axis."""
    lower: Tuple[float, ...]
    upper: Tuple[float, ...]
    shape: Tuple[int, ...]
    periodic: bool = False
    k: int = 1

    @property
    def spacing(self) -> np.ndarray:
        lo, hi, sh = np.array(self.lower), np.array(self.upper), np.array(self.shape)
        if self.periodic:
            return (hi - lo) / sh
        return (hi - lo) / np.maximum(sh - 1, 1)

    @property
    def cell_diameter_gk(self) -> float:
        return math.sqrt(self.k) * float(np.sqrt(np.sum(self.spacing ** 2)))

    @property
    def axes(self) -> List[np.ndarray]:
        h = self.spacing
        return [lo + h_i * np.arange(s) for lo, h_i, s in zip(self.lower, h, self.shape)]

    def points(self) -> np.ndarray:
        """All grid points as an (N, dim) real array, C order."""
        mesh = np.meshgrid(*self.axes, indexing='ij')
        return np.stack([g.ravel() for g in mesh], axis=-1)

    def require(self, max_cell_gk: float):
        if self.cell_diameter_gk > max_cell_gk + 1e-12:
            factor = self.cell_diameter_gk / max_cell_gk
            raise ResolutionError(
                f"grid cell diameter {self.cell_diameter_gk:.3f} exceeds {max_cell_gk} in g_k",
                hint=f"increase resolution by a factor of at least {factor:.2f}")
        return self

    def refined(self, factor: int = 2) -> 'GridSpec':
        if self.periodic:
            shape = tuple(s * factor for s in self.shape)
        else:
            shape = tuple((s - 1) * factor + 1 for s in self.shape)
        return GridSpec(self.lower, self.upper, shape, self.periodic, self.k)


def samples_for(f: ScaledFrame, length_g: float, per_gk_unit: float, minimum: int = 8) -> int:
    return max(minimum, int(math.ceil(f.sqrt_k * length_g * per_gk_unit)))


def real_grid(m: ModelManifold, f: ScaledFrame, per_gk_unit: float = 8.0) -> GridSpec:
    """Grid on the real locus R^n (x coordinates only)."""
    L = m.extent()
    s = samples_for(f, L, per_gk_unit)
    if m.is_torus:
        return GridSpec((0.0,) * m.n, (1.0,) * m.n, (s,) * m.n, periodic=True, k=f.k)
    r = m.ball_radius
    return GridSpec((-r,) * m.n, (r,) * m.n, (s + 1,) * m.n, periodic=False, k=f.k)


def ambient_grid(m: ModelManifold, f: ScaledFrame, per_gk_unit: float = 6.0,
                 center=None, radius_g: float = None) -> GridSpec:
    """Grid in real 2n coordinates over the fundamental domain or a sub-box."""
    dim = 2 * m.n
    if center is not None:
        c = to_real(np.atleast_1d(np.asarray(center, dtype=complex)))
        lo = tuple(c - radius_g)
        hi = tuple(c + radius_g)
        s = samples_for(f, 2 * radius_g, per_gk_unit, minimum=5)
        return GridSpec(lo, hi, (s + 1,) * dim, periodic=False, k=f.k)
    L = m.extent()
    s = samples_for(f, L, per_gk_unit)
    if m.is_torus:
        return GridSpec((0.0,) * dim, (1.0,) * dim, (s,) * dim, periodic=True, k=f.k)
    r = m.ball_radius
    return GridSpec((-r,) * dim, (r,) * dim, (s + 1,) * dim, periodic=False, k=f.k)


def grid_points_complex(m: ModelManifold, g: GridSpec, real_only: bool = False) -> np.ndarray:
    """Grid points as (N, n) complex; ball mask applied on the flat model."""
    pts = g.points()
    z = pts.astype(complex) if real_only else to_complex(pts)
    if not m.is_torus:
        z = z[np.sqrt(np.sum(np.abs(z) ** 2, axis=-1)) <= m.ball_radius + DOMAIN_TOL]
    return z


@dataclass(frozen=True)
class RealLattice:
    points: np.ndarray          # (N, n) complex, all on the real locus
    per_axis: int
    degenerate: bool = False    # mesh larger than the domain: single center only


def real_lattice(m: ModelManifold, f: ScaledFrame, D: float) -> RealLattice:
    """Sites on the real locus pairwise >= D apart in g_k."""
    if D <= 0:
        raise DomainError("lattice mesh D must be positive")
    if D > f.sqrt_k * m.extent():
        logger.warning("mesh D=%.3g exceeds the domain at k=%d; using a single site", D, f.k)
        return RealLattice(np.zeros((1, m.n), dtype=complex) + (0.5 if m.is_torus else 0.0), 1, True)
    if m.is_torus:
        per_axis = max(1, int(math.floor(f.sqrt_k / D)))
        ticks = (np.arange(per_axis) + 0.5) / per_axis
    else:
        step = D / f.sqrt_k
        half = int(math.floor(m.ball_radius / step))
        ticks = step * np.arange(-half, half + 1)
        per_axis = len(ticks)
    pts = np.array(list(itertools.product(ticks, repeat=m.n)), dtype=float)
    if not m.is_torus:
        pts = pts[np.sqrt(np.sum(pts ** 2, axis=-1)) <= m.ball_radius + DOMAIN_TOL]
    return RealLattice(pts.astype(complex), per_axis, per_axis == 1 and m.is_torus)


@dataclass(frozen=True)
class BallColor:
    key: tuple
    centers: np.ndarray     # (N, n) complex
    partner: np.ndarray     # index of c(center) within this color (itself when fixed)

    @property
    def fixed(self) -> np.ndarray:
        return self.partner == np.arange(len(self.partner))

    def pair_representatives(self) -> np.ndarray:
        """One index per c-orbit."""
        idx = np.arange(len(self.partner))
        return idx[idx <= self.partner]


@dataclass(frozen=True)
class BallNet:
    colors: List[BallColor]
    real_spacing: float      # g_k
    imag_spacing: float      # g_k
    D: float

    @property
    def n_colors(self) -> int:
        return len(self.colors)

    def all_centers(self) -> np.ndarray:
        return np.concatenate([c.centers for c in self.colors], axis=0)


def _imag_layout(m: ModelManifold, f: ScaledFrame):
    """Imaginary ticks (g units), folded index and sign per tick."""
    if m.is_torus:
        count = int(math.floor(f.sqrt_k))
        if count % 2 == 0:
            count -= 1
        if count < 1:
            raise DomainError(f"k={f.k} too small for a ball net on the torus")
        h_im = f.sqrt_k / count
        j = np.arange(count)
        ticks = j / count
        folded = np.minimum(j, count - j)
        sign = np.where(j == 0, 0, np.where(j <= count // 2, 1, -1))
        return ticks, folded, sign, h_im
    h_im = 1.0
    reach = int(math.ceil(f.sqrt_k * m.ball_radius + 1))
    j = np.arange(-reach, reach + 1)
    return j / f.sqrt_k, np.abs(j), np.sign(j), h_im


def colored_ball_net(m: ModelManifold, f: ScaledFrame, D: float) -> BallNet:
    """
    Centers of unit g_k-balls covering the domain together with their c-images,
    grouped into colors of pairwise D-separated c-orbits.

    Imaginary ticks are spaced at least 1 apart in g_k, so the only centers
    whose unit ball meets the real locus have zero imaginary part. Colors are
    keyed by real residues, folded imaginary residues and the sign pattern of
    the imaginary index (zero counts as positive), which makes every color
    c-invariant.
    """
    if D <= 0:
        raise DomainError("net separation D must be positive")
    n = m.n
    im_ticks, folded, sign, h_im = _imag_layout(m, f)
    budget = (4.0 - n * h_im ** 2) / n
    if budget <= 0.05:
        raise DomainError(f"k={f.k}: imaginary spacing {h_im:.3f} leaves no room for unit-ball coverage")
    s_re = 0.97 * math.sqrt(budget)

    q_re = int(math.ceil(D / s_re)) + 1
    if m.is_torus:
        blocks = max(1, int(math.ceil(f.sqrt_k / (q_re * s_re))))
        count_re = q_re * blocks
        h_re = f.sqrt_k / count_re
        if q_re * h_re < D:
            logger.warning("k=%d too small for periodic coloring at D=%.3g; one color per real tick", f.k, D)
            q_re = count_re
        re_ticks = (np.arange(count_re) + 0.5) / count_re
        re_index = np.arange(count_re)
    else:
        h_re = s_re
        reach = int(math.ceil((f.sqrt_k * m.ball_radius + 1) / h_re))
        re_index = np.arange(-reach, reach + 1)
        re_ticks = re_index * h_re / f.sqrt_k
    q_im = max(1, int(math.ceil(D / h_im)))

    groups = {}
    for ri in itertools.product(range(len(re_ticks)), repeat=n):
        re = re_ticks[list(ri)]
        if not m.is_torus and np.sqrt(np.sum(re ** 2)) > m.ball_radius + 1.0 / f.sqrt_k:
            continue
        re_key = tuple(int(re_index[i]) % q_re for i in ri)
        for ji in itertools.product(range(len(im_ticks)), repeat=n):
            im = im_ticks[list(ji)]
            if not m.is_torus and np.sqrt(np.sum(re ** 2 + im ** 2)) > m.ball_radius + 1.0 / f.sqrt_k:
                continue
            signs = [int(sign[j]) for j in ji]
            first = next((s for s in signs if s != 0), 1)
            pattern = tuple(s * first if s != 0 else 1 for s in signs)
            key = re_key + tuple(int(folded[j]) % q_im for j in ji) + pattern
            groups.setdefault(key, []).append(re + 1j * im)

    colors = []
    for key in sorted(groups):
        centers = np.array(groups[key], dtype=complex)
        partner = _conjugate_partners(m, centers)
        colors.append(BallColor(key, centers, partner))
    logger.debug("ball net k=%d D=%.3g: %d colors, %d centers",
                 f.k, D, len(colors), sum(len(c.centers) for c in colors))
    return BallNet(colors, h_re, h_im, D)


def _conjugate_partners(m: ModelManifold, centers: np.ndarray) -> np.ndarray:
    from scipy.spatial import cKDTree
    conj = m.involution(centers)
    tree = cKDTree(to_real(centers), boxsize=1.0 if m.is_torus else None)
    dist, idx = tree.query(to_real(m.wrap(conj)))
    if np.any(dist > 1e-9):
        raise DomainError("ball net color is not closed under the involution")
    return idx
