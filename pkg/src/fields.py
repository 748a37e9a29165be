"""
Sections as finite sums of Gaussian-weighted holomorphic bumps.

A bump centered at x with weight w, holomorphic model f, Gaussian rate a and
cutoff radius r (g_k units) contributes

    w * f(u) * exp(-a |u|^2) * beta(|u|),      u = sqrt(k) (z - x),

where beta is a C^2 quintic plateau: 1 on [0, r/2], 0 beyond r. Torus fields
are summed over period translates; since every bump has compact support the
periodization is exact.

Flat-model fields may carry the holomorphic-gauge phase
exp(2 i a sqrt(k) Im(u . conj(x))). With it, each bump equals a holomorphic
function times exp(-a k |z|^2) inside its plateau, so ratios of sections are
holomorphic there. Torus fields never carry the phase (it is not periodic).

Value and the 2n real partials [d/dx1, d/dy1, ...] (g units) are computed in
closed form. Pairs of (point, bump translate) within the cutoff are found with
a KD-tree and accumulated with bincount.
"""

import math
import logging
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Tuple

import numpy as np
from scipy.spatial import cKDTree

from src import config
from src.errors import DomainError
from src.model import ModelManifold, ScaledFrame, to_real, to_complex

logger = logging.getLogger(__name__)

CHUNK = 20000
ENVELOPE_MAX_CUTOFF = 4.5     # g_k; k <= 4.5^6


# ---------------------------------------------------------------- models

@dataclass(frozen=True)
class BumpModel:
    """Holomorphic profile f(u). kind is 'unit', 'quadric' or 'polynomial'."""
    kind: str
    exponents: Tuple[Tuple[int, ...], ...] = ()
    coefficients: Tuple[complex, ...] = ()

    def conj(self) -> 'BumpModel':
        """Model of conj(f(conj u))."""
        if self.kind != 'polynomial':
            return self
        return replace(self, coefficients=tuple(complex(c).conjugate() for c in self.coefficients))

    @property
    def is_real(self) -> bool:
        return all(complex(c).imag == 0 for c in self.coefficients)

    def evaluate(self, u: np.ndarray):
        """f(u) of shape (P,) and holomorphic derivatives df/du_j of shape (P, n)."""
        P, n = u.shape
        if self.kind == 'unit':
            return np.ones(P, dtype=complex), np.zeros((P, n), dtype=complex)
        if self.kind == 'quadric':
            return np.sum(u ** 2, axis=1) - 0.5, 2.0 * u
        f = np.zeros(P, dtype=complex)
        df = np.zeros((P, n), dtype=complex)
        for alpha, c in zip(self.exponents, self.coefficients):
            alpha = np.asarray(alpha)
            f += c * np.prod(u ** alpha, axis=1)
            for j in range(n):
                if alpha[j] == 0:
                    continue
                lowered = alpha.copy()
                lowered[j] -= 1
                df[:, j] += c * alpha[j] * np.prod(u ** lowered, axis=1)
        return f, df

    @property
    def tag(self) -> str:
        if self.kind != 'polynomial':
            return self.kind
        terms = '|'.join(
            f"{'.'.join(str(a) for a in alpha)}:{repr(complex(c).real)},{repr(complex(c).imag)}"
            for alpha, c in zip(self.exponents, self.coefficients))
        return f"poly[{terms}]"

    @classmethod
    def from_tag(cls, tag: str) -> 'BumpModel':
        if tag in ('unit', 'quadric'):
            return cls(tag)
        if not (tag.startswith('poly[') and tag.endswith(']')):
            raise ValueError(f"unknown bump model tag {tag!r}")
        exps, coefs = [], []
        body = tag[5:-1]
        for term in filter(None, body.split('|')):
            alpha, c = term.split(':')
            re, im = c.split(',')
            exps.append(tuple(int(a) for a in alpha.split('.')))
            coefs.append(complex(float(re), float(im)))
        return cls('polynomial', tuple(exps), tuple(coefs))


UNIT = BumpModel('unit')
QUADRIC = BumpModel('quadric')


def polynomial_model(exponents, coefficients) -> BumpModel:
    return BumpModel('polynomial',
                     tuple(tuple(int(a) for a in alpha) for alpha in exponents),
                     tuple(complex(c) for c in coefficients))


# ---------------------------------------------------------------- plateau

def plateau(d: np.ndarray, r: np.ndarray):
    """C^2 quintic cutoff beta(d) and beta'(d) (derivative in d)."""
    half = 0.5 * r
    t = np.clip((d - half) / half, 0.0, 1.0)
    beta = 1.0 - t ** 3 * (10.0 - 15.0 * t + 6.0 * t ** 2)
    dbeta = -30.0 * t ** 2 * (1.0 - t) ** 2 / half
    return beta, dbeta


def decay_envelope(d, k: int = None):
    """Quadratic envelope p(d) = 2(1 + d^2) with |sigma| <= p(d) exp(-d^2).

    Past d ~ 3.17 the bound rests on the plateau cutoff, which only keeps it
    while the cutoff radius stays below ENVELOPE_MAX_CUTOFF.
    """
    if k is not None and sigma_cutoff(k) > ENVELOPE_MAX_CUTOFF:
        raise DomainError(f"decay envelope validated for cutoff <= {ENVELOPE_MAX_CUTOFF} "
                          f"(k <= {int(ENVELOPE_MAX_CUTOFF ** 6)}), got k={k}")
    return 2.0 * (1.0 + np.asarray(d, dtype=float) ** 2)


def sigma_cutoff(k: int) -> float:
    """k^(1/6), floored at 2 so the plateau covers the unit g_k ball."""
    return max(k ** (1.0 / 6.0), 2.0)


# ---------------------------------------------------------------- fields

@dataclass(frozen=True)
class Bump:
    center: Tuple[complex, ...]
    weight: complex
    model: BumpModel = UNIT
    rate: float = 1.0
    cutoff: float = 2.0

    def conj(self) -> 'Bump':
        return Bump(tuple(complex(c).conjugate() for c in self.center),
                    complex(self.weight).conjugate(), self.model.conj(), self.rate, self.cutoff)


@dataclass(frozen=True)
class SectionField:
    """Immutable bump sum. Evaluation is pure; see module docstring."""
    k: int
    n: int
    bumps: Tuple[Bump, ...] = ()
    periodic: bool = False
    holomorphic_gauge: bool = False

    def __post_init__(self):
        if self.periodic and self.holomorphic_gauge:
            raise ValueError("periodic fields cannot carry the holomorphic-gauge phase")
        for b in self.bumps:
            if len(b.center) != self.n:
                raise ValueError(f"bump center has dimension {len(b.center)}, field has n={self.n}")

    @property
    def sqrt_k(self) -> float:
        return math.sqrt(self.k)

    # -- structural algebra

    def compatible(self, other: 'SectionField'):
        if (self.k, self.n, self.periodic, self.holomorphic_gauge) != \
                (other.k, other.n, other.periodic, other.holomorphic_gauge):
            raise ValueError("fields live on different models or scales")

    def __add__(self, other: 'SectionField') -> 'SectionField':
        self.compatible(other)
        return replace(self, bumps=self.bumps + other.bumps)

    def scale(self, a: complex) -> 'SectionField':
        return replace(self, bumps=tuple(replace(b, weight=a * b.weight) for b in self.bumps))

    def __mul__(self, a: complex) -> 'SectionField':
        return self.scale(a)

    __rmul__ = __mul__

    def __sub__(self, other: 'SectionField') -> 'SectionField':
        return self + other.scale(-1.0)

    def with_bumps(self, bumps) -> 'SectionField':
        return replace(self, bumps=tuple(bumps))

    def merged(self) -> 'SectionField':
        """Combine bumps with identical center/model/rate/cutoff; drop zero weights."""
        acc = {}
        order = []
        for b in self.bumps:
            key = (_center_key(b.center, self.periodic), b.model, b.rate, b.cutoff)
            if key not in acc:
                acc[key] = b
                order.append(key)
            else:
                acc[key] = replace(acc[key], weight=acc[key].weight + b.weight)
        return replace(self, bumps=tuple(acc[key] for key in order if acc[key].weight != 0))

    # -- evaluation

    def evaluate(self, z) -> np.ndarray:
        return self._run(z, grad=False, dbar=False)[0]

    def gradient(self, z) -> np.ndarray:
        """Real partials [d/dx1, d/dy1, ...] in g units, shape (P, 2n)."""
        return self._run(z, grad=True, dbar=False)[1]

    def value_and_gradient(self, z):
        v, g, _ = self._run(z, grad=True, dbar=False)
        return v, g

    def gauge_dbar(self, z) -> np.ndarray:
        """Anti-holomorphic derivative in the bump gauge, (P, n), g units.

        Inside every plateau this vanishes identically; what remains is the
        cutoff residue.
        """
        return self._run(z, grad=False, dbar=True)[2]

    def holomorphic_part(self, z):
        """d_j = (d/dx_j - i d/dy_j) / 2, shape (P, n)."""
        g = self.gradient(z)
        return 0.5 * (g[:, 0::2] - 1j * g[:, 1::2])

    def antiholomorphic_part(self, z):
        g = self.gradient(z)
        return 0.5 * (g[:, 0::2] + 1j * g[:, 1::2])

    @cached_property
    def _translates(self):
        """(centers (T, n), bump index (T,), cutoff in g (T,)) over relevant period translates."""
        if not self.bumps:
            return np.zeros((0, self.n), dtype=complex), np.zeros(0, dtype=int), np.zeros(0)
        centers = np.array([b.center for b in self.bumps], dtype=complex).reshape(-1, self.n)
        cut_g = np.array([b.cutoff for b in self.bumps]) / self.sqrt_k
        index = np.arange(len(self.bumps))
        if not self.periodic:
            return centers, index, cut_g
        base = to_real(centers)
        base = base - np.floor(base)
        reach = int(math.ceil(cut_g.max()))
        offsets = np.stack(np.meshgrid(*[np.arange(-reach, reach + 1)] * (2 * self.n),
                                       indexing='ij'), axis=-1).reshape(-1, 2 * self.n)
        shifted = base[:, None, :] + offsets[None, :, :]
        # distance from each translate to the unit box
        gap = np.maximum(0.0, np.maximum(-shifted, shifted - 1.0))
        keep = np.sqrt(np.sum(gap ** 2, axis=-1)) <= cut_g[:, None]
        b_idx, o_idx = np.nonzero(keep)
        return to_complex(shifted[b_idx, o_idx]), index[b_idx], cut_g[b_idx]

    def _prepare(self, z):
        z = np.asarray(z, dtype=complex)
        if z.ndim < 2:
            z = z.reshape(-1, self.n)
        if self.periodic:
            z = (z.real - np.floor(z.real)) + 1j * (z.imag - np.floor(z.imag))
        return z

    def _run(self, z, grad: bool, dbar: bool):
        z = self._prepare(z)
        P, n = z.shape
        value = np.zeros(P, dtype=complex)
        gradient = np.zeros((P, 2 * n), dtype=complex) if grad else None
        dbar_out = np.zeros((P, n), dtype=complex) if dbar else None
        centers, bump_idx, cut_g = self._translates
        if P == 0 or len(centers) == 0:
            return value, gradient, dbar_out
        tree_c = cKDTree(to_real(centers))
        for start in range(0, P, CHUNK):
            stop = min(P, start + CHUNK)
            self._accumulate(z[start:stop], tree_c, centers, bump_idx, cut_g, value[start:stop],
                             None if gradient is None else gradient[start:stop],
                             None if dbar_out is None else dbar_out[start:stop])
        return value, gradient, dbar_out

    def _accumulate(self, zc, tree_c, centers, bump_idx, cut_g, value, gradient, dbar_out):
        tree_p = cKDTree(to_real(zc))
        pairs = tree_p.sparse_distance_matrix(tree_c, cut_g.max(), output_type='ndarray')
        if len(pairs) == 0:
            return
        pi, ti, dist = pairs['i'], pairs['j'], pairs['v']
        inside = dist < cut_g[ti]
        pi, ti = pi[inside], ti[inside]
        if len(pi) == 0:
            return
        P = len(zc)
        n = self.n
        sk = self.sqrt_k
        bidx = bump_idx[ti]
        x = centers[ti]
        u = sk * (zc[pi] - x)
        d = np.sqrt(np.sum(np.abs(u) ** 2, axis=1))
        weights = np.array([b.weight for b in self.bumps], dtype=complex)[bidx]
        rates = np.array([b.rate for b in self.bumps])[bidx]
        cutoffs = np.array([b.cutoff for b in self.bumps])[bidx]

        f = np.empty(len(pi), dtype=complex)
        df = np.empty((len(pi), n), dtype=complex)
        models = [b.model for b in self.bumps]
        for model in set(models):
            sel = np.isin(bidx, [i for i, m in enumerate(models) if m == model])
            f[sel], df[sel] = model.evaluate(u[sel])

        gauss = np.exp(-rates * d ** 2)
        beta, dbeta = plateau(d, cutoffs)
        phase = np.ones(len(pi), dtype=complex)
        if self.holomorphic_gauge:
            phase = np.exp(2j * rates * sk * np.sum(u * np.conj(x), axis=1).imag)
        amp = weights * phase
        term = amp * f * gauss * beta
        value += _scatter(pi, term, P)

        if gradient is None and dbar_out is None:
            return
        safe_d = np.where(d > 0, d, 1.0)
        radial = np.where(d > 0, dbeta / safe_d, 0.0)
        for j in range(n):
            common = amp * gauss * sk
            dx = common * (df[:, j] * beta + f * (-2.0 * rates * u[:, j].real * beta + radial * u[:, j].real))
            dy = common * (1j * df[:, j] * beta + f * (-2.0 * rates * u[:, j].imag * beta + radial * u[:, j].imag))
            if self.holomorphic_gauge:
                dx = dx + 1j * (-2.0 * rates * self.k * x[:, j].imag) * term
                dy = dy + 1j * (2.0 * rates * self.k * x[:, j].real) * term
            if gradient is not None:
                gradient[:, 2 * j] += _scatter(pi, dx, P)
                gradient[:, 2 * j + 1] += _scatter(pi, dy, P)
            if dbar_out is not None:
                anchor = 0.0 if self.holomorphic_gauge else x[:, j]
                gauge = rates * self.k * (zc[pi, j] - anchor) * term
                dbar_out[:, j] += _scatter(pi, 0.5 * (dx + 1j * dy) + gauge, P)


def _scatter(index, values, size):
    return (np.bincount(index, weights=values.real, minlength=size)
            + 1j * np.bincount(index, weights=values.imag, minlength=size))


def _center_key(center, periodic: bool):
    c = np.asarray(center, dtype=complex)
    if periodic:
        c = (c.real - np.floor(c.real)) + 1j * (c.imag - np.floor(c.imag))
        c = np.where(np.isclose(c.real, 1.0), c - 1.0, c)
        c = np.where(np.isclose(c.imag, 1.0), c - 1j, c)
    return tuple(np.round(c.real, 12)) + tuple(np.round(c.imag, 12))


# ---------------------------------------------------------------- builders

def empty_field(m: ModelManifold, f: ScaledFrame, holomorphic_gauge: bool = False) -> SectionField:
    return SectionField(f.k, m.n, (), periodic=m.is_torus, holomorphic_gauge=holomorphic_gauge)


def bump_field(m: ModelManifold, f: ScaledFrame, center, weight: complex = 1.0,
               model: BumpModel = UNIT, rate: float = 1.0, cutoff: float = None,
               holomorphic_gauge: bool = False) -> SectionField:
    center = tuple(complex(c) for c in np.atleast_1d(np.asarray(center, dtype=complex)))
    cutoff = sigma_cutoff(f.k) if cutoff is None else cutoff
    b = Bump(center, complex(weight), model, rate, cutoff)
    return SectionField(f.k, m.n, (b,), periodic=m.is_torus, holomorphic_gauge=holomorphic_gauge)


def concentrated_sigma(m: ModelManifold, f: ScaledFrame, x, holomorphic_gauge: bool = False) -> SectionField:
    """Unit bump at x, rate ln 2: |sigma| = 1 at x and >= 1/2 on the unit g_k ball."""
    m.check_domain(np.atleast_1d(np.asarray(x, dtype=complex)))
    return bump_field(m, f, x, 1.0, UNIT, config.SIGMA_RATE, sigma_cutoff(f.k), holomorphic_gauge)


def kappa(s: SectionField) -> SectionField:
    """z -> conj(s(conj z)), structurally: conjugate centers, weights and models."""
    return s.with_bumps(b.conj() for b in s.bumps)


def symmetrize(s: SectionField) -> SectionField:
    """(s + kappa(s)) / 2 with identical bumps merged."""
    return (s.scale(0.5) + kappa(s).scale(0.5)).merged()


def tau(m: ModelManifold, f: ScaledFrame, x, cutoff: float = None, holomorphic_gauge: bool = False) -> SectionField:
    """Quadric bump f(u) = u1^2 + ... + un^2 - 1/2 at x."""
    return bump_field(m, f, x, 1.0, QUADRIC, 1.0, cutoff, holomorphic_gauge)


# ---------------------------------------------------------------- symmetry

@dataclass(frozen=True)
class SymmetryCertificate:
    value: float
    n_points: int

    @property
    def symmetric(self) -> bool:
        return self.value < config.SYMMETRY_TOL


def symmetry_certificate(s: SectionField, points) -> SymmetryCertificate:
    """sup over points of |s(z) - kappa(s)(z)|."""
    pts = np.asarray(points, dtype=complex).reshape(-1, s.n)
    if len(pts) == 0:
        return SymmetryCertificate(0.0, 0)
    diff = s.evaluate(pts) - kappa(s).evaluate(pts)
    return SymmetryCertificate(float(np.max(np.abs(diff))), len(pts))


# ---------------------------------------------------------------- serialization

def serialize_field(s: SectionField) -> str:
    """Key-value header plus one record per bump; floats written with repr."""
    lines = [f"k = {s.k}", f"n = {s.n}", f"periodic = {s.periodic}",
             f"holomorphic_gauge = {s.holomorphic_gauge}"]
    for b in s.bumps:
        center = ';'.join(f"{repr(c.real)},{repr(c.imag)}" for c in map(complex, b.center))
        w = complex(b.weight)
        lines.append(f"bump center={center} weight={repr(w.real)},{repr(w.imag)} "
                     f"model={b.model.tag} rate={repr(float(b.rate))} cutoff={repr(float(b.cutoff))}")
    return '\n'.join(lines) + '\n'


def parse_field(text: str) -> SectionField:
    header = {}
    bumps = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith('bump '):
            rec = dict(item.split('=', 1) for item in line[5:].split())
            center = tuple(complex(float(a), float(b))
                           for a, b in (pair.split(',') for pair in rec['center'].split(';')))
            wr, wi = rec['weight'].split(',')
            bumps.append(Bump(center, complex(float(wr), float(wi)), BumpModel.from_tag(rec['model']),
                              float(rec['rate']), float(rec['cutoff'])))
        else:
            key, value = (p.strip() for p in line.split('=', 1))
            header[key] = value
    return SectionField(int(header['k']), int(header['n']), tuple(bumps),
                        periodic=header.get('periodic') == 'True',
                        holomorphic_gauge=header.get('holomorphic_gauge') == 'True')


if __name__ == '__main__':
    m = ModelManifold.torus(1)
    fr = ScaledFrame(100)
    s = concentrated_sigma(m, fr, [0.5])
    print(f"|sigma(x)| = {abs(s.evaluate([[0.5]])[0]):.6f}")
    print(f"|sigma| at d_k = 1: {abs(s.evaluate([[0.5 + 0.1]])[0]):.6f}")
