"""
Real Lefschetz pencils F = s1 / s0 built from a symmetric transverse pair.

The four certificates of a real pencil are measured on grids:

    item 1   s0 is epsilon-transverse
    item 2   s0 + s1 is epsilon-transverse as a rank-2 system
    item 3   dF (holomorphic part) is transverse on Z = {|s0| >= epsilon}
    item 4   F(c(z)) = conj F(z)

Base points and critical points are found by Newton iteration from grid seeds
(local minima of the residual), batched over all seeds at once.
"""

import math
import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np
import pandas as pd
from scipy import ndimage
from scipy.spatial import cKDTree

from src import config
from src.errors import (NoAdmissiblePath, NoAdmissibleW, NonIsolatedCriticalSet,
                        PairTransversalityError, SardFailure, SymmetryError)
from src.fields import SectionField, bump_field, kappa, polynomial_model, sigma_cutoff, symmetry_certificate
from src.model import GridSpec, ModelManifold, ScaledFrame, ambient_grid, colored_ball_net, to_complex, to_real
from src.sard import (LocalFunction, SardParams, ball_samples, pick_path_w, pick_real_w, slice_scores,
                       verify_transverse)
from src.transversality import jacobian_singular_values, pair_transversality

logger = logging.getLogger(__name__)

PAIR_ETA_MIN = 1e-3
NEWTON_ITERATIONS = 60
NEWTON_TOL = 1e-10
ZETA_FLOOR = 0.05
NET_SEPARATION = 5.0


@dataclass(frozen=True)
class BasePoint:
    point: np.ndarray
    residual: float


@dataclass(frozen=True)
class CriticalPoint:
    point: np.ndarray
    value: complex
    hessian_min_sv: float       # of dd F / k
    real: bool


@dataclass(frozen=True)
class GammaStats:
    fraction: float             # of grid points in Omega_chi lying in Gamma
    max_distance: float         # g_k distance from Gamma points to the nearest critical point
    n_points: int


@dataclass
class PencilData:
    s0: SectionField
    s1: SectionField
    m: ModelManifold
    epsilon: float
    pair_margin: float = np.inf
    pair_witness: Optional[np.ndarray] = None
    reality_sup: float = np.nan
    base_locus: List[BasePoint] = field(default_factory=list)
    crit_set: List[CriticalPoint] = field(default_factory=list)
    gamma_stats: Optional[GammaStats] = None
    rho0: float = np.inf
    diagnostics: dict = field(default_factory=dict)

    @property
    def k(self) -> int:
        return self.s0.k

    @property
    def n(self) -> int:
        return self.s0.n

    def crit_frame(self) -> pd.DataFrame:
        rows = []
        for i, c in enumerate(self.crit_set):
            row = {'id': i, 'F_re': c.value.real, 'F_im': c.value.imag,
                   'hessian_min_sv': c.hessian_min_sv, 'real': c.real}
            for j, zj in enumerate(c.point, 1):
                row[f'z{j}_re'] = zj.real
                row[f'z{j}_im'] = zj.imag
            rows.append(row)
        return pd.DataFrame(rows)

    def base_frame(self) -> pd.DataFrame:
        rows = []
        for i, b in enumerate(self.base_locus):
            row = {'id': i, 'residual': b.residual}
            for j, zj in enumerate(b.point, 1):
                row[f'z{j}_re'] = zj.real
                row[f'z{j}_im'] = zj.imag
            rows.append(row)
        return pd.DataFrame(rows)


# ---------------------------------------------------------------- F and its derivatives

def pencil_derivatives(s0: SectionField, s1: SectionField, z):
    """F, dF (P, n), dbar F (P, n) and s0, in g units."""
    v0, g0 = s0.value_and_gradient(z)
    v1, g1 = s1.value_and_gradient(z)
    d0 = 0.5 * (g0[:, 0::2] - 1j * g0[:, 1::2])
    d1 = 0.5 * (g1[:, 0::2] - 1j * g1[:, 1::2])
    b0 = 0.5 * (g0[:, 0::2] + 1j * g0[:, 1::2])
    b1 = 0.5 * (g1[:, 0::2] + 1j * g1[:, 1::2])
    q = v0[:, None] ** 2
    # F is undefined where s0 vanishes; callers mask by |s0|
    with np.errstate(divide='ignore', invalid='ignore'):
        F = v1 / v0
        dF = (d1 * v0[:, None] - v1[:, None] * d0) / q
        dbF = (b1 * v0[:, None] - v1[:, None] * b0) / q
    return F, dF, dbF, v0


def _default_grid(m: ModelManifold, f: ScaledFrame) -> GridSpec:
    return ambient_grid(m, f, per_gk_unit=8.0 if m.n == 1 else 3.0)


def _in_domain(m: ModelManifold, z: np.ndarray) -> np.ndarray:
    if m.is_torus:
        return np.ones(len(z), dtype=bool)
    return np.sqrt(np.sum(np.abs(z) ** 2, axis=1)) <= m.ball_radius + 1e-12


def make_pencil(s0: SectionField, s1: SectionField, m: ModelManifold, epsilon: float,
                g: GridSpec = None, pair_eta: float = PAIR_ETA_MIN) -> PencilData:
    """Symmetry gate, rank-2 transversality gate and the reality sup of F = s1/s0."""
    s0.compatible(s1)
    f = ScaledFrame(s0.k)
    g = _default_grid(m, f) if g is None else g
    z = to_complex(g.points())
    z = z[_in_domain(m, z)]
    for name, s in (('s0', s0), ('s1', s1)):
        cert = symmetry_certificate(s, z[::3])
        if not cert.symmetric:
            raise SymmetryError(f"{name} is not symmetric (certificate {cert.value:.3g})", cert.value)
    margin, witness, count = pair_transversality(s0, s1, z, epsilon)
    if margin < pair_eta:
        raise PairTransversalityError(f"pair margin {margin:.3g} < {pair_eta} over {count} sublevel points",
                                      witness=witness, margin=margin)
    p = PencilData(s0, s1, m, epsilon, pair_margin=margin, pair_witness=witness)
    p.reality_sup = reality_sup(p, z)
    logger.info("pencil k=%d n=%d: pair margin %.4g, reality sup %.3g", s0.k, s0.n, margin, p.reality_sup)
    return p


def reality_sup(p: PencilData, z: np.ndarray) -> float:
    """sup |F(c(z)) - conj F(z)| over points with |s0| >= epsilon/2 at z and c(z)."""
    cz = p.m.involution(z)
    v0 = p.s0.evaluate(z)
    w0 = p.s0.evaluate(cz)
    keep = (np.abs(v0) >= p.epsilon / 2) & (np.abs(w0) >= p.epsilon / 2)
    if not np.any(keep):
        return 0.0
    F = p.s1.evaluate(z[keep]) / v0[keep]
    Fc = p.s1.evaluate(cz[keep]) / w0[keep]
    return float(np.max(np.abs(Fc - np.conj(F))))


# ---------------------------------------------------------------- Newton machinery

def _local_minima(values: np.ndarray, g: GridSpec, mask: np.ndarray) -> np.ndarray:
    grid = np.where(mask, values, np.inf).reshape(g.shape)
    low = ndimage.minimum_filter(grid, size=3, mode='wrap' if g.periodic else 'nearest')
    return ((grid == low) & np.isfinite(grid)).ravel()


def _fd_jacobian(residual: Callable, x: np.ndarray, h: float) -> np.ndarray:
    """(S, R, D) real Jacobian of a batched residual by central differences."""
    cols = []
    for a in range(x.shape[1]):
        e = np.zeros(x.shape[1])
        e[a] = h
        cols.append((residual(x + e) - residual(x - e)) / (2 * h))
    return np.stack(cols, axis=2)


def _newton(residual: Callable, jacobian: Callable, x: np.ndarray, max_step: float,
            scale: float, wrap: Callable):
    """Batched (Gauss-)Newton with pseudo-inverse steps. Returns (x, residual norm / scale)."""
    for _ in range(NEWTON_ITERATIONS):
        r = residual(x)
        norm = np.sqrt(np.sum(r ** 2, axis=1)) / scale
        # rows that left the domain of F stay put and are reported as unconverged
        active = (norm >= NEWTON_TOL) & np.isfinite(norm)
        if not np.any(active):
            break
        J = jacobian(x[active])
        bad = ~np.all(np.isfinite(J), axis=(1, 2))
        if np.any(bad):
            active[np.nonzero(active)[0][bad]] = False
            J = J[~bad]
            if not np.any(active):
                break
        step = -np.einsum('sij,sj->si', np.linalg.pinv(J), r[active])
        length = np.sqrt(np.sum(step ** 2, axis=1))
        step *= np.minimum(1.0, max_step / np.maximum(length, 1e-300))[:, None]
        x[active] = wrap(x[active] + step)
    r = residual(x)
    norm = np.sqrt(np.sum(r ** 2, axis=1)) / scale
    return x, np.where(np.isfinite(norm), norm, np.inf)


def _dedupe(m: ModelManifold, f: ScaledFrame, z: np.ndarray, order: np.ndarray) -> List[int]:
    kept = []
    for i in order:
        if all(np.sqrt(np.sum(np.abs(m.displacement(z[i], z[j])) ** 2)) * f.sqrt_k >= config.NEWTON_DEDUPE
               for j in kept):
            kept.append(int(i))
    return kept


def _wrapper(m: ModelManifold):
    def wrap(x):
        return to_real(m.wrap(to_complex(x))) if m.is_torus else x
    return wrap


# ---------------------------------------------------------------- base locus

def base_locus(p: PencilData, g: GridSpec = None) -> List[BasePoint]:
    """Common zeros of s0 and s1 (n >= 2), closed under c."""
    if p.n < 2:
        raise ValueError("base locus has real codimension 4; needs n >= 2")
    f = ScaledFrame(p.k)
    g = _default_grid(p.m, f) if g is None else g
    z = to_complex(g.points())
    inside = _in_domain(p.m, z)
    size = np.abs(p.s0.evaluate(z)) + np.abs(p.s1.evaluate(z))
    seeds = _local_minima(size, g, inside) & (size < p.epsilon)

    def residual(x):
        zz = to_complex(x)
        v0, v1 = p.s0.evaluate(zz), p.s1.evaluate(zz)
        return np.column_stack([v0.real, v0.imag, v1.real, v1.imag])

    def jacobian(x):
        zz = to_complex(x)
        g0, g1 = p.s0.gradient(zz), p.s1.gradient(zz)
        return np.stack([g0.real, g0.imag, g1.real, g1.imag], axis=1)

    x0 = g.points()[seeds]
    points: List[BasePoint] = []
    if len(x0):
        x, res = _newton(residual, jacobian, x0.copy(), 0.5 / f.sqrt_k, 1.0, _wrapper(p.m))
        zz = to_complex(x)
        good = (res < NEWTON_TOL) & _in_domain(p.m, zz)
        p.diagnostics['base_seeds'] = int(len(x0))
        p.diagnostics['base_dropped'] = int((~good).sum())
        zz, res = zz[good], res[good]
        for i in _dedupe(p.m, f, zz, np.argsort(res, kind='stable')):
            points.append(BasePoint(zz[i], float(res[i])))
    points = _close_under_c(p, f, points, residual, jacobian,
                            lambda x, r: BasePoint(to_complex(x), float(r)))
    p.base_locus = points
    return points


def _close_under_c(p, f, items, residual, jacobian, make):
    """Add c-images missing from the list, polished by a few Newton steps."""
    out = list(items)
    for item in items:
        image = p.m.involution(item.point)
        if any(np.sqrt(np.sum(np.abs(p.m.displacement(image, o.point)) ** 2)) < 1e-8 for o in out):
            continue
        x, r = _newton(residual, jacobian, to_real(image)[None, :].copy(), 0.5 / f.sqrt_k, 1.0, _wrapper(p.m))
        out.append(make(x[0], r[0]))
    return out


# ---------------------------------------------------------------- critical set

def _dF_residual(p: PencilData):
    sk = math.sqrt(p.k)

    def residual(x):
        _, dF, _, _ = pencil_derivatives(p.s0, p.s1, to_complex(x))
        return to_real(dF) / sk
    return residual


def critical_set(p: PencilData, g: GridSpec = None, chi: float = None) -> List[CriticalPoint]:
    """Zeros of dF inside Omega_chi = {|s0| >= chi}, plus Gamma statistics and rho0."""
    f = ScaledFrame(p.k)
    g = _default_grid(p.m, f) if g is None else g
    if chi is None:
        chi = config.CHI_FRACTION * _c0(p.s0, g, p.m)
    z = to_complex(g.points())
    F, dF, dbF, v0 = pencil_derivatives(p.s0, p.s1, z)
    omega = (np.abs(v0) >= chi) & _in_domain(p.m, z)
    size = np.sqrt(np.sum(np.abs(dF) ** 2, axis=1)) / f.sqrt_k
    seeds = _local_minima(size, g, omega)

    residual = _dF_residual(p)
    h = config.HESSIAN_FD_STEP / f.sqrt_k

    def jacobian(x):
        return _fd_jacobian(residual, x, h)

    found = np.zeros((0, p.n), dtype=complex)
    res = np.zeros(0)
    x0 = g.points()[seeds]
    p.diagnostics['crit_seeds'] = int(len(x0))
    if len(x0):
        x, res = _newton(residual, jacobian, x0.copy(), 0.5 / f.sqrt_k, 1.0, _wrapper(p.m))
        zz = to_complex(x)
        good = (res < NEWTON_TOL) & (np.abs(p.s0.evaluate(zz)) >= chi) & _in_domain(p.m, zz)
        p.diagnostics['crit_dropped'] = int((~good).sum())
        found, res = zz[good], res[good]
    _check_isolated(p, f, found, jacobian)

    crit = []
    for i in _dedupe(p.m, f, found, np.argsort(res, kind='stable')):
        crit.append(_critical_point(p, found[i]))
    crit = _close_under_c(p, f, crit, residual, jacobian, lambda x, r: _critical_point(p, to_complex(x)))
    p.crit_set = crit
    p.rho0 = _separation(p.m, f, [c.point for c in crit])
    p.gamma_stats = _gamma_stats(p, f, z[omega], dF[omega], dbF[omega], crit)
    logger.info("critical set: %d points, rho0=%.3g, Gamma fraction %.3g",
                len(crit), p.rho0, p.gamma_stats.fraction)
    return crit


def _c0(s: SectionField, g: GridSpec, m: ModelManifold) -> float:
    z = to_complex(g.points())
    return float(np.max(np.abs(s.evaluate(z[_in_domain(m, z)]))))


def _check_isolated(p, f, found, jacobian):
    """Converged roots that spread within one dedupe radius at a singular Jacobian trace a curve."""
    if len(found) < 2:
        return
    tree = cKDTree(to_real(found), boxsize=1.0 if p.m.is_torus else None)
    for i, j in tree.query_pairs(config.NEWTON_DEDUPE / f.sqrt_k):
        gap = np.sqrt(np.sum(np.abs(p.m.displacement(found[i], found[j])) ** 2)) * f.sqrt_k
        if gap < 1e-3:
            continue
        sv = np.linalg.svd(jacobian(to_real(found[[i, j]])), compute_uv=False)
        if np.all(sv[:, -1] < 1e-6 * sv[:, 0]):
            raise NonIsolatedCriticalSet(f"distinct singular critical points {gap:.3g} apart in g_k: "
                                         "input pair insufficiently generic")


def _critical_point(p: PencilData, q: np.ndarray) -> CriticalPoint:
    value = complex(p.s1.evaluate(q[None, :])[0] / p.s0.evaluate(q[None, :])[0])
    cert = model_v_certificate(p, q)
    is_real = float(np.sqrt(np.sum(np.abs(p.m.displacement(q, p.m.involution(q))) ** 2))) < 1e-8
    return CriticalPoint(q, value, cert.min_sv, is_real)


def _separation(m, f, points) -> float:
    best = np.inf
    for i in range(len(points)):
        for j in range(i + 1, len(points)):
            d = np.sqrt(np.sum(np.abs(m.displacement(points[i], points[j])) ** 2)) * f.sqrt_k
            best = min(best, float(d))
    return best


def _gamma_stats(p, f, z, dF, dbF, crit) -> GammaStats:
    in_gamma = np.sqrt(np.sum(np.abs(dF) ** 2, axis=1)) <= np.sqrt(np.sum(np.abs(dbF) ** 2, axis=1))
    if not len(z):
        return GammaStats(0.0, 0.0, 0)
    fraction = float(in_gamma.mean())
    if not np.any(in_gamma):
        return GammaStats(fraction, 0.0, len(z))
    if not crit:
        return GammaStats(fraction, np.inf, len(z))
    box = 1.0 if p.m.is_torus else None
    tree = cKDTree(to_real(p.m.wrap(np.array([c.point for c in crit]))), boxsize=box)
    dist, _ = tree.query(to_real(p.m.wrap(z[in_gamma])))
    return GammaStats(fraction, float(dist.max()) * f.sqrt_k, len(z))


# ---------------------------------------------------------------- Morse model

@dataclass(frozen=True)
class MorseCertificate:
    hessian: np.ndarray         # dd F, (n, n) complex
    min_sv: float
    max_sv: float
    residue: float              # |dbar d F| / |dd F| (Frobenius)

    @property
    def degenerate(self) -> bool:
        return self.min_sv < 1e-6 * self.max_sv


def hessian_certificate(dF: Callable, q: np.ndarray, step: float, scale: float = 1.0) -> MorseCertificate:
    """Complex Hessian of F at q from central differences of a batched dF callable."""
    q = np.asarray(q, dtype=complex).reshape(1, -1)
    n = q.shape[1]
    hol = np.zeros((n, n), dtype=complex)
    anti = np.zeros((n, n), dtype=complex)
    for i in range(n):
        e = np.zeros(n, dtype=complex)
        e[i] = step
        dx = (dF(q + e) - dF(q - e))[0] / (2 * step)
        dy = (dF(q + 1j * e) - dF(q - 1j * e))[0] / (2 * step)
        hol[i] = 0.5 * (dx - 1j * dy)
        anti[i] = 0.5 * (dx + 1j * dy)
    hol /= scale
    anti /= scale
    sv = np.linalg.svd(hol, compute_uv=False)
    norm = np.linalg.norm(hol)
    residue = float(np.linalg.norm(anti) / norm) if norm > 0 else np.inf
    return MorseCertificate(hol, float(sv[-1]), float(sv[0]), residue)


def model_v_certificate(p: PencilData, q) -> MorseCertificate:
    """Nondegeneracy of dd F at a critical point, normalized by k."""
    f = ScaledFrame(p.k)

    def dF(z):
        return pencil_derivatives(p.s0, p.s1, z)[1]
    cert = hessian_certificate(dF, q, config.HESSIAN_FD_STEP / f.sqrt_k, scale=float(p.k))
    if cert.degenerate:
        logger.warning("degenerate critical point at %s (min sv %.3g)", np.round(q, 6), cert.min_sv)
    return cert


# ---------------------------------------------------------------- transversality of dF

def dF_transversality(p: PencilData, g: GridSpec = None, threshold: float = None) -> float:
    """Least smin(D dF)/k over grid points of Z = {|s0| >= epsilon} with |dF|/sqrt k <= threshold."""
    f = ScaledFrame(p.k)
    g = _default_grid(p.m, f) if g is None else g
    threshold = p.epsilon if threshold is None else threshold
    z = to_complex(g.points())
    z = z[_in_domain(p.m, z)]
    _, dF, _, v0 = pencil_derivatives(p.s0, p.s1, z)
    near = (np.abs(v0) >= p.epsilon) & (np.sqrt(np.sum(np.abs(dF) ** 2, axis=1)) / f.sqrt_k <= threshold)
    if not np.any(near):
        return np.inf
    J = _fd_jacobian(_dF_residual(p), to_real(z[near]), config.HESSIAN_FD_STEP / f.sqrt_k)
    return float(np.min(np.linalg.svd(J, compute_uv=False)[:, -1]) / f.sqrt_k)


def _direction_bump(m, f, x, r, gauge) -> SectionField:
    """u_r times the concentrated profile at x."""
    exps = [tuple(1 if j == r else 0 for j in range(m.n))]
    return bump_field(m, f, x, 1.0, polynomial_model(exps, [1.0]), config.SIGMA_RATE, sigma_cutoff(f.k), gauge)


def _dF_component(s0, s1, r, sk):
    def value(z):
        return pencil_derivatives(s0, s1, z)[1][:, r] / sk
    return value


def _local_quotient(num: Callable, den: Callable, x: np.ndarray, sk: float, scale: float, n: int,
                    label: str, h: float = 1e-5) -> LocalFunction:
    """u -> num(z)/(scale den(z)), z = x + u/sqrt k; gradient by central differences in u."""
    def value(u):
        z = x[None, :] + np.asarray(u, dtype=complex).reshape(-1, n) / sk
        return num(z) / den(z) / scale

    def gradient(u):
        u = np.asarray(u, dtype=complex).reshape(-1, n)
        cols = []
        for a in range(2 * n):
            e = np.zeros(n, dtype=complex)
            e[a // 2] = h if a % 2 == 0 else 1j * h
            cols.append((value(u + e) - value(u - e)) / (2 * h))
        return np.stack(cols, axis=1)
    return LocalFunction(n, value, gradient, label)


def transversalize_dF(p: PencilData, target: float, params: SardParams = None, g: GridSpec = None,
                      D: float = NET_SEPARATION):
    """
    Perturb s1 by real multiples of u_r-bumps (c-paired off the real locus) so
    that each component of dF becomes sigma-transverse on Z. Returns (pencil, diagnostics).
    """
    if p.n > 2:
        raise ValueError("dF transversalization is implemented for n <= 2")
    params = params or SardParams()
    f = ScaledFrame(p.k)
    g = _default_grid(p.m, f) if g is None else g
    diagnostics = {'skipped_zeta': 0, 'perturbed': 0, 'weights': []}
    before = dF_transversality(p, g)
    if before >= target:
        diagnostics['margin_before'] = diagnostics['margin_after'] = before
        return p, diagnostics

    sigma = params.sigma
    net = colored_ball_net(p.m, f, D)
    u_ball = 1.1 * ball_samples(p.n, 0.1)
    u_pair = ball_samples(p.n, 0.05)
    s1 = p.s1
    for r in range(p.n):
        for ci, color in enumerate(net.colors):
            updates = []
            for bi in color.pair_representatives():
                x = color.centers[bi]
                if abs(p.s0.evaluate(x[None, :])[0]) < p.epsilon:
                    continue
                b = _direction_bump(p.m, f, x, r, s1.holomorphic_gauge)
                num = _dF_component(p.s0, s1, r, f.sqrt_k)
                zeta = _dF_component(p.s0, b, r, f.sqrt_k)
                zb = x[None, :] + u_ball / f.sqrt_k
                zeta_vals = zeta(zb)
                if np.min(np.abs(zeta_vals)) < ZETA_FLOOR:
                    diagnostics['skipped_zeta'] += 1
                    logger.debug("zeta floor violated on ball %s, direction %d", (ci, int(bi)), r)
                    continue
                scale = max(float(np.max(np.abs(num(zb) / zeta_vals))), 1e-12)
                local = _local_quotient(num, zeta, x, f.sqrt_k, scale, p.n, f"dF_{r} ball {(ci, int(bi))}")
                try:
                    if color.fixed[bi]:
                        if verify_transverse(local, sigma)[0]:
                            continue
                        w = pick_real_w(local, params)
                        coeff = complex(scale * w)
                        updates.append(b.scale(-coeff))
                    else:
                        kb = kappa(b)
                        hloc = _local_quotient(_dF_component(p.s0, kb, r, f.sqrt_k), zeta, x, f.sqrt_k,
                                               1.0, p.n, "h")
                        if slice_scores(local, hloc, np.array([0j]), sigma, u_pair)[0] > 0:
                            continue
                        path = pick_path_w([local], [hloc], params, u_spacing=0.05)
                        coeff = complex(scale * path.w[0])
                        updates.append(b.scale(-coeff) + kb.scale(-np.conj(coeff)))
                except (NoAdmissibleW, NoAdmissiblePath) as exc:
                    raise SardFailure(str(exc), ball_id=(r, ci, int(bi)), cause=exc) from exc
                diagnostics['perturbed'] += 1
                diagnostics['weights'].append(coeff)
            for upd in updates:
                s1 = s1 + upd
            s1 = s1.merged()
    out = make_pencil(p.s0, s1, p.m, p.epsilon, g)
    diagnostics['margin_before'] = before
    diagnostics['margin_after'] = dF_transversality(out, g)
    return out, diagnostics


# ---------------------------------------------------------------- certification

@dataclass(frozen=True)
class CertificateItem:
    item: int
    name: str
    value: float
    passed: bool
    note: str = ''


def certify(p: PencilData, g: GridSpec = None) -> List[CertificateItem]:
    """The four pencil certificates on one grid."""
    f = ScaledFrame(p.k)
    g = _default_grid(p.m, f) if g is None else g
    z = to_complex(g.points())
    z = z[_in_domain(p.m, z)]
    # grid minimum of the least singular value on the sublevel set; 4-D grids cannot meet the
    # AH cell bound, so no Lipschitz correction is applied here
    v0, g0 = p.s0.value_and_gradient(z)
    near = np.abs(v0) <= p.epsilon
    eta0 = float(np.min(jacobian_singular_values(g0[near])[1]) / f.sqrt_k) if np.any(near) else np.inf
    items = [CertificateItem(1, 's0 epsilon-transverse', eta0, eta0 > 0),
             CertificateItem(2, 'pair epsilon-transverse', p.pair_margin, p.pair_margin >= PAIR_ETA_MIN)]
    margin = dF_transversality(p, g)
    items.append(CertificateItem(3, 'dF transverse on Z', margin, margin > 0))
    items.append(CertificateItem(4, 'reality F(c) = conj F', p.reality_sup, p.reality_sup < config.SYMMETRY_TOL))
    return items


if __name__ == '__main__':
    m = ModelManifold.flat(1, 0.4)
    fr = ScaledFrame(100)
    from src.fields import QUADRIC, UNIT
    s0 = bump_field(m, fr, [0.0], 1.0, UNIT, rate=0.2, cutoff=10.0, holomorphic_gauge=True)
    s1 = bump_field(m, fr, [0.0], 1.0, QUADRIC, rate=0.2, cutoff=10.0, holomorphic_gauge=True)
    pen = make_pencil(s0, s1, m, 0.1)
    for c in critical_set(pen, chi=0.2):
        print(f"critical point {np.round(c.point, 6)}  F = {c.value:.6f}  min sv = {c.hessian_min_sv:.4f}")
