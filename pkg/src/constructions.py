"""
Section constructions on the model manifolds.

    build_spheres_section        quadric bumps on a real lattice: one
                                 pseudo-sphere per site (two roots for n = 1)
    build_nonvanishing_section   positive unit bumps covering the real locus
    build_full_torus_section     quadric bumps on the complex lattice (zero
                                 counts and equidistribution)
    build_concentrated_control   quadric bumps in one quarter of the torus,
                                 unit bumps elsewhere (negative control)
    transversalize_symmetric     colored perturbation recursion keeping the
                                 section symmetric
"""

import math
import logging
import itertools
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
import pandas as pd
from tqdm import tqdm

from src import config
from src.errors import (BudgetExhausted, DegenerateVertexError, NoAdmissiblePath, NoAdmissibleW, SardFailure,
                        SymmetryError)
from src.fields import (QUADRIC, UNIT, Bump, SectionField, bump_field, kappa, polynomial_model,
                        sigma_cutoff, symmetry_certificate)
from src.model import ModelManifold, ScaledFrame, ambient_grid, colored_ball_net, real_lattice, to_complex
from src.sard import (LocalFunction, SardParams, ball_samples, pick_path_w, pick_real_w, slice_scores,
                       verify_transverse)
from src.transversality import eta_transversality

logger = logging.getLogger(__name__)

NET_SEPARATION = 5.0            # g_k separation of same-color balls
DEAD_ZONE_FLOOR = 1e-3          # normalization floor, fraction of C0, where s vanishes on a ball
PAIR_SAMPLE_SPACING = 0.05      # u spacing for the complex (off-real) picker
RECENTER_STEP = 0.25            # g_k grid for moving an off-real ball centre


@dataclass(frozen=True)
class LatticeConfig:
    D: float = 2.0
    cutoff: Optional[float] = None      # g_k; None means max(sigma_cutoff(k), D sqrt(n))

    def __post_init__(self):
        if self.D <= 0:
            raise ValueError("lattice mesh D must be positive")

    def cutoff_for(self, f: ScaledFrame, n: int = 1) -> float:
        """Default keeps every point of R^n on the plateau of its nearest site, so s has no flat zeros."""
        if self.cutoff is not None:
            return self.cutoff
        return max(sigma_cutoff(f.k), self.D * math.sqrt(n))


# ---------------------------------------------------------------- builders

def build_spheres_section(m: ModelManifold, f: ScaledFrame, cfg: LatticeConfig = LatticeConfig()) -> SectionField:
    """Sum of quadric bumps tau_{k,x} over the real lattice of mesh D."""
    lattice = real_lattice(m, f, cfg.D)
    cutoff = cfg.cutoff_for(f, m.n)
    bumps = tuple(Bump(tuple(complex(c) for c in x), 1.0 + 0j, QUADRIC, 1.0, cutoff) for x in lattice.points)
    logger.info("spheres section k=%d D=%.3g: %d sites", f.k, cfg.D, len(bumps))
    return SectionField(f.k, m.n, bumps, periodic=m.is_torus)


def interference(s: SectionField, m: ModelManifold, f: ScaledFrame) -> pd.DataFrame:
    """Value and derivative (/sqrt k) of the complementary sum at every bump center."""
    rows = []
    for i, b in enumerate(s.bumps):
        others = s.with_bumps(s.bumps[:i] + s.bumps[i + 1:])
        z = np.array([b.center], dtype=complex)
        v, g = others.value_and_gradient(z)
        rows.append({'site': i, 'center_re': float(np.real(b.center[0])),
                     'value': float(np.abs(v[0])),
                     'derivative': float(np.sqrt(np.sum(np.abs(g[0]) ** 2))) / f.sqrt_k})
    return pd.DataFrame(rows)


def build_nonvanishing_section(m: ModelManifold, f: ScaledFrame, mesh: float = 1.0) -> SectionField:
    """Unit bumps with weight 1 on a real lattice of mesh 1 in g_k."""
    lattice = real_lattice(m, f, mesh)
    cutoff = sigma_cutoff(f.k)
    bumps = tuple(Bump(tuple(complex(c) for c in x), 1.0 + 0j, UNIT, 1.0, cutoff) for x in lattice.points)
    return SectionField(f.k, m.n, bumps, periodic=m.is_torus)


def _complex_lattice(m: ModelManifold, f: ScaledFrame, D: float) -> np.ndarray:
    per_axis = max(1, int(math.floor(f.sqrt_k / D)))
    ticks = (np.arange(per_axis) + 0.5) / per_axis
    pts = np.array(list(itertools.product(ticks, repeat=2 * m.n)))
    return pts[:, 0::2] + 1j * pts[:, 1::2]


def build_full_torus_section(m: ModelManifold, f: ScaledFrame, D: float = 2.0, cutoff: float = 6.0) -> SectionField:
    """Quadric bumps on the complex lattice of mesh D; symmetric (the lattice is conj-invariant)."""
    if not m.is_torus:
        raise ValueError("full-torus construction needs the torus model")
    cutoff = max(cutoff, sigma_cutoff(f.k))
    bumps = tuple(Bump(tuple(x), 1.0 + 0j, QUADRIC, 1.0, cutoff) for x in _complex_lattice(m, f, D))
    return SectionField(f.k, m.n, bumps, periodic=True)


def build_concentrated_control(m: ModelManifold, f: ScaledFrame, D: float = 2.0, cutoff: float = 6.0) -> SectionField:
    """Quadric bumps in Re < 1/2, 1/4 <= Im < 3/4 (one quarter), unit bumps elsewhere."""
    if not m.is_torus:
        raise ValueError("control construction needs the torus model")
    cutoff = max(cutoff, sigma_cutoff(f.k))
    bumps = []
    for x in _complex_lattice(m, f, D):
        inside = np.all(x.real < 0.5) and np.all((x.imag >= 0.25) & (x.imag < 0.75))
        bumps.append(Bump(tuple(x), 1.0 + 0j, QUADRIC if inside else UNIT, 1.0, cutoff))
    return SectionField(f.k, m.n, tuple(bumps), periodic=True)


def build_pencil_pair(m: ModelManifold, f: ScaledFrame, D: float = 2.0, cutoff: float = 3.0):
    """
    A symmetric pair (s0, s1) for pencil runs.

    Torus: s0 is the full-torus quadric lattice, s1 puts u1 u2 - 1/4 (n >= 2) or
    u - 1/4 (n = 1) bumps on the lattice shifted by half a mesh. Flat ball: a
    broad unit bump and a quadric bump at 0 with equal rate, both in the
    holomorphic gauge, so F = u^2 - 1/2 on the plateau.
    """
    if not m.is_torus:
        s0 = bump_field(m, f, [0.0] * m.n, 1.0, UNIT, 0.2, 10.0, holomorphic_gauge=True)
        s1 = bump_field(m, f, [0.0] * m.n, 1.0, QUADRIC, 0.2, 10.0, holomorphic_gauge=True)
        return s0, s1
    s0 = build_full_torus_section(m, f, D, cutoff)
    if m.n >= 2:
        model = polynomial_model([(1, 1) + (0,) * (m.n - 2), (0,) * m.n], [1.0, -0.25])
    else:
        model = polynomial_model([(1,), (0,)], [1.0, -0.25])
    cutoff = max(cutoff, sigma_cutoff(f.k))
    per_axis = max(1, int(math.floor(f.sqrt_k / D)))
    lattice = _complex_lattice(m, f, D) + (0.5 + 0.5j) / per_axis
    bumps = tuple(Bump(tuple(m.wrap(x)), 1.0 + 0j, model, 1.0, cutoff) for x in lattice)
    return s0, SectionField(f.k, m.n, bumps, periodic=True)


# ---------------------------------------------------------------- transversalization

@dataclass(frozen=True)
class ColorStep:
    color: int
    key: tuple
    balls: int
    perturbed: int
    weights: Tuple[complex, ...]
    eta_before: float
    eta_after: float


@dataclass
class TransversalizationTrace:
    steps: List[ColorStep] = field(default_factory=list)
    final_eta: float = np.nan
    total_weight: float = 0.0
    budget: float = np.inf

    @property
    def n_colors(self) -> int:
        return len(self.steps)

    @property
    def n_perturbed(self) -> int:
        return sum(s.perturbed for s in self.steps)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([{'color': s.color, 'balls': s.balls, 'perturbed': s.perturbed,
                              'sum_abs_w': float(np.sum(np.abs(s.weights))) if s.weights else 0.0,
                              'eta_before': s.eta_before, 'eta_after': s.eta_after} for s in self.steps])

    def to_lines(self) -> List[str]:
        lines = [f"color {s.color} key={s.key} balls={s.balls} perturbed={s.perturbed} "
                 f"eta_before={s.eta_before:.6g} eta_after={s.eta_after:.6g} "
                 f"w=[{', '.join(f'{complex(w):.6g}' for w in s.weights)}]" for s in self.steps]
        lines.append(f"final eta={self.final_eta:.6g} total |w|={self.total_weight:.6g} budget={self.budget:.6g}")
        return lines


def _quotient(s: SectionField, sig: SectionField, x: np.ndarray, scale: float, label: str) -> LocalFunction:
    """u -> s(x + u/sqrt k) / (scale * sig(x + u/sqrt k)) with gradient in u units."""
    sk = s.sqrt_k

    def value(u):
        z = x[None, :] + np.asarray(u, dtype=complex).reshape(-1, s.n) / sk
        return s.evaluate(z) / sig.evaluate(z) / scale

    def gradient(u):
        z = x[None, :] + np.asarray(u, dtype=complex).reshape(-1, s.n) / sk
        v, g = s.value_and_gradient(z)
        q, gq = sig.value_and_gradient(z)
        return (g * q[:, None] - v[:, None] * gq) / (q ** 2)[:, None] / sk / scale
    return LocalFunction(s.n, value, gradient, label)


def _local_scale(s: SectionField, sig: SectionField, x: np.ndarray, floor: float) -> float:
    """sup |s / sig| on the 11/10 ball; floor only where s vanishes there."""
    u = 1.1 * ball_samples(s.n, 0.1)
    z = x[None, :] + u / s.sqrt_k
    sup = float(np.max(np.abs(s.evaluate(z) / sig.evaluate(z))))
    if sup < floor:
        logger.debug("s below the dead-zone floor on the ball at %s (%.3g < %.3g)", np.round(x, 4), sup, floor)
    return max(sup, floor)


def _color_points(m: ModelManifold, f: ScaledFrame, centers: np.ndarray) -> np.ndarray:
    u = ball_samples(m.n, 0.25) / f.sqrt_k
    z = (centers[:, None, :] + u[None, :, :]).reshape(-1, m.n)
    if m.is_torus:
        z = m.wrap(z)
    else:
        z = z[np.sqrt(np.sum(np.abs(z) ** 2, axis=1)) <= m.ball_radius]
    return z


def _pair_sigma(m: ModelManifold, f: ScaledFrame, x: np.ndarray, holomorphic_gauge: bool, ball_id,
                floor_min: float = config.RECENTER_FLOOR):
    """
    sigma and kappa(sigma) for an off-real ball, and the centre they sit on.

    Near the real locus the two overlap and |sigma + kappa(sigma)| can drop
    below floor_min on the unit ball; the centre then moves to the nearest
    point of a quarter-g_k grid that stays off the real locus and restores
    the floor.
    """
    def build(y):
        sig = bump_field(m, f, y, 1.0, UNIT, config.SIGMA_RATE, sigma_cutoff(f.k), holomorphic_gauge)
        return sig, kappa(sig)

    def off_real(y):
        return f.sqrt_k * float(np.linalg.norm(m.displacement(y, m.involution(y))))

    sig, ksig = build(x)
    if off_real(x) >= config.NEAR_REAL_GK:
        return sig, ksig, x
    u = ball_samples(m.n, RECENTER_STEP)
    shifts = u[np.argsort(np.sum(np.abs(u) ** 2, axis=1), kind='stable')]
    for shift in shifts:
        y = x + shift / f.sqrt_k
        if off_real(y) < 2 * RECENTER_STEP - 1e-9:
            continue
        if np.any(shift):
            sig, ksig = build(y)
        z = y[None, :] + u / f.sqrt_k
        floor = float(np.min(np.abs(sig.evaluate(z) + ksig.evaluate(z))))
        if floor >= floor_min:
            if np.any(shift):
                logger.debug("ball %s re-centred by %s g_k (floor %.3g)", ball_id, np.round(shift, 3), floor)
            return sig, ksig, y
    raise DegenerateVertexError(f"ball {ball_id}: no centre within 1 g_k keeps |sigma + kappa(sigma)| >= {floor_min}",
                                ball_id)


def transversalize_symmetric(s: SectionField, m: ModelManifold, target_eps: float,
                             params: SardParams = None, D: float = NET_SEPARATION,
                             budget_fraction: float = config.BUDGET_FRACTION,
                             target_eta: float = config.ETA_TARGET,
                             recenter_floor: float = config.RECENTER_FLOOR,
                             progress: bool = False):
    """
    Colored recursion over the ball net. Returns (section, trace).

    Each c-orbit of balls gets sigma_hat at its center. Real balls subtract a
    real multiple of sigma_hat chosen by pick_real_w; off-real pairs subtract
    w sigma_hat + conj(w) kappa(sigma_hat) chosen by a one-slice path search;
    a pair centre near the real locus is moved (see _pair_sigma) and the run
    stops with DegenerateVertexError when no nearby centre works.
    Balls of one color are processed from the same snapshot and applied as a batch.

    target_eps is the sublevel threshold of every eta measurement; an input
    whose eta already reaches target_eta is returned unchanged.
    """
    params = params or SardParams()
    f = ScaledFrame(s.k)
    g = ambient_grid(m, f, per_gk_unit=8.0)
    z_grid = to_complex(g.points())
    cert = symmetry_certificate(s, z_grid[::7])
    if not cert.symmetric:
        raise SymmetryError(f"input is not symmetric (certificate {cert.value:.3g})", cert.value)

    C0 = float(np.max(np.abs(s.evaluate(z_grid))))
    budget = budget_fraction * max(C0, 1e-12)
    trace = TransversalizationTrace(budget=budget)
    before = eta_transversality(s, g, target_eps, points=z_grid)
    if before.eta >= target_eta:
        trace.final_eta = before.eta
        logger.info("input already transverse (eta=%.4g >= %.4g); nothing to do", before.eta, target_eta)
        return s, trace

    net = colored_ball_net(m, f, D)
    sigma = params.sigma
    floor = DEAD_ZONE_FLOOR * max(C0, 1e-12)
    u_pair = ball_samples(m.n, PAIR_SAMPLE_SPACING)
    colors = tqdm(list(enumerate(net.colors)), desc="colors", disable=not progress)
    for ci, color in colors:
        snapshot = s
        color_pts = _color_points(m, f, color.centers)
        eta_before = eta_transversality(snapshot, g, target_eps, points=color_pts).eta
        updates = []
        weights = []
        for bi in color.pair_representatives():
            x = color.centers[bi]
            ball_id = (ci, int(bi))
            # net centers may sit just outside the flat ball, so no domain check here
            if color.fixed[bi]:
                sig = bump_field(m, f, x, 1.0, UNIT, config.SIGMA_RATE, sigma_cutoff(f.k), s.holomorphic_gauge)
            else:
                sig, ksig, x = _pair_sigma(m, f, x, s.holomorphic_gauge, ball_id, recenter_floor)
            scale = _local_scale(snapshot, sig, x, floor)
            local = _quotient(snapshot, sig, x, scale, f"ball {ball_id}")
            try:
                if color.fixed[bi]:
                    ok, _ = verify_transverse(local, sigma)
                    if ok:
                        continue
                    w = pick_real_w(local, params)
                    coeff = complex(scale * w)
                    updates.append(sig.scale(-coeff))
                else:
                    h = _quotient(ksig, sig, x, 1.0, f"h {ball_id}")
                    if slice_scores(local, h, np.array([0.0 + 0j]), sigma, u_pair)[0] > 0:
                        continue
                    path = pick_path_w([local], [h], params, u_spacing=PAIR_SAMPLE_SPACING)
                    coeff = complex(scale * path.w[0])
                    updates.append(sig.scale(-coeff) + ksig.scale(-np.conj(coeff)))
            except (NoAdmissibleW, NoAdmissiblePath) as exc:
                raise SardFailure(str(exc), ball_id=ball_id, cause=exc) from exc
            if abs(coeff) > 0:
                weights.append(coeff)
        for upd in updates:
            s = s + upd
        s = s.merged()
        trace.total_weight += float(np.sum(np.abs(weights)))
        eta_after = eta_transversality(s, g, target_eps, points=color_pts).eta
        trace.steps.append(ColorStep(ci, color.key, len(color.pair_representatives()), len(weights),
                                     tuple(weights), eta_before, eta_after))
        if trace.total_weight > budget:
            raise BudgetExhausted(f"cumulative |w| = {trace.total_weight:.4g} exceeds {budget:.4g}", trace=trace)

    trace.final_eta = eta_transversality(s, g, target_eps, points=z_grid).eta
    logger.info("transversalized: %d colors, %d balls perturbed, final eta %.4g",
                trace.n_colors, trace.n_perturbed, trace.final_eta)
    return s, trace
