"""
Command-line driver for the real Donaldson lab.

    python -m src.cli scaling     --config cfg.txt --out results/
    python -m src.cli pencil      --k-list 64
    python -m src.cli invariants
    python -m src.cli sard-demo   --trials 50

Exit codes: 0 pass, 1 certification failure (or aborted run), 2 config error.
"""

import sys
import math
import logging
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import click
import numpy as np
import pandas as pd
from scipy.spatial import cKDTree
from tqdm import tqdm

from src import config
from src.analysis import SlopeFit, fit_loglog
from src.config import ExperimentConfig, load_config
from src.constructions import (LatticeConfig, build_full_torus_section, build_nonvanishing_section,
                               build_pencil_pair, build_spheres_section)
from src.errors import (CertificationFailure, ConfigError, DonaldsonLabError, NoAdmissibleW, PairTransversalityError,
                        RunAborted, SymmetryError)
from src.fields import Bump, UNIT, kappa, polynomial_model, symmetry_certificate
from src.model import (ModelManifold, ScaledFrame, colored_ball_net, grid_points_complex, real_grid, real_lattice,
                       to_real)
from src.pencil import base_locus, certify, critical_set, make_pencil
from src.sard import LocalFunction, SardParams, pick_real_w, verify_transverse
from src.transversality import eta_transversality
from src.utils import banner, mark, section, write_record, write_table
from src.zerolocus import complex_zero_count, equidistribution, packing_check, polish_zeros, real_components

logger = logging.getLogger(__name__)

REAL_EPSILON = 0.25             # sublevel threshold for eta on the real locus


def manifold_for(cfg: ExperimentConfig) -> ModelManifold:
    if cfg.model == 'torus':
        return ModelManifold.torus(cfg.n)
    return ModelManifold.flat(cfg.n, cfg.ball_radius)


def build_section(cfg: ExperimentConfig, m: ModelManifold, f: ScaledFrame):
    if cfg.construction == 'spheres':
        return build_spheres_section(m, f, LatticeConfig(cfg.mesh_D))
    return build_nonvanishing_section(m, f)


# ---------------------------------------------------------------- scaling study

def scaling_row(cfg: ExperimentConfig, k: int) -> dict:
    """One k of the scaling study."""
    m = manifold_for(cfg)
    f = ScaledFrame(k)
    s = build_section(cfg, m, f)
    g = real_grid(m, f, per_gk_unit=cfg.resolution)
    inv = real_components(s, m, g, seed=cfg.seed)
    g_eta = g if g.cell_diameter_gk <= config.MAX_AH_CELL else real_grid(m, f, per_gk_unit=5.0 * math.sqrt(m.n) + 0.5)
    eta = eta_transversality(s, g_eta, REAL_EPSILON, restrict_real=True).eta
    packing = packing_check(inv, m, f, eta)
    cv = np.nan
    if m.is_torus and m.n == 1:
        cells = cfg.cv_cells
        cv = equidistribution(build_full_torus_section(m, f), m, cells=cells, seed=cfg.seed).cv
    sites = len(s.bumps) if cfg.construction == 'spheres' else 0
    single_site = cfg.construction == 'spheres' and real_lattice(m, f, cfg.mesh_D).degenerate
    return {'k': k, 'sites': sites, 'single_site': single_site, 'N_measured': inv.count,
            'N_over_k_half_n': inv.count / k ** (m.n / 2.0),
            'min_inradius_sqrtk': inv.min_inradius * f.sqrt_k if inv.count else np.nan,
            'eta': eta, 'cv': cv, 'packing_ok': packing.ok}


def _guarded_row(args):
    cfg, k = args
    try:
        return scaling_row(cfg, k)
    except DonaldsonLabError as exc:
        raise RunAborted(f"k={k}", exc) from exc


def run_scaling_study(cfg: ExperimentConfig, workers: int = config.WORKERS, progress: bool = True):
    """Rows per k (in k order) plus the log-log slope of N against k. Writes scaling.csv."""
    jobs = [(cfg, k) for k in cfg.k_list]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(tqdm(pool.map(_guarded_row, jobs), total=len(jobs), desc="k sweep", disable=not progress))
    else:
        rows = [_guarded_row(job) for job in tqdm(jobs, desc="k sweep", disable=not progress)]
    df = pd.DataFrame(rows)
    fit = None
    # one site per axis is a collapsed mesh, not a point of the k^(n/2) law
    fitted = df[(df['N_measured'] > 0) & ~df['single_site'].astype(bool)]
    if len(fitted) < len(df):
        logger.info("slope fit skips k=%s", df.loc[~df.index.isin(fitted.index), 'k'].tolist())
    if len(fitted) >= 2:
        fit = fit_loglog(fitted['k'], fitted['N_measured'])
    out = Path(cfg.out_dir)
    write_table(df, out / 'scaling.csv', cfg.config_hash())
    if fit is not None:
        write_table(pd.DataFrame([fit.as_record()]), out / 'scaling_fit.csv', cfg.config_hash())
    return df, fit


def print_scaling_report(df: pd.DataFrame, fit: SlopeFit, n: int):
    banner("SCALING STUDY: REAL COMPONENTS VS k")
    print(f"\n{'k':>7} {'sites':>6} {'N':>6} {'N/k^(n/2)':>10} {'r_min*sqrt(k)':>14} {'eta':>8} {'CV':>7}")
    print("-" * 70)
    for _, row in df.iterrows():
        print(f"{int(row['k']):>7} {int(row['sites']):>6} {int(row['N_measured']):>6} "
              f"{row['N_over_k_half_n']:>10.4f} {row['min_inradius_sqrtk']:>14.4f} "
              f"{row['eta']:>8.4f} {row['cv']:>7.3f}"
              + ("  single site, not fitted" if row['single_site'] else ""))
    section("FIT")
    if fit is None:
        print("⚠ fewer than two nonzero counts; no slope")
        return
    expected = n / 2.0
    print(f"slope = {fit.slope:.4f}  95% CI [{fit.ci_low:.4f}, {fit.ci_high:.4f}]  (expected {expected})")
    print(f"{mark(fit.within(expected, 0.05 if n == 1 else 0.1))} slope near k^(n/2)")


# ---------------------------------------------------------------- pencil report

def run_pencil_report(cfg: ExperimentConfig, corrupt: bool = False):
    """Build a pencil, run base-locus/critical-set censuses and the four certificates."""
    if cfg.n not in (1, 2):
        raise ConfigError("pencil reports need n in {1, 2}")
    m = manifold_for(cfg)
    k = cfg.k_list[0]
    f = ScaledFrame(k)
    s0, s1 = build_pencil_pair(m, f)
    if corrupt:
        x = tuple([0.3 + 0.2j] * m.n)
        s1 = s1.with_bumps(s1.bumps + (Bump(x, 0.5 + 0j, UNIT, 1.0, 2.0),))
    pts = real_grid(m, f, per_gk_unit=4).points().astype(complex)
    C0 = float(np.max(np.abs(s0.evaluate(pts))))
    chi = cfg.chi_fraction * C0
    epsilon = cfg.eps_fraction * chi
    try:
        p = make_pencil(s0, s1, m, epsilon)
    except SymmetryError as exc:
        raise CertificationFailure(str(exc), item=4) from exc
    except PairTransversalityError as exc:
        raise CertificationFailure(str(exc), item=2) from exc

    summary = {'k': k, 'n': m.n, 'model': cfg.model, 'chi': chi, 'epsilon': epsilon}
    if m.n >= 2:
        summary['base_points'] = len(base_locus(p))
    else:
        summary['base_points'] = 'not applicable (codim 4 > dim)'
    crit = critical_set(p, chi=chi)
    summary.update({'critical_points': len(crit), 'real_critical_points': sum(c.real for c in crit),
                    'rho0': p.rho0, 'gamma_fraction': p.gamma_stats.fraction,
                    'gamma_max_distance': p.gamma_stats.max_distance, 'reality_sup': p.reality_sup})
    items = certify(p)
    for it in items:
        summary[f'item{it.item}'] = f"{'pass' if it.passed else 'FAIL'} ({it.value:.6g})"

    out = Path(cfg.out_dir)
    write_record(summary, out / 'pencil_summary.txt')
    write_table(p.crit_frame(), out / 'pencil_critical.csv', cfg.config_hash())
    if m.n >= 2:
        write_table(p.base_frame(), out / 'pencil_base.csv', cfg.config_hash())
    return p, items, summary


def print_pencil_report(summary: dict, items):
    banner("REAL LEFSCHETZ PENCIL CERTIFICATE")
    for key, value in summary.items():
        if not key.startswith('item'):
            print(f"  {key:<22} {value}")
    section("CERTIFICATES")
    for it in items:
        print(f"  {mark(it.passed)} item {it.item}: {it.name:<28} {it.value:.6g}")


# ---------------------------------------------------------------- invariant suite

def sample_points(m: ModelManifold, rng: np.random.Generator, count: int = 2000) -> np.ndarray:
    """Uniform ambient points in the fundamental domain (torus) or the ball (flat)."""
    if m.is_torus:
        return rng.random((count, m.n)) + 1j * rng.random((count, m.n))
    z = m.ball_radius * (2.0 * rng.random((4 * count, m.n)) - 1.0 + 1j * (2.0 * rng.random((4 * count, m.n)) - 1.0))
    return z[np.sqrt(np.sum(np.abs(z) ** 2, axis=1)) <= m.ball_radius][:count]


def fd_gradient(s, z: np.ndarray, h: float) -> np.ndarray:
    """Central differences of s along [x1, y1, ...], same layout as SectionField.gradient."""
    out = np.empty(z.shape[:-1] + (2 * z.shape[-1],), dtype=complex)
    for j in range(z.shape[-1]):
        for part, step in ((0, h), (1, 1j * h)):
            e = np.zeros(z.shape[-1], dtype=complex)
            e[j] = step
            out[:, 2 * j + part] = (s.evaluate(z + e) - s.evaluate(z - e)) / (2 * h)
    return out


def net_gap(m: ModelManifold, f: ScaledFrame, centers: np.ndarray, points: np.ndarray) -> float:
    """Largest g_k distance from a point to its nearest net center."""
    if m.is_torus:
        tree = cKDTree(to_real(m.wrap(centers)), boxsize=1.0)
        dist, _ = tree.query(to_real(m.wrap(points)))
    else:
        dist, _ = cKDTree(to_real(centers)).query(to_real(points))
    return float(dist.max()) * f.sqrt_k


def run_invariant_suite(cfg: ExperimentConfig) -> pd.DataFrame:
    """Cross-module property checks at the first k of the config; one row per check."""
    m = manifold_for(cfg)
    k = cfg.k_list[0]
    f = ScaledFrame(k)
    rows = []

    def check(name, passed, detail=''):
        rows.append({'check': name, 'passed': bool(passed), 'detail': str(detail)})

    check('config round trip', ExperimentConfig.from_text(cfg.to_text()) == cfg, cfg.config_hash())

    s = build_spheres_section(m, f, LatticeConfig(cfg.mesh_D))
    g = real_grid(m, f, per_gk_unit=cfg.resolution)
    cert = symmetry_certificate(s, sample_points(m, np.random.default_rng(cfg.seed)))
    check('spheres section symmetric', cert.symmetric, f"{cert.value:.3g}")

    inv = real_components(s, m, g, seed=cfg.seed)
    if m.is_torus:
        sites = len(real_lattice(m, f, cfg.mesh_D).points)
        expected = 2 * sites if m.n == 1 else sites
        check('component count matches sites', inv.count == expected, f"N={inv.count} expected={expected}")
    finer = real_components(s, m, g.refined(2), seed=cfg.seed)
    check('resolution stability', finer.count == inv.count, f"{inv.count} -> {finer.count}")
    packing = packing_check(inv, m, f)
    check('packing inequality', packing.ok, f"N r^n = {packing.lhs:.4g} <= {packing.volume:.4g}")

    empty = build_nonvanishing_section(m, f)
    floor = float(np.min(np.abs(empty.evaluate(grid_points_complex(m, g, real_only=True)))))
    check('nonvanishing floor >= 1/4', floor >= 0.25, f"{floor:.4f}")
    check('nonvanishing has no real zeros', real_components(empty, m, g, seed=cfg.seed).count == 0)

    deltas = np.linspace(0.01, cfg.sard_delta, 20)
    sigmas = [SardParams(d, cfg.sard_p).sigma for d in deltas]
    check('sigma monotone in delta', all(a < b for a, b in zip(sigmas, sigmas[1:])))
    params = SardParams(cfg.sard_delta, cfg.sard_p)
    w = pick_real_w(LocalFunction.constant(1, 0.0), params)
    check('sard clears the tube at 0', abs(w) > params.sigma and abs(w) <= params.delta, f"w={w:.5f}")

    if m.is_torus and m.n == 1:
        counts = [colored_ball_net(m, ScaledFrame(j * k), 5.0).n_colors for j in (1, 4, 16)]
        bound = 2 * (math.ceil(5.0) + 1) ** 2
        check('color count bounded in k', max(counts) <= bound, f"{counts} <= {bound}")

    check('kappa is an involution', kappa(kappa(s)).bumps == s.bumps)
    rng = np.random.default_rng(cfg.seed)
    z = sample_points(m, rng, 64)
    grad = s.gradient(z)
    fd = fd_gradient(s, z, config.GRADIENT_FD_STEP / f.sqrt_k)
    err = float(np.max(np.abs(grad - fd)))
    check('gradient matches finite differences', err <= 1e-6 * (1.0 + float(np.max(np.abs(grad)))), f"{err:.3g}")

    g_eta = g if g.cell_diameter_gk <= config.MAX_AH_CELL else real_grid(m, f, per_gk_unit=5.0 * math.sqrt(m.n) + 0.5)
    etas = [eta_transversality(s, g_eta, e, restrict_real=True).eta for e in (0.05, 0.1, 0.2, 0.4)]
    check('eta non-increasing in epsilon', all(a >= b for a, b in zip(etas, etas[1:])),
          ", ".join(f"{e:.4g}" for e in etas))

    gap = net_gap(m, f, colored_ball_net(m, f, 5.0).all_centers(), sample_points(m, rng, 500))
    check('ball net covers the domain', gap <= 1.0 + 1e-9, f"max g_k gap {gap:.4f}")

    flat = ModelManifold.flat(1, 0.5)
    p = make_pencil(*build_pencil_pair(flat, ScaledFrame(100)), flat, 0.1)
    check('standard pencil is real', p.reality_sup < 1e-8, f"{p.reality_sup:.3g}")

    on_real = max((float(np.max(np.abs(s.evaluate(c.points.astype(complex)).imag))) for c in inv.components),
                  default=0.0)
    check('components are c-invariant', on_real < 1e-10, f"max |Im s| = {on_real:.3g}")
    if m.is_torus and m.n == 1:
        full = build_full_torus_section(m, f)
        census = complex_zero_count(full, m, seed=cfg.seed)
        zeros, _ = polish_zeros(full, census)
        zeros = m.wrap(zeros.reshape(-1, 1))
        mirror = m.involution(zeros)
        miss = max((float(np.min(np.abs(m.displacement(mirror[i], zeros)[:, 0]))) for i in range(len(zeros))),
                   default=0.0)
        check('complex zeros closed under c', miss <= census.cell_size, f"max partner gap {miss:.3g}")
    return pd.DataFrame(rows)


# ---------------------------------------------------------------- sard demo

def random_polynomial(rng: np.random.Generator, degree: int = 5) -> LocalFunction:
    """Random holomorphic polynomial in one variable, scaled so |f| <= 1 on B(0, 11/10)."""
    deg = int(rng.integers(1, degree + 1))
    coeffs = rng.normal(size=deg + 1) + 1j * rng.normal(size=deg + 1)
    model = polynomial_model([(j,) for j in range(deg + 1)], coeffs)
    theta = np.linspace(0, 2 * np.pi, 512, endpoint=False)
    ring = (1.1 * np.exp(1j * theta)).reshape(-1, 1)
    bound = float(np.max(np.abs(model.evaluate(ring)[0])))        # max modulus on the boundary
    return LocalFunction.from_model(model, 1, scale=1.0 / bound)


def run_sard_demo(cfg: ExperimentConfig, trials: int = 50, progress: bool = True) -> pd.DataFrame:
    rng = np.random.default_rng(cfg.seed)
    params = SardParams(cfg.sard_delta, cfg.sard_p)
    rows = []
    for i in tqdm(range(trials), desc="sard trials", disable=not progress):
        f = random_polynomial(rng)
        try:
            w = pick_real_w(f, params, verify=False)
        except NoAdmissibleW as exc:
            logger.warning("trial %d: %s", i, exc)
            rows.append({'trial': i, 'w': np.nan, 'verified': False, 'margin': np.nan})
            continue
        ok, margin = verify_transverse(f.minus(w), params.sigma)
        rows.append({'trial': i, 'w': w, 'verified': ok, 'margin': margin})
    df = pd.DataFrame(rows)
    write_table(df, Path(cfg.out_dir) / 'sard_demo.csv', cfg.config_hash())
    return df


# ---------------------------------------------------------------- click surface

def _parse_k_list(text):
    if text is None:
        return None
    try:
        return tuple(int(v) for v in text.replace(' ', '').split(',') if v)
    except ValueError as exc:
        raise ConfigError(f"--k-list: cannot parse {text!r}") from exc


def common_options(func):
    func = click.option('--resolution', type=int, default=None, help='Grid samples per g_k unit')(func)
    func = click.option('--k-list', 'k_list', default=None, help='Comma-separated k values')(func)
    func = click.option('--seed', type=int, default=None, help='Jitter seed')(func)
    func = click.option('--out', 'out_dir', default=None, help='Output directory')(func)
    func = click.option('--config', 'config_path', default=None, help='Key-value config file')(func)
    return func


def _load(config_path, out_dir, seed, k_list, resolution, **extra) -> ExperimentConfig:
    try:
        return load_config(config_path, out_dir=out_dir, seed=seed, k_list=_parse_k_list(k_list),
                           resolution=resolution, **extra)
    except ConfigError as exc:
        click.echo(f"✗ Config error: {exc}", err=True)
        sys.exit(2)


def _abort(exc: Exception, code: int = 1):
    click.echo(f"✗ {exc}", err=True)
    sys.exit(code)


@click.group()
@click.option('--log-level', default=config.LOG_LEVEL, help='Logging level')
def main(log_level):
    """Numerical lab for real Donaldson theory."""
    logging.basicConfig(level=getattr(logging, str(log_level).upper(), logging.INFO),
                        format='%(asctime)s %(name)s %(levelname)s: %(message)s')


@main.command()
@common_options
@click.option('--n', type=int, default=None, help='Complex dimension')
@click.option('--construction', default=None, help='spheres or empty')
def scaling(config_path, out_dir, seed, k_list, resolution, n, construction):
    """Component counts vs k with a log-log fit."""
    cfg = _load(config_path, out_dir, seed, k_list, resolution, n=n, construction=construction)
    try:
        df, fit = run_scaling_study(cfg)
    except DonaldsonLabError as exc:
        _abort(exc)
    print_scaling_report(df, fit, cfg.n)


@main.command()
@common_options
@click.option('--n', type=int, default=None, help='Complex dimension')
@click.option('--model', default=None, help='torus or flat')
@click.option('--corrupt', is_flag=True, help='Add a conjugate-less bump (negative control)')
def pencil(config_path, out_dir, seed, k_list, resolution, n, model, corrupt):
    """Real Lefschetz pencil certification."""
    cfg = _load(config_path, out_dir, seed, k_list, resolution, n=n, model=model)
    try:
        _, items, summary = run_pencil_report(cfg, corrupt=corrupt)
    except ConfigError as exc:
        _abort(exc, 2)
    except DonaldsonLabError as exc:
        _abort(exc)
    print_pencil_report(summary, items)
    failed = [it for it in items if not it.passed]
    if failed:
        _abort(CertificationFailure(failed[0].name, item=failed[0].item))


@main.command()
@common_options
def invariants(config_path, out_dir, seed, k_list, resolution):
    """Run the cross-module invariant checks."""
    cfg = _load(config_path, out_dir, seed, k_list, resolution)
    try:
        df = run_invariant_suite(cfg)
    except DonaldsonLabError as exc:
        _abort(exc)
    write_table(df, Path(cfg.out_dir) / 'invariants.csv', cfg.config_hash())
    banner("INVARIANT SUITE")
    for _, row in df.iterrows():
        print(f"  {mark(row['passed'])} {row['check']:<36} {row['detail']}")
    failures = int((~df['passed']).sum())
    print(f"\n{len(df) - failures}/{len(df)} passed")
    if failures:
        sys.exit(1)


@main.command(name='sard-demo')
@common_options
@click.option('--trials', type=int, default=50, help='Random polynomials to try')
def sard_demo(config_path, out_dir, seed, k_list, resolution, trials):
    """Randomized quantitative-Sard trials."""
    cfg = _load(config_path, out_dir, seed, k_list, resolution)
    try:
        df = run_sard_demo(cfg, trials)
    except DonaldsonLabError as exc:
        _abort(exc)
    banner("QUANTITATIVE SARD: RANDOM POLYNOMIALS")
    params = SardParams(cfg.sard_delta, cfg.sard_p)
    print(f"delta = {params.delta}, p = {params.p}, sigma = {params.sigma:.5f}")
    verified = int(df['verified'].sum())
    print(f"{mark(verified == len(df))} {verified}/{len(df)} verified sigma-transverse after subtraction")
    if verified < len(df):
        sys.exit(1)


if __name__ == '__main__':
    main()
