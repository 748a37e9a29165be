"""
Scaling Study: Real Components of the Spheres Construction

Sweeps k over the configured list, counts real zero-set components of the
lattice section, and fits log N against log k.

Checks:
1. Does N grow like k^(n/2)?
2. Does the min inradius stay >= 1/(2 sqrt k) times eta?
3. Is the torus zero measure equidistributed (n = 1)?
4. Does the negative control (one quarter holds all quadric bumps) break it?
"""

import sys
from pathlib import Path
# Add project root to Python path
sys.path.insert(0, str(Path(__file__).parent.parent.parent.parent))

import pandas as pd

from src import config
from src.cli import print_scaling_report, run_scaling_study
from src.config import load_config
from src.constructions import build_concentrated_control
from src.model import ModelManifold, ScaledFrame
from src.utils import banner, mark, section, write_table
from src.zerolocus import equidistribution

OUTPUT_DIR = config.EXPERIMENTS_DIR / 'exp1_scaling' / 'results'


def negative_control(k_list, cells: int = 16, seed: int = config.DEFAULT_SEED) -> pd.DataFrame:
    """CV of the zero measure for the concentrated control on the 1-torus."""
    m = ModelManifold.torus(1)
    rows = []
    for k in k_list:
        stat = equidistribution(build_concentrated_control(m, ScaledFrame(k)), m, cells=cells, seed=seed)
        rows.append({'k': k, 'cv': stat.cv})
    return pd.DataFrame(rows)


def main(config_path=None):
    cfg = load_config(config_path, out_dir=str(OUTPUT_DIR))
    df, fit = run_scaling_study(cfg)
    print_scaling_report(df, fit, cfg.n)

    if cfg.model == 'torus' and cfg.n == 1:
        section("NEGATIVE CONTROL (CONCENTRATED QUADRIC BUMPS)")
        control = negative_control(cfg.k_list, cfg.cv_cells, cfg.seed)
        for _, row in control.iterrows():
            print(f"  k = {int(row['k']):>6}  CV = {row['cv']:.3f}  {mark(row['cv'] > 1.0)} CV > 1")
        write_table(control, OUTPUT_DIR / 'negative_control.csv', cfg.config_hash())

    print("\n" + "=" * 70)
    print(f"✓ Scaling study complete! Results saved to {OUTPUT_DIR}")
    print("=" * 70 + "\n")


if __name__ == '__main__':
    main(sys.argv[1] if len(sys.argv) > 1 else None)
