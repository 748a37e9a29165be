"""
Quantitative Sard Trials

Random holomorphic polynomials, |f| <= 1 on the 11/10 ball: pick w in
[-delta, delta] and verify f - w is sigma-transverse, for several delta.
"""

import sys
from pathlib import Path
# Add project root to Python path
sys.path.insert(0, str(Path(__file__).parent.parent.parent.parent))

import pandas as pd

from src import config
from src.cli import run_sard_demo
from src.config import load_config
from src.sard import SardParams
from src.utils import banner, mark, write_table

OUTPUT_DIR = config.EXPERIMENTS_DIR / 'exp3_sard' / 'results'
DELTAS = (0.1, 0.05, 0.02)


def main(trials: int = 100):
    banner("QUANTITATIVE SARD: RANDOM POLYNOMIALS")
    rows = []
    for delta in DELTAS:
        cfg = load_config(out_dir=str(OUTPUT_DIR / f"delta_{delta}"), sard_delta=delta)
        df = run_sard_demo(cfg, trials)
        params = SardParams(delta, cfg.sard_p)
        rate = float(df['verified'].mean())
        rows.append({'delta': delta, 'sigma': params.sigma, 'trials': trials, 'verified_rate': rate,
                     'median_abs_w': float(df['w'].abs().median())})
        print(f"  {mark(rate == 1.0)} delta = {delta:<5} sigma = {params.sigma:.5f}  verified {100 * rate:.1f}%")
    summary = pd.DataFrame(rows)
    write_table(summary, OUTPUT_DIR / 'sard_summary.csv')
    print("\n" + "=" * 70)
    print(f"✓ Sard trials complete! Summary saved to {OUTPUT_DIR / 'sard_summary.csv'}")
    print("=" * 70 + "\n")


if __name__ == '__main__':
    main(int(sys.argv[1]) if len(sys.argv) > 1 else 100)
