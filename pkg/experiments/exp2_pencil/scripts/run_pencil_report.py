"""
Pencil Report: Real Lefschetz Pencils on the Model Manifolds

Builds the standard symmetric pair for n = 1 and n = 2, certifies it, then
runs the corrupted pair (one bump without its conjugate) as a negative control
that must fail the reality item.
"""

import sys
from pathlib import Path
# Add project root to Python path
sys.path.insert(0, str(Path(__file__).parent.parent.parent.parent))

from src import config
from src.cli import print_pencil_report, run_pencil_report
from src.config import load_config
from src.errors import CertificationFailure
from src.utils import banner, mark

OUTPUT_DIR = config.EXPERIMENTS_DIR / 'exp2_pencil' / 'results'

RUNS = [
    {'model': 'torus', 'n': 1, 'k_list': (100,)},
    {'model': 'flat', 'n': 1, 'k_list': (100,), 'ball_radius': 0.5},
    {'model': 'torus', 'n': 2, 'k_list': (64,)},
]


def main():
    failures = 0
    for run in RUNS:
        out = OUTPUT_DIR / f"{run['model']}_n{run['n']}_k{run['k_list'][0]}"
        cfg = load_config(out_dir=str(out), **run)
        try:
            _, items, summary = run_pencil_report(cfg)
        except CertificationFailure as exc:
            print(f"✗ {run}: {exc}")
            failures += 1
            continue
        print_pencil_report(summary, items)
        failures += sum(not it.passed for it in items)

    banner("NEGATIVE CONTROL: CORRUPTED s1")
    cfg = load_config(out_dir=str(OUTPUT_DIR / 'corrupt'), model='torus', n=1, k_list=(100,))
    try:
        run_pencil_report(cfg, corrupt=True)
        print(f"{mark(False)} corrupted pair was certified")
        failures += 1
    except CertificationFailure as exc:
        print(f"{mark(exc.item == 4)} rejected at item {exc.item}")
        failures += exc.item != 4

    print("\n" + "=" * 70)
    print(f"{mark(failures == 0)} Pencil report complete ({failures} failures). Results in {OUTPUT_DIR}")
    print("=" * 70 + "\n")
    return failures


if __name__ == '__main__':
    sys.exit(1 if main() else 0)
