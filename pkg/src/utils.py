"""
Utility functions for the real Donaldson lab.
"""

import sys
from pathlib import Path
sys.path.insert(0, str(Path(__file__).parent.parent))

from typing import Dict, Iterable

import numpy as np
import pandas as pd


class DisjointSet:
    """Union-find over hashable labels, path halving, smaller root wins."""

    def __init__(self):
        self.data = {}

    def __len__(self):
        return len(self.data)

    def makeset(self, x):
        self.data.setdefault(x, x)
        return self.data[x]

    def find(self, x):
        if x not in self.data:
            return None
        i = self.data[x]
        while i != self.data[i]:
            self.data[i] = self.data[self.data[i]]
            i = self.data[i]
        return i

    def union(self, x, y):
        i = self.find(x)
        j = self.find(y)
        if i is None:
            i = self.makeset(x)
        if j is None:
            j = self.makeset(y)
        if i < j:
            self.data[j] = i
        else:
            self.data[i] = j

    def union_pairs(self, left: Iterable, right: Iterable):
        for a, b in zip(left, right):
            self.union(a, b)

    def labels(self, items) -> np.ndarray:
        """Consecutive component labels 0..N-1 for items, in order of first root appearance."""
        roots = {}
        out = np.empty(len(items), dtype=np.int64)
        for pos, item in enumerate(items):
            root = self.find(item)
            if root is None:
                root = self.makeset(item)
            out[pos] = roots.setdefault(root, len(roots))
        return out


def winding_number(values: np.ndarray) -> float:
    """Winding of a closed sampled loop of complex values around 0.

    The loop is given without repeating the first sample. Phase increments
    are wrapped to (-pi, pi], so samples must be dense enough that no
    increment exceeds pi in absolute value.
    """
    values = np.asarray(values, dtype=complex)
    steps = np.angle(np.roll(values, -1) / values)
    return float(np.sum(steps) / (2.0 * np.pi))


def write_table(df: pd.DataFrame, path, config_hash: str = None) -> Path:
    """CSV with a leading '# config_hash=...' line, then header and rows."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8', newline='') as fh:
        if config_hash is not None:
            fh.write(f"# config_hash={config_hash}\n")
        df.to_csv(fh, index=False, float_format='%.10g')
    return path


def read_table(path) -> pd.DataFrame:
    return pd.read_csv(path, comment='#')


def write_record(record: Dict, path) -> Path:
    """Flat key = value record, one per line."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"{key} = {value!r}" if isinstance(value, float) else f"{key} = {value}"
             for key, value in record.items()]
    path.write_text('\n'.join(lines) + '\n', encoding='utf-8')
    return path


def banner(title: str, width: int = 70):
    print("=" * width)
    print(f" {title}")
    print("=" * width)


def section(title: str, width: int = 70):
    print(f"\n{title:^{width}}")
    print("-" * width)


def mark(ok: bool) -> str:
    return "✓" if ok else "✗"


# Test
if __name__ == '__main__':
    ds = DisjointSet()
    ds.union(3, 1)
    ds.union(2, 1)
    ds.makeset(7)
    print(f"Labels: {ds.labels([1, 2, 3, 7])}")
    loop = np.exp(2j * np.pi * np.arange(64) / 64)
    print(f"Winding of unit circle: {winding_number(loop):.3f}")
