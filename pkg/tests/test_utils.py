import numpy as np
import pandas as pd

from src.utils import DisjointSet, mark, read_table, winding_number, write_record, write_table


def test_disjoint_set_labels_follow_first_appearance():
    ds = DisjointSet()
    ds.union(3, 1)
    ds.union(2, 1)
    ds.makeset(7)
    labels = ds.labels([7, 1, 2, 3, 9])
    assert labels.tolist() == [0, 1, 1, 1, 2]
    assert ds.find(3) == ds.find(2) == 1


def test_disjoint_set_find_unknown_is_none():
    assert DisjointSet().find('x') is None


def test_winding_of_circles():
    theta = 2 * np.pi * np.arange(64) / 64
    loop = np.exp(1j * theta)
    assert abs(winding_number(loop) - 1.0) < 1e-12
    assert abs(winding_number(loop[::-1]) + 1.0) < 1e-12
    assert abs(winding_number(loop ** 2) - 2.0) < 1e-12
    assert abs(winding_number(3.0 + loop)) < 1e-12


def test_table_carries_config_hash(tmp_path):
    df = pd.DataFrame({'k': [100, 400], 'N': [10, 20]})
    path = write_table(df, tmp_path / 'sub' / 't.csv', 'abc123')
    assert path.read_text().splitlines()[0] == '# config_hash=abc123'
    back = read_table(path)
    assert back['N'].tolist() == [10, 20]


def test_record_writes_floats_with_repr(tmp_path):
    path = write_record({'eta': 0.1, 'label': 'x'}, tmp_path / 'r.txt')
    assert path.read_text() == "eta = 0.1\nlabel = x\n"


def test_mark():
    assert mark(True) == "✓"
    assert mark(False) == "✗"
