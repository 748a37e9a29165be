from pathlib import Path

import numpy as np
import pytest
from click.testing import CliRunner

from src.cli import main, random_polynomial, run_scaling_study
from src.config import load_config
from src.sard import verify_transverse
from src.utils import read_table


@pytest.fixture
def runner():
    return CliRunner()


def test_invariant_suite_passes(runner, tmp_path):
    result = runner.invoke(main, ['invariants', '--k-list', '100', '--out', str(tmp_path)])
    assert result.exit_code == 0, result.output
    df = read_table(tmp_path / 'invariants.csv')
    assert df['passed'].all()
    assert {'color count bounded in k', 'kappa is an involution', 'gradient matches finite differences',
            'eta non-increasing in epsilon', 'ball net covers the domain', 'standard pencil is real',
            'components are c-invariant', 'complex zeros closed under c'} <= set(df['check'])


def test_bad_config_exits_with_usage_code(runner, tmp_path):
    cfg = tmp_path / 'bad.cfg'
    cfg.write_text("n = 7\n", encoding='utf-8')
    result = runner.invoke(main, ['invariants', '--config', str(cfg), '--out', str(tmp_path)])
    assert result.exit_code == 2
    assert not (tmp_path / 'invariants.csv').exists()


def test_unparseable_k_list_exits_with_usage_code(runner, tmp_path):
    result = runner.invoke(main, ['invariants', '--k-list', '100,abc', '--out', str(tmp_path)])
    assert result.exit_code == 2


def test_corrupted_pencil_fails_reality(runner, tmp_path):
    result = runner.invoke(main, ['pencil', '--n', '1', '--k-list', '100', '--corrupt', '--out', str(tmp_path)])
    assert result.exit_code == 1
    assert not (tmp_path / 'pencil_summary.txt').exists()


def test_pencil_rejects_three_dimensions(runner, tmp_path):
    result = runner.invoke(main, ['pencil', '--n', '3', '--k-list', '100', '--out', str(tmp_path)])
    assert result.exit_code == 2


def test_sard_demo_writes_trials(runner, tmp_path):
    result = runner.invoke(main, ['sard-demo', '--trials', '5', '--out', str(tmp_path)])
    assert result.exit_code in (0, 1)
    df = read_table(tmp_path / 'sard_demo.csv')
    assert list(df['trial']) == [0, 1, 2, 3, 4]


def test_random_polynomial_is_bounded_on_the_ball():
    f = random_polynomial(np.random.default_rng(3))
    theta = np.linspace(0, 2 * np.pi, 97)
    ring = (1.1 * np.exp(1j * theta)).reshape(-1, 1)
    assert np.max(np.abs(f.value(ring))) <= 1.0 + 1e-9
    assert verify_transverse(f.minus(5.0), 0.01)[0]


@pytest.mark.slow
def test_scaling_writes_counts_and_fit(runner, tmp_path):
    result = runner.invoke(main, ['scaling', '--k-list', '100,400', '--out', str(tmp_path)])
    assert result.exit_code == 0, result.output
    df = read_table(tmp_path / 'scaling.csv')
    assert list(df['k']) == [100, 400]
    assert list(df['N_measured']) == [10, 20]
    fit = read_table(tmp_path / 'scaling_fit.csv')
    assert fit['slope'].iloc[0] == pytest.approx(0.5, abs=1e-9)
    assert (tmp_path / 'scaling.csv').read_text().startswith('# config_hash=')


@pytest.mark.slow
def test_torus2_config_scales_like_k(tmp_path):
    cfg = load_config(Path(__file__).parent.parent / 'configs' / 'torus2.cfg', out_dir=str(tmp_path))
    df, fit = run_scaling_study(cfg, workers=1, progress=False)
    assert list(df['k']) == [36, 64, 144, 256]
    assert list(df['N_measured']) == [1, 4, 9, 16]
    assert list(df['single_site']) == [True, False, False, False]
    assert fit.slope == pytest.approx(1.0, abs=0.1)


@pytest.mark.slow
def test_sard_demo_verifies_every_trial(runner, tmp_path):
    result = runner.invoke(main, ['sard-demo', '--trials', '50', '--out', str(tmp_path)])
    assert result.exit_code == 0, result.output
    df = read_table(tmp_path / 'sard_demo.csv')
    assert len(df) == 50
    assert df['verified'].all()
