"""
Configuration for the real Donaldson lab.
Handles numerical tolerances, default experiment parameters and paths.

Environment overrides (read from .env if present):
    RDL_SEED        default jitter seed
    RDL_OUT_DIR     results directory
    RDL_LOG_LEVEL   logging level for the CLI
    RDL_WORKERS     parallel k runs in the scaling study
"""

import os
import math
import hashlib
from dataclasses import dataclass, fields, replace, asdict
from pathlib import Path
from typing import Tuple

from dotenv import load_dotenv

from src.errors import ConfigError

# Load environment variables
load_dotenv()

# Numerical tolerances
VERTEX_DEGENERACY_TOL = 1e-12
SYMMETRY_TOL = 1e-9
WINDING_TOL = 0.1
GRADIENT_FD_STEP = 1e-5
HESSIAN_FD_STEP = 1e-4          # in g_k units
MAX_AH_CELL = 0.2               # g_k cell diameter required by grid estimates
NEWTON_DEDUPE = 0.5             # g_k distance for deduplicating Newton roots

# Sard defaults
SARD_DELTA0 = 0.1
SARD_P = 2

# Pencil defaults (fractions of C0(s0))
CHI_FRACTION = 0.2
EPS_FRACTION = 0.5

# Perturbation budget: sum |w| <= fraction * C0(s)
BUDGET_FRACTION = 0.1

# Symmetric transversalization
ETA_TARGET = 0.1               # inputs already this transverse are returned unchanged
RECENTER_FLOOR = 0.4           # least |sigma + kappa(sigma)| on an off-real ball before it is moved
NEAR_REAL_GK = 4.0             # off-real balls closer than this (d_k(x, c(x))) are checked

# Gaussian rate of the concentrated section, chosen so |sigma| = 1/2 at d_k = 1
SIGMA_RATE = math.log(2.0)

MODEL_KINDS = ('torus', 'flat')
CONSTRUCTIONS = ('spheres', 'empty')

# Paths
PROJECT_ROOT = Path(__file__).parent.parent
RESULTS_DIR = Path(os.getenv('RDL_OUT_DIR', PROJECT_ROOT / 'results'))
EXPERIMENTS_DIR = PROJECT_ROOT / 'experiments'

DEFAULT_SEED = int(os.getenv('RDL_SEED', '20240'))
LOG_LEVEL = os.getenv('RDL_LOG_LEVEL', 'INFO')
WORKERS = int(os.getenv('RDL_WORKERS', '1'))


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment run. Round-trips through to_text()/from_text() exactly."""
    model: str = 'torus'
    n: int = 1
    k_list: Tuple[int, ...] = (100, 400, 1600, 6400)
    mesh_D: float = 2.0
    construction: str = 'spheres'
    resolution: int = 8             # grid samples per g_k unit length
    cv_cells: int = 16
    ball_radius: float = 1.0        # FlatBall only, g units
    sard_delta: float = 0.1
    sard_p: int = SARD_P
    chi_fraction: float = CHI_FRACTION
    eps_fraction: float = EPS_FRACTION
    budget_fraction: float = BUDGET_FRACTION
    out_dir: str = str(RESULTS_DIR)
    seed: int = DEFAULT_SEED

    def to_text(self) -> str:
        """Human-readable key = value lines."""
        lines = []
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, tuple):
                text = ', '.join(str(v) for v in value)
            elif isinstance(value, float):
                text = repr(value)
            else:
                text = str(value)
            lines.append(f"{f.name} = {text}")
        return '\n'.join(lines) + '\n'

    @classmethod
    def from_text(cls, text: str) -> 'ExperimentConfig':
        known = {f.name: f for f in fields(cls)}
        values = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split('#', 1)[0].strip()
            if not line:
                continue
            if '=' not in line:
                raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
            key, value = (part.strip() for part in line.split('=', 1))
            if key not in known:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
            values[key] = _parse_value(known[key].type, value, key)
        return cls(**values)

    def config_hash(self) -> str:
        return hashlib.sha256(self.to_text().encode('utf-8')).hexdigest()[:12]

    def with_overrides(self, **overrides) -> 'ExperimentConfig':
        return replace(self, **{k: v for k, v in overrides.items() if v is not None})

    def as_dict(self) -> dict:
        return asdict(self)

    def validate(self) -> 'ExperimentConfig':
        """Raise ConfigError on any out-of-range field."""
        problems = []
        if self.model not in MODEL_KINDS:
            problems.append(f"model must be one of {MODEL_KINDS}")
        if not 1 <= self.n <= 3:
            problems.append("n must be in 1..3")
        if not self.k_list or any(k < 1 for k in self.k_list):
            problems.append("k_list must hold positive integers")
        if self.mesh_D <= 0:
            problems.append("mesh_D must be positive")
        if self.construction not in CONSTRUCTIONS:
            problems.append(f"construction must be one of {CONSTRUCTIONS}")
        if self.resolution < 5:
            problems.append("resolution must be >= 5 samples per g_k unit")
        if self.cv_cells < 1:
            problems.append("cv_cells must be positive")
        if self.ball_radius <= 0:
            problems.append("ball_radius must be positive")
        if not 0 < self.sard_delta <= SARD_DELTA0:
            problems.append(f"sard_delta must lie in (0, {SARD_DELTA0}]")
        if self.sard_p < 1:
            problems.append("sard_p must be >= 1")
        if not 0 < self.chi_fraction < 1:
            problems.append("chi_fraction must lie in (0, 1)")
        if not 0 < self.eps_fraction <= 1:
            problems.append("eps_fraction must lie in (0, 1]")
        if self.budget_fraction <= 0:
            problems.append("budget_fraction must be positive")
        if problems:
            raise ConfigError('; '.join(problems))
        return self


def _parse_value(annotation, text: str, key: str):
    kind = annotation if isinstance(annotation, str) else getattr(annotation, '__name__', str(annotation))
    try:
        if 'Tuple' in str(kind) or 'tuple' in str(kind):
            return tuple(int(v) for v in text.replace(' ', '').split(',') if v)
        if kind in ('int', int):
            return int(text)
        if kind in ('float', float):
            return float(text)
    except ValueError as exc:
        raise ConfigError(f"{key}: cannot parse {text!r}") from exc
    return text


def load_config(path=None, **overrides) -> ExperimentConfig:
    """Read a key-value config file (or defaults), apply overrides, validate."""
    if path is None:
        cfg = ExperimentConfig()
    else:
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        cfg = ExperimentConfig.from_text(path.read_text(encoding='utf-8'))
    return cfg.with_overrides(**overrides).validate()


def save_config(cfg: ExperimentConfig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(cfg.to_text(), encoding='utf-8')
    return path


def validate_config(cfg: ExperimentConfig = None):
    """Validate a config and report, like a preflight check."""
    cfg = (cfg or ExperimentConfig()).validate()
    print(f"✓ Configuration valid (hash {cfg.config_hash()})")
    return cfg


if __name__ == '__main__':
    validate_config()
