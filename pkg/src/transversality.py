"""
Grid measurements of the AH constants and of eta-transversality.

All constants are expressed at scale g_k:
    C0   = sup |s|
    C1   = sup |grad s| / sqrt(k)        (largest singular value of the real Jacobian)
    C2   = sup |Hess s| / k              (finite differences of the exact gradient)
    Cbar = sup |dbar s| / sqrt(k)        (bump gauge; only the cutoff residue survives)

eta is the least singular value of the real Jacobian, i.e. the inverse norm
of the minimal right inverse, over the sublevel set {|s| <= epsilon}.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from src import config
from src.fields import SectionField
from src.model import GridSpec, to_complex

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AHReport:
    C0: float
    C1: float
    C2: float
    Cbar: float
    cell_diameter: float
    n_points: int

    def as_record(self) -> dict:
        return {'C0': self.C0, 'C1': self.C1, 'C2': self.C2, 'Cbar': self.Cbar,
                'cell_diameter': self.cell_diameter, 'n_points': self.n_points}


@dataclass(frozen=True)
class TransversalityReport:
    epsilon: float
    eta: float
    witness: Optional[np.ndarray]
    restrict_real: bool
    lipschitz_correction: float
    n_sublevel: int

    @property
    def certified_eta(self) -> float:
        """Grid eta minus the Lipschitz correction, floored at 0."""
        if np.isinf(self.eta):
            return self.eta
        return max(0.0, self.eta - self.lipschitz_correction)

    def as_record(self) -> dict:
        return {'epsilon': self.epsilon, 'eta': self.eta, 'restrict_real': self.restrict_real,
                'lipschitz_correction': self.lipschitz_correction, 'n_sublevel': self.n_sublevel,
                'witness': None if self.witness is None else np.round(self.witness, 12).tolist()}


def grid_points(s: SectionField, g: GridSpec) -> np.ndarray:
    """Complex points of a grid: n real axes means the real locus, 2n the ambient space."""
    pts = g.points()
    if pts.shape[1] == s.n:
        return pts.astype(complex)
    if pts.shape[1] == 2 * s.n:
        return to_complex(pts)
    raise ValueError(f"grid has {pts.shape[1]} axes, field has n={s.n}")


def jacobian_singular_values(grad: np.ndarray):
    """Largest and least singular value of the real 2 x 2n Jacobian of a complex scalar."""
    re, im = grad.real, grad.imag
    a = np.sum(re * re, axis=1)
    b = np.sum(re * im, axis=1)
    c = np.sum(im * im, axis=1)
    mid = 0.5 * (a + c)
    rad = np.sqrt(np.maximum(0.25 * (a - c) ** 2 + b ** 2, 0.0))
    return np.sqrt(mid + rad), np.sqrt(np.maximum(mid - rad, 0.0))


def hessian_fd(s: SectionField, z: np.ndarray, step_gk: float = config.HESSIAN_FD_STEP) -> np.ndarray:
    """(P, 2n, 2n) complex second derivatives by central differences of the exact gradient."""
    z = np.asarray(z, dtype=complex).reshape(-1, s.n)
    h = step_gk / s.sqrt_k
    cols = []
    for axis in range(2 * s.n):
        e = np.zeros(s.n, dtype=complex)
        e[axis // 2] = 1.0 if axis % 2 == 0 else 1j
        cols.append((s.gradient(z + h * e) - s.gradient(z - h * e)) / (2.0 * h))
    return np.stack(cols, axis=2)


def ah_report(s: SectionField, g: GridSpec, points: np.ndarray = None) -> AHReport:
    """The four AH constants over a grid (cell diameter <= 0.2 in g_k)."""
    g.require(config.MAX_AH_CELL)
    z = grid_points(s, g) if points is None else np.asarray(points, dtype=complex).reshape(-1, s.n)
    value, grad = s.value_and_gradient(z)
    smax, _ = jacobian_singular_values(grad)
    hess = hessian_fd(s, z)
    c2 = np.sqrt(np.sum(np.abs(hess) ** 2, axis=(1, 2))) / s.k
    dbar = s.gauge_dbar(z)
    cbar = np.sqrt(np.sum(np.abs(dbar) ** 2, axis=1)) / s.sqrt_k
    report = AHReport(C0=float(np.max(np.abs(value))), C1=float(np.max(smax)) / s.sqrt_k,
                      C2=float(np.max(c2)), Cbar=float(np.max(cbar)),
                      cell_diameter=g.cell_diameter_gk, n_points=len(z))
    logger.debug("AH report k=%d: %s", s.k, report)
    return report


def eta_transversality(s: SectionField, g: GridSpec, epsilon: float, restrict_real: bool = False,
                       points: np.ndarray = None, C2: float = None) -> TransversalityReport:
    """Least |grad s|/sqrt(k) (right-inverse sense) over {|s| <= epsilon} on a grid."""
    g.require(config.MAX_AH_CELL)
    z = grid_points(s, g) if points is None else np.asarray(points, dtype=complex).reshape(-1, s.n)
    value = s.evaluate(z)
    mask = np.abs(value) <= epsilon
    if C2 is None:
        C2 = ah_report(s, g, z[mask]).C2 if np.any(mask) else 0.0
    correction = C2 * g.cell_diameter_gk
    if not np.any(mask):
        return TransversalityReport(epsilon, np.inf, None, restrict_real, correction, 0)
    sub = z[mask]
    grad = s.gradient(sub)
    if restrict_real:
        margin = np.sqrt(np.sum(grad[:, 0::2].real ** 2, axis=1))
    else:
        _, margin = jacobian_singular_values(grad)
    margin = margin / s.sqrt_k
    best = int(np.argmin(margin))
    return TransversalityReport(epsilon, float(margin[best]), sub[best], restrict_real,
                                correction, int(mask.sum()))


def pair_transversality(s0: SectionField, s1: SectionField, points: np.ndarray, epsilon: float):
    """
    Rank-2 transversality of s0 + s1: least surjectivity singular value of the
    real 4 x 2n Jacobian over {|s0|^2 + |s1|^2 <= epsilon^2}, divided by sqrt(k).

    Returns (margin, witness, count). margin is inf on an empty sublevel set and
    0 when 2n < 4 and the set is nonempty.
    """
    z = np.asarray(points, dtype=complex).reshape(-1, s0.n)
    v0, g0 = s0.value_and_gradient(z)
    v1, g1 = s1.value_and_gradient(z)
    mask = np.abs(v0) ** 2 + np.abs(v1) ** 2 <= epsilon ** 2
    if not np.any(mask):
        return np.inf, None, 0
    if 2 * s0.n < 4:
        first = int(np.argmax(mask))
        return 0.0, z[first], int(mask.sum())
    J = np.stack([g0[mask].real, g0[mask].imag, g1[mask].real, g1[mask].imag], axis=1)
    sv = np.linalg.svd(J, compute_uv=False)[:, 3] / s0.sqrt_k
    best = int(np.argmin(sv))
    return float(sv[best]), z[mask][best], int(mask.sum())


if __name__ == '__main__':
    from src.fields import tau
    from src.model import ModelManifold, ScaledFrame, ambient_grid
    m = ModelManifold.flat(1, 0.5)
    for k in (25, 100, 400):
        fr = ScaledFrame(k)
        s = tau(m, fr, [0.0])
        g = ambient_grid(m, fr, per_gk_unit=8, center=[0.0], radius_g=1.0 / fr.sqrt_k)
        rep = ah_report(s, g)
        tr = eta_transversality(s, g, 0.05)
        print(f"k={k:4d}  C0={rep.C0:.4f}  C1={rep.C1:.4f}  Cbar={rep.Cbar:.2e}  eta={tr.eta:.4f}")
