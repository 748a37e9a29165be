"""
Scaling fits and summary statistics for the k-sweeps.
"""

from dataclasses import dataclass

import numpy as np
import pandas as pd
import statsmodels.api as sm


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    ci_low: float
    ci_high: float
    n_points: int

    def within(self, expected: float, tol: float) -> bool:
        return abs(self.slope - expected) <= tol

    def as_record(self) -> dict:
        return {'slope': self.slope, 'intercept': self.intercept,
                'ci_low': self.ci_low, 'ci_high': self.ci_high, 'n_points': self.n_points}


def fit_loglog(x, y, alpha: float = 0.05) -> SlopeFit:
    """OLS of log y on log x with a (1 - alpha) confidence interval for the slope.

    Rows with y <= 0 are dropped. With exactly two points the interval
    collapses onto the slope.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    keep = (x > 0) & (y > 0)
    lx, ly = np.log(x[keep]), np.log(y[keep])
    if len(lx) < 2:
        raise ValueError("need at least two positive points for a log-log fit")
    model = sm.OLS(ly, sm.add_constant(lx)).fit()
    intercept, slope = model.params
    if len(lx) > 2:
        low, high = model.conf_int(alpha)[1]
    else:
        low = high = slope
    return SlopeFit(float(slope), float(intercept), float(low), float(high), int(len(lx)))


def coefficient_of_variation(values) -> float:
    """Population std / mean; inf for a non-positive mean."""
    values = np.asarray(values, dtype=float)
    mean = values.mean()
    return float(values.std() / mean) if mean > 0 else np.inf


def summarize_scaling(df: pd.DataFrame, count_col: str = 'N_measured') -> pd.DataFrame:
    """One-row frame with the slope of count vs k (zero counts give NaN)."""
    if (df[count_col] > 0).sum() < 2:
        return pd.DataFrame([{'slope': np.nan, 'intercept': np.nan, 'ci_low': np.nan,
                              'ci_high': np.nan, 'n_points': int((df[count_col] > 0).sum())}])
    return pd.DataFrame([fit_loglog(df['k'], df[count_col]).as_record()])


if __name__ == '__main__':
    k = np.array([100, 400, 1600, 6400])
    fit = fit_loglog(k, 2 * np.floor(np.sqrt(k) / 2))
    print(f"slope = {fit.slope:.4f}  [{fit.ci_low:.4f}, {fit.ci_high:.4f}]")
