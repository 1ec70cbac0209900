"""Augmented Dickey-Fuller unit-root testing for the stationarity feature.

The regression includes a constant, no trend. The lag order is chosen by
AIC over 0..maxlag with the Schwert bound ``floor(12 * (n/100)**0.25)``
(capped at ``n//2 - 2``), mirroring the default procedure of standard
statistics packages: candidates are compared on the common maxlag-trimmed
sample, then the winning lag is refit on its full sample. P-values come
from the MacKinnon (1994) response-surface approximation for the
constant-only case.
"""

from __future__ import annotations

import math

import numpy as np

# MacKinnon (1994) response surface, one I(1) series, constant-only regression.
# p = Phi(poly(tau)) between the clip bounds; outside them p is pinned to 0/1.
_TAU_MAX = 2.74
_TAU_MIN = -18.83
_TAU_STAR = -1.61
_SMALL_P = (2.1659, 1.4412, 0.038269)  # ascending coefficients, tau <= tau*
_LARGE_P = (1.7339, 0.93202, -0.12745, -0.010368)


def adf_lag_order(n: int) -> int:
    """Maximum lag considered for a series of length ``n`` (Schwert bound)."""
    schwert = int(math.floor(12.0 * (n / 100.0) ** 0.25))
    return max(0, min(schwert, n // 2 - 2))


def mackinnon_pvalue(tau: float) -> float:
    """Approximate p-value for an ADF t-statistic (constant-only case)."""
    if tau > _TAU_MAX:
        return 1.0
    if tau < _TAU_MIN:
        return 0.0
    coeffs = _SMALL_P if tau <= _TAU_STAR else _LARGE_P
    poly = 0.0
    for c in reversed(coeffs):
        poly = poly * tau + c
    # standard normal CDF
    return 0.5 * math.erfc(-poly / math.sqrt(2.0))


def _design(x: np.ndarray, dx: np.ndarray, lag: int) -> tuple[np.ndarray, np.ndarray]:
    """ADF regressors ``[level, dx lags.., const]`` and targets for ``lag``."""
    n = x.shape[0]
    nobs = n - 1 - lag
    cols = [x[lag : n - 1]]
    for j in range(1, lag + 1):
        cols.append(dx[lag - j : n - 1 - j])
    cols.append(np.ones(nobs))
    return np.column_stack(cols), dx[lag:]


def _select_lag_aic(x: np.ndarray, dx: np.ndarray, max_lag: int) -> int:
    """AIC-minimizing lag, all candidates fit on the maxlag-trimmed sample."""
    design_full, y = _design(x, dx, max_lag)
    nobs = y.shape[0]
    # column order [level, dx1..dxmax, const]; candidate with `lag` diffs
    # uses the level, the first `lag` diff columns, and the constant
    best_lag, best_aic = 0, math.inf
    for lag in range(0, max_lag + 1):
        design = np.column_stack([design_full[:, : 1 + lag], design_full[:, -1]])
        beta, *_ = np.linalg.lstsq(design, y, rcond=None)
        resid = y - design @ beta
        ssr = float(resid @ resid)
        if ssr <= 0.0:
            return lag
        aic = nobs * math.log(ssr / nobs) + 2 * design.shape[1]
        if aic < best_aic:
            best_aic, best_lag = aic, lag
    return best_lag


def adf_test(series: np.ndarray, max_lag: int | None = None) -> tuple[float, float, int]:
    """Run the ADF test on a univariate series.

    Returns ``(tau, pvalue, used_lag)``. The caller is responsible for
    handling constant series; here a zero-residual fit maps to tau = -inf
    (p = 0) when the level coefficient is negative, +inf (p = 1) otherwise.
    """
    x = np.asarray(series, dtype=np.float64)
    n = x.shape[0]
    if max_lag is None:
        max_lag = adf_lag_order(n)
    dx = np.diff(x)
    lag = _select_lag_aic(x, dx, max_lag) if max_lag > 0 else 0

    design, y = _design(x, dx, lag)
    # pinv of the design (not the normal equations) keeps conditioning sane
    pinv_design = np.linalg.pinv(design)
    beta = pinv_design @ y
    resid = y - design @ beta
    dof = y.shape[0] - design.shape[1]
    sigma2 = float(resid @ resid) / dof
    var_gamma = sigma2 * float(pinv_design[0] @ pinv_design[0])
    if var_gamma <= 0.0:
        tau = -math.inf if beta[0] < 0 else math.inf
    else:
        tau = float(beta[0] / math.sqrt(var_gamma))
    return tau, mackinnon_pvalue(tau), lag


def is_stationary(series: np.ndarray, alpha: float = 0.05) -> bool:
    """ADF decision for one variable; a constant series counts as stationary."""
    x = np.asarray(series, dtype=np.float64)
    if np.all(x == x[0]):
        return True
    _, pvalue, _ = adf_test(x)
    return pvalue < alpha
