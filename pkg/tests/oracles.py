"""Straight-from-formula reference implementations, used only by tests.

Everything here recomputes the features through a deliberately different
code path: explicit loops and direct DFT matrices instead of vectorized
kernels and FFTs, plus statsmodels as the external unit-root reference.
"""

import math

import numpy as np
from statsmodels.tsa.stattools import adfuller

from timefuse.features import FEATURE_NAMES
from timefuse.stationarity import adf_lag_order

ROC_EPS = 1e-8


def o_mean(x):
    return sum(float(v) for v in x) / len(x)


def o_std(x):
    m = o_mean(x)
    return math.sqrt(sum((float(v) - m) ** 2 for v in x) / len(x))


def o_skewness(x):
    m, s = o_mean(x), o_std(x)
    if s == 0.0:
        return 0.0
    return (sum((float(v) - m) ** 3 for v in x) / len(x)) / s**3


def o_kurtosis(x):
    m, s = o_mean(x), o_std(x)
    if s == 0.0:
        return 0.0
    return (sum((float(v) - m) ** 4 for v in x) / len(x)) / s**4 - 3.0


def o_autocorr(x, lag=1):
    m = o_mean(x)
    den = sum((float(v) - m) ** 2 for v in x)
    if den == 0.0:
        return 0.0
    num = sum((float(x[t]) - m) * (float(x[t + lag]) - m) for t in range(len(x) - lag))
    return num / den


def o_rate_of_change(x):
    ratios = [
        (float(x[t + 1]) - float(x[t])) / float(x[t])
        for t in range(len(x) - 1)
        if abs(float(x[t])) > ROC_EPS
    ]
    if not ratios:
        return 0.0, 0.0
    return o_mean(ratios), o_std(ratios)


def o_ar1(x):
    prev = np.asarray(x[:-1], dtype=float)
    nxt = np.asarray(x[1:], dtype=float)
    if o_std(prev) == 0.0:
        return 0.0, o_std(nxt)
    slope, intercept = np.polyfit(prev, nxt, 1)
    resid = nxt - (intercept + slope * prev)
    return float(slope), o_std(resid)


_DFT_CACHE: dict[int, np.ndarray] = {}


def _dft_matrix(n):
    if n not in _DFT_CACHE:
        k = np.arange(n // 2 + 1)[:, None]
        t = np.arange(n)[None, :]
        _DFT_CACHE[n] = np.exp(-2j * np.pi * k * t / n)
    return _DFT_CACHE[n]


def o_one_sided_spectrum(x):
    """(psd, amplitudes, frequencies) of the mean-removed series."""
    x = np.asarray(x, dtype=float)
    n = len(x)
    centered = x - o_mean(x)
    coeffs = _dft_matrix(n) @ centered
    amp = np.abs(coeffs)
    return amp**2 / n, amp, np.arange(n // 2 + 1) / n


def o_spectral(x):
    psd, amp, freqs = o_one_sided_spectrum(x)
    freq_mean = o_mean(psd)

    tail = psd[1:]
    total = sum(float(v) for v in tail)
    if total == 0.0:
        freq_peak, entropy = 0.0, 0.0
    else:
        best = 0
        for i in range(1, len(tail)):
            if tail[i] > tail[best]:
                best = i
        freq_peak = float(freqs[1 + best])
        entropy = 0.0
        for v in tail:
            p = float(v) / total
            if p > 0.0:
                entropy -= p * math.log(p)

    abar = o_mean(amp)
    s2 = sum((float(a) - abar) ** 2 for a in amp)
    if s2 == 0.0:
        skew, kurt = 0.0, 0.0
    else:
        skew = sum((float(a) - abar) ** 3 for a in amp) / s2**1.5
        kurt = sum((float(a) - abar) ** 4 for a in amp) / s2**2

    return freq_mean, freq_peak, entropy, skew, kurt, o_spectral_variation(x)


def o_spectral_variation(x):
    x = np.asarray(x, dtype=float)
    n = len(x)
    width = max(8, n // 4)
    hop = width // 2
    dft = _dft_matrix(width)
    frames = [np.abs(dft @ x[s : s + width]) for s in range(0, n - width + 1, hop)]
    if len(frames) < 2:
        return 0.0
    fluxes = []
    for a, b in zip(frames[:-1], frames[1:]):
        fluxes.append(math.sqrt(sum((float(u) - float(v)) ** 2 for u, v in zip(b, a))))
    return o_mean(fluxes)


def o_cov(x, y):
    mx, my = o_mean(x), o_mean(y)
    return sum((float(a) - mx) * (float(b) - my) for a, b in zip(x, y)) / len(x)


def o_corr(x, y):
    sx, sy = o_std(x), o_std(y)
    if sx == 0.0 or sy == 0.0:
        return 0.0
    return o_cov(x, y) / (sx * sy)


def o_multivariate(values):
    values = np.asarray(values, dtype=float)
    d = values.shape[1]
    if d == 1:
        var = o_cov(values[:, 0], values[:, 0])
        return var, var, var, 0.0, 1.0, 0.0
    covs, corrs = [], []
    for i in range(d):
        for j in range(i + 1, d):
            covs.append(o_cov(values[:, i], values[:, j]))
            corrs.append(o_corr(values[:, i], values[:, j]))
    return (
        o_mean(covs), max(covs), min(covs), o_std(covs),
        o_mean(corrs), o_std(corrs),
    )


def reference_adf_pvalue(x):
    """statsmodels ADF with the package's identical lag rule (AIC, Schwert bound)."""
    x = np.asarray(x, dtype=float)
    lag = adf_lag_order(len(x))
    return float(adfuller(x, maxlag=lag, regression="c", autolag="AIC")[1])


def o_is_stationary(x):
    x = np.asarray(x, dtype=float)
    if np.all(x == x[0]):
        return True
    return reference_adf_pvalue(x) < 0.05


def o_stationarity(values):
    values = np.asarray(values, dtype=float)
    d = values.shape[1]
    return sum(o_is_stationary(values[:, j]) for j in range(d)) / d


def oracle_feature_vector(values, stationarity=None):
    """All 24 features of a window, recomputed from the definitions.

    ``stationarity`` lets a caller that already ran the reference ADF pass
    in its fraction, avoiding a second statsmodels sweep.
    """
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        values = values[:, None]
    d = values.shape[1]

    per_var = []
    for j in range(d):
        x = values[:, j]
        roc = o_rate_of_change(x)
        ar = o_ar1(x)
        per_var.append(
            (o_mean(x), o_std(x), float(min(x)), float(max(x)),
             o_skewness(x), o_kurtosis(x), o_autocorr(x, 1),
             roc[0], roc[1], ar[0], ar[1], *o_spectral(x))
        )
    avg = [o_mean([row[i] for row in per_var]) for i in range(17)]

    out = dict(zip(FEATURE_NAMES, [0.0] * len(FEATURE_NAMES)))
    keys = [
        "mean", "std", "min", "max", "skewness", "kurtosis", "autocorr_mean",
        "roc_mean", "roc_std", "autoreg_coef", "residual_std",
        "freq_mean", "freq_peak", "spectral_entropy", "spectral_skewness",
        "spectral_kurtosis", "spectral_variation",
    ]
    for key, value in zip(keys, avg):
        out[key] = value
    out["stationarity"] = o_stationarity(values) if stationarity is None else stationarity
    for key, value in zip(
        ("cov_mean", "cov_max", "cov_min", "cov_std", "crosscorr_mean", "crosscorr_std"),
        o_multivariate(values),
    ):
        out[key] = value
    return np.array([out[name] for name in FEATURE_NAMES])
