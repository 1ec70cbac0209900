"""Meta-feature extraction: 24 task-agnostic descriptors of an input window.

Statistical, temporal, and spectral features are computed per variable and
averaged across variables; multivariate features summarize all unordered
variable pairs. The canonical output order is ``FEATURE_NAMES``.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import LagTooLarge, NonFiniteInput, WindowTooShort
from .stationarity import is_stationary

FEATURE_NAMES: tuple[str, ...] = (
    "mean",
    "std",
    "min",
    "max",
    "skewness",
    "kurtosis",
    "autocorr_mean",
    "stationarity",
    "roc_mean",
    "roc_std",
    "autoreg_coef",
    "residual_std",
    "freq_mean",
    "freq_peak",
    "spectral_entropy",
    "spectral_skewness",
    "spectral_kurtosis",
    "spectral_variation",
    "cov_mean",
    "cov_max",
    "cov_min",
    "cov_std",
    "crosscorr_mean",
    "crosscorr_std",
)

N_FEATURES = len(FEATURE_NAMES)

MIN_WINDOW_LENGTH = 8

# terms of the step-ratio features are dropped where |x[t]| falls below this
ROC_EPS = 1e-8


@dataclass
class TimeSeriesWindow:
    """One input instance: a ``t_in x d`` matrix of finite observations."""

    values: np.ndarray
    t_in: int = field(init=False)
    d: int = field(init=False)

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim == 1:
            values = values[:, None]
        if values.ndim != 2:
            raise ValueError(f"window must be 1-D or 2-D, got shape {values.shape}")
        if values.shape[0] < MIN_WINDOW_LENGTH:
            raise WindowTooShort(
                f"window has {values.shape[0]} steps, need at least {MIN_WINDOW_LENGTH}"
            )
        if not np.all(np.isfinite(values)):
            raise NonFiniteInput("window contains NaN or infinite values")
        self.values = values
        self.t_in = values.shape[0]
        self.d = values.shape[1]


@dataclass
class SpectralProfile:
    """One-sided spectrum of a mean-removed series."""

    psd: np.ndarray
    amplitudes: np.ndarray
    bin_frequencies: np.ndarray


def statistical_features(series: np.ndarray) -> tuple[float, float, float, float, float, float]:
    """(mean, std, min, max, skewness, kurtosis) with population normalization.

    Kurtosis is excess (normal distribution maps to 0). A constant series has
    skewness and kurtosis 0 by convention.
    """
    x = np.asarray(series, dtype=np.float64)
    mean = float(np.mean(x))
    centered = x - mean
    var = float(np.mean(centered**2))
    std = float(np.sqrt(var))
    if std == 0.0:
        skewness = 0.0
        kurtosis = 0.0
    else:
        skewness = float(np.mean(centered**3)) / std**3
        kurtosis = float(np.mean(centered**4)) / std**4 - 3.0
    return mean, std, float(np.min(x)), float(np.max(x)), skewness, kurtosis


def autocorrelation(series: np.ndarray, lag: int) -> float:
    """Biased autocorrelation estimator at ``lag``; 0 for a constant series."""
    x = np.asarray(series, dtype=np.float64)
    if lag >= x.shape[0]:
        raise LagTooLarge(f"lag {lag} >= series length {x.shape[0]}")
    centered = x - np.mean(x)
    denom = float(centered @ centered)
    if denom == 0.0:
        return 0.0
    if lag == 0:
        return 1.0
    return float(centered[:-lag] @ centered[lag:]) / denom


def rate_of_change(series: np.ndarray) -> tuple[float, float]:
    """Mean and population std of per-step ratios ``(x[t+1]-x[t]) / x[t]``.

    Terms whose denominator is within ``ROC_EPS`` of zero are skipped; if
    nothing survives, both values are 0.
    """
    x = np.asarray(series, dtype=np.float64)
    denom = x[:-1]
    keep = np.abs(denom) > ROC_EPS
    if not np.any(keep):
        return 0.0, 0.0
    ratios = (x[1:][keep] - denom[keep]) / denom[keep]
    return float(np.mean(ratios)), float(np.std(ratios))


def ar1_fit(series: np.ndarray) -> tuple[float, float]:
    """Least-squares fit of ``x[t+1] = c + phi * x[t]``.

    Returns ``(phi, residual_std)`` with population-normalized residual std.
    A constant series (or constant regressor) maps to phi = 0.
    """
    x = np.asarray(series, dtype=np.float64)
    prev, nxt = x[:-1], x[1:]
    prev_mean = float(np.mean(prev))
    prev_centered = prev - prev_mean
    denom = float(prev_centered @ prev_centered)
    if denom == 0.0:
        resid = nxt - np.mean(nxt)
        return 0.0, float(np.sqrt(np.mean(resid**2)))
    phi = float(prev_centered @ (nxt - np.mean(nxt))) / denom
    intercept = float(np.mean(nxt)) - phi * prev_mean
    resid = nxt - (intercept + phi * prev)
    return phi, float(np.sqrt(np.mean(resid**2)))


def spectral_profile(series: np.ndarray) -> SpectralProfile:
    """One-sided periodogram of the mean-removed series, ``|DFT|^2 / T``."""
    x = np.asarray(series, dtype=np.float64)
    t = x.shape[0]
    spectrum = np.fft.rfft(x - np.mean(x))
    amplitudes = np.abs(spectrum)
    return SpectralProfile(
        psd=amplitudes**2 / t,
        amplitudes=amplitudes,
        bin_frequencies=np.fft.rfftfreq(t),
    )


def spectral_features(series: np.ndarray) -> tuple[float, float, float, float, float, float]:
    """(freq_mean, freq_peak, entropy, skewness, kurtosis, variation).

    - ``freq_peak`` is the frequency (cycles/step) of the strongest non-DC
      PSD bin; ties resolve to the lowest frequency.
    - Entropy is over the non-DC PSD mass (the DC bin of a mean-removed
      series is numerical residue and must not contribute).
    - Spectral skewness/kurtosis are sum-based moments of the amplitude
      spectrum; this kurtosis is not excess.
    - A zero-energy series maps every value except ``freq_mean`` to 0.
    """
    x = np.asarray(series, dtype=np.float64)
    profile = spectral_profile(x)
    psd = profile.psd
    freq_mean = float(np.mean(psd))

    tail = psd[1:]
    total = float(np.sum(tail))
    if total == 0.0:
        freq_peak = 0.0
        entropy = 0.0
    else:
        freq_peak = float(profile.bin_frequencies[1 + int(np.argmax(tail))])
        p = tail / total
        nonzero = p[p > 0.0]
        entropy = float(-np.sum(nonzero * np.log(nonzero)))

    amp = profile.amplitudes
    dev = amp - np.mean(amp)
    s2 = float(np.sum(dev**2))
    if s2 == 0.0:
        skewness = 0.0
        kurtosis = 0.0
    else:
        skewness = float(np.sum(dev**3)) / s2**1.5
        kurtosis = float(np.sum(dev**4)) / s2**2

    return freq_mean, freq_peak, entropy, skewness, kurtosis, _spectral_variation(x)


def _spectral_variation(x: np.ndarray) -> float:
    """Mean spectral flux over a short-time amplitude spectrogram.

    Rectangular frames of length ``max(8, T//4)``, hop of half a frame,
    no mean removal per frame. Fewer than two frames yields 0.
    """
    t = x.shape[0]
    width = max(8, t // 4)
    hop = width // 2
    starts = range(0, t - width + 1, hop)
    frames = [np.abs(np.fft.rfft(x[s : s + width])) for s in starts]
    if len(frames) < 2:
        return 0.0
    spect = np.stack(frames)
    flux = np.sqrt(np.sum(np.diff(spect, axis=0) ** 2, axis=1))
    return float(np.mean(flux))


def multivariate_features(
    window: TimeSeriesWindow | np.ndarray,
) -> tuple[float, float, float, float, float, float]:
    """(cov_mean, cov_max, cov_min, cov_std, crosscorr_mean, crosscorr_std).

    Statistics over pairwise population covariances and Pearson correlations
    for all unordered variable pairs. Zero-variance variables contribute
    correlation 0. For a single variable the covariance slots degenerate to
    its variance and the correlation slots to (1, 0).
    """
    values = window.values if isinstance(window, TimeSeriesWindow) else np.asarray(window, dtype=np.float64)
    if values.ndim == 1:
        values = values[:, None]
    t, d = values.shape
    centered = values - values.mean(axis=0)
    if d == 1:
        var = float(np.mean(centered[:, 0] ** 2))
        return var, var, var, 0.0, 1.0, 0.0

    cov = (centered.T @ centered) / t
    stds = np.sqrt(np.diag(cov))
    iu = np.triu_indices(d, k=1)
    covs = cov[iu]
    denom = np.outer(stds, stds)[iu]
    corrs = np.where(denom > 0.0, covs / np.where(denom > 0.0, denom, 1.0), 0.0)
    return (
        float(np.mean(covs)),
        float(np.max(covs)),
        float(np.min(covs)),
        float(np.std(covs)),
        float(np.mean(corrs)),
        float(np.std(corrs)),
    )


def adf_stationarity_ratio(window: TimeSeriesWindow | np.ndarray) -> float:
    """Fraction of variables whose ADF test rejects a unit root at 0.05."""
    if not isinstance(window, TimeSeriesWindow):
        window = TimeSeriesWindow(window)
    hits = sum(is_stationary(window.values[:, j]) for j in range(window.d))
    return hits / window.d


def extract_meta_features(window: TimeSeriesWindow | np.ndarray) -> np.ndarray:
    """Compute the 24 meta-features of a window in canonical order."""
    if not isinstance(window, TimeSeriesWindow):
        window = TimeSeriesWindow(window)
    values = window.values
    d = window.d

    per_variable = np.empty((d, 17))
    for j in range(d):
        x = values[:, j]
        mean, std, lo, hi, skew, kurt = statistical_features(x)
        acf1 = autocorrelation(x, 1)
        roc_mean, roc_std = rate_of_change(x)
        phi, resid_std = ar1_fit(x)
        per_variable[j] = (
            mean, std, lo, hi, skew, kurt, acf1,
            roc_mean, roc_std, phi, resid_std,
            *spectral_features(x),
        )
    averaged = per_variable.mean(axis=0)

    out = np.empty(N_FEATURES)
    out[0:7] = averaged[0:7]  # mean .. kurtosis, autocorr_mean
    out[7] = adf_stationarity_ratio(window)
    out[8:18] = averaged[7:17]  # roc, ar(1), spectral
    out[18:24] = multivariate_features(window)
    return out


def extract_many(windows, threads: int = 1) -> np.ndarray:
    """Extract features for a batch of windows; rows follow input order."""
    windows = list(windows)
    if threads > 1 and len(windows) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(extract_meta_features, windows))
    else:
        rows = [extract_meta_features(w) for w in windows]
    if not rows:
        return np.empty((0, N_FEATURES))
    return np.stack(rows)
