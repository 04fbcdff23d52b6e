"""Speckle filters for covariance images.

Two chains are provided: a refined Lee (MMSE) pass followed by a boxcar local
mean, and a model-based filter that multilooks the diagonal and rebuilds each
off-diagonal entry from its bias-corrected coherence. All windows are square
with odd side; at the image border they are clipped to the valid pixels.
"""
import logging
from dataclasses import dataclass

import numpy as np

from . import kernels
from .raster import (
    UPPER,
    CovarianceImage,
    from_features,
    matrix_from_parts,
    to_features,
)

log = logging.getLogger(__name__)

WINDOWS = tuple(range(3, 20, 2))


def check_window(w):
    if int(w) != w or w < 3 or w % 2 == 0:
        raise ValueError(f"window side must be an odd integer >= 3, got {w!r}")
    return int(w)


def _window_means(img, w):
    sums, counts = kernels.box_sum(to_features(img), w)
    return sums / counts[..., None], counts


def boxcar_filter(img, w):
    """Entrywise w x w local mean."""
    w = check_window(w)
    means, _ = _window_means(img, w)
    return from_features(means, img.looks)


def mmse_weight(mean, var, looks):
    """Lee MMSE weight b = max(0, (var - mean^2/n) / ((1 + 1/n) var)); 0 where var <= 0."""
    sig2 = 1.0 / looks
    mean = np.asarray(mean, dtype=np.float64)
    var = np.asarray(var, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        b = (var - sig2 * mean ** 2) / ((1.0 + sig2) * var)
    return np.where(var > 0, np.maximum(b, 0.0), 0.0)


def refined_lee(img, w=3, looks=None):
    """Refined Lee MMSE filter driven by the span statistics.

    For w = 3 the plain square window is used; larger windows pick one of
    eight edge-aligned half windows from the local span gradient. The output
    is ``mean + b * (Z - mean)`` with one scalar weight b per pixel.
    """
    w = check_window(w)
    n = img.looks if looks is None else float(looks)
    feats = to_features(img)
    span = img.span
    if w == 3:
        stack = np.concatenate([feats, span[..., None], span[..., None] ** 2], axis=2)
        sums, counts = kernels.box_sum(stack, 3)
        means = sums / counts[..., None]
        mu = means[..., 9]
        var = means[..., 10] - mu ** 2
        b = mmse_weight(mu, var, n)
        mean_feats = means[..., :9]
        out = mean_feats + b[..., None] * (feats - mean_feats)
    else:
        out = kernels.directional_lee(span, feats, w, n)
    return from_features(out, img.looks)


@dataclass(frozen=True)
class CoherenceImage:
    """Per-pixel coherence magnitude and phase of a channel pair.

    ``n_flagged`` counts pixels whose denominator was zero; they are set to
    magnitude 0 and phase 0.
    """

    magnitude: np.ndarray
    phase: np.ndarray
    n_flagged: int = 0


def _principal(phase):
    return np.where(phase <= -np.pi, np.pi, phase)


def _coherence_from_means(cross, pp, qq):
    denom = np.sqrt(pp * qq)
    flagged = ~(denom > 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        rho = np.where(flagged, 0.0, cross / np.where(flagged, 1.0, denom))
    mag = np.clip(np.abs(rho), 0.0, 1.0)
    phase = np.where(flagged, 0.0, _principal(np.angle(cross)))
    return mag, phase, flagged


def _entry(means, p, q):
    """Window-mean Z_pq (1-based indices) from a (..., 9) feature stack."""
    if p == q:
        return means[..., p - 1]
    a, b = min(p, q), max(p, q)
    k = UPPER.index((a - 1, b - 1))
    z = means[..., 3 + 2 * k] + 1j * means[..., 4 + 2 * k]
    return z if p < q else np.conj(z)


def estimate_coherence(img, w, p, q):
    """Windowed complex correlation between channels p and q (1-based, 1=hh, 2=hv, 3=vv)."""
    w = check_window(w)
    if p == q or not {p, q} <= {1, 2, 3}:
        raise ValueError(f"need two distinct channels in 1..3, got p={p}, q={q}")
    means, _ = _window_means(img, w)
    mag, phase, flagged = _coherence_from_means(
        _entry(means, p, q), _entry(means, p, p), _entry(means, q, q)
    )
    n_flagged = int(flagged.sum())
    if n_flagged:
        log.warning("coherence undefined at %d pixels (zero intensity); set to 0", n_flagged)
    return CoherenceImage(mag, phase, n_flagged)


def correct_coherence_bias(magnitude, n_eff):
    """Bias-reduced coherence sqrt(max(0, (n |rho|^2 - 1) / (n - 1)))."""
    n_eff = np.asarray(n_eff, dtype=np.float64)
    if np.any(n_eff < 2):
        raise ValueError("effective sample count must be >= 2")
    r2 = np.asarray(magnitude, dtype=np.float64) ** 2
    return np.sqrt(np.maximum(0.0, (n_eff * r2 - 1.0) / (n_eff - 1.0)))


def shrink_to_psd(diag, off):
    """Scale off-diagonals toward zero where the matrix is not PSD.

    With R the coherence matrix minus the identity, the factor is
    ``min(1, -1 / lambda_min(R))``; the diagonal is never modified.
    """
    scale = np.sqrt(np.where(diag > 0, diag, 1.0))
    r = np.zeros(diag.shape, dtype=np.complex128)
    for k, (p, q) in enumerate(UPPER):
        r[..., k] = off[..., k] / (scale[..., p] * scale[..., q])
    lam = np.linalg.eigvalsh(matrix_from_parts(np.zeros_like(diag), r))[..., 0]
    bad = lam < -1.0
    if not bad.any():
        return off
    off = off.copy()
    off[bad] *= (-1.0 / lam[bad])[:, None]
    return off


def mbpolsar_filter(img, w, looks=None):
    """Model-based PolSAR filter.

    Diagonal entries are boxcar means. Off-diagonal entry pq becomes
    ``|rho_c| exp(j phi) sqrt(Zpp Zqq)`` with rho from the window means,
    bias-corrected for ``n_eff = (valid window pixels) * looks`` samples.
    Pixels where the rebuilt matrix is not PSD have their off-diagonals
    shrunk (see :func:`shrink_to_psd`).
    """
    w = check_window(w)
    n = img.looks if looks is None else float(looks)
    means, counts = _window_means(img, w)
    diag = means[..., 0:3].copy()
    n_eff = counts * n
    off = np.zeros(img.shape + (3,), dtype=np.complex128)
    for k, (p, q) in enumerate(UPPER):
        cross = _entry(means, p + 1, q + 1)
        mag, phase, flagged = _coherence_from_means(cross, diag[..., p], diag[..., q])
        mag_c = correct_coherence_bias(mag, n_eff)
        amp = mag_c * np.sqrt(diag[..., p] * diag[..., q])
        off[..., k] = np.where(flagged, 0.0, amp * np.exp(1j * phase))
    off = shrink_to_psd(diag, off)
    return CovarianceImage(diag, off, img.looks)


FILTERS = {
    "boxcar": boxcar_filter,
    "refined-lee": refined_lee,
    "mbpolsar": mbpolsar_filter,
}


def apply_filter(name, img, w):
    try:
        fn = FILTERS[name]
    except KeyError:
        raise ValueError(f"unknown filter {name!r}; choose from {sorted(FILTERS)}") from None
    return fn(img, w)
