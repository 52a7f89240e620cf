"""Release-time masking of Shapley values: Gaussian noise (DP), quantization
(QT) and top-k release by marginal-contribution variance (DR)."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

MEASURES = ("none", "dp", "qt", "dr")
LEVELS = ("low", "mid", "high")
DP_SIGMA = {"low": 0.1, "mid": 0.5, "high": 0.9}
# share of n kept as quantization levels, and share of players dropped
QT_FRACTION = {"low": 0.9, "mid": 0.5, "high": 0.1}
DR_DROP = {"low": 0.1, "mid": 0.5, "high": 0.9}


@dataclass
class PrivacyConfig:
    measure: str = "none"
    dp_sigma: float = 0.5
    qt_levels: int | None = None
    dr_keep: int | None = None
    seed: int = 0


def dp_mask(phi, sigma: float, seed: int = 0) -> np.ndarray:
    if sigma < 0:
        raise ValueError(f"noise scale must be nonnegative, got {sigma}")
    phi = np.asarray(phi, dtype=float)
    if sigma == 0:
        return phi.copy()
    return phi + np.random.default_rng(seed).normal(0.0, sigma, phi.shape)


def qt_mask(phi, levels: int) -> np.ndarray:
    """Uniform-width bins over [min, max], each value replaced by its bin midpoint.

    Vectors with at most ``levels`` distinct values are returned unchanged.
    """
    if levels < 1:
        raise ValueError(f"need at least one quantization level, got {levels}")
    phi = np.asarray(phi, dtype=float)
    if len(np.unique(phi)) <= levels:
        return phi.copy()
    lo, hi = phi.min(), phi.max()
    width = (hi - lo) / levels
    idx = np.minimum(((phi - lo) / width).astype(int), levels - 1)
    return lo + (idx + 0.5) * width


def qt_kmeans_mask(phi, levels: int, seed: int = 0) -> np.ndarray:
    """Alternative quantizer: 1-d k-means centroids as the representatives."""
    from scipy.cluster.vq import kmeans2
    phi = np.asarray(phi, dtype=float)
    if len(np.unique(phi)) <= levels:
        return phi.copy()
    centroids, labels = kmeans2(phi[:, None], levels, seed=seed, minit="++")
    return centroids[labels, 0]


def dr_mask(phi, mc_variance, keep: int) -> tuple[np.ndarray, np.ndarray]:
    """Release only the ``keep`` players with the largest marginal-contribution
    variance (ties to the lower id).  Returns (values, suppressed flags)."""
    phi = np.asarray(phi, dtype=float)
    if mc_variance is None:
        raise ValueError("dimension reduction needs per-player marginal-contribution variances")
    var = np.asarray(mc_variance, dtype=float)
    if var.shape != phi.shape:
        raise ValueError("variance vector length differs from value vector")
    if not 0 <= keep <= len(phi):
        raise ValueError(f"keep must lie in 0..{len(phi)}, got {keep}")
    order = np.lexsort((np.arange(len(phi)), -var))
    suppressed = np.ones(len(phi), dtype=bool)
    suppressed[order[:keep]] = False
    return np.where(suppressed, 0.0, phi), suppressed


def strength_params(measure: str, level: str, n: int) -> dict:
    """Parameters of a measure at strength ``low``/``mid``/``high`` for n players."""
    if level not in LEVELS:
        raise ValueError(f"unknown strength {level!r}; expected one of {LEVELS}")
    if measure == "dp":
        return {"dp_sigma": DP_SIGMA[level]}
    if measure == "qt":
        return {"qt_levels": max(1, math.floor(QT_FRACTION[level] * n))}
    if measure == "dr":
        return {"dr_keep": n - min(n - 1, math.ceil(DR_DROP[level] * n))}
    return {}


def parse_levels(text, n: int) -> int:
    """Quantization levels given as a count ("4") or a share of n ("0.5n")."""
    text = str(text).strip()
    if text.endswith("n"):
        return max(1, math.floor(float(text[:-1] or 1) * n))
    return int(text)


def apply_privacy(phi, cfg: PrivacyConfig, mc_variance=None, custom=None) -> tuple[np.ndarray, np.ndarray]:
    """Masked values and suppression flags for a release."""
    phi = np.asarray(phi, dtype=float)
    none = np.zeros(len(phi), dtype=bool)
    m = cfg.measure
    if m in (None, "none", "None"):
        return phi.copy(), none
    if m == "dp":
        return dp_mask(phi, cfg.dp_sigma, cfg.seed), none
    if m == "qt":
        return qt_mask(phi, cfg.qt_levels if cfg.qt_levels is not None else len(phi)), none
    if m == "dr":
        return dr_mask(phi, mc_variance, cfg.dr_keep if cfg.dr_keep is not None else len(phi))
    if custom is not None:
        return np.asarray(custom(phi), dtype=float), none
    raise ValueError(f"unknown privacy measure {m!r}")
