"""Gradient-based one-side sampling and the reference split-gain formulas."""

import math
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, DomainError


@dataclass(frozen=True)
class GossConfig:
    top_rate: float = 0.2    # lg
    other_rate: float = 0.1  # sg

    def __post_init__(self):
        lg, sg = self.top_rate, self.other_rate
        if not (0 <= lg <= 1 and 0 <= sg <= 1):
            raise ConfigError("GOSS rates must lie in [0, 1]")
        if lg < 1 and sg == 0:
            raise ConfigError("GOSS other_rate must be > 0 when top_rate < 1")
        if lg < 1 and lg + sg > 1:
            raise ConfigError("GOSS top_rate + other_rate must not exceed 1")

    @property
    def amplification(self):
        if self.other_rate == 0:
            return 1.0
        return (1.0 - self.top_rate) / self.other_rate


@dataclass(frozen=True)
class GossSample:
    large: np.ndarray   # row indices of Lg, sorted
    small: np.ndarray   # row indices of Sg, sorted
    amplification: float

    def weights(self, n):
        """Per-row gradient multipliers: 1 on Lg, the amplification on Sg, 0 elsewhere."""
        w = np.zeros(n)
        w[self.large] = 1.0
        w[self.small] = self.amplification
        return w


def goss_partition(gradients, cfg: GossConfig, rng) -> GossSample:
    """Keep the ceil(lg*H) largest |gradient| rows, sample ceil(sg*|rest|) of the rest."""
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    g = np.asarray(gradients, dtype=np.float64)
    H = len(g)
    order = np.argsort(-np.abs(g), kind="stable")
    n_top = min(H, math.ceil(round(cfg.top_rate * H, 9)))
    large = np.sort(order[:n_top])
    rest = np.sort(order[n_top:])
    if n_top >= H:
        return GossSample(large, np.zeros(0, dtype=np.int64), 1.0)
    n_small = min(len(rest), math.ceil(round(cfg.other_rate * len(rest), 9)))
    small = np.sort(rng.choice(rest, size=n_small, replace=False)) if n_small else np.zeros(0, dtype=np.int64)
    return GossSample(large, small, cfg.amplification)


def split_gain(gradients, feature, threshold):
    """Variance gain (1/H) * (S_l^2 / H_l + S_r^2 / H_r); -inf when a side is empty."""
    g = np.asarray(gradients, dtype=np.float64)
    left = np.asarray(feature) <= threshold
    H, H_l = len(g), int(left.sum())
    H_r = H - H_l
    if H_l == 0 or H_r == 0:
        return -math.inf
    s_l = g[left].sum()
    s_r = g[~left].sum()
    return (s_l * s_l / H_l + s_r * s_r / H_r) / H


def goss_gain(gradients, feature, threshold, large, small, amplification):
    """Sampled estimate of split_gain: Lg sums plus amplified Sg sums, over node counts."""
    g = np.asarray(gradients, dtype=np.float64)
    x = np.asarray(feature)
    left = x <= threshold
    H, H_l = len(g), int(left.sum())
    H_r = H - H_l
    if H_l == 0 or H_r == 0:
        return -math.inf
    large = np.asarray(large, dtype=np.int64)
    small = np.asarray(small, dtype=np.int64)
    ll = left[large]
    sl = left[small]
    s_l = g[large][ll].sum() + amplification * g[small][sl].sum()
    s_r = g[large][~ll].sum() + amplification * g[small][~sl].sum()
    return (s_l * s_l / H_l + s_r * s_r / H_r) / H


def goss_error_bound(rest_gradients, top_rate, other_rate, rho, H_l, H_r, mean_abs_left, mean_abs_right, H):
    """High-probability bound on |goss_gain - split_gain| for one split (holds w.p. >= 1 - rho)."""
    if not (0 < rho <= 1):
        raise DomainError(f"rho must be in (0, 1], got {rho}")
    rest = np.abs(np.asarray(rest_gradients, dtype=np.float64))
    if len(rest) == 0 or top_rate >= 1:
        return 0.0
    E = (1.0 - top_rate) * rest.max() / math.sqrt(other_rate)
    F = max(mean_abs_left, mean_abs_right)
    log_term = math.log(1.0 / rho)
    return E * E * log_term * max(1.0 / H_l, 1.0 / H_r) + 2.0 * F * E * math.sqrt(log_term / H)


def split_error_bound(gradients, feature, threshold, sample: GossSample, cfg: GossConfig, rho):
    """goss_error_bound evaluated from raw node data for the split (feature <= threshold)."""
    g = np.asarray(gradients, dtype=np.float64)
    left = np.asarray(feature) <= threshold
    H = len(g)
    H_l = int(left.sum())
    H_r = H - H_l
    rest = np.ones(H, dtype=bool)
    rest[sample.large] = False
    mean_l = np.abs(g[left]).sum() / H_l
    mean_r = np.abs(g[~left]).sum() / H_r
    return goss_error_bound(g[rest], cfg.top_rate, cfg.other_rate, rho, H_l, H_r, mean_l, mean_r, H)
