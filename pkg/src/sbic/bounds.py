"""Closed-form asymptotic error exponents and bound curves.

The per-label exponent constants are expectations of simple integrands
over a beta-binomial count of correct answers: F-type constants bound the
error decay per label under round-robin collection, G-type constants
under uncertainty sampling.  All Beta/binomial terms are evaluated in
log-space via log-gamma (direct factorials overflow near 170).
"""

from __future__ import annotations

from dataclasses import dataclass
import math
import warnings

import numpy as np
from scipy.special import gammaln

from .model import ConfigError


def _log_beta(a, b):
    return gammaln(a) + gammaln(b) - gammaln(a + b)


def beta_binomial_pmf(k, n_draws: int, alpha: float, beta: float):
    """P(k successes in n_draws) when the success rate is Beta(alpha, beta).

    ``k`` may be a scalar or array; entries outside [0, n_draws] raise.
    """
    k_arr = np.asarray(k)
    if np.any(k_arr < 0) or np.any(k_arr > n_draws):
        raise ConfigError(f"k must lie in [0, {n_draws}]")
    log_pmf = (
        gammaln(n_draws + 1)
        - gammaln(k_arr + 1)
        - gammaln(n_draws - k_arr + 1)
        + _log_beta(k_arr + alpha, n_draws - k_arr + beta)
        - _log_beta(alpha, beta)
    )
    out = np.exp(log_pmf)
    return float(out) if np.isscalar(k) else out


def _support_pmf(labels_per_worker: int, alpha: float, beta: float):
    n_prev = labels_per_worker - 1
    k = np.arange(n_prev + 1)
    return k, n_prev, beta_binomial_pmf(k, n_prev, alpha, beta)


def f_sorted(labels_per_worker: int, alpha: float, beta: float) -> float:
    """Round-robin per-label contraction when each estimate sees L-1 other labels.

    E[ 2 * sqrt(p_bar * (1 - p_bar)) ] with p_bar = (k + alpha) / (L - 1 + alpha + beta)
    and k beta-binomial over the L-1 previous answers.  Always in (0, 1].
    """
    if labels_per_worker < 1:
        raise ConfigError("labels_per_worker must be >= 1")
    k, n_prev, pmf = _support_pmf(labels_per_worker, alpha, beta)
    denom = n_prev + alpha + beta
    integrand = 2.0 * np.sqrt((k + alpha) / denom * (n_prev - k + beta) / denom)
    return float(np.sum(pmf * integrand))


def f_fast(labels_per_worker: int, alpha: float, beta: float) -> float:
    """Average of :func:`f_sorted` over support sizes 1..L (streaming estimates grow)."""
    if labels_per_worker < 1:
        raise ConfigError("labels_per_worker must be >= 1")
    return float(
        np.mean([f_sorted(h, alpha, beta) for h in range(1, labels_per_worker + 1)])
    )


def g_sorted(labels_per_worker: int, alpha: float, beta: float) -> float:
    """Uncertainty-sampling per-label exponent: E[ log-odds weight x expected label ]."""
    if labels_per_worker < 1:
        raise ConfigError("labels_per_worker must be >= 1")
    k, n_prev, pmf = _support_pmf(labels_per_worker, alpha, beta)
    denom = n_prev + alpha + beta
    integrand = np.log((k + alpha) / (n_prev - k + beta)) * (
        ((k + alpha) - (n_prev - k + beta)) / denom
    )
    return float(np.sum(pmf * integrand))


def g_fast(labels_per_worker: int, alpha: float, beta: float) -> float:
    """Average of :func:`g_sorted` over support sizes 1..L."""
    if labels_per_worker < 1:
        raise ConfigError("labels_per_worker must be >= 1")
    return float(
        np.mean([g_sorted(h, alpha, beta) for h in range(1, labels_per_worker + 1)])
    )


@dataclass(frozen=True)
class BoundSpec:
    """Which bound to draw and the anchor fixing its arbitrary intercept."""

    labels_per_worker: int
    alpha: float
    beta: float
    variant: str  # "fast" | "sorted"
    policy: str  # "uni" | "us"
    anchor: tuple[float, float]  # (R0, error0)

    def __post_init__(self):
        if self.labels_per_worker < 1:
            raise ConfigError("labels_per_worker must be >= 1")
        if self.variant not in ("fast", "sorted"):
            raise ConfigError(f"unknown variant {self.variant!r}")
        if self.policy not in ("uni", "us"):
            raise ConfigError(f"unknown policy {self.policy!r}")
        r0, e0 = self.anchor
        if not (0.0 < e0 < 1.0):
            raise ConfigError(f"anchor error must lie in (0, 1), got {e0}")


def exponent_constant(spec: BoundSpec) -> float:
    """Per-label decay rate: |log F| for the uni policy, G for us."""
    table = {
        ("uni", "sorted"): f_sorted,
        ("uni", "fast"): f_fast,
        ("us", "sorted"): g_sorted,
        ("us", "fast"): g_fast,
    }
    value = table[(spec.policy, spec.variant)](
        spec.labels_per_worker, spec.alpha, spec.beta
    )
    if spec.policy == "uni":
        return -math.log(value)  # F in (0, 1] so this is >= 0
    return value


def bound_curve(spec: BoundSpec, r_grid) -> np.ndarray:
    """Error bound error0 * exp(-(R - R0) * rate) over the given grid of R.

    The additive constant in the exponent is arbitrary, so the curve is
    pinned to pass through the anchor point exactly.  A zero rate (alpha
    == beta makes F = 1 and G = 0) yields a flat curve and a warning.
    """
    rate = exponent_constant(spec)
    if rate == 0.0:
        warnings.warn(
            "bound exponent is zero (symmetric prior); curve is constant",
            stacklevel=2,
        )
    r0, e0 = spec.anchor
    r_grid = np.asarray(r_grid, dtype=np.float64)
    return e0 * np.exp(-(r_grid - r0) * rate)
