"""Exact posterior by enumeration over window activity patterns.

Reference implementation for the denoisers: treats each window frame's
matched-filter row as Gaussian with variance e_tau (inactive) or
e_tau + beta (active), enumerates all 2^W patterns, and normalizes.
Cost is O(2^W M); use small windows only.
"""

from dataclasses import dataclass

import numpy as np

from .system import all_activity_patterns


@dataclass(frozen=True)
class PatternPosterior:
    """Posterior over window activity patterns for one device."""

    probs: np.ndarray  # (2^W,) pattern posterior, MSB-first order
    target_pos: int  # window index of the target frame
    active_prob: float  # marginal P(target frame active | window)
    mean: np.ndarray  # (M,) posterior mean of the target effective channel


def exact_pattern_posterior(r_window, e_window, pattern_probs, beta, target_pos):
    """Enumerate the joint posterior for one device over a window.

    r_window: (W, M) matched-filter rows.  e_window: (W,) per-frame state
    variances.  pattern_probs: (2^W,) prior.  Raises if every pattern has
    zero joint weight (zero prior times zero likelihood everywhere).
    """
    r = np.atleast_2d(np.asarray(r_window, dtype=np.complex128))
    e = np.asarray(e_window, dtype=np.float64)
    u = np.asarray(pattern_probs, dtype=np.float64)
    width, m = r.shape
    if e.shape != (width,):
        raise ValueError(f"e_window must have shape ({width},), got {e.shape}")
    if (e <= 0).any() or not (beta > 0):
        raise ValueError("state variances and beta must be positive")
    if u.shape != (2**width,):
        raise ValueError(f"need {2**width} pattern probabilities, got {u.shape}")
    if not 0 <= target_pos < width:
        raise ValueError(f"target_pos {target_pos} outside window of width {width}")

    sq = np.einsum("wm,wm->w", r.real, r.real) + np.einsum("wm,wm->w", r.imag, r.imag)
    bits = np.array(all_activity_patterns(width), dtype=np.float64)  # (2^W, W)
    var = e[None, :] + bits * beta  # (2^W, W) per-frame variances
    with np.errstate(divide="ignore"):
        log_w = np.log(u) + np.sum(-m * np.log(var) - sq[None, :] / var, axis=1)

    top = np.max(log_w)
    if top == -np.inf:
        raise ValueError("all window patterns have zero posterior weight")
    w = np.exp(log_w - top)
    probs = w / w.sum()

    bit = bits[:, target_pos].astype(bool)
    active_prob = float(probs[bit].sum())
    shrink = 1.0 / (1.0 + e[target_pos] / beta)
    mean = active_prob * shrink * r[target_pos]
    return PatternPosterior(probs=probs, target_pos=target_pos,
                            active_prob=active_prob, mean=mean)


def exact_posterior_mean(posterior, r_target, e_target, beta):
    """Posterior mean from a pattern posterior: P(active) a r_target."""
    shrink = 1.0 / (1.0 + e_target / beta)
    return posterior.active_prob * shrink * np.asarray(r_target)
