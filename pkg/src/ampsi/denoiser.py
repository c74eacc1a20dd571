"""MMSE denoisers with temporal side information, log-domain throughout.

Side information about a device enters as an inverse LLR value v in
[0, +inf]: v = 1 is uninformative, v = +inf means known inactive,
v = 0 means known active.  All posterior weights are combined in the log
domain so large pilot norms or extreme side information never overflow;
the only error cases are contradictory certain side information and NaN
inputs.
"""

import math
from dataclasses import dataclass

import numpy as np

from .system import MarkovActivityModel, all_activity_patterns


@dataclass(frozen=True)
class DenoiserParams:
    """Per-iteration scalar parameters of the denoiser."""

    beta: float  # channel variance
    state_var: float  # effective noise variance e of the decoupled model
    activity: MarkovActivityModel = None  # needed only by the SI-aware ops

    def __post_init__(self):
        if not (self.beta > 0.0 and math.isfinite(self.beta)):
            raise ValueError(f"beta must be positive, got {self.beta}")
        if not (self.state_var > 0.0 and math.isfinite(self.state_var)):
            raise ValueError(f"state_var must be positive, got {self.state_var}")

    @property
    def gain(self):
        """MMSE shrinkage factor a = (1 + e/beta)^-1 toward the active mean."""
        return 1.0 / (1.0 + self.state_var / self.beta)

    @property
    def xi(self):
        """Exponent scale xi = 1/e - 1/(e + beta), in product form."""
        return self.beta / (self.state_var * (self.state_var + self.beta))

    @property
    def log_ratio(self):
        """Per-antenna evidence offset log((e + beta)/e)."""
        return math.log1p(self.beta / self.state_var)


def _require_no_nan(name, arr):
    if np.isnan(arr).any():
        raise ValueError(f"{name} contains NaN")


# -- inverse LLR -------------------------------------------------------------


def log_inverse_llr(sq_norms, m, params):
    """log v for matched-filter rows with squared norms sq_norms (any shape)."""
    sq_norms = np.asarray(sq_norms, dtype=np.float64)
    _require_no_nan("sq_norms", sq_norms)
    if (sq_norms < 0).any():
        raise ValueError("squared norms must be nonnegative")
    return m * params.log_ratio - params.xi * sq_norms


def inverse_llr(r, params):
    """Activity inverse LLR v = ((beta+e)/e)^M exp(-xi ||r||^2) for one row."""
    r = np.asarray(r)
    sq = float(np.real(np.vdot(r, r)))
    return float(np.exp(log_inverse_llr(sq, r.size, params)))


# -- two-sided bracket factors -----------------------------------------------
#
# One neighbor with inverse LLR v contributes the bracket
#   B(v) = (p01 + (1 - p01) v) / (p11 + (1 - p11) v),
# and the full prior factor of phi is ((1 - p_a)/p_a) B(v_prev) B(v_next).
# A valid model with p01 = 0 is necessarily the frozen chain (p11 = 1,
# explicit p_a), where B(v) = v; a valid model with p01 > 0 always has
# p11 < 1 (else p_a would be 1), so log1p(-p11) below stays finite.


def _log_bracket_terms(model, illr):
    """log B(v) elementwise for finite-or-infinite inverse LLRs."""
    illr = np.asarray(illr, dtype=np.float64)
    _require_no_nan("inverse LLR", illr)
    if (illr < 0).any():
        raise ValueError("inverse LLRs must be nonnegative")
    p01, p11 = model.p01, model.p11
    if p01 == 0.0:
        with np.errstate(divide="ignore"):
            return np.log(illr)
    inf = np.isposinf(illr)
    v = np.where(inf, 1.0, illr)
    with np.errstate(divide="ignore"):
        finite_part = np.log(p01 + (1.0 - p01) * v) - np.log(p11 + (1.0 - p11) * v)
        inf_part = float(np.log1p(-p01)) - float(np.log1p(-p11))  # -inf at p01 = 1
    return np.where(inf, inf_part, finite_part)


def si_log_bracket_shift(model, prev_illr, next_illr):
    """log(B(v_prev) B(v_next)) per device; the SI shift of the detector."""
    with np.errstate(invalid="ignore"):  # inf - inf becomes NaN, raised below
        out = _log_bracket_terms(model, prev_illr) + _log_bracket_terms(model, next_illr)
    if np.isnan(out).any():
        raise ValueError("contradictory certain side information (active and inactive)")
    return out


def si_log_prior(model, prev_illr, next_illr):
    """log(((1-p_a)/p_a) B(v_prev) B(v_next)) per device.

    This is the r-independent part of log phi.  Uninformative neighbors
    (v = 1) contribute exactly 0.0 to the bracket sum, so the no-SI case is
    bit-identical to passing ones.
    """
    base = math.log1p(-model.p_a) - math.log(model.p_a)
    if model.p01 > 0.0:
        # regroup so the frozen-chain-adjacent limits stay finite:
        # (1-p_a)/p_a = (1-p11)/p01 for a stationary chain
        base = math.log1p(-model.p11) - math.log(model.p01)
    with np.errstate(invalid="ignore"):  # inf - inf becomes NaN, raised below
        out = base + _log_bracket_terms(model, prev_illr) + _log_bracket_terms(model, next_illr)
    if np.isnan(out).any():
        raise ValueError("contradictory certain side information (active and inactive)")
    return out


def phi_dsi(illr, prev_illr, next_illr, model):
    """Posterior inactivity odds phi = v ((1-p_a)/p_a) B(v_prev) B(v_next)."""
    logc = si_log_prior(model, np.atleast_1d(prev_illr), np.atleast_1d(next_illr))
    with np.errstate(divide="ignore", over="ignore"):
        return float(np.exp(np.log(illr) + logc[0]))


# -- generalized window factors ----------------------------------------------


def window_log_g(pattern_probs, window_illr, target_pos):
    """log G for a generalized window, per device.

    pattern_probs: (2^W,) prior over window activity patterns, MSB-first.
    window_illr: (W-1, N) inverse LLRs of the non-target window frames, in
        window order.  target_pos: index of the target frame in the window.
    Returns the r-independent part of log phi, shape (N,).
    """
    u = np.asarray(pattern_probs, dtype=np.float64)
    illr = np.atleast_2d(np.asarray(window_illr, dtype=np.float64))
    _require_no_nan("pattern_probs", u)
    _require_no_nan("inverse LLR", illr)
    if (u < 0).any():
        raise ValueError("pattern probabilities must be nonnegative")
    if (illr < 0).any():
        raise ValueError("inverse LLRs must be nonnegative")
    width = illr.shape[0] + 1
    if u.shape != (2**width,):
        raise ValueError(f"need {2**width} pattern probabilities, got {u.shape}")
    if not 0 <= target_pos < width:
        raise ValueError(f"target_pos {target_pos} outside window of width {width}")

    bits = np.array(all_activity_patterns(width), dtype=np.int64)  # (2^W, W)
    target_bit = bits[:, target_pos]
    if u[target_bit == 1].sum() == 0.0:
        raise ValueError("prior assigns zero mass to target-frame activity")

    # Shift each frame's log factors by c = max(log v, 0) so every pattern
    # contribution is <= 0; the shift cancels between numerator and
    # denominator of G.
    logv = np.empty_like(illr)
    with np.errstate(divide="ignore"):
        np.log(illr, out=logv)
    c = np.maximum(logv, 0.0)
    with np.errstate(invalid="ignore"):  # inf - inf in the discarded branch
        g0 = np.where(np.isposinf(logv), 0.0, logv - c)  # inactive-frame factor
    g1 = -c  # active-frame factor

    with np.errstate(divide="ignore"):
        logu = np.log(u)
    omega = np.broadcast_to(logu[:, None], (u.size, illr.shape[1])).copy()
    k = 0
    for j in range(width):
        if j == target_pos:
            continue
        omega += np.where(bits[:, j, None] == 1, g1[k][None, :], g0[k][None, :])
        k += 1

    log_num = _logsumexp_rows(omega[target_bit == 0])
    log_den = _logsumexp_rows(omega[target_bit == 1])
    with np.errstate(invalid="ignore"):  # -inf minus -inf, raised below
        out = log_num - log_den
    if np.isnan(out).any():
        raise ValueError("window side information leaves zero posterior mass")
    return out


def _logsumexp_rows(a):
    """logsumexp over axis 0 of a (K, N) array; entries are <= 0 or -inf."""
    m = np.max(a, axis=0)
    safe = np.where(np.isfinite(m), m, 0.0)
    with np.errstate(divide="ignore"):
        out = np.log(np.sum(np.exp(a - safe[None, :]), axis=0)) + safe
    return np.where(np.isneginf(m), -np.inf, out)


def phi_generalized(illr, window_illr, pattern_probs, target_pos):
    """Posterior inactivity odds phi = v G for one device."""
    w = np.asarray(window_illr, dtype=np.float64).reshape(-1, 1)
    logg = window_log_g(pattern_probs, w, target_pos)
    with np.errstate(divide="ignore", over="ignore"):
        return float(np.exp(np.log(illr) + logg[0]))


# -- denoising and Jacobian --------------------------------------------------


def gain_from_log_phi(params, log_phi):
    """Row multiplier a/(1 + phi) evaluated stably from log phi."""
    with np.errstate(over="ignore"):
        return params.gain * np.exp(-np.logaddexp(0.0, log_phi))


def _jacobian_weight(log_phi):
    """phi/(1+phi)^2, NaN-free at log phi = +-inf."""
    u = -np.abs(log_phi)
    with np.errstate(over="ignore"):
        return np.exp(u - 2.0 * np.log1p(np.exp(u)))


def _log_phi_dsi(r, params, prev_illr, next_illr):
    if params.activity is None:
        raise ValueError("DenoiserParams.activity is required for SI-aware denoising")
    r = np.asarray(r)
    _require_no_nan("r", r)  # np.isnan covers complex dtypes
    sq = float(np.real(np.vdot(r, r)))
    logv = log_inverse_llr(sq, r.size, params)
    logc = si_log_prior(params.activity, np.atleast_1d(prev_illr), np.atleast_1d(next_illr))
    return float(logv + logc[0])


def denoise_dsi(r, params, prev_illr, next_illr):
    """MMSE estimate a r / (1 + phi) for one matched-filter row."""
    r = np.asarray(r)
    log_phi = _log_phi_dsi(r, params, prev_illr, next_illr)
    return gain_from_log_phi(params, log_phi) * r


def _jacobian_from_log_phi(r, params, log_phi):
    r = np.asarray(r)
    s = gain_from_log_phi(params, log_phi)
    w = params.gain * params.xi * _jacobian_weight(log_phi)
    return s * np.eye(r.size) + w * np.outer(np.conj(r), r)


def denoiser_jacobian(r, params, prev_illr, next_illr):
    """Wirtinger Jacobian J with d(eta) = dr J for the two-sided denoiser.

    J = (a/(1+phi)) I + (a xi phi/(1+phi)^2) conj(r)^T r, Hermitian PSD.
    """
    return _jacobian_from_log_phi(r, params, _log_phi_dsi(r, params, prev_illr, next_illr))


def denoise_generalized(r, params, window_illr, pattern_probs, target_pos):
    """MMSE estimate under a (T_l, T_r) window prior for one row."""
    r = np.asarray(r)
    sq = float(np.real(np.vdot(r, r)))
    logv = log_inverse_llr(sq, r.size, params)
    w = np.asarray(window_illr, dtype=np.float64).reshape(-1, 1)
    logg = window_log_g(pattern_probs, w, target_pos)
    return gain_from_log_phi(params, float(logv + logg[0])) * r


def generalized_jacobian(r, params, window_illr, pattern_probs, target_pos):
    """Jacobian of the window denoiser; same form as the two-sided one
    because the window factor G does not depend on the target row."""
    r = np.asarray(r)
    sq = float(np.real(np.vdot(r, r)))
    logv = log_inverse_llr(sq, r.size, params)
    w = np.asarray(window_illr, dtype=np.float64).reshape(-1, 1)
    logg = window_log_g(pattern_probs, w, target_pos)
    return _jacobian_from_log_phi(r, params, float(logv + logg[0]))
