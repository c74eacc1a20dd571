"""Activity detection, error metrics, and MDR=FAR threshold calibration."""

import math
from dataclasses import dataclass

import numpy as np

from .amp import SideInfo, WindowSideInfo
from .denoiser import DenoiserParams, si_log_bracket_shift, window_log_g


class CalibrationError(RuntimeError):
    pass


def si_detection_shift(model, si, n_devices):
    """Per-device SI shift of the LLR: log(B_prev B_next) for two-sided SI,
    log(p_a/(1-p_a)) + log G for window SI, exactly 0 with no SI."""
    if si is None:
        return np.zeros(n_devices)
    if isinstance(si, SideInfo):
        return si_log_bracket_shift(model, si.prev_illr, si.next_illr)
    if isinstance(si, WindowSideInfo):
        prior_odds = math.log(model.p_a) - math.log1p(-model.p_a)
        return prior_odds + window_log_g(si.pattern_probs, si.illr, si.target_pos)
    raise TypeError(f"unsupported side info type {type(si).__name__}")


def decision_threshold(params, m, si_shift, base_threshold):
    """Squared-norm threshold (base + M log((e+beta)/e) + shift)/xi."""
    return (base_threshold + m * params.log_ratio + si_shift) / params.xi


def _row_sq_norms(r):
    return np.einsum("nm,nm->n", r.real, r.real) + np.einsum("nm,nm->n", r.imag, r.imag)


def detect(state, model, beta, si, base_threshold):
    """Declare devices active by thresholding final matched-filter norms."""
    params = DenoiserParams(beta=beta, state_var=state.state_var, activity=model)
    r = state.matched_filter
    shift = si_detection_shift(model, si, r.shape[0])
    thresholds = decision_threshold(params, r.shape[1], shift, base_threshold)
    return _row_sq_norms(r) > thresholds


def llr_scores(state, model, beta, si):
    """Per-device LLR xi = Xi ||r||^2 - M log((e+beta)/e) - shift.

    detect(..., base) is equivalent to llr_scores(...) > base; keeping both
    routes lets the threshold form be cross-checked against the score form.
    """
    params = DenoiserParams(beta=beta, state_var=state.state_var, activity=model)
    r = state.matched_filter
    shift = si_detection_shift(model, si, r.shape[0])
    return params.xi * _row_sq_norms(r) - r.shape[1] * params.log_ratio - shift


@dataclass(frozen=True)
class Metrics:
    """Pooled detection and estimation error counts.

    Rates use pooled denominators, so frames with no active device simply
    contribute nothing to the MDR numerator or denominator while still
    counting toward frames.
    """

    active: int = 0  # truly active device-frame slots
    inactive: int = 0
    missed: int = 0
    false_alarms: int = 0
    err_energy: float = 0.0  # sum ||X_hat - X||_F^2
    sig_energy: float = 0.0  # sum ||X||_F^2
    frames: int = 0

    def __add__(self, other):
        return Metrics(
            self.active + other.active,
            self.inactive + other.inactive,
            self.missed + other.missed,
            self.false_alarms + other.false_alarms,
            self.err_energy + other.err_energy,
            self.sig_energy + other.sig_energy,
            self.frames + other.frames,
        )

    @property
    def mdr(self):
        return self.missed / max(self.active, 1)

    @property
    def far(self):
        return self.false_alarms / max(self.inactive, 1)

    @property
    def nmse(self):
        return self.err_energy / self.sig_energy if self.sig_energy > 0 else math.nan

    @property
    def nmse_db(self):
        return 10.0 * math.log10(self.nmse) if self.nmse > 0 else -math.inf


def compute_metrics(decisions, truth, estimates, effective):
    """Pool MDR/FAR/NMSE ingredients over all frames of one scenario."""
    decisions = np.asarray(decisions, dtype=bool)
    truth = np.asarray(truth).astype(bool)
    if decisions.shape != truth.shape:
        raise ValueError(f"decisions {decisions.shape} vs truth {truth.shape}")
    effective = np.asarray(effective)
    err = np.asarray(estimates) - effective
    return Metrics(
        active=int(truth.sum()),
        inactive=int((~truth).sum()),
        missed=int((truth & ~decisions).sum()),
        false_alarms=int((~truth & decisions).sum()),
        err_energy=float((np.abs(err) ** 2).sum()),
        sig_energy=float((np.abs(effective) ** 2).sum()),
        frames=truth.shape[0],
    )


def calibrate_equal_rates(runner, lo, hi, *, rel_tol=0.1, max_steps=30):
    """Bisect the base threshold until MDR and FAR match to rel_tol.

    runner(threshold) -> (mdr, far).  MDR is nondecreasing and FAR
    nonincreasing in the threshold, so mdr - far brackets a root between a
    low threshold (everything declared active) and a high one.  Returns the
    final midpoint after meeting |mdr - far| <= rel_tol (mdr+far)/2 or
    max_steps bisections.
    """
    if not lo < hi:
        raise ValueError(f"need lo < hi, got {lo}, {hi}")
    m_lo, f_lo = runner(lo)
    m_hi, f_hi = runner(hi)
    if m_lo - f_lo > 0 or m_hi - f_hi < 0:
        raise CalibrationError(
            "threshold bounds do not bracket MDR = FAR: "
            f"at lo={lo:g} (mdr={m_lo:.4g}, far={f_lo:.4g}), "
            f"at hi={hi:g} (mdr={m_hi:.4g}, far={f_hi:.4g})"
        )
    mid = 0.5 * (lo + hi)
    for _ in range(max_steps):
        mid = 0.5 * (lo + hi)
        m, f = runner(mid)
        if abs(m - f) <= rel_tol * 0.5 * (m + f):
            return mid
        if m - f < 0:
            lo = mid
        else:
            hi = mid
    return mid
