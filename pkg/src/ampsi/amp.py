"""Vector AMP iteration for one frame, with optional temporal side info."""

import math
from dataclasses import dataclass

import numpy as np

from . import backend
from .denoiser import DenoiserParams, si_log_prior, window_log_g


class IterationDivergedError(RuntimeError):
    """Raised when an AMP iterate stops being finite."""

    def __init__(self, iteration, message=None):
        self.iteration = iteration
        super().__init__(message or f"non-finite AMP state at iteration {iteration}")


@dataclass(frozen=True)
class SideInfo:
    """Two-sided per-device side information (inverse LLRs of neighbors)."""

    prev_illr: np.ndarray  # (N,) previous-frame inverse LLRs
    next_illr: np.ndarray  # (N,) next-frame inverse LLRs

    def __post_init__(self):
        p = np.ascontiguousarray(self.prev_illr, dtype=np.float64)
        n = np.ascontiguousarray(self.next_illr, dtype=np.float64)
        if p.ndim != 1 or p.shape != n.shape:
            raise ValueError(f"side info must be two equal-length vectors, got {p.shape}, {n.shape}")
        object.__setattr__(self, "prev_illr", p)
        object.__setattr__(self, "next_illr", n)
        p.flags.writeable = False
        n.flags.writeable = False


@dataclass(frozen=True)
class WindowSideInfo:
    """Side information from a (T_l, T_r) window of neighboring frames."""

    offsets: tuple  # nonzero frame offsets, ascending, e.g. (-2, -1, 1)
    illr: np.ndarray  # (len(offsets), N) inverse LLRs in offset order
    pattern_probs: np.ndarray  # (2^W,) prior over window patterns, W = len(offsets)+1

    def __post_init__(self):
        offs = tuple(int(o) for o in self.offsets)
        if not offs or 0 in offs or list(offs) != sorted(set(offs)):
            raise ValueError(f"offsets must be distinct nonzero ints, ascending: {offs}")
        illr = np.ascontiguousarray(self.illr, dtype=np.float64)
        u = np.ascontiguousarray(self.pattern_probs, dtype=np.float64)
        if illr.ndim != 2 or illr.shape[0] != len(offs):
            raise ValueError(f"illr must be ({len(offs)}, N), got {illr.shape}")
        width = len(offs) + 1
        if u.shape != (2**width,):
            raise ValueError(f"need {2**width} pattern probabilities, got {u.shape}")
        object.__setattr__(self, "offsets", offs)
        object.__setattr__(self, "illr", illr)
        object.__setattr__(self, "pattern_probs", u)
        illr.flags.writeable = False
        u.flags.writeable = False

    @property
    def width(self):
        return len(self.offsets) + 1

    @property
    def target_pos(self):
        """Index of the target frame when window frames are sorted by offset."""
        return sum(1 for o in self.offsets if o < 0)


@dataclass(frozen=True)
class AmpRunState:
    """Converged (or last) AMP state for one frame."""

    estimate: np.ndarray  # (N, M) denoised effective channel estimate
    residual: np.ndarray  # (L, M) final residual V
    matched_filter: np.ndarray  # (N, M) R fed into the final denoise
    state_var: float  # effective noise variance e used in the final denoise
    iterations: int
    converged: bool
    state_trace: tuple  # measured ||V_i||_F^2/(L M), i = 0..iterations

    def __post_init__(self):
        for f in ("estimate", "residual", "matched_filter"):
            getattr(self, f).flags.writeable = False


def matched_filter_step(estimate, residual, pilot):
    """R = X_hat + A^H V."""
    return estimate + pilot.conj().T @ residual


def residual_update(received, pilot, estimate, prev_residual, jacobian_sum):
    """V = Y - A X_hat + (1/L) V_prev J_sum (Onsager-corrected residual)."""
    L = received.shape[0]
    return received - pilot @ estimate + (1.0 / L) * (prev_residual @ jacobian_sum)


def update_state_var(residual):
    """Residual-based effective noise estimate ||V||_F^2 / (L M)."""
    L, M = residual.shape
    return float(np.linalg.norm(residual) ** 2 / (L * M))


def initial_state_var(noise_var, n_devices, pilot_len, p_active, beta):
    """e_0 = sigma_w^2 + (N/L) p_a beta, the t=0 state of the recursion."""
    return noise_var + (n_devices / pilot_len) * p_active * beta


def si_log_terms(model, si, n_devices):
    """Per-device r-independent part of log phi, plus the target-frame
    activity prior implied by the side-information structure."""
    if si is None:
        ones = np.ones(n_devices)
        return si_log_prior(model, ones, ones), model.p_a
    if isinstance(si, SideInfo):
        if si.prev_illr.shape != (n_devices,):
            raise ValueError(f"side info for {si.prev_illr.shape[0]} devices, expected {n_devices}")
        return si_log_prior(model, si.prev_illr, si.next_illr), model.p_a
    if isinstance(si, WindowSideInfo):
        if si.illr.shape[1] != n_devices:
            raise ValueError(f"side info for {si.illr.shape[1]} devices, expected {n_devices}")
        logc = window_log_g(si.pattern_probs, si.illr, si.target_pos)
        bit = 2 ** (si.width - 1 - si.target_pos)
        p_act = float(sum(u for s, u in enumerate(si.pattern_probs) if s & bit))
        return logc, p_act
    raise TypeError(f"unsupported side info type {type(si).__name__}")


def denoise_block(R, logc, params):
    """Denoise all rows at once; returns (estimates, Jacobian sum)."""
    R = np.ascontiguousarray(R, dtype=np.complex128)
    out = np.empty_like(R)
    c1, gram = backend.denoise_pass(
        R, np.ascontiguousarray(logc), params.gain, params.xi,
        R.shape[1] * params.log_ratio, out,
    )
    jac_sum = c1 * np.eye(R.shape[1], dtype=np.complex128) + (params.gain * params.xi) * gram
    return out, jac_sum


def run_amp(received, pilot, model, noise_var, *, beta=1.0, si=None,
            max_iters=50, conv_tol=1e-6):
    """Run the AMP recursion on one frame until relative convergence.

    received: (L, M) observations.  pilot: (L, N) pilot matrix.  si: None,
    SideInfo, or WindowSideInfo.  Stops when ||X_i - X_{i-1}||_F <=
    conv_tol ||X_{i-1}||_F or after max_iters iterations.
    """
    received = np.ascontiguousarray(received, dtype=np.complex128)
    pilot = np.ascontiguousarray(pilot, dtype=np.complex128)
    if received.ndim != 2 or pilot.ndim != 2 or pilot.shape[0] != received.shape[0]:
        raise ValueError(f"shape mismatch: received {received.shape}, pilot {pilot.shape}")
    if np.isnan(received).any() or np.isnan(pilot).any():
        raise ValueError("received/pilot contain NaN")
    if not (noise_var > 0.0 and math.isfinite(noise_var)):
        raise ValueError(f"noise_var must be positive, got {noise_var}")
    if max_iters < 1 or conv_tol < 0.0:
        raise ValueError("need max_iters >= 1 and conv_tol >= 0")
    L, M = received.shape
    n_dev = pilot.shape[1]

    logc, p_act = si_log_terms(model, si, n_dev)
    pilot_h = np.ascontiguousarray(pilot.conj().T)
    e = initial_state_var(noise_var, n_dev, L, p_act, beta)

    X = np.zeros((n_dev, M), dtype=np.complex128)
    X_next = np.empty_like(X)
    R = np.empty_like(X)
    V = received.copy()
    eye = np.eye(M, dtype=np.complex128)
    trace = [update_state_var(V)]

    it = 0
    converged = False
    e_used = e
    for it in range(1, max_iters + 1):
        np.matmul(pilot_h, V, out=R)
        R += X
        params = DenoiserParams(beta=beta, state_var=e, activity=model)
        c1, gram = backend.denoise_pass(R, logc, params.gain, params.xi,
                                        M * params.log_ratio, X_next)
        jac_sum = c1 * eye + (params.gain * params.xi) * gram
        V = residual_update(received, pilot, X_next, V, jac_sum)
        resid = update_state_var(V)
        trace.append(resid)
        if not math.isfinite(resid):
            raise IterationDivergedError(it)
        delta = float(np.linalg.norm(X_next - X))
        ref = float(np.linalg.norm(X))
        e_used = e
        X, X_next = X_next, X
        e = max(resid, noise_var)
        if delta <= conv_tol * ref:
            converged = True
            break

    return AmpRunState(
        estimate=X,
        residual=V,
        matched_filter=R,
        state_var=e_used,
        iterations=it,
        converged=converged,
        state_trace=tuple(trace),
    )
