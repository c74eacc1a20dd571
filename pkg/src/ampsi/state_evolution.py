"""Scalar state evolution of the AMP recursion, by Monte Carlo.

Predicts the effective-noise trajectory
    E_1 = sigma_w^2 + (N/L) p_a beta,
    E_{i+1} = sigma_w^2 + (N/L) (1/M) E||eta(x + sqrt(E_i) d; E_i) - x||^2,
with x zero w.p. 1 - p_a and CN(0, beta I) otherwise, d ~ CN(0, I).
The expectation is estimated with n_samples draws per iteration.
"""

import numpy as np

from .denoiser import DenoiserParams, gain_from_log_phi, log_inverse_llr, si_log_prior


def se_trajectory(n_iters, *, n_ratio, beta, noise_var, model, m,
                  n_samples=10_000, seed=0):
    """Return (E_1, ..., E_{n_iters}) for the no-side-information denoiser."""
    if n_iters < 1:
        raise ValueError("need n_iters >= 1")
    rng = np.random.default_rng(seed)
    p_a = model.p_a
    logc = si_log_prior(model, np.ones(1), np.ones(1))[0]

    # one fixed set of prior/noise draws, reused at every iteration: the
    # recursion then tracks a smooth estimate of the map e -> f(e) instead
    # of compounding fresh Monte Carlo noise each step
    active = rng.random(n_samples) < p_a
    x = rng.standard_normal((n_samples, m)) + 1j * rng.standard_normal((n_samples, m))
    x *= np.sqrt(beta / 2.0) * active[:, None]
    d = rng.standard_normal((n_samples, m)) + 1j * rng.standard_normal((n_samples, m))

    es = np.empty(n_iters)
    e = noise_var + n_ratio * p_a * beta
    for i in range(n_iters):
        es[i] = e
        r = x + np.sqrt(e / 2.0) * d
        params = DenoiserParams(beta=beta, state_var=e, activity=model)
        sq = np.einsum("nm,nm->n", r.real, r.real) + np.einsum("nm,nm->n", r.imag, r.imag)
        log_phi = log_inverse_llr(sq, m, params) + logc
        eta = gain_from_log_phi(params, log_phi)[:, None] * r
        # (1/M) E||row error||^2 is just the per-entry mean squared error
        e = noise_var + n_ratio * float(np.mean(np.abs(eta - x) ** 2))
    return es
