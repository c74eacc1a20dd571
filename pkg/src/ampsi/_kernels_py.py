"""Pure numpy fallback for the fused denoiser pass."""

import numpy as np

BACKEND_NAME = "python"


def denoise_pass(R, logc, gain, xi, log_det, out):
    """Denoise all rows of R in one pass.

    R: (N, M) matched-filter rows.  logc: (N,) per-device r-independent part
    of log phi (finite or +-inf, never NaN).  Writes eta rows into out and
    returns (sum of a/(1+phi_n), sum of w_n conj(r_n)^T r_n) with
    w_n = phi_n/(1+phi_n)^2, the pieces of the Onsager Jacobian sum.
    """
    sq = np.einsum("nm,nm->n", R.real, R.real) + np.einsum("nm,nm->n", R.imag, R.imag)
    log_phi = log_det - xi * sq + logc
    with np.errstate(over="ignore"):
        s = gain * np.exp(-np.logaddexp(0.0, log_phi))
        u = -np.abs(log_phi)
        w = np.exp(u - 2.0 * np.log1p(np.exp(u)))
    np.multiply(R, s[:, None], out=out)
    gram = (R.conj().T * w) @ R
    return float(s.sum()), gram
