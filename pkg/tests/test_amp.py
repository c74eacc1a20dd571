"""AMP step operations, the full recursion, and kernel backends."""

import numpy as np
import pytest

from ampsi.amp import (
    AmpRunState,
    IterationDivergedError,
    SideInfo,
    WindowSideInfo,
    denoise_block,
    initial_state_var,
    matched_filter_step,
    residual_update,
    run_amp,
    si_log_terms,
    update_state_var,
)
from ampsi.denoiser import DenoiserParams, denoise_dsi, denoiser_jacobian, si_log_prior
from ampsi.system import MarkovActivityModel, SystemConfig, generate_scenario, pattern_probabilities
from ampsi import _kernels_py

MODEL = MarkovActivityModel(p01=1 / 16, p11=3 / 4)


def crandn(rng, shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def test_step_operations_algebra():
    rng = np.random.default_rng(14)
    L, N, M = 6, 10, 2
    A = crandn(rng, (L, N))
    X = crandn(rng, (N, M))
    V = crandn(rng, (L, M))
    Y = crandn(rng, (L, M))
    J = crandn(rng, (M, M))
    np.testing.assert_allclose(matched_filter_step(X, V, A), X + A.conj().T @ V, rtol=1e-13)
    np.testing.assert_allclose(residual_update(Y, A, X, V, J), Y - A @ X + (V @ J) / L, rtol=1e-13)
    assert update_state_var(V) == pytest.approx(np.sum(np.abs(V) ** 2) / (L * M), rel=1e-13)
    assert initial_state_var(0.1, 500, 100, 0.2, 1.0) == pytest.approx(0.1 + 5 * 0.2)


def test_side_info_validation():
    with pytest.raises(ValueError):
        SideInfo(np.ones(3), np.ones(4))
    with pytest.raises(ValueError):
        WindowSideInfo(offsets=(0, 1), illr=np.ones((2, 4)), pattern_probs=np.ones(8) / 8)
    with pytest.raises(ValueError):
        WindowSideInfo(offsets=(1, -1), illr=np.ones((2, 4)), pattern_probs=np.ones(8) / 8)
    with pytest.raises(ValueError):
        WindowSideInfo(offsets=(-1, 1), illr=np.ones((2, 4)), pattern_probs=np.ones(4) / 4)
    w = WindowSideInfo(offsets=(-2, -1, 1), illr=np.ones((3, 4)), pattern_probs=np.ones(16) / 16)
    assert w.width == 4 and w.target_pos == 2


def test_si_log_terms_dispatch():
    n = 5
    logc, p_act = si_log_terms(MODEL, None, n)
    np.testing.assert_array_equal(logc, si_log_prior(MODEL, np.ones(n), np.ones(n)))
    assert p_act == MODEL.p_a

    si = SideInfo(np.full(n, 2.0), np.full(n, 0.5))
    logc, p_act = si_log_terms(MODEL, si, n)
    np.testing.assert_array_equal(logc, si_log_prior(MODEL, si.prev_illr, si.next_illr))
    assert p_act == MODEL.p_a

    u = pattern_probabilities(MODEL, 3)
    w = WindowSideInfo(offsets=(-1, 1), illr=np.ones((2, n)), pattern_probs=u)
    _, p_act = si_log_terms(MODEL, w, n)
    assert p_act == pytest.approx(MODEL.p_a, rel=1e-12)
    with pytest.raises(ValueError):
        si_log_terms(MODEL, SideInfo(np.ones(3), np.ones(3)), n)


def test_denoise_block_matches_rowwise_denoiser():
    rng = np.random.default_rng(15)
    N, M = 12, 3
    R = crandn(rng, (N, M))
    vp = rng.lognormal(0.0, 1.0, size=N)
    vn = rng.lognormal(0.0, 1.0, size=N)
    params = DenoiserParams(beta=1.0, state_var=0.4, activity=MODEL)
    logc = si_log_prior(MODEL, vp, vn)

    out, jac_sum = denoise_block(R, logc, params)
    want_rows = np.stack([denoise_dsi(R[n], params, vp[n], vn[n]) for n in range(N)])
    want_jac = sum(denoiser_jacobian(R[n], params, vp[n], vn[n]) for n in range(N))
    np.testing.assert_allclose(out, want_rows, rtol=1e-12, atol=1e-300)
    np.testing.assert_allclose(jac_sum, want_jac, rtol=1e-11)


def test_kernel_backends_agree():
    rng = np.random.default_rng(16)
    N, M = 30, 2
    R = np.ascontiguousarray(crandn(rng, (N, M)))
    logc = rng.normal(0.0, 2.0, size=N)
    logc[0], logc[1] = np.inf, -np.inf  # saturated side information rows
    params = DenoiserParams(beta=1.2, state_var=0.7, activity=MODEL)

    out_py = np.empty_like(R)
    c1_py, gram_py = _kernels_py.denoise_pass(R, logc, params.gain, params.xi,
                                              M * params.log_ratio, out_py)
    try:
        from ampsi import _kernels_c
    except ImportError:
        pytest.skip("compiled kernel not built")
    out_c = np.empty_like(R)
    c1_c, gram_c = _kernels_c.denoise_pass(R, logc, params.gain, params.xi,
                                           M * params.log_ratio, out_c)
    assert c1_c == pytest.approx(c1_py, rel=1e-13)
    np.testing.assert_allclose(gram_c, gram_py, rtol=1e-12, atol=1e-300)
    np.testing.assert_allclose(out_c, out_py, rtol=1e-13, atol=1e-300)
    # saturated rows are pinned exactly: +inf log phi zeroes the row
    assert np.all(out_c[0] == 0.0) and np.all(out_py[0] == 0.0)


def easy_config(**kw):
    base = dict(N=100, L=60, M=2, T=1, activity=MODEL, noise_var=0.005, seed=21)
    base.update(kw)
    return SystemConfig(**base)


def test_run_amp_converges_and_traces():
    cfg = easy_config()
    sc = generate_scenario(cfg)
    st = run_amp(sc.received[0], sc.pilot, MODEL, cfg.noise_var)
    assert isinstance(st, AmpRunState)
    assert st.converged and 1 <= st.iterations <= 50
    assert len(st.state_trace) == st.iterations + 1
    assert st.state_var >= cfg.noise_var
    assert st.estimate.shape == (cfg.N, cfg.M)
    assert st.matched_filter.shape == (cfg.N, cfg.M)
    # an easy instance is actually solved, not just terminated
    err = np.sum(np.abs(st.estimate - sc.effective[0]) ** 2)
    sig = np.sum(np.abs(sc.effective[0]) ** 2)
    assert 10 * np.log10(err / sig) < -15.0


def test_run_amp_deterministic_and_si_sensitive():
    cfg = easy_config()
    sc = generate_scenario(cfg)
    a = run_amp(sc.received[0], sc.pilot, MODEL, cfg.noise_var)
    b = run_amp(sc.received[0], sc.pilot, MODEL, cfg.noise_var)
    assert np.array_equal(a.estimate, b.estimate)
    si = SideInfo(np.full(cfg.N, 0.2), np.ones(cfg.N))
    c = run_amp(sc.received[0], sc.pilot, MODEL, cfg.noise_var, si=si)
    assert not np.array_equal(a.estimate, c.estimate)


def test_run_amp_uninformative_si_is_bit_identical():
    cfg = easy_config()
    sc = generate_scenario(cfg)
    a = run_amp(sc.received[0], sc.pilot, MODEL, cfg.noise_var)
    ones = np.ones(cfg.N)
    b = run_amp(sc.received[0], sc.pilot, MODEL, cfg.noise_var, si=SideInfo(ones, ones))
    assert np.array_equal(a.estimate, b.estimate)
    assert np.array_equal(a.residual, b.residual)


def test_run_amp_validation():
    cfg = easy_config()
    sc = generate_scenario(cfg)
    y, A = sc.received[0], sc.pilot
    with pytest.raises(ValueError):
        run_amp(y[:, 0], A, MODEL, 0.05)
    with pytest.raises(ValueError):
        run_amp(y, A[:10], MODEL, 0.05)
    with pytest.raises(ValueError):
        run_amp(y, A, MODEL, 0.0)
    with pytest.raises(ValueError):
        run_amp(y, A, MODEL, 0.05, max_iters=0)
    bad = y.copy()
    bad[0, 0] = np.nan
    with pytest.raises(ValueError):
        run_amp(bad, A, MODEL, 0.05)


def test_run_amp_divergence_reports_iteration():
    rng = np.random.default_rng(0)
    N, L, M = 40, 10, 2
    pilot = crandn(rng, (L, N)) / np.sqrt(L)
    y = 1e160 * crandn(rng, (L, M))  # overflows the residual energy
    with pytest.raises(IterationDivergedError) as exc:
        run_amp(y, pilot, MODEL, 0.1)
    assert exc.value.iteration == 1
    assert "iteration 1" in str(exc.value)
