"""Detection thresholds, metrics pooling, and rate calibration."""

import math

import numpy as np
import pytest

from ampsi.amp import SideInfo, WindowSideInfo
from ampsi.denoiser import DenoiserParams
from ampsi.detection import (
    CalibrationError,
    Metrics,
    calibrate_equal_rates,
    compute_metrics,
    decision_threshold,
    detect,
    llr_scores,
    si_detection_shift,
)
from ampsi.pipeline import DSI, NOSI, process_frames
from ampsi.system import MarkovActivityModel, SystemConfig, generate_scenario, pattern_probabilities

MODEL = MarkovActivityModel(p01=1 / 16, p11=3 / 4)


def test_threshold_closed_form():
    p = DenoiserParams(beta=1.0, state_var=0.5, activity=MODEL)
    got = decision_threshold(p, 2, 0.3, 1.1)
    assert got == pytest.approx((1.1 + 2 * p.log_ratio + 0.3) / p.xi, rel=1e-13)


def test_si_detection_shift_dispatch():
    n = 6
    assert np.all(si_detection_shift(MODEL, None, n) == 0.0)
    ones = np.ones(n)
    assert np.all(si_detection_shift(MODEL, SideInfo(ones, ones), n) == 0.0)
    # a width-3 window with uninformative neighbors reduces to no shift
    u = pattern_probabilities(MODEL, 3)
    w = WindowSideInfo(offsets=(-1, 1), illr=np.ones((2, n)), pattern_probs=u)
    np.testing.assert_allclose(si_detection_shift(MODEL, w, n), 0.0, atol=1e-12)


def test_detect_agrees_with_llr_scores_on_pipeline_output():
    cfg = SystemConfig(N=60, L=24, M=2, T=3, activity=MODEL, noise_var=0.2, seed=41)
    sc = generate_scenario(cfg)
    for mode in (NOSI, DSI):
        res = process_frames(cfg, mode, sc)
        for st, si in zip(res.frames, res.side_info):
            scores = llr_scores(st, MODEL, cfg.beta, si)
            for iota in (-2.7, 0.0, 1.9):
                np.testing.assert_array_equal(
                    detect(st, MODEL, cfg.beta, si, iota), scores > iota)


def test_certain_si_forces_decisions():
    frozen = MarkovActivityModel(p01=0.0, p11=1.0, p_a=0.2)
    cfg = SystemConfig(N=60, L=24, M=2, T=1, activity=frozen, noise_var=0.2, seed=42)
    sc = generate_scenario(cfg)
    res = process_frames(cfg, NOSI, sc)
    st = res.frames[0]
    known = np.zeros(cfg.N)
    known[: 30] = np.inf  # first half certainly inactive, rest certainly active
    si = SideInfo(known, np.ones(cfg.N))
    scores = llr_scores(st, frozen, cfg.beta, si)
    assert np.all(np.isneginf(scores[:30])) and np.all(np.isposinf(scores[30:]))
    for iota in (-1e9, 0.0, 1e9):
        dec = detect(st, frozen, cfg.beta, si, iota)
        assert not dec[:30].any() and dec[30:].all()


def test_metrics_counts_and_rates():
    m = Metrics(active=10, inactive=90, missed=2, false_alarms=9,
                err_energy=1.0, sig_energy=4.0, frames=1)
    assert m.mdr == pytest.approx(0.2)
    assert m.far == pytest.approx(0.1)
    assert m.nmse == pytest.approx(0.25)
    assert m.nmse_db == pytest.approx(10 * math.log10(0.25))
    both = m + m
    assert both.active == 20 and both.frames == 2
    assert both.mdr == pytest.approx(0.2)
    empty = Metrics()
    assert empty.mdr == 0.0 and empty.far == 0.0
    assert math.isnan(empty.nmse)


def test_compute_metrics_crafted_case():
    truth = np.array([[1, 0, 1], [0, 0, 1]])
    decisions = np.array([[1, 1, 0], [0, 0, 1]])  # one miss, one false alarm
    est = np.zeros((2, 3, 2), dtype=complex)
    eff = np.zeros((2, 3, 2), dtype=complex)
    eff[0, 0] = 1.0 + 0j  # energy 2
    est[0, 0] = 0.5 + 0j  # error energy 2 * 0.25
    m = compute_metrics(decisions, truth, est, eff)
    assert (m.active, m.inactive, m.missed, m.false_alarms) == (3, 3, 1, 1)
    assert m.err_energy == pytest.approx(0.5)
    assert m.sig_energy == pytest.approx(2.0)
    assert m.frames == 2
    with pytest.raises(ValueError):
        compute_metrics(decisions[:1], truth, est, eff)


def test_calibration_converges_on_synthetic_scores():
    rng = np.random.default_rng(43)
    labels = rng.random(4000) < 0.2
    scores = np.where(labels, rng.normal(1.5, 1.0, 4000), rng.normal(-1.5, 1.0, 4000))

    def runner(iota):
        mdr = np.mean(scores[labels] <= iota)
        far = np.mean(scores[~labels] > iota)
        return float(mdr), float(far)

    iota = calibrate_equal_rates(runner, -10.0, 10.0, rel_tol=0.05)
    mdr, far = runner(iota)
    assert abs(mdr - far) <= 0.05 * 0.5 * (mdr + far)


def test_calibration_unbracketed_raises():
    def runner(iota):
        return 0.5, 0.1  # never crosses

    with pytest.raises(CalibrationError, match="bracket"):
        calibrate_equal_rates(runner, 0.0, 1.0)
    with pytest.raises(ValueError):
        calibrate_equal_rates(runner, 1.0, 1.0)
