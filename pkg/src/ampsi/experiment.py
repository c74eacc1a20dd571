"""Monte Carlo sweeps: seeding, calibration, pooling, CSV/plot emission.

Trial seeds depend only on (root seed, stream, sweep-point index, trial
index), never on the SI mode, so every mode sees identical scenarios and
mode comparisons are paired.  Calibration trials (stream 1) are disjoint
from evaluation trials (stream 0).
"""

import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .detection import Metrics, calibrate_equal_rates, compute_metrics, detect, llr_scores
from .pipeline import SiMode, process_frames
from .system import MarkovActivityModel, SystemConfig, generate_scenario, with_seed

CSV_HEADER = "mode,N,L,M,T,p01,p11,snr_db,trials,mdr,far,nmse_db,base_threshold,wall_time_seconds"

_EVAL_STREAM = 0
_CAL_STREAM = 1


def child_seed(root_seed, stream, value_idx, trial_idx):
    """Deterministic 64-bit trial seed from the experiment coordinates."""
    ss = np.random.SeedSequence(root_seed, spawn_key=(stream, value_idx, trial_idx))
    return int(ss.generate_state(1, np.uint64)[0])


def _eval_trial(args):
    config, mode, base_threshold, seed = args
    cfg = with_seed(config, seed)
    scenario = generate_scenario(cfg)
    result = process_frames(cfg, mode, scenario)
    decisions = np.stack([
        detect(f, cfg.activity, cfg.beta, si, base_threshold)
        for f, si in zip(result.frames, result.side_info)
    ])
    return compute_metrics(decisions, scenario.activity, result.estimates(),
                           scenario.effective)


def _cal_trial(args):
    config, mode, seed = args
    cfg = with_seed(config, seed)
    scenario = generate_scenario(cfg)
    result = process_frames(cfg, mode, scenario)
    scores = np.concatenate([
        llr_scores(f, cfg.activity, cfg.beta, si)
        for f, si in zip(result.frames, result.side_info)
    ])
    return scores, scenario.activity.ravel().astype(bool)


def _map(fn, arglist, executor):
    if executor is None:
        return [fn(a) for a in arglist]
    return list(executor.map(fn, arglist, chunksize=1))


def make_rate_runner(scores, labels):
    """runner(threshold) -> (mdr, far) over cached scores and truth labels.

    Valid because the threshold only enters the final comparison; devices
    with +-inf scores are decided by side information alone and contribute
    to the rates at every threshold.
    """
    active = labels
    inactive = ~labels
    n_act = max(int(active.sum()), 1)
    n_inact = max(int(inactive.sum()), 1)

    def runner(threshold):
        declared = scores > threshold
        mdr = int((active & ~declared).sum()) / n_act
        far = int((inactive & declared).sum()) / n_inact
        return mdr, far

    return runner


def score_bounds(scores):
    """Bisection bounds straddling every finite score."""
    finite = scores[np.isfinite(scores)]
    if finite.size == 0:
        raise CalibrationBoundsError("no finite detection scores to calibrate on")
    return float(finite.min()) - 1.0, float(finite.max()) + 1.0


class CalibrationBoundsError(RuntimeError):
    pass


@dataclass(frozen=True)
class PointResult:
    """One (sweep value, mode) cell of a sweep."""

    config: SystemConfig
    mode: SiMode
    value: float
    base_threshold: float
    pooled: Metrics
    per_trial: tuple  # per-trial Metrics, evaluation stream order
    cal_mdr: float  # calibration-pool rates at the chosen threshold
    cal_far: float
    wall_time_seconds: float


def run_point(config, mode, *, trials, cal_trials, calibrate, base_threshold,
              seed_root, value_idx, value, executor=None, cal_rel_tol=0.01):
    """Calibrate (optionally) and evaluate one sweep cell.

    cal_rel_tol tightens the bisection stop beyond the operation default;
    extra precision costs nothing on cached scores and keeps the threshold
    placement error well below mode-to-mode metric gaps.
    """
    t0 = time.perf_counter()
    iota = base_threshold
    cal_mdr = cal_far = float("nan")
    if calibrate:
        cal_args = [(config, mode, child_seed(seed_root, _CAL_STREAM, value_idx, i))
                    for i in range(cal_trials)]
        outs = _map(_cal_trial, cal_args, executor)
        scores = np.concatenate([s for s, _ in outs])
        labels = np.concatenate([l for _, l in outs])
        runner = make_rate_runner(scores, labels)
        lo, hi = score_bounds(scores)
        iota = calibrate_equal_rates(runner, lo, hi, rel_tol=cal_rel_tol)
        cal_mdr, cal_far = runner(iota)

    eval_args = [(config, mode, iota, child_seed(seed_root, _EVAL_STREAM, value_idx, i))
                 for i in range(trials)]
    per_trial = _map(_eval_trial, eval_args, executor)
    pooled = Metrics()
    for m in per_trial:
        pooled = pooled + m
    return PointResult(
        config=config, mode=mode, value=value, base_threshold=iota,
        pooled=pooled, per_trial=tuple(per_trial),
        cal_mdr=cal_mdr, cal_far=cal_far,
        wall_time_seconds=time.perf_counter() - t0,
    )


@dataclass(frozen=True)
class SweepSpec:
    """A family of sweep cells: one swept parameter times a set of SI modes."""

    param: str  # pilot_length | p11 | antennas
    values: tuple
    base: SystemConfig
    modes: tuple  # SiMode instances
    trials: int = 200
    cal_trials: int = 50
    cal_rel_tol: float = 0.01  # bisection stop on the calibration pool

    def __post_init__(self):
        if self.param not in ("pilot_length", "p11", "antennas"):
            raise ValueError(f"unknown sweep parameter {self.param!r}")
        if not self.values or not self.modes:
            raise ValueError("sweep needs at least one value and one mode")


def config_for_value(spec, value):
    """Instantiate the base config at one sweep value.

    Sweeping the pilot length rescales noise_var by base.L/L so the
    per-pilot-symbol SNR stays fixed: a longer pilot spends proportionally
    more energy, which is what makes performance improve with L.
    """
    if spec.param == "pilot_length":
        L = int(value)
        return replace(spec.base, L=L, noise_var=spec.base.noise_var * spec.base.L / L)
    if spec.param == "antennas":
        return replace(spec.base, M=int(value))
    # p11 sweep holds the stationary activity probability fixed
    p_a = spec.base.activity.p_a
    p11 = float(value)
    p01 = p_a * (1.0 - p11) / (1.0 - p_a)
    if 1.0 - p11 + p01 > 0.0:
        model = MarkovActivityModel(p01, p11)
    else:
        model = MarkovActivityModel(p01, p11, p_a=p_a)  # frozen chain
    return replace(spec.base, activity=model)


@dataclass(frozen=True)
class ResultRow:
    """One CSV row; field order matches CSV_HEADER."""

    mode: str
    N: int
    L: int
    M: int
    T: int
    p01: float
    p11: float
    snr_db: float
    trials: int
    mdr: float
    far: float
    nmse_db: float
    base_threshold: float
    wall_time_seconds: float


def _fmt(x):
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{x:.6g}"


def row_to_csv(row):
    return ",".join(_fmt(getattr(row, f)) for f in ResultRow.__dataclass_fields__)


def point_to_row(point, trials):
    cfg, pooled = point.config, point.pooled
    return ResultRow(
        mode=point.mode.token, N=cfg.N, L=cfg.L, M=cfg.M, T=cfg.T,
        p01=cfg.activity.p01, p11=cfg.activity.p11, snr_db=cfg.snr_db,
        trials=trials, mdr=pooled.mdr, far=pooled.far, nmse_db=pooled.nmse_db,
        base_threshold=point.base_threshold,
        wall_time_seconds=point.wall_time_seconds,
    )


@dataclass(frozen=True)
class SweepResult:
    spec: SweepSpec
    rows: tuple  # ResultRow per (value, mode), values outer
    points: tuple  # matching PointResult per row


def run_sweep(spec, *, seed=0, workers=1, calibrate=True, base_threshold=0.0):
    """Run every (value, mode) cell of a sweep."""
    rows = []
    points = []

    def drive(executor):
        for vi, value in enumerate(spec.values):
            cfg = config_for_value(spec, value)
            for mode in spec.modes:
                pr = run_point(
                    cfg, mode, trials=spec.trials, cal_trials=spec.cal_trials,
                    calibrate=calibrate, base_threshold=base_threshold,
                    seed_root=seed, value_idx=vi, value=value, executor=executor,
                    cal_rel_tol=spec.cal_rel_tol,
                )
                points.append(pr)
                rows.append(point_to_row(pr, spec.trials))

    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            drive(ex)
    else:
        drive(None)
    return SweepResult(spec=spec, rows=tuple(rows), points=tuple(points))


def emit_csv(rows, path):
    """Write result rows as UTF-8, LF-terminated CSV."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(CSV_HEADER + "\n")
        for row in rows:
            fh.write(row_to_csv(row) + "\n")


_X_NAME = {"pilot_length": "L", "p11": "p11", "antennas": "M"}


def emit_plotdata(result, out_dir):
    """One whitespace-delimited x/y series file per (figure, mode).

    Detection figures plot MDR against the swept value, estimation figures
    NMSE in dB; files are named <metric>_vs_<x>_<mode>.dat.
    """
    x_name = _X_NAME[result.spec.param]
    written = []
    for mode in result.spec.modes:
        series = [(p.value, p) for p in result.points if p.mode == mode]
        for metric, get in (("mdr", lambda p: p.pooled.mdr),
                            ("nmse_db", lambda p: p.pooled.nmse_db)):
            path = os.path.join(out_dir, f"{metric}_vs_{x_name}_{mode.token}.dat")
            with open(path, "w", encoding="utf-8", newline="\n") as fh:
                for value, p in sorted(series, key=lambda s: s[0]):
                    fh.write(f"{value:.6g} {get(p):.6g}\n")
            written.append(path)
    return written
