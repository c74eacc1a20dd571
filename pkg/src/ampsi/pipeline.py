"""Frame-by-frame processing with sliding-window side information.

For each frame t the pipeline runs AMP with side information assembled
from neighboring frames: inverse LLRs extracted from the already-converged
run of frame t-1 (and further left), and from a coarse no-SI run of frame
t+1 (and further right).  Coarse runs are cached, so a full DSI pass over
T frames costs 2T - 1 AMP runs.  Frames outside the horizon contribute
exactly uninformative side information.
"""

from dataclasses import dataclass

import numpy as np

from .amp import AmpRunState, IterationDivergedError, SideInfo, WindowSideInfo, run_amp
from .denoiser import DenoiserParams, log_inverse_llr
from .system import generate_scenario, pattern_probabilities


@dataclass(frozen=True)
class SiMode:
    """Which side information the pipeline feeds to each frame."""

    kind: str  # nosi | ssi | dsi | perfect | gdsi
    t_left: int = 0  # window frames to the left (gdsi only)
    t_right: int = 0  # window frames to the right (gdsi only)

    def __post_init__(self):
        if self.kind not in ("nosi", "ssi", "dsi", "perfect", "gdsi"):
            raise ValueError(f"unknown SI mode kind {self.kind!r}")
        if self.kind == "gdsi":
            if self.t_left < 0 or self.t_right < 0 or self.t_left + self.t_right < 1:
                raise ValueError(
                    f"gdsi window needs t_left, t_right >= 0 and at least one "
                    f"neighbor, got ({self.t_left}, {self.t_right})"
                )

    @property
    def token(self):
        if self.kind == "gdsi":
            return f"gdsi-{self.t_left}-{self.t_right}"
        return self.kind


NOSI = SiMode("nosi")
SSI = SiMode("ssi")
DSI = SiMode("dsi")
PERFECT_SI = SiMode("perfect")


def generalized_dsi(t_left, t_right):
    return SiMode("gdsi", t_left, t_right)


def parse_mode(token):
    """Inverse of SiMode.token: nosi | ssi | dsi | perfect | gdsi-<l>-<r>."""
    if token in ("nosi", "ssi", "dsi", "perfect"):
        return SiMode(token)
    if token.startswith("gdsi-"):
        parts = token.split("-")
        if len(parts) == 3:
            return generalized_dsi(int(parts[1]), int(parts[2]))
    raise ValueError(f"unrecognized SI mode token {token!r}")


def extract_si(state, beta, model=None):
    """Per-device inverse LLRs from a converged AMP run.

    Uses the run's final matched-filter rows and the state variance they
    were denoised with; underflow to 0 and overflow to +inf are legitimate
    saturated side information.
    """
    params = DenoiserParams(beta=beta, state_var=state.state_var, activity=model)
    r = state.matched_filter
    sq = np.einsum("nm,nm->n", r.real, r.real) + np.einsum("nm,nm->n", r.imag, r.imag)
    with np.errstate(over="ignore"):
        return np.exp(log_inverse_llr(sq, r.shape[1], params))


def perfect_si(activity_bits):
    """Oracle inverse LLRs: 0 for truly active devices, +inf for inactive."""
    bits = np.asarray(activity_bits)
    return np.where(bits.astype(bool), 0.0, np.inf)


@dataclass(frozen=True)
class PipelineResult:
    """Outputs of one scenario pass under one SI mode."""

    mode: SiMode
    frames: tuple  # per-frame converged AmpRunState
    side_info: tuple  # per-frame SideInfo/WindowSideInfo fed to run_amp
    coarse: tuple  # per-frame coarse AmpRunState (None where never needed)
    n_runs: int  # total AMP runs, full + coarse

    def estimates(self):
        """(T, N, M) stack of effective-channel estimates."""
        return np.stack([f.estimate for f in self.frames])


def process_frames(config, mode, scenario=None):
    """Process all frames of a scenario under the given SI mode.

    A (1, 1) generalized window with first-order Markov pattern priors is
    the two-sided closed form, so it dispatches to the same path as DSI.
    """
    if scenario is None:
        scenario = generate_scenario(config)
    model = config.activity
    T, N = scenario.activity.shape
    uninformative = np.ones(N)

    def full_run(t, si):
        try:
            return run_amp(
                scenario.received[t], scenario.pilot, model, scenario.noise_var,
                beta=config.beta, si=si, max_iters=config.max_iters,
                conv_tol=config.conv_tol,
            )
        except IterationDivergedError as exc:
            raise IterationDivergedError(exc.iteration, f"frame {t}: {exc}") from exc

    coarse_cache = {}
    runs = 0

    def coarse_state(t):
        nonlocal runs
        if t not in coarse_cache:
            coarse_cache[t] = full_run(t, None)
            runs += 1
        return coarse_cache[t]

    window = mode.kind == "gdsi" and (mode.t_left, mode.t_right) != (1, 1)
    if window:
        width = mode.t_left + mode.t_right + 1
        offsets = tuple(range(-mode.t_left, 0)) + tuple(range(1, mode.t_right + 1))
        u = pattern_probabilities(model, width)

    frames = []
    infos = []
    for t in range(T):
        if window:
            rows = np.empty((len(offsets), N))
            for k, o in enumerate(offsets):
                tau = t + o
                if tau < 0 or tau >= T:
                    rows[k] = uninformative
                elif o < 0:
                    rows[k] = extract_si(frames[tau], config.beta)
                else:
                    rows[k] = extract_si(coarse_state(tau), config.beta)
            si = WindowSideInfo(offsets=offsets, illr=rows, pattern_probs=u)
        else:
            if mode.kind == "nosi" or t == 0:
                prev = uninformative
            elif mode.kind == "perfect":
                prev = perfect_si(scenario.activity[t - 1])
            else:
                prev = extract_si(frames[t - 1], config.beta)
            if mode.kind in ("nosi", "ssi") or t == T - 1:
                nxt = uninformative
            elif mode.kind == "perfect":
                nxt = perfect_si(scenario.activity[t + 1])
            else:  # dsi or the (1, 1) window
                nxt = extract_si(coarse_state(t + 1), config.beta)
            si = SideInfo(prev_illr=prev, next_illr=nxt)
        frames.append(full_run(t, si))
        runs += 1
        infos.append(si)

    coarse_tuple = tuple(coarse_cache.get(t) for t in range(T))
    return PipelineResult(mode=mode, frames=tuple(frames), side_info=tuple(infos),
                          coarse=coarse_tuple, n_runs=runs)
