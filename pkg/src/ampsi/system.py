"""System model: Markov activity, scenario generation, config parsing.

Complex Gaussian convention throughout: CN(0, v) has i.i.d. real and
imaginary parts, each N(0, v/2).
"""

import math
from dataclasses import dataclass, replace

import numpy as np


def _check_prob(name, p):
    if not (isinstance(p, (int, float)) and math.isfinite(p) and 0.0 <= p <= 1.0):
        raise ValueError(f"{name} must be a probability in [0, 1], got {p!r}")


@dataclass(frozen=True)
class MarkovActivityModel:
    """First-order binary Markov chain for per-device activity.

    p01 is P(active | inactive), p11 is P(active | active).  The chain is
    assumed stationary with activity probability p_a = p01 / (1 - p11 + p01).
    For the frozen chain (p01 = 0, p11 = 1) the stationary distribution is
    not unique, so p_a must then be supplied explicitly.
    """

    p01: float  # birth probability
    p11: float  # survival probability
    p_a: float = None  # stationary activity probability; derived unless frozen

    def __post_init__(self):
        _check_prob("p01", self.p01)
        _check_prob("p11", self.p11)
        denom = 1.0 - self.p11 + self.p01
        if self.p_a is None:
            if denom <= 0.0:
                raise ValueError(
                    "chain has no unique stationary distribution "
                    f"(p01={self.p01}, p11={self.p11}); pass p_a explicitly"
                )
            object.__setattr__(self, "p_a", self.p01 / denom)
        else:
            _check_prob("p_a", self.p_a)
            if not (0.0 < self.p_a < 1.0):
                raise ValueError(f"explicit p_a must lie in (0, 1), got {self.p_a}")
            if denom > 0.0 and abs(self.p01 / denom - self.p_a) > 1e-12:
                raise ValueError(
                    f"explicit p_a={self.p_a} contradicts stationary value "
                    f"{self.p01 / denom} of (p01={self.p01}, p11={self.p11})"
                )
        if not (0.0 < self.p_a < 1.0):
            raise ValueError(f"stationary activity probability must be in (0, 1), got {self.p_a}")

    @property
    def p00(self):
        return 1.0 - self.p01

    @property
    def p10(self):
        return 1.0 - self.p11

    def transition(self, prev, nxt):
        """P(state nxt at t+1 | state prev at t) for bits prev, nxt."""
        if prev:
            return self.p11 if nxt else 1.0 - self.p11
        return self.p01 if nxt else 1.0 - self.p01


def stationary_probability(model):
    """Stationary P(active) of the activity chain."""
    return model.p_a


def all_activity_patterns(width):
    """All binary activity patterns of the given window width.

    Returned in integer order with the leftmost (earliest) frame as the most
    significant bit, so index s corresponds to format(s, f"0{width}b").
    """
    if width < 1:
        raise ValueError(f"pattern width must be >= 1, got {width}")
    return [
        tuple((s >> (width - 1 - j)) & 1 for j in range(width))
        for s in range(2**width)
    ]


def pattern_probability(model, bits):
    """Stationary probability of a consecutive-frame activity pattern."""
    if len(bits) < 1:
        raise ValueError("empty pattern")
    p = model.p_a if bits[0] else 1.0 - model.p_a
    for prev, nxt in zip(bits[:-1], bits[1:]):
        p *= model.transition(prev, nxt)
    return p


def pattern_probabilities(model, width):
    """Vector of stationary probabilities over all_activity_patterns(width)."""
    return np.array([pattern_probability(model, b) for b in all_activity_patterns(width)])


@dataclass(frozen=True)
class SystemConfig:
    """Static description of one simulated uplink system."""

    N: int  # devices
    L: int  # pilot length (observations per frame)
    M: int  # receive antennas
    T: int  # frames per scenario
    activity: MarkovActivityModel
    noise_var: float  # per-entry noise variance sigma_w^2
    beta: float = 1.0  # large-scale fading coefficient (uniform across devices)
    seed: int = 0  # root seed for scenario generation
    max_iters: int = 50  # AMP iteration cap
    conv_tol: float = 1e-6  # relative-change stopping tolerance

    def __post_init__(self):
        for name in ("N", "L", "M", "T"):
            v = getattr(self, name)
            if not (isinstance(v, int) and v >= 1):
                raise ValueError(f"{name} must be a positive integer, got {v!r}")
        if self.L >= self.N:
            raise ValueError(f"need L < N for the compressed regime, got L={self.L}, N={self.N}")
        if not (self.noise_var > 0.0 and math.isfinite(self.noise_var)):
            raise ValueError(f"noise_var must be positive, got {self.noise_var}")
        if not (self.beta > 0.0 and math.isfinite(self.beta)):
            raise ValueError(f"beta must be positive, got {self.beta}")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not (self.conv_tol > 0.0):
            raise ValueError("conv_tol must be positive")

    @property
    def snr_db(self):
        return 10.0 * math.log10(self.beta / self.noise_var)


@dataclass(frozen=True)
class ScenarioRealization:
    """One drawn scenario: pilots, activity, channels, observations.

    Arrays are marked read-only after construction; re-running generation
    with the stored seed reproduces every field bit for bit.
    """

    pilot: np.ndarray  # (L, N) complex, entries CN(0, 1/L)
    activity: np.ndarray  # (T, N) uint8 activity bits
    channels: np.ndarray  # (T, N, M) complex, rows CN(0, beta I)
    effective: np.ndarray  # (T, N, M) activity-gated channels
    received: np.ndarray  # (T, L, M) complex observations
    noise_var: float
    seed: int

    def __post_init__(self):
        for f in ("pilot", "activity", "channels", "effective", "received"):
            getattr(self, f).flags.writeable = False


def _crandn(rng, shape, var):
    """CN(0, var) draws: real and imaginary parts i.i.d. N(0, var/2)."""
    scale = math.sqrt(var / 2.0)
    return rng.standard_normal(shape) * scale + 1j * rng.standard_normal(shape) * scale


def _component_rngs(seed):
    pilot_ss, act_ss, chan_ss, noise_ss = np.random.SeedSequence(seed).spawn(4)
    return (
        np.random.default_rng(pilot_ss),
        np.random.default_rng(act_ss),
        np.random.default_rng(chan_ss),
        np.random.default_rng(noise_ss),
    )


def sample_activity(model, T, N, rng):
    """Draw (T, N) activity bits: stationary start, Markov transitions."""
    u = rng.random((T, N))
    act = np.empty((T, N), dtype=np.uint8)
    act[0] = u[0] < model.p_a
    for t in range(1, T):
        stay = u[t] < model.p11
        birth = u[t] < model.p01
        act[t] = np.where(act[t - 1] == 1, stay, birth)
    return act


def generate_scenario(config):
    """Draw one scenario from the config seed.

    Four independent substreams (pilot, activity, channels, noise) hang off
    the root seed, so e.g. the noise can be redrawn identically no matter
    how many variates the other components consumed.
    """
    pilot_rng, act_rng, chan_rng, noise_rng = _component_rngs(config.seed)
    N, L, M, T = config.N, config.L, config.M, config.T

    pilot = _crandn(pilot_rng, (L, N), 1.0 / L)
    act = sample_activity(config.activity, T, N, act_rng)
    chans = _crandn(chan_rng, (T, N, M), config.beta)
    eff = chans * act[:, :, None]
    noise = _crandn(noise_rng, (T, L, M), config.noise_var)
    received = pilot @ eff + noise

    return ScenarioRealization(
        pilot=pilot,
        activity=act,
        channels=chans,
        effective=eff,
        received=received,
        noise_var=config.noise_var,
        seed=config.seed,
    )


def regenerate_noise(config):
    """Redraw only the noise component for config.seed (stream isolation)."""
    _, _, _, noise_rng = _component_rngs(config.seed)
    return _crandn(noise_rng, (config.T, config.L, config.M), config.noise_var)


# -- config file I/O ---------------------------------------------------------

_INT_KEYS = {"N", "L", "M", "T", "seed", "max_iters"}
_FLOAT_KEYS = {"beta", "noise_var", "snr_db", "p01", "p11", "p_a", "conv_tol"}


def parse_config_text(text):
    """Parse "key = value" lines into a raw dict (comments: leading #)."""
    raw = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ValueError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, _, value = stripped.partition("=")
        key, value = key.strip(), value.strip()
        if key in _INT_KEYS:
            raw[key] = int(value)
        elif key in _FLOAT_KEYS:
            raw[key] = float(value)
        else:
            raise ValueError(f"line {lineno}: unknown config key {key!r}")
    return raw


def config_from_dict(raw):
    """Build a SystemConfig from a raw key dict (noise_var or snr_db)."""
    raw = dict(raw)
    missing = [k for k in ("N", "L", "M", "T", "p01", "p11") if k not in raw]
    if missing:
        raise ValueError(f"config missing required keys: {missing}")
    beta = raw.pop("beta", 1.0)
    if "noise_var" in raw and "snr_db" in raw:
        raise ValueError("give either noise_var or snr_db, not both")
    if "snr_db" in raw:
        noise_var = beta / 10.0 ** (raw.pop("snr_db") / 10.0)
    elif "noise_var" in raw:
        noise_var = raw.pop("noise_var")
    else:
        raise ValueError("config needs noise_var or snr_db")
    model = MarkovActivityModel(raw.pop("p01"), raw.pop("p11"), raw.pop("p_a", None))
    return SystemConfig(
        N=raw.pop("N"),
        L=raw.pop("L"),
        M=raw.pop("M"),
        T=raw.pop("T"),
        activity=model,
        noise_var=noise_var,
        beta=beta,
        seed=raw.pop("seed", 0),
        max_iters=raw.pop("max_iters", 50),
        conv_tol=raw.pop("conv_tol", 1e-6),
    )


def load_config(path):
    """Read a SystemConfig from a key = value text file."""
    with open(path, "r", encoding="utf-8") as fh:
        return config_from_dict(parse_config_text(fh.read()))


def with_seed(config, seed):
    return replace(config, seed=int(seed))
