import math
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np

from errors import ConfigurationError

MAX_SEED = 2 ** 64


class Source(str, Enum):
    """Origin of a set of difference sequences"""
    GE1 = 'GE1'  # differences of real timestamps
    GE2 = 'GE2'  # noise regenerated i.i.d. with variance 2 sigma^2


class Mode(str, Enum):
    """Monte-Carlo experiment modes"""
    GE1 = 'GE1'
    GE2 = 'GE2'
    CLASSIC = 'CLASSIC'

    @classmethod
    def parse(cls, name):
        try:
            return cls(name.strip().upper())
        except ValueError:
            choices = ', '.join(m.value.lower() for m in cls)
            raise ConfigurationError(f"Unknown mode '{name}' (expected one of: {choices})") from None


def _require_finite(**values):
    for name, value in values.items():
        if not math.isfinite(value):
            raise ConfigurationError(f"{name} must be finite, got {value}")


@dataclass(frozen=True)
class ClockParams:
    """Ground-truth clock and channel parameters of the child node"""
    beta0: float
    beta1: float
    d: float
    sigma: float

    def validate(self):
        _require_finite(beta0=self.beta0, beta1=self.beta1, d=self.d, sigma=self.sigma)
        if self.beta1 <= 0:
            raise ConfigurationError(f"beta1 must be > 0, got {self.beta1}")
        if self.sigma < 0:
            raise ConfigurationError(f"sigma must be >= 0, got {self.sigma}")
        if self.d < 0:
            raise ConfigurationError(f"d must be >= 0, got {self.d}")
        return self

    def scaled(self, c):
        """Rescale every time-valued parameter by c (the skew is a ratio and stays)"""
        return ClockParams(beta0=c * self.beta0, beta1=self.beta1, d=c * self.d, sigma=c * self.sigma)


@dataclass(frozen=True)
class SchedulePlan:
    """Parent-side schedule: T1 advances by H per round, T4 by G"""
    n_rounds: int
    h_step: float
    g_step: float
    t1_origin: float
    t4_offset: float

    def validate(self):
        if isinstance(self.n_rounds, bool) or int(self.n_rounds) != self.n_rounds:
            raise ConfigurationError(f"n_rounds must be an integer, got {self.n_rounds}")
        if self.n_rounds < 2:
            raise ConfigurationError(f"n_rounds must be >= 2, got {self.n_rounds}")
        _require_finite(h_step=self.h_step, g_step=self.g_step,
                        t1_origin=self.t1_origin, t4_offset=self.t4_offset)
        if self.h_step <= 0:
            raise ConfigurationError(f"h_step must be > 0, got {self.h_step}")
        if self.g_step <= 0:
            raise ConfigurationError(f"g_step must be > 0, got {self.g_step}")
        if self.t4_offset <= 0:
            raise ConfigurationError(f"t4_offset must be > 0, got {self.t4_offset}")
        # With H != G the receive grid drifts against the send grid
        last_gap = self.t4_offset + (self.n_rounds - 1) * (self.g_step - self.h_step)
        if last_gap <= 0:
            raise ConfigurationError(
                f"schedule puts T4 before T1 in round {self.n_rounds} "
                f"(t4_offset={self.t4_offset}, h_step={self.h_step}, g_step={self.g_step})"
            )
        return self

    def scaled(self, c):
        return SchedulePlan(n_rounds=self.n_rounds, h_step=c * self.h_step, g_step=c * self.g_step,
                            t1_origin=c * self.t1_origin, t4_offset=c * self.t4_offset)


@dataclass(frozen=True)
class RngStream:
    """Seed plus substream index; equal values always give equal variates"""
    seed: int
    stream_id: int = 0

    def validate(self):
        if not 0 <= self.seed < MAX_SEED:
            raise ConfigurationError(f"seed must be in [0, 2**64), got {self.seed}")
        if self.stream_id < 0:
            raise ConfigurationError(f"stream_id must be >= 0, got {self.stream_id}")
        return self

    def generator(self):
        """PCG64 generator keyed by (seed, stream_id) through a SeedSequence spawn key"""
        self.validate()
        seq = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id,))
        return np.random.Generator(np.random.PCG64(seq))


@dataclass
class TimestampSet:
    """The four length-N timestamp arrays of one run"""
    t1: np.ndarray
    t2: np.ndarray
    t3: np.ndarray
    t4: np.ndarray
    acausal_count: int = 0

    @property
    def n_rounds(self):
        return len(self.t1)

    def arrays(self):
        return self.t1, self.t2, self.t3, self.t4


@dataclass
class DiffSet:
    """Gap-alpha difference sequences D1..D4 (length N - alpha)"""
    alpha: int
    d1: np.ndarray
    d2: np.ndarray
    d3: np.ndarray
    d4: np.ndarray
    source: Source = Source.GE1

    @property
    def n_pairs(self):
        return len(self.d1)


@dataclass(frozen=True)
class CorrelationReport:
    """Index pairs (m, n), 1-based, whose difference noise is correlated"""
    alpha: int
    n_rounds: int
    pairs: Tuple[Tuple[int, int], ...] = ()

    @property
    def is_correlation_free(self):
        return len(self.pairs) == 0


@dataclass(frozen=True)
class SkewEstimate:
    beta1_hat: float
    theta1_hat: float
    alpha: int
    n_pairs: int
    correlation_free: bool


@dataclass(frozen=True)
class BoundPoint:
    n_rounds: int
    alpha: int
    crb_beta1: float


@dataclass(frozen=True)
class ExperimentConfig:
    """Sweep axes and Monte-Carlo size of one experiment"""
    params: ClockParams
    plan: SchedulePlan
    alphas: Tuple[int, ...]
    modes: Tuple[Mode, ...] = (Mode.GE1, Mode.GE2)
    n_trials: int = 20000
    seed: int = 0

    def validate(self):
        self.params.validate()
        self.plan.validate()
        RngStream(self.seed).validate()
        if self.n_trials < 1:
            raise ConfigurationError(f"n_trials must be >= 1, got {self.n_trials}")
        if self.n_trials >= 2 ** 32:
            raise ConfigurationError(f"n_trials must be < 2**32, got {self.n_trials}")
        if self.plan.n_rounds >= 2 ** 16:
            raise ConfigurationError(f"n_rounds must be < 65536, got {self.plan.n_rounds}")
        if not self.modes:
            raise ConfigurationError("at least one mode is required")
        return self


@dataclass
class MseRow:
    """One Monte-Carlo cell keyed by (mode, N, alpha)"""
    mode: Mode
    n_rounds: int
    alpha: int
    n_trials: int
    mse: float
    mean_beta1: float
    ci_half_width: float
    correlation_free: bool
    crb: float
    n_failed: int = 0
    error: Optional[str] = None

    @property
    def key(self):
        return self.mode, self.n_rounds, self.alpha


@dataclass
class MseReport:
    rows: List[MseRow] = field(default_factory=list)

    def get(self, mode, n_rounds, alpha):
        for row in self.rows:
            if row.key == (Mode(mode), n_rounds, alpha):
                return row
        raise KeyError(f"No cell for mode={mode}, N={n_rounds}, alpha={alpha}")

    def failed_cells(self):
        return [row for row in self.rows if row.n_failed]


@dataclass
class NoiseCovEstimate:
    """Sample covariance of the gap-alpha difference noise with per-entry standard errors"""
    alpha: int
    n_trials: int
    cov: np.ndarray
    stderr: np.ndarray
