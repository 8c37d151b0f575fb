"""
Rayleigh channel states and the Poisson-tail probabilities behind every closed form

Random stream layout: one channel draw consumes ``2 * t`` standard normals from
the generator, read as a ``(t, 2)`` array in C order (row i holds the real then
the imaginary part of h_i) and scaled by ``1/sqrt(2)``. Repeating a seed
therefore reproduces every draw bit for bit.
"""

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

# Relative size at which the tail summation stops
_TAIL_TOLERANCE = 1e-17


class SystemParams(BaseModel):
    """Experiment parameters: antennas, power, outage threshold and grouping"""

    model_config = ConfigDict(frozen=True)

    t: int = Field(..., ge=1)
    P: float = Field(1.0, gt=0)
    alpha: float = Field(1.0, gt=0)
    epsilon: float = Field(0.0, ge=0)
    K: int = Field(1, ge=1)
    delta: int = Field(1, ge=1)
    trials: int = Field(1_000_000, ge=1)
    seed: int = 0

    @model_validator(mode="after")
    def _group_fits(self) -> "SystemParams":
        if self.K > self.t:
            raise ValueError(f"group size K={self.K} exceeds t={self.t}")
        return self

    @property
    def rho(self) -> float:
        """Target rate log2(1 + alpha P) in bits per channel use"""
        return math.log2(1.0 + self.alpha * self.P)

    def replace(self, **changes) -> "SystemParams":
        """Validated copy with some fields changed"""
        return SystemParams(**{**self.model_dump(), **changes})


@dataclass(frozen=True)
class ChannelState:
    """One fading realization h = [h_1 ... h_t]"""

    coeffs: np.ndarray

    def __post_init__(self):
        coeffs = np.asarray(self.coeffs, dtype=np.complex128).reshape(-1)
        if coeffs.size == 0:
            raise ValueError("channel state needs at least one coefficient")
        if not np.all(np.isfinite(coeffs)):
            raise ValueError("channel coefficients must be finite")
        object.__setattr__(self, "coeffs", coeffs)

    def __len__(self) -> int:
        return self.coeffs.size

    @property
    def t(self) -> int:
        return self.coeffs.size

    def prefix(self, i: int) -> "ChannelState":
        """The first i coefficients h_i = [h_1 ... h_i]"""
        if not 1 <= i <= self.t:
            raise ValueError(f"prefix length {i} outside 1..{self.t}")
        return ChannelState(self.coeffs[:i])

    def gains(self) -> np.ndarray:
        """Per-antenna gains |h_i|^2"""
        return np.abs(self.coeffs) ** 2

    def norm_sq(self) -> float:
        """Squared norm ||h||^2"""
        return float(np.vdot(self.coeffs, self.coeffs).real)


def sample_channel(params: SystemParams, rng: np.random.Generator) -> ChannelState:
    """
    Draw h ~ CN(0, I_t)

    Args:
        params: System parameters (only t is used)
        rng: Seeded generator; advanced by 2t normals

    Returns:
        ChannelState: The realization
    """
    parts = rng.standard_normal((params.t, 2)) / math.sqrt(2.0)
    return ChannelState(parts[:, 0] + 1j * parts[:, 1])


def poisson_pmf(i: int, x: float) -> float:
    """P(N = i) for N ~ Poisson(x), evaluated in log space"""
    if x == 0:
        return 1.0 if i == 0 else 0.0
    return math.exp(i * math.log(x) - x - math.lgamma(i + 1))


def gamma_tail(k: int, x: float) -> float:
    """
    P(||h_k||^2 <= x) for h_k ~ CN(0, I_k), i.e. P(N >= k) with N ~ Poisson(x)

    Below the mode the tail sum_{i>=k} x^i e^-x / i! is summed directly with the
    ascending recurrence term_{i+1} = term_i * x/(i+1), which keeps full relative
    precision for tiny probabilities. Otherwise the complement
    1 - sum_{i<k} is used, summed downward from i = k-1.

    Args:
        k: Number of complex dimensions, k >= 1
        x: Threshold, x >= 0

    Returns:
        float: Probability in [0, 1]
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if x < 0:
        raise ValueError(f"threshold must be nonnegative, got {x}")
    if x == 0:
        return 0.0

    if x < k:
        term = poisson_pmf(k, x)
        total = term
        i = k
        while term > _TAIL_TOLERANCE * total:
            i += 1
            term *= x / i
            total += term
        return min(total, 1.0)

    term = poisson_pmf(k - 1, x)
    head = term
    for i in range(k - 1, 0, -1):
        term *= i / x
        head += term
    return min(max(1.0 - head, 0.0), 1.0)


@lru_cache(maxsize=None)
def kappa(t: int, alpha: float) -> int:
    """
    Number of antennas the open-loop scheme drives uniformly

    argmin over k in 1..t of P(||h_k||^2 < k alpha); ties go to the smallest k.

    Args:
        t: Antenna count
        alpha: Outage threshold

    Returns:
        int: kappa in 1..t
    """
    if t < 1:
        raise ValueError(f"t must be >= 1, got {t}")
    best_k, best_p = 1, gamma_tail(1, alpha)
    for k in range(2, t + 1):
        p = gamma_tail(k, k * alpha)
        if p < best_p:
            best_k, best_p = k, p
    return best_k
