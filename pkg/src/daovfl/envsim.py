"""Assembly-line environment model: per-round latencies, iteration
disparity, and the scalar reward balancing accuracy against both."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from daovfl.errors import ConfigError


@dataclass(frozen=True)
class EnvParams:
    """Physical constants of the sensor line and uplink."""

    mu0: float = 2.0  # collection offset, seconds
    mu_range: tuple = (2.0, 4.0)  # collection slope, drawn once per run
    bandwidth: float = 1e7  # total uplink bandwidth, Hz
    tx_power: float = 1.0  # W
    noise_power: float = 5e-2  # W
    gain_range: tuple = (1e-5, 1e-4)  # channel gain, redrawn per round
    w_fe: float = 1e5  # feature-embedding payload size
    cycles_per_weight: float = 1e3
    w_lc: float = 5e5  # local-model weight count
    f_high: tuple = (2e7, 4e7)  # cycles/s for high-performance sensors
    f_low: tuple = (1e7, 3e7)  # cycles/s for low-performance sensors

    def __post_init__(self):
        for name in ("mu0", "bandwidth", "tx_power", "noise_power", "w_fe",
                     "cycles_per_weight", "w_lc"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        for name in ("mu_range", "gain_range", "f_high", "f_low"):
            lo, hi = getattr(self, name)
            if not 0 < lo <= hi:
                raise ConfigError(f"{name} must satisfy 0 < low <= high")


@dataclass(frozen=True)
class RewardWeights:
    accuracy: float = 1.0
    latency: float = 0.01
    disparity: float = 0.05

    def __post_init__(self):
        if self.accuracy < 0 or self.latency < 0 or self.disparity < 0:
            raise ConfigError("reward weights must be non-negative")
        if self.accuracy == self.latency == self.disparity == 0:
            raise ConfigError("at least one reward weight must be positive")


def collection_latency(k: int, mu: float, mu0: float) -> float:
    """Sequential line order: sensor k starts collecting at mu*k + mu0."""
    if k < 1:
        raise ConfigError(f"sensor index starts at 1, got {k}")
    return mu * k + mu0


def transmission_rate(bandwidth: float, sensors: int, gain: float,
                      power: float, noise_power: float) -> float:
    """Shannon rate on an equal bandwidth share: (B/K) log2(1 + g p / s^2)."""
    return bandwidth / sensors * np.log2(1.0 + gain * power / noise_power)


def comm_latency(w_fe: float, rate: float) -> float:
    if rate <= 0:
        raise ConfigError("sensor unreachable: transmission rate is zero")
    return w_fe / rate


def comp_latency(iterations: int, cycles_per_weight: float, w_lc: float,
                 frequency: float) -> float:
    if frequency <= 0:
        raise ConfigError(f"CPU frequency must be positive, got {frequency}")
    if iterations < 1:
        raise ConfigError(f"local iterations must be >= 1, got {iterations}")
    return iterations * cycles_per_weight * w_lc / frequency


def total_latency(per_sensor_sums) -> float:
    """Round latency = slowest sensor's collection + comm + compute sum."""
    sums = np.asarray(per_sensor_sums, dtype=float)
    if sums.size < 1:
        raise ConfigError("need at least one sensor")
    return float(sums.max())


def disparity(iteration_row) -> float:
    """Total absolute deviation of iteration counts from their round mean."""
    e = np.asarray(iteration_row, dtype=float)
    if e.size < 1:
        raise ConfigError("need at least one sensor")
    return float(np.abs(e - e.mean()).sum())


def reward(weights: RewardWeights, accuracy: float, latency: float,
           disp: float) -> float:
    return weights.accuracy * accuracy - weights.latency * latency - weights.disparity * disp


@dataclass
class EnvDraw:
    """One round's random environment realization plus derived latencies."""

    gains: np.ndarray  # (K,)
    frequencies: np.ndarray  # (K,)
    collection: np.ndarray  # (K,) seconds
    communication: np.ndarray  # (K,) seconds


def sensor_classes(sensors: int) -> np.ndarray:
    """High/low performance classes alternate by index (sensor 1 is high)."""
    return np.array([i % 2 == 0 for i in range(sensors)])


def draw_mu(params: EnvParams, rng: np.random.Generator) -> float:
    lo, hi = params.mu_range
    return float(rng.uniform(lo, hi))


def draw_round(params: EnvParams, sensors: int, mu: float,
               rng: np.random.Generator) -> EnvDraw:
    """Redraw per-round gains and CPU frequencies; derive latency vectors."""
    gains = rng.uniform(*params.gain_range, size=sensors)
    high = sensor_classes(sensors)
    freqs = np.where(
        high,
        rng.uniform(*params.f_high, size=sensors),
        rng.uniform(*params.f_low, size=sensors),
    )
    coll = np.array([collection_latency(k, mu, params.mu0) for k in range(1, sensors + 1)])
    rates = transmission_rate(params.bandwidth, sensors, gains, params.tx_power,
                              params.noise_power)
    comm = params.w_fe / rates
    return EnvDraw(gains, freqs, coll, comm)


def round_latency(params: EnvParams, draw: EnvDraw, iteration_row) -> float:
    """Total latency for one round under the drawn environment."""
    comp = np.array([
        comp_latency(int(e), params.cycles_per_weight, params.w_lc, f)
        for e, f in zip(iteration_row, draw.frequencies)
    ])
    return total_latency(draw.collection + draw.communication + comp)
