"""LED optical-link physics: angular gain, received power and angular dynamics.

States are numpy arrays whose last axis holds ``(x1, x2) = (phi, phi_dot)``
in rad and rad/s, so every function works on a single state of shape ``(2,)``
or on a batch of shape ``(N, 2)``.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

DEFAULT_DELTA_PHI = float(np.deg2rad(6.0))


@dataclass(frozen=True)
class GaussianGainParams:
    """Double-Gaussian incidence-angle gain ``g(phi)`` of the receiver."""

    a1: float = 1.0
    b1: float = 0.2
    c1: float = 0.5
    a2: float = 0.5
    b2: float = 0.1
    c2: float = 0.4

    def __post_init__(self):
        if not (self.a1 > 0 and self.a2 >= 0):
            raise ValueError(f"gain amplitudes must satisfy a1 > 0, a2 >= 0 (got {self.a1}, {self.a2})")
        if not (self.c1 > 0 and self.c2 > 0):
            raise ValueError(f"gain widths must be positive (got {self.c1}, {self.c2})")

    @property
    def peak_bound(self) -> float:
        """Upper bound of ``g`` over the real line."""
        return self.a1 + self.a2


@dataclass(frozen=True)
class ChannelParams:
    gain: GaussianGainParams = GaussianGainParams()
    raw_cp: float = 1.0
    transmitter_intensity: float = 1.0
    attenuation_c: float = 0.5
    link_distance_d0: float = 0.085
    delta_phi: float = DEFAULT_DELTA_PHI
    te: float = 0.01

    def __post_init__(self):
        if self.link_distance_d0 <= 0:
            raise ValueError(f"link distance must be positive, got {self.link_distance_d0}")
        if self.te <= 0:
            raise ValueError(f"sampling time must be positive, got {self.te}")
        if self.attenuation_c < 0:
            raise ValueError(f"attenuation must be nonnegative, got {self.attenuation_c}")

    @property
    def cp_bar(self) -> float:
        """Composite transmitter coefficient ``Cp * I * exp(-c d0) / d0**2`` (W)."""
        d = self.link_distance_d0
        return self.raw_cp * self.transmitter_intensity * np.exp(-self.attenuation_c * d) / d**2

    def with_distance(self, d0: float) -> "ChannelParams":
        return dataclasses.replace(self, link_distance_d0=float(d0))


@dataclass(frozen=True)
class NoiseConfig:
    process_std_1: float = 1e-3
    process_std_2: float = 1e-3
    measurement_std: float = float(np.sqrt(1e-3))
    seed: int = 0

    def __post_init__(self):
        for name in ("process_std_1", "process_std_2", "measurement_std"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")

    def rng(self) -> np.random.Generator:
        return np.random.default_rng(self.seed)


def gain(phi, params: GaussianGainParams):
    phi = np.asarray(phi, dtype=float)
    p = params
    return p.a1 * np.exp(-(((phi - p.b1) / p.c1) ** 2)) + p.a2 * np.exp(-(((phi + p.b2) / p.c2) ** 2))


def gain_derivative(phi, params: GaussianGainParams):
    """Analytic ``dg/dphi``."""
    phi = np.asarray(phi, dtype=float)
    p = params
    u1 = (phi - p.b1) / p.c1
    u2 = (phi + p.b2) / p.c2
    return -2.0 * p.a1 * u1 / p.c1 * np.exp(-(u1**2)) - 2.0 * p.a2 * u2 / p.c2 * np.exp(-(u2**2))


def received_power(phi, params: ChannelParams):
    """Noise-free detector power ``cp_bar * g(phi)`` in W."""
    return params.cp_bar * gain(phi, params.gain)


def measure_pair(state, params: ChannelParams, noise: NoiseConfig | None = None,
                 rng: np.random.Generator | None = None) -> np.ndarray:
    """Outputs of the two co-located receivers, the second shifted by ``+delta_phi``.

    Without ``noise`` this is the deterministic output map used by the observer
    and by the series construction of the latent transform.
    """
    state = np.asarray(state, dtype=float)
    x1 = state[..., 0]
    y = np.stack([received_power(x1, params), received_power(x1 + params.delta_phi, params)], axis=-1)
    if noise is not None and noise.measurement_std > 0:
        rng = noise.rng() if rng is None else rng
        y = y + noise.measurement_std * rng.standard_normal(y.shape)
    return y


def step(state, u, params: ChannelParams, noise: NoiseConfig | None = None,
         rng: np.random.Generator | None = None) -> np.ndarray:
    """One sampling period of the angular dynamics.

    ``x1' = x1 + te*x2 + w1``, ``x2' = x2 + u + w2``; ``u`` broadcasts
    against the leading batch dimensions of ``state``.
    """
    state = np.asarray(state, dtype=float)
    u = np.asarray(u, dtype=float)
    x1 = state[..., 0] + params.te * state[..., 1]
    x2 = state[..., 1] + u
    out = np.stack(np.broadcast_arrays(x1, x2), axis=-1)
    if noise is not None and (noise.process_std_1 > 0 or noise.process_std_2 > 0):
        rng = noise.rng() if rng is None else rng
        w = rng.standard_normal(out.shape)
        out = out + w * np.array([noise.process_std_1, noise.process_std_2])
    return out


def inverse_step(state, u, params: ChannelParams) -> np.ndarray:
    """Exact inverse of the noise-free :func:`step`."""
    state = np.asarray(state, dtype=float)
    u = np.asarray(u, dtype=float)
    x2_prev = state[..., 1] - u
    x1_prev = state[..., 0] - params.te * x2_prev
    return np.stack(np.broadcast_arrays(x1_prev, x2_prev), axis=-1)
