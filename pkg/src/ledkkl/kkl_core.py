"""KKL latent observer machinery.

The observer runs in latent coordinates ``z = T(x)`` where ``T`` satisfies
``T(f(x, u_bar)) = A T(x) + B l(x)``; ``A`` is a stable (spectral radius < 1)
matrix and ``l`` the two-receiver output map. Here ``T`` is either a trained
encoder or the truncated backward-orbit series computed by
:func:`series_oracle_T`, which serves as an independent reference.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .channel import ChannelParams, inverse_step, measure_pair, step

Map = Callable[[np.ndarray], np.ndarray]


class OracleDivergenceError(RuntimeError):
    """The series summands failed to decay below tolerance."""


@dataclass(frozen=True)
class LatentConfig:
    a_matrix: np.ndarray
    b_matrix: np.ndarray

    def __post_init__(self):
        a, b = np.asarray(self.a_matrix, float), np.asarray(self.b_matrix, float)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or b.ndim != 2 or b.shape[0] != a.shape[0]:
            raise ValueError(f"incompatible latent matrices A{a.shape}, B{b.shape}")
        object.__setattr__(self, "a_matrix", a)
        object.__setattr__(self, "b_matrix", b)
        if self.spectral_radius >= 1.0:
            raise ValueError(f"A must have spectral radius < 1, got {self.spectral_radius}")

    @property
    def q(self) -> int:
        return self.a_matrix.shape[0]

    @property
    def spectral_radius(self) -> float:
        return float(np.max(np.abs(np.linalg.eigvals(self.a_matrix))))

    def controllability_rank(self) -> int:
        blocks = [self.b_matrix]
        for _ in range(self.q - 1):
            blocks.append(self.a_matrix @ blocks[-1])
        return int(np.linalg.matrix_rank(np.hstack(blocks)))

    def scaled(self, scale) -> "LatentConfig":
        """Matrices expressed in the rescaled coordinates ``diag(scale) @ z``."""
        s = np.asarray(scale, dtype=float)
        return LatentConfig(a_matrix=(s[:, None] * self.a_matrix) / s[None, :],
                            b_matrix=s[:, None] * self.b_matrix)


def default_latent_config(te: float, b_fill: float = 1.0, output_dim: int = 2) -> LatentConfig:
    """Diagonal ``A`` with eigenvalues ``1 - k*te`` for k in (1, 2, 4, 6, 8, 10), constant-filled ``B``."""
    if not 0 < te < 0.1:
        raise ValueError(f"te must lie in (0, 0.1) for the default latent config, got {te}")
    a = np.diag([1.0 - k * te for k in (1, 2, 4, 6, 8, 10)])
    cfg = LatentConfig(a_matrix=a, b_matrix=np.full((6, output_dim), float(b_fill)))
    if cfg.controllability_rank() != cfg.q:
        raise ValueError("default (A, B) pair is not controllable")
    return cfg


def latent_config_from_diag(a_diag, b_fill: float = 1.0, output_dim: int = 2) -> LatentConfig:
    a_diag = np.asarray(a_diag, dtype=float)
    return LatentConfig(a_matrix=np.diag(a_diag), b_matrix=np.full((a_diag.size, output_dim), float(b_fill)))


def latent_step(z, y, cfg: LatentConfig) -> np.ndarray:
    """``z' = A z + B y`` (rows of a batch are independent observers)."""
    return np.asarray(z, float) @ cfg.a_matrix.T + np.asarray(y, float) @ cfg.b_matrix.T


def omega_correction(z, u, u_bar, encoder: Map, decoder: Map, channel: ChannelParams) -> np.ndarray:
    """Input correction ``T(f(T^-1 z, u)) - T(f(T^-1 z, u_bar))``; exactly zero when ``u == u_bar``."""
    z = np.asarray(z, float)
    if np.all(np.asarray(u) == np.asarray(u_bar)):
        return np.zeros_like(z)
    x = decoder(z)
    return encoder(step(x, u, channel)) - encoder(step(x, u_bar, channel))


def latent_step_corrected(z, y, u, u_bar, encoder: Map, decoder: Map, cfg: LatentConfig,
                          channel: ChannelParams) -> np.ndarray:
    return latent_step(z, y, cfg) + omega_correction(z, u, u_bar, encoder, decoder, channel)


class ContractionReport(NamedTuple):
    contracting: bool
    margin: float
    spectral_radius: float
    lambda_u: float


def contraction_check(cfg: LatentConfig, lambda_u: float) -> ContractionReport:
    """Test ``rho(A + lambda_u I) < 1`` and report the margin ``1 - rho(A + lambda_u I)``."""
    if lambda_u < 0:
        raise ValueError("lambda_u must be nonnegative")
    rho = float(np.max(np.abs(np.linalg.eigvals(cfg.a_matrix + lambda_u * np.eye(cfg.q)))))
    return ContractionReport(rho < 1.0, 1.0 - rho, cfg.spectral_radius, float(lambda_u))


def estimate_omega_lipschitz(z_samples, u, u_bar, encoder: Map, decoder: Map, channel: ChannelParams,
                             n_pairs: int = 500, rng: np.random.Generator | None = None) -> float:
    """Max over random pairs of ``|Omega(z1) - Omega(z2)| / |z1 - z2|``; a sampled lower estimate."""
    z_samples = np.asarray(z_samples, float)
    rng = np.random.default_rng(0) if rng is None else rng
    i = rng.integers(0, len(z_samples), n_pairs)
    j = rng.integers(0, len(z_samples), n_pairs)
    keep = i != j
    z1, z2 = z_samples[i[keep]], z_samples[j[keep]]
    dz = np.linalg.norm(z1 - z2, axis=1)
    ok = dz > 0
    if not np.any(ok):
        return 0.0
    om1 = omega_correction(z1[ok], u, u_bar, encoder, decoder, channel)
    om2 = omega_correction(z2[ok], u, u_bar, encoder, decoder, channel)
    return float(np.max(np.linalg.norm(om1 - om2, axis=1) / dz[ok]))


class SeriesResult(NamedTuple):
    value: np.ndarray
    tail_bound: float
    terms: int
    last_term_norm: float


def series_oracle_T(x, cfg: LatentConfig, channel: ChannelParams, u_bar: float = 0.0,
                    truncation_j: int = 2000, tol: float | None = 1e-12,
                    max_terms: int = 200_000) -> SeriesResult:
    """Partial sum of ``sum_j A^j B l(f^-(j+1)(x, u_bar))``.

    At least ``truncation_j + 1`` terms (j = 0..J) are summed. With ``tol``
    set, summation continues until the largest summand norm in the batch
    drops below ``tol``. ``tail_bound`` is ``|A|^(J+1) / (1 - |A|) * sup|B l|``
    for the last index J actually used.
    """
    if truncation_j < 1:
        raise ValueError("truncation_j must be >= 1")
    x = np.asarray(x, float)
    single = x.ndim == 1
    xb = np.atleast_2d(x)
    a_norm = float(np.linalg.norm(cfg.a_matrix, 2))
    if a_norm >= 1.0:
        raise OracleDivergenceError(f"|A| = {a_norm} >= 1; geometric decay of the summands is not guaranteed")
    sup_l = channel.cp_bar * channel.gain.peak_bound * np.sqrt(cfg.b_matrix.shape[1])
    sup_bl = float(np.linalg.norm(cfg.b_matrix, 2)) * sup_l

    total = np.zeros((xb.shape[0], cfg.q))
    carry = np.zeros_like(total)  # Kahan compensation; the sum spans ~1e4 with summands down to 1e-12
    a_pow = np.eye(cfg.q)
    back = xb
    j = 0
    term_norm = np.inf
    while True:
        back = inverse_step(back, u_bar, channel)
        term = measure_pair(back, channel) @ (a_pow @ cfg.b_matrix).T
        corrected = term - carry
        new_total = total + corrected
        carry = (new_total - total) - corrected
        total = new_total
        term_norm = float(np.max(np.linalg.norm(term, axis=1)))
        if not np.all(np.isfinite(term)):
            raise OracleDivergenceError(f"non-finite summand at j={j}")
        done = j >= truncation_j and (tol is None or term_norm < tol)
        if done:
            break
        j += 1
        if j >= max_terms:
            raise OracleDivergenceError(
                f"summand norm {term_norm:.3e} still above tol={tol} after {max_terms} terms"
            )
        a_pow = a_pow @ cfg.a_matrix
    tail = a_norm ** (j + 1) / (1.0 - a_norm) * sup_bl
    return SeriesResult(total[0] if single else total, float(tail), j + 1, term_norm)


class OracleResidual(NamedTuple):
    residual: np.ndarray
    tail_bound: float
    terms: int


def oracle_residual(x, cfg: LatentConfig, channel: ChannelParams, u_bar: float = 0.0,
                    truncation_j: int = 2000, tol: float | None = 1e-12) -> OracleResidual:
    """Pointwise norm of ``T(f(x, u_bar)) - A T(x) - B l(x)`` for the series ``T``.

    Both series are evaluated with the same number of terms, taken as the larger
    of the two auto-extended truncations.
    """
    xb = np.atleast_2d(np.asarray(x, float))
    x_next = step(xb, u_bar, channel)
    first = series_oracle_T(xb, cfg, channel, u_bar, truncation_j, tol)
    second = series_oracle_T(x_next, cfg, channel, u_bar, truncation_j, tol)
    j = max(first.terms, second.terms) - 1
    t_x = series_oracle_T(xb, cfg, channel, u_bar, j, None)
    t_next = series_oracle_T(x_next, cfg, channel, u_bar, j, None)
    res = t_next.value - t_x.value @ cfg.a_matrix.T - measure_pair(xb, channel) @ cfg.b_matrix.T
    return OracleResidual(np.linalg.norm(res, axis=1), t_x.tail_bound, j + 1)
