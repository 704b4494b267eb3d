"""Two-phase autoencoder training of the latent transform and its left inverse.

Phase 1 fits the encoder to the latent dynamics residual
``T(x_{k+1}) - A T(x_k) - B l(x_k)`` with periodic per-dimension rescaling
of the latent. Phase 2 freezes the encoder and fits the decoder to
reconstruct ``x_k`` from ``T(x_k)``.

By default the decoder is trained on PCA-whitened latents; the whitening is folded into
its first layer afterwards, so the saved decoder takes ``T(x)`` directly. The
latent cloud is very anisotropic (singular values spread over about four
decades) and without whitening the decoder stalls far above its attainable
loss.

The rescaling is folded into the encoder's output layer, so the encoder
directly produces ``diag(scale) @ T(x)``. In those coordinates the latent
dynamics read ``A' = S A S^-1`` and ``B' = S B`` (see
:meth:`LatentConfig.scaled`), which is what the dynamics loss and the
observer use.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import dense_net
from .channel import ChannelParams, measure_pair
from .datagen import Dataset
from .dense_net import AdamState, NetworkParams
from .kkl_core import LatentConfig

log = logging.getLogger(__name__)

SCALE_FLOOR = 1e-6


class TrainingDivergedError(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    epochs_dyn: int = 50
    epochs_recon: int = 50
    batch_size: int = 256
    hidden_dim: int = 500
    learning_rate: float = 1e-2
    learning_rate_recon: float = 3e-3
    final_learning_rate: float = 1e-5
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    normalization_epochs: int = 10
    normalization_batch: int = 8192
    whiten_decoder: bool = True
    seed: int = 0

    def __post_init__(self):
        for name in ("epochs_dyn", "epochs_recon", "batch_size", "hidden_dim",
                     "normalization_batch", "normalization_epochs"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")


def cosine_lr(start: float, end: float, step: int, total_steps: int) -> float:
    frac = min(step / max(total_steps, 1), 1.0)
    return end + 0.5 * (start - end) * (1.0 + math.cos(math.pi * frac))


@dataclass
class TrainedMaps:
    encoder: NetworkParams
    decoder: NetworkParams
    scale: np.ndarray
    cp_bar: float
    u_bar: float = 0.0
    history: list[dict] = field(default_factory=list)

    def encode(self, x) -> np.ndarray:
        return dense_net.forward(self.encoder, x)

    def decode(self, z) -> np.ndarray:
        return dense_net.forward(self.decoder, z)

    def latent_config(self, cfg: LatentConfig) -> LatentConfig:
        return cfg.scaled(self.scale)


def _as_map(encoder):
    return encoder if callable(encoder) else (lambda x: dense_net.forward(encoder, x))


def loss_dyn(encoder, x, x_next, cfg: LatentConfig, channel: ChannelParams) -> float:
    """Mean of ``|T(x_next) - A T(x) - B l(x)|^2`` over the batch.

    ``encoder`` may be a network or any callable; ``cfg`` must be expressed in
    the encoder's latent coordinates. The input-correction term vanishes here
    since every pair was generated with the constant training input.
    """
    enc = _as_map(encoder)
    x = np.atleast_2d(x)
    res = enc(np.atleast_2d(x_next)) - enc(x) @ cfg.a_matrix.T - measure_pair(x, channel) @ cfg.b_matrix.T
    return float(np.mean(np.sum(res**2, axis=1)))


def loss_recon(encoder, decoder, x) -> float:
    """Mean of ``|x - T^-1(T(x))|^2`` over the batch."""
    x = np.atleast_2d(x)
    xr = _as_map(decoder)(_as_map(encoder)(x))
    return float(np.mean(np.sum((x - xr) ** 2, axis=1)))


def normalize_latent(z, floor: float = SCALE_FLOOR) -> np.ndarray:
    """Multipliers ``b_i = 1 / std(z_i)`` with the std floored at ``floor``."""
    z = np.atleast_2d(np.asarray(z, float))
    sd = z.std(axis=0)
    if np.any(sd < floor):
        warnings.warn(f"latent dimensions {np.flatnonzero(sd < floor).tolist()} are nearly constant; "
                      f"std floored at {floor}", RuntimeWarning, stacklevel=2)
    return 1.0 / np.maximum(sd, floor)


def rescale_encoder(encoder: NetworkParams, b) -> NetworkParams:
    """Compose the encoder with ``diag(b)`` by scaling output-layer rows and biases."""
    b = np.asarray(b, float)
    return encoder.replace(w2=encoder.w2 * b[:, None], bias2=encoder.bias2 * b)


def _rescale_adam(state: AdamState, b) -> AdamState:
    # keep moment estimates consistent with the rescaled output layer
    b = np.asarray(b, float)
    m = state.m.replace(w2=state.m.w2 * b[:, None], bias2=state.m.bias2 * b)
    v = state.v.replace(w2=state.v.w2 * (b**2)[:, None], bias2=state.v.bias2 * b**2)
    return AdamState(m=m, v=v, step=state.step, learning_rate=state.learning_rate,
                     beta1=state.beta1, beta2=state.beta2, epsilon=state.epsilon)


def whitening(z, floor: float = SCALE_FLOOR) -> tuple[np.ndarray, np.ndarray]:
    """Mean ``mu`` and matrix ``W`` such that ``(z - mu) @ W`` has identity covariance."""
    z = np.atleast_2d(np.asarray(z, float))
    mu = z.mean(axis=0)
    _, s, vt = np.linalg.svd(z - mu, full_matrices=False)
    sd = s / np.sqrt(z.shape[0])
    if np.any(sd < floor):
        warnings.warn(f"latent cloud is degenerate along {int(np.sum(sd < floor))} directions; "
                      f"std floored at {floor}", RuntimeWarning, stacklevel=2)
    return mu, vt.T / np.maximum(sd, floor)


def fold_input_transform(net: NetworkParams, mu, w) -> NetworkParams:
    """Network taking raw ``z`` that equals ``net`` applied to ``(z - mu) @ w``."""
    w1 = net.w1 @ np.asarray(w, float).T
    return net.replace(w1=w1, bias1=net.bias1 - w1 @ np.asarray(mu, float))


def _dyn_grad(encoder: NetworkParams, x, x_next, l_x, cfg: LatentConfig):
    n = x.shape[0]
    both = np.vstack([x_next, x])
    out, hidden = dense_net.forward_with_cache(encoder, both)
    res = out[:n] - out[n:] @ cfg.a_matrix.T - l_x @ cfg.b_matrix.T
    g = (2.0 / n) * res
    upstream = np.vstack([g, -g @ cfg.a_matrix])
    grads, _ = dense_net.backward(encoder, both, upstream, hidden=hidden)
    return float(np.mean(np.sum(res**2, axis=1))), grads


def _recon_grad(decoder: NetworkParams, z, x):
    n = x.shape[0]
    out, hidden = dense_net.forward_with_cache(decoder, z)
    err = out - x
    grads, _ = dense_net.backward(decoder, z, (2.0 / n) * err, hidden=hidden)
    return float(np.mean(np.sum(err**2, axis=1))), grads


def _check_finite(value: float, phase: str, epoch: int) -> None:
    if not np.isfinite(value):
        raise TrainingDivergedError(f"{phase} loss became {value} at epoch {epoch}")


def static_latent(channel: ChannelParams, cfg: LatentConfig, x) -> np.ndarray:
    """Latent guess that ignores state motion: ``(I - A)^-1 B l(x)``."""
    return measure_pair(x, channel) @ np.linalg.solve(np.eye(cfg.q) - cfg.a_matrix, cfg.b_matrix).T


def train(train_ds: Dataset, cfg: LatentConfig, tcfg: TrainConfig, channel: ChannelParams,
          val_ds: Dataset | None = None, progress=None) -> TrainedMaps:
    """Run both training phases and return the maps with a per-epoch loss history.

    ``progress``, if given, is called with each history row as it is produced.
    """
    x, x_next = train_ds.x, train_ds.x_next
    n = x.shape[0]
    rng = np.random.default_rng(tcfg.seed)
    q, p = cfg.q, 2
    l_x = measure_pair(x, channel)
    norm_idx = np.sort(rng.choice(n, size=min(tcfg.normalization_batch, n), replace=False))
    steps_per_epoch = math.ceil(n / tcfg.batch_size)
    interval = tcfg.normalization_epochs * steps_per_epoch
    history: list[dict] = []

    def record(row):
        history.append(row)
        log.info("epoch %(epoch)d %(phase)s train=%(loss_train).3e val=%(loss_val).3e", row)
        if progress is not None:
            progress(row)

    hyper = dict(beta1=tcfg.beta1, beta2=tcfg.beta2, epsilon=tcfg.epsilon)

    # phase 1: encoder on the dynamics residual
    encoder = dense_net.init_network(2, tcfg.hidden_dim, q, seed=tcfg.seed + 1)
    # start from the static guess: unit-std scale, output bias at its mean
    guess = static_latent(channel, cfg, x[norm_idx])
    scale = normalize_latent(guess)
    encoder = encoder.replace(bias2=(guess * scale).mean(axis=0))
    opt = AdamState.for_network(encoder, learning_rate=tcfg.learning_rate, **hyper)
    total = tcfg.epochs_dyn * steps_per_epoch
    it = 0
    for epoch in range(1, tcfg.epochs_dyn + 1):
        perm = rng.permutation(n)
        acc = 0.0
        for start in range(0, n, tcfg.batch_size):
            idx = perm[start:start + tcfg.batch_size]
            scaled_cfg = cfg.scaled(scale)
            loss, grads = _dyn_grad(encoder, x[idx], x_next[idx], l_x[idx], scaled_cfg)
            acc += loss * len(idx)
            lr = cosine_lr(tcfg.learning_rate, tcfg.final_learning_rate, it, total)
            encoder, opt = dense_net.adam_step(encoder, grads, opt, lr)
            it += 1
            if it % interval == 0 and it < total:
                b = normalize_latent(dense_net.forward(encoder, x[norm_idx]))
                encoder = rescale_encoder(encoder, b)
                opt = _rescale_adam(opt, b)
                scale = scale * b
        loss_train = acc / n
        _check_finite(loss_train, "dyn", epoch)
        scaled_cfg = cfg.scaled(scale)
        loss_val = loss_dyn(encoder, val_ds.x, val_ds.x_next, scaled_cfg, channel) if val_ds else float("nan")
        record(dict(epoch=epoch, phase="dyn", loss_train=loss_train, loss_val=loss_val))

    # phase 2: decoder on reconstruction, encoder frozen, inputs whitened
    z = dense_net.forward(encoder, x)
    mu, w = whitening(z) if tcfg.whiten_decoder else (np.zeros(q), np.eye(q))
    z = (z - mu) @ w
    z_val = (dense_net.forward(encoder, val_ds.x) - mu) @ w if val_ds else None
    decoder = dense_net.init_network(q, tcfg.hidden_dim, p, seed=tcfg.seed + 2)
    opt = AdamState.for_network(decoder, learning_rate=tcfg.learning_rate_recon, **hyper)
    total = tcfg.epochs_recon * steps_per_epoch
    it = 0
    for epoch in range(1, tcfg.epochs_recon + 1):
        perm = rng.permutation(n)
        acc = 0.0
        for start in range(0, n, tcfg.batch_size):
            idx = perm[start:start + tcfg.batch_size]
            loss, grads = _recon_grad(decoder, z[idx], x[idx])
            acc += loss * len(idx)
            lr = cosine_lr(tcfg.learning_rate_recon, tcfg.final_learning_rate, it, total)
            decoder, opt = dense_net.adam_step(decoder, grads, opt, lr)
            it += 1
        loss_train = acc / n
        _check_finite(loss_train, "recon", epoch)
        if val_ds:
            loss_val = float(np.mean(np.sum((dense_net.forward(decoder, z_val) - val_ds.x) ** 2, axis=1)))
        else:
            loss_val = float("nan")
        record(dict(epoch=epoch, phase="recon", loss_train=loss_train, loss_val=loss_val))

    decoder = fold_input_transform(decoder, mu, w)
    return TrainedMaps(encoder=encoder, decoder=decoder, scale=scale, cp_bar=channel.cp_bar,
                       u_bar=train_ds.u_bar, history=history)
