"""Reconstruction vs. observer robustness for decoders trained on a fixed encoder.

Loads a trained encoder, refits the decoder on latents whose principal
directions are whitened with the singular values floored at kappa times the
largest (kappa = 0 is full whitening, kappa = 1 is no whitening), and reports
held-out reconstruction loss together with the OL and CL state RMSE.
"""

import argparse
import math

import numpy as np

from ledkkl import dense_net
from ledkkl.cli import load_maps, make_scenario
from ledkkl.config import RunConfig
from ledkkl.datagen import read_csv, train_validation_split
from ledkkl.dense_net import AdamState
from ledkkl.evaluation import run_scenario
from ledkkl.training import TrainedMaps, _recon_grad, cosine_lr, fold_input_transform


def fit_decoder(z, x, kappa, epochs, lr=3e-3, hidden=500, seed=2):
    mu = z.mean(axis=0)
    _, s, vt = np.linalg.svd(z - mu, full_matrices=False)
    sd = s / np.sqrt(len(z))
    w = vt.T / np.maximum(sd, kappa * sd[0])
    zw = (z - mu) @ w
    dec = dense_net.init_network(z.shape[1], hidden, 2, seed=seed)
    opt = AdamState.for_network(dec, learning_rate=lr)
    rng = np.random.default_rng(seed)
    n = len(z)
    total = epochs * math.ceil(n / 256)
    it = 0
    for _ in range(epochs):
        perm = rng.permutation(n)
        for start in range(0, n, 256):
            idx = perm[start:start + 256]
            _, g = _recon_grad(dec, zw[idx], x[idx])
            dec, opt = dense_net.adam_step(dec, g, opt, cosine_lr(lr, 1e-5, it, total))
            it += 1
    return fold_input_transform(dec, mu, w)


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--run", default="run", help="output directory of a finished train stage")
    ap.add_argument("--kappas", default="0,1e-2,1")
    ap.add_argument("--epochs", type=int, default=25)
    args = ap.parse_args()
    cfg = RunConfig()
    cfg.paths.out_dir = args.run
    maps = load_maps(cfg)
    val, tr = train_validation_split(read_csv(cfg.dataset_path()), cfg.data.val_fraction, seed=cfg.run.seed + 1)
    z = maps.encode(tr.x)
    for kappa in (float(v) for v in args.kappas.split(",")):
        dec = fit_decoder(z, tr.x, kappa, args.epochs)
        m = TrainedMaps(maps.encoder, dec, maps.scale, maps.cp_bar, maps.u_bar)
        recon = np.mean(np.sum((m.decode(m.encode(val.x)) - val.x) ** 2, axis=1))
        parts = [f"kappa={kappa:g} recon={recon:.2e}"]
        for name in ("OL", "CL"):
            r = run_scenario(make_scenario(cfg, name), m, cfg.latent_config(), cfg.channel_params())
            parts.append(f"{name} rmse_x1={r.rmse_x1:.2e} rmse_x2={r.rmse_x2:.2e}")
        print(" | ".join(parts), flush=True)


if __name__ == "__main__":
    main()
