"""Command-line front end: ``generate``, ``train``, ``evaluate``, ``sweep``, ``oracle-check``.

Every command reads the shared ``section.key = value`` config, applies flag
overrides, and writes its artifacts under ``paths.out_dir``. Exit codes:
0 success, 2 config error, 3 missing artifact, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import datagen, dense_net
from .config import ConfigError, RunConfig, all_keys, dump_config, load_config, set_value
from .evaluation import (CONTROLLER_NAMES, KIND_BY_NAME, Scenario, SimulationError, run_scenario,
                         sensitivity_sweep, write_summary, write_trace)
from .kkl_core import OracleDivergenceError, contraction_check, estimate_omega_lipschitz, oracle_residual, series_oracle_T
from .training import TrainedMaps, TrainingDivergedError, train

log = logging.getLogger("ledkkl")

EXIT_OK, EXIT_CONFIG, EXIT_MISSING, EXIT_NUMERIC = 0, 2, 3, 4

ENCODER_FILE = "encoder.json"
DECODER_FILE = "decoder.json"
TRAIN_LOG_FILE = "train_log.csv"
TRAIN_LOG_HEADER = "epoch,phase,loss_train,loss_val"
SUMMARY_FILE = "summary.csv"
MODES_FILE = "observer_modes.csv"
DIAGNOSTICS_FILE = "diagnostics.json"
SENSITIVITY_FILE = "sensitivity.csv"
ORACLE_FILE = "oracle_report.json"
CONFIG_ECHO = "config_used.txt"

# scenario noise seeds are tied to the controller, so evaluate and sweep share them
NOISE_SEED_OFFSET = {name: 1000 + i for i, name in enumerate(CONTROLLER_NAMES.values())}

SECTIONS_BY_COMMAND = {
    "generate": ("channel", "data", "paths", "run"),
    "train": ("channel", "latent", "data", "train", "paths", "run"),
    "evaluate": ("channel", "latent", "eval", "paths", "run"),
    "sweep": ("channel", "latent", "eval", "paths", "run"),
    "oracle-check": ("channel", "latent", "data", "oracle", "paths", "run"),
}


class MissingArtifactError(FileNotFoundError):
    pass


def _keys_epilog(command: str) -> str:
    sections = SECTIONS_BY_COMMAND[command]
    keys = [k for k in all_keys() if k.split(".", 1)[0] in sections]
    return "config keys read:\n  " + "\n  ".join(keys)


def build_config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    for item in args.set or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        set_value(cfg, key.strip(), value, allow_deg=True)
    if args.seed is not None:
        cfg.run.seed = args.seed
    if args.out is not None:
        cfg.paths.out_dir = args.out
    if getattr(args, "size", None) is not None:
        cfg.data.size = args.size
    if getattr(args, "epochs", None) is not None:
        cfg.train.epochs_dyn = cfg.train.epochs_recon = args.epochs
    # validate derived objects early so bad values surface as config errors
    try:
        cfg.channel_params()
        cfg.latent_config()
        cfg.train_config()
        cfg.noise_config()
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    for name in cfg.eval.scenarios + cfg.eval.sweep_controllers:
        if name not in KIND_BY_NAME:
            raise ConfigError(f"unknown controller {name!r}; expected one of {sorted(KIND_BY_NAME)}")
    if cfg.eval.observer_mode not in ("plain", "corrected"):
        raise ConfigError(f"eval.observer_mode must be plain or corrected, got {cfg.eval.observer_mode!r}")
    return cfg


def _require(path: Path, what: str) -> Path:
    if not path.is_file():
        raise MissingArtifactError(f"{what} not found at {path}; run the earlier pipeline stage first")
    return path


def load_maps(cfg: RunConfig) -> TrainedMaps:
    ckpt = cfg.checkpoint_dir()
    enc, meta = dense_net.load_checkpoint(_require(ckpt / ENCODER_FILE, "encoder checkpoint"))
    dec, _ = dense_net.load_checkpoint(_require(ckpt / DECODER_FILE, "decoder checkpoint"))
    return TrainedMaps(encoder=enc, decoder=dec, scale=np.asarray(meta["scale"], float),
                       cp_bar=float(meta["cp_bar"]), u_bar=float(meta["u_bar"]))


def make_scenario(cfg: RunConfig, name: str, observer_mode: str | None = None) -> Scenario:
    ev = cfg.eval
    return Scenario(name=name, input_kind=KIND_BY_NAME[name], observer_mode=observer_mode or ev.observer_mode,
                    duration_steps=ev.duration_steps, initial_true_state=(ev.x0_1, ev.x0_2),
                    initial_guess=(ev.guess_1, ev.guess_2), noise=cfg.noise_config(NOISE_SEED_OFFSET[name]),
                    amplitude=ev.input_amplitude)


def _prepare_out(cfg: RunConfig) -> Path:
    out = cfg.out_dir()
    out.mkdir(parents=True, exist_ok=True)
    return out


# --- commands ------------------------------------------------------------

def cmd_generate(cfg: RunConfig) -> int:
    _prepare_out(cfg)
    ds = datagen.generate(cfg.data.size, cfg.data.u_bar, cfg.channel_params(), seed=cfg.run.seed)
    path = cfg.dataset_path()
    datagen.write_csv(ds, path)
    print(f"wrote {path}: size={ds.size} seed={ds.seed} u_bar={ds.u_bar!r}")
    return EXIT_OK


def cmd_train(cfg: RunConfig) -> int:
    ds = datagen.read_csv(_require(cfg.dataset_path(), "dataset"))
    channel = cfg.channel_params()
    val, tr = datagen.train_validation_split(ds, cfg.data.val_fraction, seed=cfg.run.seed + 1)
    maps = train(tr, cfg.latent_config(), cfg.train_config(), channel, val_ds=val,
                 progress=lambda r: print(f"epoch {r['epoch']:3d} {r['phase']:5s} "
                                          f"train={r['loss_train']:.3e} val={r['loss_val']:.3e}", flush=True))
    ckpt = cfg.checkpoint_dir()
    ckpt.mkdir(parents=True, exist_ok=True)
    meta = dict(scale=[float(s) for s in maps.scale], cp_bar=float(maps.cp_bar), u_bar=float(maps.u_bar))
    dense_net.save_checkpoint(maps.encoder, ckpt / ENCODER_FILE, meta)
    dense_net.save_checkpoint(maps.decoder, ckpt / DECODER_FILE, meta)
    lines = [TRAIN_LOG_HEADER]
    lines.extend(f"{r['epoch']},{r['phase']},{float(r['loss_train'])!r},{float(r['loss_val'])!r}"
                 for r in maps.history)
    (cfg.out_dir() / TRAIN_LOG_FILE).write_text("\n".join(lines) + "\n")
    (cfg.out_dir() / CONFIG_ECHO).write_text(dump_config(cfg))
    last = {r["phase"]: r for r in maps.history}
    print(f"final val loss_dyn={last['dyn']['loss_val']:.3e} loss_recon={last['recon']['loss_val']:.3e}")
    return EXIT_OK


def contraction_diagnostics(cfg: RunConfig, maps: TrainedMaps, results) -> dict:
    """Contraction report at ``lambda_u = 0`` plus sampled-``lambda_u`` checks per scenario."""
    latent = cfg.latent_config()
    channel = cfg.channel_params()
    base = contraction_check(latent, 0.0)
    rng = np.random.default_rng(cfg.run.seed + 7)
    x_samples = rng.uniform(*datagen.STATE_BOX, size=(2000, 2))
    z_samples = maps.encode(x_samples)
    scaled = maps.latent_config(latent)
    sampled = []
    for res in results:
        u_trace = res.trace["u"]
        u_max = float(u_trace[np.argmax(np.abs(u_trace))]) if len(u_trace) else 0.0
        lam = estimate_omega_lipschitz(z_samples, u_max, maps.u_bar, maps.encode, maps.decode, channel,
                                       n_pairs=cfg.eval.lipschitz_pairs, rng=np.random.default_rng(cfg.run.seed + 8))
        rep = contraction_check(scaled, lam)
        sampled.append(dict(scenario=res.name, u=u_max, lambda_u=rep.lambda_u, contracting=bool(rep.contracting),
                            margin=rep.margin))
    return dict(lambda_zero=dict(contracting=bool(base.contracting), margin=base.margin,
                                 spectral_radius=base.spectral_radius),
                sampled=sampled)


def cmd_evaluate(cfg: RunConfig) -> int:
    maps = load_maps(cfg)
    out = _prepare_out(cfg)
    latent, channel = cfg.latent_config(), cfg.channel_params()
    results = []
    for name in cfg.eval.scenarios:
        res = run_scenario(make_scenario(cfg, name), maps, latent, channel)
        write_trace(res, out / f"trace_{name}.csv")
        results.append(res)
        print(f"{name}: rmse_x1={res.rmse_x1:.3e} rmse_x2={res.rmse_x2:.3e} "
              f"rmse_y1={res.rmse_y1:.3e} rmse_y2={res.rmse_y2:.3e}")
    write_summary([r.summary() for r in results], out / SUMMARY_FILE)

    # both observer modes side by side for the input-driven scenarios
    lines = ["controller,observer_mode,rmse_x1,rmse_x2,rmse_y1,rmse_y2"]
    for name in cfg.eval.scenarios:
        if name == "OL":
            continue
        for mode in ("plain", "corrected"):
            r = run_scenario(make_scenario(cfg, name, mode), maps, latent, channel)
            lines.append(f"{name},{mode},{r.rmse_x1!r},{r.rmse_x2!r},{r.rmse_y1!r},{r.rmse_y2!r}")
    (out / MODES_FILE).write_text("\n".join(lines) + "\n")

    diag = contraction_diagnostics(cfg, maps, results)
    (out / DIAGNOSTICS_FILE).write_text(json.dumps(diag, indent=2, sort_keys=True) + "\n")
    print(f"contraction at lambda_u=0: margin={diag['lambda_zero']['margin']:.6f}")
    for s in diag["sampled"]:
        print(f"  {s['scenario']}: lambda_u={s['lambda_u']:.3e} contracting={s['contracting']}")
    return EXIT_OK


def cmd_sweep(cfg: RunConfig) -> int:
    maps = load_maps(cfg)
    out = _prepare_out(cfg)
    scenarios = [make_scenario(cfg, name) for name in cfg.eval.sweep_controllers]
    rows = sensitivity_sweep(cfg.eval.distances, scenarios, maps, cfg.latent_config(), cfg.channel_params())
    rows.sort(key=lambda r: cfg.eval.sweep_controllers.index(r["controller"]))  # stable: distances keep order
    write_summary(rows, out / SENSITIVITY_FILE)
    for r in rows:
        print(f"{r['controller']:3s} d={r['distance']:.3f} power={r['mean_power']:.4e} "
              f"rmse_y1={r['rmse_y1']:.3e} rmse_y2={r['rmse_y2']:.3e}")
    return EXIT_OK


def encoder_scale_fit(encoded, oracle) -> dict:
    """Per-dimension least-squares ``s_i`` with ``encoded_i ~ s_i * oracle_i`` and the post-fit relative error."""
    encoded, oracle = np.asarray(encoded, float), np.asarray(oracle, float)
    s = np.sum(encoded * oracle, axis=0) / np.sum(oracle * oracle, axis=0)
    rel = np.linalg.norm(encoded - s * oracle, axis=0) / np.linalg.norm(encoded, axis=0)
    return dict(scale=s.tolist(), relative_error=rel.tolist())


def cmd_oracle_check(cfg: RunConfig) -> int:
    out = _prepare_out(cfg)
    latent, channel = cfg.latent_config(), cfg.channel_params()
    rng = np.random.default_rng(cfg.run.seed)
    x = rng.uniform(*datagen.STATE_BOX, size=(cfg.oracle.samples, 2))
    res = oracle_residual(x, latent, channel, cfg.data.u_bar, cfg.oracle.truncation_j, cfg.oracle.tol)
    max_res = float(np.max(res.residual))
    report = dict(samples=cfg.oracle.samples, max_residual=max_res, tail_bound=res.tail_bound,
                  terms=res.terms, truncation_j=res.terms - 1, spectral_radius=latent.spectral_radius,
                  consistent=bool(max_res <= 2.0 * res.tail_bound))
    print(f"max residual={max_res:.3e} tail bound={res.tail_bound:.3e} J={res.terms - 1} "
          f"rho(A)={latent.spectral_radius:.6f} consistent={report['consistent']}")
    if (cfg.checkpoint_dir() / ENCODER_FILE).is_file():
        maps = load_maps(cfg)
        oracle_t = series_oracle_T(x, latent, channel, cfg.data.u_bar, cfg.oracle.truncation_j, cfg.oracle.tol).value
        report["encoder_fit"] = encoder_scale_fit(maps.encode(x), oracle_t)
        print("encoder post-fit relative error per dim: "
              + " ".join(f"{e:.3e}" for e in report["encoder_fit"]["relative_error"]))
    (out / ORACLE_FILE).write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    return EXIT_OK if report["consistent"] else EXIT_NUMERIC


COMMANDS = {
    "generate": cmd_generate,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "sweep": cmd_sweep,
    "oracle-check": cmd_oracle_check,
}

HELP = {
    "generate": "sample one-step training pairs and write the dataset CSV",
    "train": "train encoder and decoder; write checkpoints and the training log",
    "evaluate": "simulate the configured scenarios; write traces, summary and diagnostics",
    "sweep": "run the link-distance sweep and write the sensitivity CSV",
    "oracle-check": "check the series reference transform and compare it to a trained encoder",
}


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ledkkl", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, help=HELP[name], description=HELP[name], epilog=_keys_epilog(name),
                           formatter_class=argparse.RawDescriptionHelpFormatter)
        p.add_argument("--config", help="config file of 'section.key = value' lines")
        p.add_argument("--seed", type=int, help="overrides run.seed")
        p.add_argument("--out", help="overrides paths.out_dir")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override any config key; angle keys accept a 'deg' suffix")
        p.add_argument("-v", "--verbose", action="store_true")
        if name == "generate":
            p.add_argument("--size", type=int, help="overrides data.size")
        if name == "train":
            p.add_argument("--epochs", type=int, help="overrides train.epochs_dyn and train.epochs_recon")
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = build_config(args)
        return COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (MissingArtifactError, FileNotFoundError) as exc:
        print(f"missing artifact: {exc}", file=sys.stderr)
        return EXIT_MISSING
    except (TrainingDivergedError, SimulationError, OracleDivergenceError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
