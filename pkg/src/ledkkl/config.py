"""Flat ``section.key = value`` run configuration.

Blank lines and ``#`` comments are ignored. Unknown sections or keys are
errors. Angles are radians in files; the CLI additionally accepts a ``deg``
suffix on angle keys (``--set channel.delta_phi=6deg``).
"""

from __future__ import annotations

import dataclasses
import math
import typing
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .channel import DEFAULT_DELTA_PHI, ChannelParams, GaussianGainParams, NoiseConfig
from .kkl_core import LatentConfig, default_latent_config, latent_config_from_diag
from .training import TrainConfig

ANGLE_KEYS = {"channel.b1", "channel.b2", "channel.c1", "channel.c2", "channel.delta_phi"}


class ConfigError(ValueError):
    pass


@dataclass
class ChannelSection:
    a1: float = 1.0
    b1: float = 0.2
    c1: float = 0.5
    a2: float = 0.5
    b2: float = 0.1
    c2: float = 0.4
    raw_cp: float = 1.0
    transmitter_intensity: float = 1.0
    attenuation_c: float = 0.5
    link_distance_d0: float = 0.085
    delta_phi: float = DEFAULT_DELTA_PHI
    te: float = 0.01
    process_std_1: float = 1e-3
    process_std_2: float = 1e-3
    measurement_std: float = math.sqrt(1e-3)


@dataclass
class LatentSection:
    q: int = 6
    a_diag: list[float] = field(default_factory=list)  # empty: 1 - k*te for k in (1, 2, 4, 6, 8, 10)
    b_fill: float = 1.0
    b_matrix: list[float] = field(default_factory=list)  # row-major q x 2; empty: every entry b_fill


@dataclass
class DataSection:
    size: int = 200_000
    u_bar: float = 0.0
    val_fraction: float = 0.1


@dataclass
class TrainSection:
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


@dataclass
class EvalSection:
    scenarios: list[str] = field(default_factory=lambda: ["OL", "IF1", "IF2", "CL"])
    observer_mode: str = "plain"
    duration_steps: int = 1000
    x0_1: float = 0.2
    x0_2: float = 0.0
    guess_1: float = 0.0
    guess_2: float = 0.0
    input_amplitude: float = 1.0
    distances: list[float] = field(default_factory=lambda: [0.085, 0.1, 0.2])
    sweep_controllers: list[str] = field(default_factory=lambda: ["IF1", "IF2", "CL"])
    lipschitz_pairs: int = 500


@dataclass
class OracleSection:
    samples: int = 100
    truncation_j: int = 2000
    tol: float = 1e-12


@dataclass
class PathsSection:
    out_dir: str = "run"
    dataset: str = "dataset.csv"
    checkpoints: str = "checkpoints"


@dataclass
class RunSection:
    seed: int = 0


@dataclass
class RunConfig:
    channel: ChannelSection = field(default_factory=ChannelSection)
    latent: LatentSection = field(default_factory=LatentSection)
    data: DataSection = field(default_factory=DataSection)
    train: TrainSection = field(default_factory=TrainSection)
    eval: EvalSection = field(default_factory=EvalSection)
    oracle: OracleSection = field(default_factory=OracleSection)
    paths: PathsSection = field(default_factory=PathsSection)
    run: RunSection = field(default_factory=RunSection)

    # --- derived objects -------------------------------------------------
    def channel_params(self) -> ChannelParams:
        c = self.channel
        gain = GaussianGainParams(a1=c.a1, b1=c.b1, c1=c.c1, a2=c.a2, b2=c.b2, c2=c.c2)
        return ChannelParams(gain=gain, raw_cp=c.raw_cp, transmitter_intensity=c.transmitter_intensity,
                             attenuation_c=c.attenuation_c, link_distance_d0=c.link_distance_d0,
                             delta_phi=c.delta_phi, te=c.te)

    def noise_config(self, seed_offset: int = 0) -> NoiseConfig:
        c = self.channel
        return NoiseConfig(c.process_std_1, c.process_std_2, c.measurement_std, seed=self.run.seed + seed_offset)

    def latent_config(self) -> LatentConfig:
        lat = self.latent
        if lat.a_diag:
            cfg = latent_config_from_diag(lat.a_diag, lat.b_fill)
        else:
            cfg = default_latent_config(self.channel.te, lat.b_fill)
        if lat.b_matrix:
            if len(lat.b_matrix) != 2 * cfg.q:
                raise ConfigError(f"latent.b_matrix needs {2 * cfg.q} entries, got {len(lat.b_matrix)}")
            cfg = LatentConfig(cfg.a_matrix, np.reshape(lat.b_matrix, (cfg.q, 2)))
        if cfg.q != lat.q:
            raise ConfigError(f"latent.q = {lat.q} but A has dimension {cfg.q}")
        return cfg

    def train_config(self) -> TrainConfig:
        t = self.train
        return TrainConfig(**dataclasses.asdict(t), seed=self.run.seed)

    def out_dir(self) -> Path:
        return Path(self.paths.out_dir)

    def dataset_path(self) -> Path:
        return self.out_dir() / self.paths.dataset

    def checkpoint_dir(self) -> Path:
        return self.out_dir() / self.paths.checkpoints


def all_keys() -> list[str]:
    cfg = RunConfig()
    return [f"{s.name}.{f.name}" for s in dataclasses.fields(cfg) for f in dataclasses.fields(getattr(cfg, s.name))]


def _field_type(section, name: str):
    hints = typing.get_type_hints(type(section))
    return hints[name]


def _parse_scalar(raw: str, typ, key: str, allow_deg: bool):
    raw = raw.strip()
    if typ is bool:
        if raw.lower() in ("true", "1", "yes"):
            return True
        if raw.lower() in ("false", "0", "no"):
            return False
        raise ConfigError(f"{key}: expected a boolean, got {raw!r}")
    if typ is float:
        if raw.lower().endswith("deg"):
            if not (allow_deg and key in ANGLE_KEYS):
                raise ConfigError(f"{key}: degree values are only accepted for angle keys on the command line")
            return float(np.deg2rad(float(raw[:-3])))
        return float(raw)
    if typ is int:
        return int(raw)
    return raw


def set_value(cfg: RunConfig, key: str, raw: str, allow_deg: bool = False) -> None:
    section_name, _, name = key.partition(".")
    section = getattr(cfg, section_name, None)
    if section is None or not dataclasses.is_dataclass(section) or not name:
        raise ConfigError(f"unknown config section in key {key!r}")
    if name not in {f.name for f in dataclasses.fields(section)}:
        raise ConfigError(f"unknown config key {key!r}")
    typ = _field_type(section, name)
    try:
        if typing.get_origin(typ) is list:
            (inner,) = typing.get_args(typ)
            items = [v for v in raw.split(",") if v.strip()]
            value = [_parse_scalar(v, inner, key, allow_deg) for v in items]
        else:
            value = _parse_scalar(raw, typ, key, allow_deg)
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{key}: cannot parse {raw!r}: {exc}") from exc
    setattr(section, name, value)


def parse_config_text(text: str, cfg: RunConfig | None = None) -> RunConfig:
    cfg = RunConfig() if cfg is None else cfg
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"line {lineno}: expected 'section.key = value', got {line!r}")
        try:
            set_value(cfg, key.strip(), value)
        except ConfigError as exc:
            raise ConfigError(f"line {lineno}: {exc}") from exc
    return cfg


def load_config(path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config_text(text)


def dump_config(cfg: RunConfig) -> str:
    lines = []
    for s in dataclasses.fields(cfg):
        section = getattr(cfg, s.name)
        for f in dataclasses.fields(section):
            v = getattr(section, f.name)
            if isinstance(v, list):
                v = ",".join(repr(x) if isinstance(x, float) else str(x) for x in v)
            elif isinstance(v, float):
                v = repr(v)
            lines.append(f"{s.name}.{f.name} = {v}")
    return "\n".join(lines) + "\n"
