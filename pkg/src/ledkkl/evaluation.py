"""Scenario simulation, RMSE metrics, distance sweep and trace I/O."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .channel import ChannelParams, NoiseConfig, measure_pair, step
from .kkl_core import LatentConfig, latent_step, omega_correction
from .training import TrainedMaps

INPUT_KINDS = ("zero", "if1", "if2", "closed_loop")
CONTROLLER_NAMES = {"zero": "OL", "if1": "IF1", "if2": "IF2", "closed_loop": "CL"}
KIND_BY_NAME = {v: k for k, v in CONTROLLER_NAMES.items()}
TRACE_COLUMNS = ("k", "t", "x1", "x2", "x1_hat", "x2_hat", "y1", "y2", "y1_hat", "y2_hat", "u")
TRACE_HEADER = ",".join(TRACE_COLUMNS)
SUMMARY_HEADER = "controller,distance,rmse_x1,rmse_x2,rmse_y1,rmse_y2,mean_power"
CL_GAIN = 0.001


class SimulationError(RuntimeError):
    pass


def input_signal(kind: str, k: int, te: float, x2_hat: float | None = None, amplitude: float = 1.0) -> float:
    """Scenario input at step ``k``; ``amplitude`` scales the open-loop excitations only."""
    if kind == "zero":
        return 0.0
    w = 5.0 * k * te
    if kind == "if1":
        return amplitude * 0.1 * math.cos(w)
    if kind == "if2":
        return amplitude * (0.1 * math.cos(w) + 0.2 * math.sin(w))
    if kind == "closed_loop":
        if x2_hat is None:
            raise ValueError("closed-loop input needs the velocity estimate")
        return -CL_GAIN * float(x2_hat)
    raise ValueError(f"unknown input kind {kind!r}; expected one of {INPUT_KINDS}")


def rmse(a, b) -> float:
    a, b = np.asarray(a, float), np.asarray(b, float)
    if a.shape != b.shape or a.size == 0:
        raise ValueError(f"rmse needs equal nonempty shapes, got {a.shape} and {b.shape}")
    return float(np.sqrt(np.mean((a - b) ** 2)))


@dataclass(frozen=True)
class Scenario:
    name: str
    input_kind: str = "zero"
    observer_mode: str = "plain"
    duration_steps: int = 1000
    initial_true_state: tuple[float, float] = (0.2, 0.0)
    initial_guess: tuple[float, float] = (0.0, 0.0)
    initial_latent: tuple[float, ...] | None = None
    noise: NoiseConfig = NoiseConfig()
    link_distance: float | None = None
    amplitude: float = 1.0

    def __post_init__(self):
        if self.input_kind not in INPUT_KINDS:
            raise ValueError(f"unknown input kind {self.input_kind!r}")
        if self.observer_mode not in ("plain", "corrected"):
            raise ValueError(f"observer_mode must be 'plain' or 'corrected', got {self.observer_mode!r}")
        if self.duration_steps < 1:
            raise ValueError("duration_steps must be >= 1")


@dataclass
class ScenarioResult:
    name: str
    controller: str
    distance: float
    observer_mode: str
    trace: dict[str, np.ndarray] = field(repr=False)

    def __len__(self) -> int:
        return len(self.trace["k"])

    @property
    def rmse_x1(self) -> float:
        return rmse(self.trace["x1"], self.trace["x1_hat"])

    @property
    def rmse_x2(self) -> float:
        return rmse(self.trace["x2"], self.trace["x2_hat"])

    @property
    def rmse_y1(self) -> float:
        return rmse(self.trace["y1"], self.trace["y1_hat"])

    @property
    def rmse_y2(self) -> float:
        return rmse(self.trace["y2"], self.trace["y2_hat"])

    @property
    def mean_power(self) -> float:
        """Mean measured power over both receivers and all steps (W)."""
        return float(np.mean((self.trace["y1"] + self.trace["y2"]) / 2.0))

    def summary(self) -> dict:
        return dict(controller=self.controller, distance=self.distance, rmse_x1=self.rmse_x1,
                    rmse_x2=self.rmse_x2, rmse_y1=self.rmse_y1, rmse_y2=self.rmse_y2,
                    mean_power=self.mean_power)


def run_scenario(s: Scenario, maps: TrainedMaps, cfg: LatentConfig, channel: ChannelParams) -> ScenarioResult:
    """Simulate the true system and the latent observer side by side.

    At step ``k`` the estimate ``x_hat_k = T^-1(z_k)`` uses outputs up to
    ``k - 1`` and inputs up to ``k - 1``; ``y_k`` then drives ``z_{k+1}``.
    The maps are trained at one link distance; at another distance the
    transform is the trained one times ``cp_bar / cp_bar_train`` (it is linear
    in the output map), so outputs are rescaled by the inverse factor before
    entering the observer.
    """
    ch = channel if s.link_distance is None else channel.with_distance(s.link_distance)
    lat = maps.latent_config(cfg)
    y_gain = maps.cp_bar / ch.cp_bar
    rng = s.noise.rng()
    n = s.duration_steps
    x = np.array(s.initial_true_state, dtype=float)
    if s.initial_latent is not None:
        z = np.array(s.initial_latent, dtype=float)
    else:
        z = maps.encode(np.array(s.initial_guess, dtype=float))
    cols = {c: np.empty(n) for c in TRACE_COLUMNS}
    for k in range(n):
        x_hat = maps.decode(z)
        y = measure_pair(x, ch, s.noise, rng)
        y_hat = measure_pair(x_hat, ch)
        u = input_signal(s.input_kind, k, ch.te, x_hat[1], s.amplitude)
        row = (k, k * ch.te, x[0], x[1], x_hat[0], x_hat[1], y[0], y[1], y_hat[0], y_hat[1], u)
        if not all(math.isfinite(v) for v in row):
            raise SimulationError(f"{s.name}: non-finite value at step {k}")
        for c, v in zip(TRACE_COLUMNS, row):
            cols[c][k] = v
        z_next = latent_step(z, y * y_gain, lat)
        if s.observer_mode == "corrected":
            z_next = z_next + omega_correction(z, u, maps.u_bar, maps.encode, maps.decode, ch)
        z = z_next
        x = step(x, u, ch, s.noise, rng)
    return ScenarioResult(name=s.name, controller=CONTROLLER_NAMES[s.input_kind], distance=ch.link_distance_d0,
                          observer_mode=s.observer_mode, trace=cols)


def sensitivity_sweep(distances, scenarios, maps: TrainedMaps, cfg: LatentConfig,
                      channel: ChannelParams) -> list[dict]:
    """One summary row per (distance, scenario), distances outermost."""
    rows = []
    for d in distances:
        if d <= 0:
            raise ValueError(f"link distance must be positive, got {d}")
        for s in scenarios:
            s_d = Scenario(**{**s.__dict__, "link_distance": float(d)})
            rows.append(run_scenario(s_d, maps, cfg, channel).summary())
    return rows


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_trace(result: ScenarioResult, path) -> None:
    path = Path(path)
    lines = [TRACE_HEADER]
    data = np.column_stack([result.trace[c] for c in TRACE_COLUMNS])
    for row in data:
        lines.append(",".join([str(int(row[0]))] + [repr(float(v)) for v in row[1:]]))
    summ = result.summary()
    lines.append(f"# scenario={result.name} observer_mode={result.observer_mode}")
    lines.extend(f"# {k}={_fmt(summ[k])}" for k in summ)
    try:
        path.write_text("\n".join(lines) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write trace to {path}: {exc}") from exc


def read_trace(path) -> tuple[dict[str, np.ndarray], dict[str, str]]:
    """Inverse of :func:`write_trace`: column arrays plus the ``#`` summary entries."""
    meta: dict[str, str] = {}
    rows = []
    with open(path) as fh:
        header = fh.readline().strip()
        if header != TRACE_HEADER:
            raise ValueError(f"{path}: unexpected header {header!r}")
        for line in fh:
            line = line.strip()
            if line.startswith("#"):
                for part in line[1:].split():
                    k, _, v = part.partition("=")
                    meta[k] = v
            elif line:
                rows.append([float(v) for v in line.split(",")])
    data = np.array(rows).reshape(-1, len(TRACE_COLUMNS))
    return {c: data[:, i] for i, c in enumerate(TRACE_COLUMNS)}, meta


def write_summary(rows: list[dict], path) -> None:
    lines = [SUMMARY_HEADER]
    keys = SUMMARY_HEADER.split(",")
    lines.extend(",".join(_fmt(r[k]) for k in keys) for r in rows)
    Path(path).write_text("\n".join(lines) + "\n")


def read_summary(path) -> list[dict]:
    with open(path) as fh:
        keys = fh.readline().strip().split(",")
        out = []
        for line in fh:
            if line.strip():
                vals = line.strip().split(",")
                out.append({k: (v if k == "controller" else float(v)) for k, v in zip(keys, vals)})
    return out
