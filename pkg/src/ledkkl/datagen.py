"""One-step training pairs ``(x_k, x_{k+1})`` sampled uniformly on the state box."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .channel import ChannelParams, step

STATE_BOX = (-0.5, 0.5)
CSV_HEADER = "x1,x2,x1_next,x2_next"


@dataclass(frozen=True)
class Dataset:
    x: np.ndarray
    x_next: np.ndarray
    u_bar: float = 0.0
    seed: int | None = None

    def __post_init__(self):
        if self.x.shape != self.x_next.shape or self.x.ndim != 2 or self.x.shape[1] != 2:
            raise ValueError(f"bad dataset shapes {self.x.shape}, {self.x_next.shape}")

    @property
    def size(self) -> int:
        return self.x.shape[0]

    def __len__(self) -> int:
        return self.size

    def successor_mismatch(self, channel: ChannelParams) -> int:
        """Number of pairs whose ``x_next`` differs from the noise-free step of ``x``."""
        expected = step(self.x, self.u_bar, channel)
        return int(np.count_nonzero(np.any(expected != self.x_next, axis=1)))


def generate(size: int, u_bar: float, channel: ChannelParams, seed: int) -> Dataset:
    if size < 1:
        raise ValueError("dataset size must be >= 1")
    rng = np.random.default_rng(seed)
    x = rng.uniform(*STATE_BOX, size=(size, 2))
    return Dataset(x=x, x_next=step(x, u_bar, channel), u_bar=float(u_bar), seed=seed)


def train_validation_split(ds: Dataset, fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Random disjoint split with ``floor(fraction * n)`` pairs in the first part."""
    if not 0 < fraction < 1:
        raise ValueError(f"split fraction must be in (0, 1), got {fraction}")
    n_first = int(np.floor(fraction * ds.size))
    if n_first == 0 or n_first == ds.size:
        raise ValueError(f"split of {ds.size} pairs at fraction {fraction} leaves an empty part")
    perm = np.random.default_rng(seed).permutation(ds.size)
    a, b = np.sort(perm[:n_first]), np.sort(perm[n_first:])
    part = lambda idx: Dataset(ds.x[idx], ds.x_next[idx], ds.u_bar, ds.seed)  # noqa: E731
    return part(a), part(b)


def write_csv(ds: Dataset, path) -> None:
    lines = [f"# u_bar={float(ds.u_bar)!r}", f"# seed={ds.seed}", f"# size={ds.size}", CSV_HEADER]
    rows = np.hstack([ds.x, ds.x_next])
    lines.extend(",".join(repr(float(v)) for v in row) for row in rows)
    Path(path).write_text("\n".join(lines) + "\n")


def read_csv(path) -> Dataset:
    meta: dict[str, str] = {}
    header = None
    data_lines = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition("=")
                meta[key.strip()] = value.strip()
            elif header is None:
                header = line
            else:
                data_lines.append(line)
    if header != CSV_HEADER:
        raise ValueError(f"{path}: expected header {CSV_HEADER!r}, got {header!r}")
    rows = np.array([[float(v) for v in ln.split(",")] for ln in data_lines]).reshape(-1, 4)
    seed = meta.get("seed")
    return Dataset(
        x=rows[:, :2].copy(),
        x_next=rows[:, 2:].copy(),
        u_bar=float(meta.get("u_bar", 0.0)),
        seed=None if seed in (None, "None") else int(seed),
    )
