import numpy as np
import pytest

from ledkkl.channel import ChannelParams
from ledkkl.datagen import generate, train_validation_split
from ledkkl.kkl_core import default_latent_config
from ledkkl.training import TrainConfig, train


@pytest.fixture(scope="session")
def channel():
    return ChannelParams()


@pytest.fixture(scope="session")
def latent():
    return default_latent_config(0.01)


@pytest.fixture(scope="session")
def small_maps(channel, latent):
    """A quickly trained pair of small networks; quality is irrelevant, only plumbing."""
    ds = generate(2000, 0.0, channel, seed=3)
    val, tr = train_validation_split(ds, 0.2, seed=4)
    tcfg = TrainConfig(epochs_dyn=3, epochs_recon=3, hidden_dim=20, normalization_epochs=100, seed=5)
    return train(tr, latent, tcfg, channel, val_ds=val)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


def record_criterion(number: int, title: str, passed: bool, detail: str) -> bool:
    ACCEPTANCE_LINES.append(f"criterion {number} {'PASS' if passed else 'FAIL'}: {title} | {detail}")
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def default_run(tmp_path_factory):
    """The full default pipeline, run once through the command-line front end."""
    import time

    from ledkkl import cli

    out = tmp_path_factory.mktemp("default_run")
    timings = {}
    for cmd in ("generate", "train", "evaluate", "sweep", "oracle-check"):
        t0 = time.perf_counter()
        code = cli.main([cmd, "--out", str(out)])
        timings[cmd] = time.perf_counter() - t0
        assert code == 0, f"{cmd} exited with {code}"
    return out, timings
