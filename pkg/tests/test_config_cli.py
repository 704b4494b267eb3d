import math

import numpy as np
import pytest

from ledkkl import cli
from ledkkl.config import ConfigError, RunConfig, all_keys, dump_config, load_config, parse_config_text, set_value
from ledkkl.datagen import read_csv

SMALL = ["--set", "train.hidden_dim=12", "--set", "train.normalization_batch=256",
         "--set", "eval.duration_steps=60", "--set", "eval.lipschitz_pairs=40"]


def test_default_config_objects():
    cfg = RunConfig()
    assert cfg.channel_params().delta_phi == pytest.approx(math.radians(6))
    assert np.allclose(np.diag(cfg.latent_config().a_matrix), [0.99, 0.98, 0.96, 0.94, 0.92, 0.90])
    assert cfg.data.size == 200_000 and cfg.train_config().hidden_dim == 500
    assert cfg.eval.scenarios == ["OL", "IF1", "IF2", "CL"]
    assert cfg.eval.distances == [0.085, 0.1, 0.2]


def test_parse_overrides_and_comments():
    cfg = parse_config_text("# comment\n\ndata.size = 10   # inline\neval.distances = 0.1, 0.3\nrun.seed=4\n")
    assert cfg.data.size == 10 and cfg.eval.distances == [0.1, 0.3] and cfg.run.seed == 4


@pytest.mark.parametrize("text", ["data.sise = 3", "nosection.size = 3", "data.size", "data.size = ten"])
def test_parse_is_strict(text):
    with pytest.raises(ConfigError):
        parse_config_text(text)


def test_degree_suffix_only_for_angles_on_command_line():
    cfg = RunConfig()
    set_value(cfg, "channel.delta_phi", "6deg", allow_deg=True)
    assert cfg.channel.delta_phi == pytest.approx(math.radians(6))
    with pytest.raises(ConfigError):
        set_value(cfg, "channel.delta_phi", "6deg")
    with pytest.raises(ConfigError):
        set_value(cfg, "channel.te", "6deg", allow_deg=True)


def test_dump_parse_round_trip(tmp_path):
    cfg = RunConfig()
    set_value(cfg, "latent.a_diag", "0.9,0.8,0.7,0.6,0.5,0.4")
    set_value(cfg, "channel.c1", "0.123456789")
    (tmp_path / "c.txt").write_text(dump_config(cfg))
    assert load_config(tmp_path / "c.txt") == cfg
    assert len(dump_config(cfg).splitlines()) == len(all_keys())


def test_missing_config_file_is_config_error(tmp_path):
    assert cli.main(["generate", "--config", str(tmp_path / "nope.txt"), "--out", str(tmp_path)]) == cli.EXIT_CONFIG


def test_invalid_values_are_config_errors(tmp_path):
    assert cli.main(["generate", "--out", str(tmp_path), "--set", "channel.te=0.5"]) == cli.EXIT_CONFIG
    assert cli.main(["evaluate", "--out", str(tmp_path), "--set", "eval.scenarios=OL,XX"]) == cli.EXIT_CONFIG
    assert cli.main(["generate", "--out", str(tmp_path), "--set", "bogus"]) == cli.EXIT_CONFIG


def test_missing_artifacts_exit_3(tmp_path):
    for cmd in ("train", "evaluate", "sweep"):
        assert cli.main([cmd, "--out", str(tmp_path / "empty")]) == cli.EXIT_MISSING


@pytest.mark.parametrize("command", list(cli.COMMANDS))
def test_help_lists_every_key_read(command, capsys):
    with pytest.raises(SystemExit):
        cli.main([command, "--help"])
    text = capsys.readouterr().out
    for key in all_keys():
        if key.split(".")[0] in cli.SECTIONS_BY_COMMAND[command]:
            assert key in text


def test_generate_small_and_reproducible(tmp_path):
    for d in ("a", "b"):
        assert cli.main(["generate", "--out", str(tmp_path / d), "--size", "10", "--seed", "3"]) == 0
    a, b = (tmp_path / "a" / "dataset.csv"), (tmp_path / "b" / "dataset.csv")
    assert a.read_bytes() == b.read_bytes()
    ds = read_csv(a)
    assert ds.size == 10 and ds.seed == 3


def test_divergence_exit_4(tmp_path, monkeypatch):
    from ledkkl.training import TrainingDivergedError

    def boom(*a, **k):
        raise TrainingDivergedError("dyn loss became nan at epoch 1")

    assert cli.main(["generate", "--out", str(tmp_path), "--size", "50"]) == 0
    monkeypatch.setattr(cli, "train", boom)
    assert cli.main(["train", "--out", str(tmp_path)]) == cli.EXIT_NUMERIC


@pytest.fixture(scope="module")
def small_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    assert cli.main(["generate", "--out", str(out), "--size", "600", *SMALL]) == 0
    assert cli.main(["train", "--out", str(out), "--epochs", "2", *SMALL]) == 0
    assert cli.main(["evaluate", "--out", str(out), *SMALL]) == 0
    assert cli.main(["sweep", "--out", str(out), *SMALL]) == 0
    return out


def test_train_artifacts(small_run):
    from ledkkl import dense_net

    log = (small_run / "train_log.csv").read_text().splitlines()
    assert log[0] == cli.TRAIN_LOG_HEADER and len(log) == 1 + 2 + 2
    enc, meta = dense_net.load_checkpoint(small_run / "checkpoints" / "encoder.json")
    assert len(meta["scale"]) == 6 and meta["cp_bar"] > 0
    probe = np.random.default_rng(0).uniform(-0.5, 0.5, (10, 2))
    again, _ = dense_net.load_checkpoint(small_run / "checkpoints" / "encoder.json")
    assert np.array_equal(dense_net.forward(enc, probe), dense_net.forward(again, probe))


def test_evaluate_artifacts(small_run):
    from ledkkl.evaluation import read_summary, read_trace, rmse

    rows = read_summary(small_run / "summary.csv")
    assert [r["controller"] for r in rows] == ["OL", "IF1", "IF2", "CL"]
    for r in rows:
        cols, _ = read_trace(small_run / f"trace_{r['controller']}.csv")
        assert r["rmse_x1"] == rmse(cols["x1"], cols["x1_hat"])
        assert r["rmse_y2"] == rmse(cols["y2"], cols["y2_hat"])
    modes = (small_run / "observer_modes.csv").read_text().splitlines()
    assert len(modes) == 1 + 3 * 2
    import json
    diag = json.loads((small_run / "diagnostics.json").read_text())
    assert diag["lambda_zero"]["margin"] == pytest.approx(0.01, abs=1e-12)
    assert [s["scenario"] for s in diag["sampled"]] == ["OL", "IF1", "IF2", "CL"]


def test_sweep_artifact(small_run):
    from ledkkl.evaluation import read_summary

    rows = read_summary(small_run / "sensitivity.csv")
    assert [(r["controller"], r["distance"]) for r in rows] == [
        (c, d) for c in ("IF1", "IF2", "CL") for d in (0.085, 0.1, 0.2)]


def test_oracle_check_with_encoder(small_run):
    import json

    assert cli.main(["oracle-check", "--out", str(small_run), "--set", "oracle.samples=5"]) == 0
    rep = json.loads((small_run / "oracle_report.json").read_text())
    assert rep["max_residual"] <= 2 * rep["tail_bound"] and rep["spectral_radius"] == pytest.approx(0.99)
    assert rep["truncation_j"] >= 2000 and len(rep["encoder_fit"]["relative_error"]) == 6


def test_encoder_scale_fit_recovers_exact_scale(rng):
    o = rng.normal(size=(50, 3))
    fit = cli.encoder_scale_fit(o * [2.0, -1.0, 0.5], o)
    assert np.allclose(fit["scale"], [2.0, -1.0, 0.5]) and np.allclose(fit["relative_error"], 0, atol=1e-14)
