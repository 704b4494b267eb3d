import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ledkkl.channel import ChannelParams
from ledkkl.datagen import CSV_HEADER, Dataset, generate, read_csv, train_validation_split, write_csv


def test_generate_shape_box_and_successors(channel):
    ds = generate(5000, 0.0, channel, seed=1)
    assert ds.size == len(ds) == 5000
    assert np.all(np.abs(ds.x) <= 0.5)
    assert ds.successor_mismatch(channel) == 0


def test_uniform_moments(channel):
    ds = generate(200_000, 0.0, channel, seed=2)
    tol = 3 * (1 / np.sqrt(12)) / np.sqrt(200_000)
    assert np.all(np.abs(ds.x.mean(axis=0)) < tol)


def test_generate_deterministic(channel):
    a, b = generate(100, 0.1, channel, seed=7), generate(100, 0.1, channel, seed=7)
    assert np.array_equal(a.x, b.x) and np.array_equal(a.x_next, b.x_next)
    assert not np.array_equal(a.x, generate(100, 0.1, channel, seed=8).x)


def test_generate_rejects_empty(channel):
    with pytest.raises(ValueError):
        generate(0, 0.0, channel, seed=0)


def test_dataset_shape_validation():
    with pytest.raises(ValueError):
        Dataset(np.zeros((3, 2)), np.zeros((2, 2)))


@given(st.integers(2, 300), st.floats(0.05, 0.95))
@settings(max_examples=30, deadline=None)
def test_split_sizes_and_disjointness(n, frac):
    ds = generate(n, 0.0, ChannelParams(), seed=n)
    k = int(np.floor(frac * n))
    if k in (0, n):
        with pytest.raises(ValueError):
            train_validation_split(ds, frac, seed=0)
        return
    a, b = train_validation_split(ds, frac, seed=0)
    assert a.size == k and b.size == n - k
    rows = {tuple(r) for r in np.vstack([a.x, b.x])}
    assert len(rows) == n


def test_csv_round_trip_is_exact(tmp_path, channel):
    ds = generate(50, 0.25, channel, seed=11)
    write_csv(ds, tmp_path / "d.csv")
    text = (tmp_path / "d.csv").read_text().splitlines()
    assert text[:4] == ["# u_bar=0.25", "# seed=11", "# size=50", CSV_HEADER]
    back = read_csv(tmp_path / "d.csv")
    assert np.array_equal(back.x, ds.x) and np.array_equal(back.x_next, ds.x_next)
    assert back.u_bar == 0.25 and back.seed == 11
    write_csv(back, tmp_path / "e.csv")
    assert (tmp_path / "d.csv").read_bytes() == (tmp_path / "e.csv").read_bytes()


def test_csv_bad_header(tmp_path):
    (tmp_path / "bad.csv").write_text("a,b,c,d\n1,2,3,4\n")
    with pytest.raises(ValueError):
        read_csv(tmp_path / "bad.csv")
