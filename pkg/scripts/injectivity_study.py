"""Near-collisions of the exact latent transform on the state box.

Evaluates the series transform on an N x N grid and reports the smallest
latent distance between grid points that are more than 0.2 apart in state,
for the default constant-filled B and for a two-column B. A distance that
keeps shrinking as N grows means the transform folds and the state cannot
be recovered from the latent there.
"""

import argparse

import numpy as np
from scipy.spatial import cKDTree

from ledkkl.channel import ChannelParams, measure_pair
from ledkkl.kkl_core import LatentConfig, default_latent_config, series_oracle_T


def closest_far_pair(cfg, ch, n, min_sep=0.2, k=40):
    g = np.linspace(-0.5, 0.5, n)
    x = np.array(np.meshgrid(g, g, indexing="ij")).reshape(2, -1).T
    z = series_oracle_T(x, cfg, ch, truncation_j=2000, tol=None).value
    z = z / z.std(axis=0)
    dist, idx = cKDTree(z).query(z, k=min(k, len(z)))
    far = np.linalg.norm(x[:, None, :] - x[idx], axis=2) > min_sep
    d = np.where(far, dist, np.inf)
    i, j = np.unravel_index(np.argmin(d), d.shape)
    return d[i, j], x[i], x[idx[i, j]]


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--sizes", default="50,100,200")
    args = ap.parse_args()
    ch = ChannelParams()
    base = default_latent_config(ch.te)
    two_col = LatentConfig(base.a_matrix, np.column_stack([np.ones(6), np.linspace(-1, 1, 6)]))
    s = measure_pair(np.array([[0.0, 0.0]]), ch).sum()
    print(f"y1 + y2 at rest state (0, 0): {s:.3f} W")
    for name, cfg in (("B = ones", base), ("B = [1, linspace(-1, 1)]", two_col)):
        for n in (int(v) for v in args.sizes.split(",")):
            d, a, b = closest_far_pair(cfg, ch, n)
            if not np.isfinite(d):
                print(f"{name:26s} N={n:4d}  no far pair among the nearest latent neighbours")
                continue
            print(f"{name:26s} N={n:4d}  min latent distance {d:.2e}  between {np.round(a, 3)} and {np.round(b, 3)}")


if __name__ == "__main__":
    main()
