"""How far the excitation scenarios drive the true state out of the training box.

The velocity integrates the input directly, so a 0.1 rad/s cosine at 5 rad/s
moves x2 by about 0.1 / (5 * te) per half period. The table lists state
ranges and the fraction of steps inside the box for a few input amplitudes.
No trained maps are needed.
"""

import argparse

import numpy as np

from ledkkl.channel import ChannelParams, NoiseConfig, step
from ledkkl.datagen import STATE_BOX
from ledkkl.evaluation import input_signal


def excursion(kind, amplitude, steps=1000, x0=(0.2, 0.0), seed=0):
    ch = ChannelParams()
    noise = NoiseConfig(seed=seed)
    rng = noise.rng()
    x = np.array(x0, float)
    xs = np.empty((steps, 2))
    for k in range(steps):
        xs[k] = x
        x = step(x, input_signal(kind, k, ch.te, amplitude=amplitude), ch, noise, rng)
    return xs


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--amplitudes", default="1,0.3,0.1,0.03,0.01")
    args = ap.parse_args()
    lo, hi = STATE_BOX
    print("kind  amplitude  x1_range              x2_range              inside_box")
    for kind in ("if1", "if2"):
        for a in (float(v) for v in args.amplitudes.split(",")):
            xs = excursion(kind, a)
            inside = np.mean(np.all((xs >= lo) & (xs <= hi), axis=1))
            print(f"{kind:5s} {a:9.3g}  [{xs[:, 0].min():+8.3f}, {xs[:, 0].max():+8.3f}]  "
                  f"[{xs[:, 1].min():+8.3f}, {xs[:, 1].max():+8.3f}]  {inside:6.1%}")


if __name__ == "__main__":
    main()
