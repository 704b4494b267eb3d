"""Run generate -> train -> evaluate -> sweep -> oracle-check with one config and time each stage."""

import argparse
import sys
import time

from ledkkl import cli
from ledkkl.evaluation import read_summary


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="run")
    ap.add_argument("--config")
    ap.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    args = ap.parse_args()
    common = ["--out", args.out] + (["--config", args.config] if args.config else [])
    for item in args.set:
        common += ["--set", item]
    for cmd in ("generate", "train", "evaluate", "sweep", "oracle-check"):
        t0 = time.perf_counter()
        code = cli.main([cmd, *common])
        print(f"[{cmd}] exit {code} in {time.perf_counter() - t0:.1f} s", flush=True)
        if code not in (0,):
            sys.exit(code)
    print("\ncontroller  rmse_x1    rmse_x2    rmse_y1    rmse_y2")
    for r in read_summary(f"{args.out}/{cli.SUMMARY_FILE}"):
        print(f"{r['controller']:10s}  {r['rmse_x1']:.3e}  {r['rmse_x2']:.3e}  {r['rmse_y1']:.3e}  {r['rmse_y2']:.3e}")


if __name__ == "__main__":
    main()
