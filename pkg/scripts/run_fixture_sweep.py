"""Generate the five-element fixture, run the sweep, and print the FoV report.

Usage::

    python3 scripts/run_fixture_sweep.py [--config configs/linear5.yaml] [--out runs/linear5]
"""

import argparse
import json
import pathlib
import sys

from widescan.cli import run

ROOT = pathlib.Path(__file__).resolve().parent.parent


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default=str(ROOT / "configs" / "linear5.yaml"))
    ap.add_argument("--out", default=str(ROOT / "runs" / "linear5"))
    ap.add_argument("--workers", type=int, default=None)
    args = ap.parse_args()

    common = ["--config", args.config, "--out", args.out]
    if args.workers is not None:
        common += ["--workers", str(args.workers)]
    for sub in (["gen-fixture"], ["synthesize", "--audit"], ["fov"], ["report"]):
        code = run(sub[:1] + common + sub[1:])
        if code:
            sys.exit(code)

    report = json.loads((pathlib.Path(args.out) / "report.json").read_text())
    for key in ("q_total", "alpha_fov_std", "alpha_fov_po", "delta_alpha_fov", "delta_zeta_max", "fallback_count"):
        print(f"{key:>16}: {report[key]}")


if __name__ == "__main__":
    main()
