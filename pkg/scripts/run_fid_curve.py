"""FID against storyboard size for every method, on a synthetic or real feature set.

    python scripts/run_fid_curve.py --out fid_curve.csv
    python scripts/run_fid_curve.py --features tests/data/two_mode_100.csv --sizes 2,4,8,16
    python scripts/run_fid_curve.py --backend model --model inception.onnx --n-frames 200
"""

import argparse
import logging
from collections import defaultdict

import numpy as np

from vidsum.bench import BenchSpec, run_fid_curve, write_fid_csv
from vidsum.features import read_fixture


def markdown(rows) -> str:
    sizes = sorted({s for _, s, _, _ in rows})
    table = defaultdict(dict)
    for method, size, rep, value in rows:
        if rep == 0:
            table[method][size] = value
    lines = ["| method | " + " | ".join(str(s) for s in sizes) + " |",
             "|---|" + "---|" * len(sizes)]
    for method, cells in table.items():
        lines.append(f"| {method} | " + " | ".join(f"{cells[s]:.4g}" for s in sizes) + " |")
    return "\n".join(lines)


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n-frames", type=int, default=100)
    p.add_argument("--dim", type=int, default=2048, help="width of the synthetic features")
    p.add_argument("--features", help="CSV fixture to use instead of synthetic features")
    p.add_argument("--methods", default="time,inception,uid,scda")
    p.add_argument("--sizes", default="2,4,8,16")
    p.add_argument("--repetitions", type=int, default=1)
    p.add_argument("--lambda", dest="lam", type=float, default=0.0)
    p.add_argument("--backend", choices=["mock", "model"], default="mock")
    p.add_argument("--model")
    p.add_argument("--out", help="CSV path; the markdown table always goes to stdout")
    args = p.parse_args(argv)
    logging.basicConfig(level=logging.INFO)

    features = None
    n_frames = args.n_frames
    if args.features:
        rows = read_fixture(args.features)
        features = np.array([rows[i] for i in sorted(rows)])
        n_frames = len(features)
    spec = BenchSpec(n_frames=n_frames, methods=tuple(args.methods.split(",")),
                     sizes=tuple(int(s) for s in args.sizes.split(",")), backend=args.backend,
                     repetitions=args.repetitions, model_path=args.model, features=features,
                     dim=args.dim, lam=args.lam)
    rows = run_fid_curve(spec)
    if args.out:
        write_fid_csv(rows, args.out)
    print(markdown(rows))


if __name__ == "__main__":
    main()
