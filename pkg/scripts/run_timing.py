"""Per-stage wall clock for each method on an hour of 1 fps video (3600 frames).

The mock backend replaces inference with a feature lookup, so the numbers
isolate decode-free summarization cost. The last two columns compare the total
with reference one-hour runtimes.

    python scripts/run_timing.py
    python scripts/run_timing.py --backend model --model inception.onnx --n-frames 600
"""

import argparse

from vidsum.bench import BenchSpec, run_timing
from vidsum.report import format_table


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n-frames", type=int, default=3600)
    p.add_argument("--n-clusters", type=int, default=16)
    p.add_argument("--dim", type=int, default=2048)
    p.add_argument("--methods", default="time,inception,uid,scda")
    p.add_argument("--repetitions", type=int, default=1)
    p.add_argument("--backend", choices=["mock", "model"], default="mock")
    p.add_argument("--model")
    p.add_argument("--markdown", action="store_true")
    p.add_argument("--save", help="directory for one RunReport JSON per run")
    args = p.parse_args(argv)

    spec = BenchSpec(n_frames=args.n_frames, methods=tuple(args.methods.split(",")),
                     sizes=(), backend=args.backend, repetitions=args.repetitions,
                     model_path=args.model, dim=args.dim)
    reports = run_timing(spec, n_clusters=args.n_clusters)
    if args.save:
        from pathlib import Path
        out = Path(args.save)
        out.mkdir(parents=True, exist_ok=True)
        for i, r in enumerate(reports):
            r.save(out / f"{r.method}_{i}.json")
    print(format_table(reports, markdown=args.markdown))


if __name__ == "__main__":
    main()
