"""Reconstruction F1 against the noise ratio for each variant and the frozen-noise baseline.

Scaled version of the synthetic denoising experiment: partition (or geometric)
graphs at the published pair density, uniform added noise, F1 at 1% of pairs.
Prints CSV rows: graph, noise, variant, seed, f1, mean_abs_eps.
"""
import argparse
import sys

from denne.experiments import geometric_benchmark, partition_benchmark, reconstruction_run
from denne.model import ModelConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--graph", choices=("partition", "geometric"), default="partition")
    ap.add_argument("--nodes", type=int, default=256)
    ap.add_argument("--noise", type=float, nargs="+", default=[0.0, 0.05, 0.1, 0.2, 0.3])
    ap.add_argument("--variants", nargs="+", default=["frozen", "basic", "com", "deg", "adap"])
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--ratio", type=float, default=0.01)
    ap.add_argument("--alpha-e", type=float, default=50.0)
    args = ap.parse_args()

    out = sys.stdout
    out.write("graph,noise,variant,seed,f1,mean_abs_eps\n")
    for noise in args.noise:
        for seed in range(args.seeds):
            if args.graph == "partition":
                bench = partition_benchmark(seed, n=args.nodes, add_ratio=noise)
            else:
                bench = geometric_benchmark(seed, n=args.nodes, add_ratio=noise)
            for name in args.variants:
                if name in ("com", "com+deg") and bench.groups is None:
                    continue
                variant = "basic" if name == "frozen" else name
                cfg = ModelConfig.for_variant(variant, seed=seed, alpha_e=args.alpha_e, freeze_noise=name == "frozen")
                (f1,), eps = reconstruction_run(cfg, bench, ratios=(args.ratio,))
                out.write(f"{args.graph},{noise},{name},{seed},{f1:.6f},{eps:.6g}\n")
                out.flush()


if __name__ == "__main__":
    main()
