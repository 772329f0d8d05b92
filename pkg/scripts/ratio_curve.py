"""Reconstruction F1 over the 0.1%-1.1% ratio grid for each variant.

Prints CSV rows: variant, seed, ratio, f1, mirroring the reconstruction figure.
"""
import argparse
import sys

from denne.eval import DEFAULT_RATIOS
from denne.experiments import partition_benchmark, reconstruction_run
from denne.model import ModelConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--variants", nargs="+", default=["frozen", "basic", "com", "deg", "adap", "com+deg"])
    ap.add_argument("--nodes", type=int, default=256)
    ap.add_argument("--noise", type=float, default=0.05)
    ap.add_argument("--seeds", type=int, default=5)
    args = ap.parse_args()

    sys.stdout.write("variant,seed,ratio,f1\n")
    for seed in range(args.seeds):
        bench = partition_benchmark(seed, n=args.nodes, add_ratio=args.noise)
        for name in args.variants:
            variant = "basic" if name == "frozen" else name
            cfg = ModelConfig.for_variant(variant, seed=seed, freeze_noise=name == "frozen")
            f1s, _ = reconstruction_run(cfg, bench, ratios=DEFAULT_RATIOS)
            for r, f in zip(DEFAULT_RATIOS, f1s):
                sys.stdout.write(f"{name},{seed},{r},{f:.6f}\n")
            sys.stdout.flush()


if __name__ == "__main__":
    main()
