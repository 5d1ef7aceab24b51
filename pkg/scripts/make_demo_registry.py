"""Write the seeded demo registry (datasets, manifests, model specs) to a directory.

    python3 scripts/make_demo_registry.py demo-registry --seed 0 --drift-shift 5
"""
import argparse

from atml_ml.synthetic import write_demo_registry


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("root")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--drift-shift", type=float, default=0.0, help="mean shift of the current drift sample, in sigmas")
    args = parser.parse_args()
    root = write_demo_registry(args.root, seed=args.seed, drift_shift=args.drift_shift)
    print(f"wrote demo registry to {root}")


if __name__ == "__main__":
    main()
