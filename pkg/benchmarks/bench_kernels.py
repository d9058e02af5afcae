#!/usr/bin/env python3
"""Compare the numba and numpy convolution backends on a full training step.

Example:
    python3 benchmarks/bench_kernels.py --batch 64 --iters 20
"""

import argparse

from cir_ranging.nn.benchmark import run_benchmark


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--batch", type=int, default=64)
    parser.add_argument("--iters", type=int, default=10)
    parser.add_argument("--rows", type=int, default=40)
    parser.add_argument("--cols", type=int, default=64)
    args = parser.parse_args()
    run_benchmark(batch=args.batch, iters=args.iters, rows=args.rows, cols=args.cols)


if __name__ == "__main__":
    main()
