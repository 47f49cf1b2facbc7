"""Reduction ratio L_K / (D_n L_{K_{n+2}}) for the analytic bodies and random V-polytopes."""
import argparse
import csv
import sys
import time

from slicing_reduction.bodies import Cube, EuclideanBall, RegularSimplex, random_vpolytope
from slicing_reduction.verifier import CSV_COLUMNS, Theorem1Config, theorem1_verify


def bodies(dims, polytopes):
    for n in dims:
        yield f"cube{n}", Cube(n)
        yield f"ball{n}", EuclideanBall.of_volume(n)
        yield f"simplex{n}", RegularSimplex(n)
        for seed in range(polytopes):
            yield f"vpoly{n}_s{seed}", random_vpolytope(n, seed)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dims", type=int, nargs="+", default=[2, 3])
    ap.add_argument("--polytopes", type=int, default=5)
    ap.add_argument("--samples", type=int, default=50_000)
    ap.add_argument("--dirs", type=int)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(list(CSV_COLUMNS) + ["ratio_error", "backend", "seconds"])
    for name, body in bodies(args.dims, args.polytopes):
        cfg = Theorem1Config(directions=args.dirs, seed=args.seed, samples=args.samples, workers=args.workers)
        t0 = time.perf_counter()
        r = theorem1_verify(body, cfg, name)
        w.writerow(r.csv_row() + [r.ratio_error, r.backend, f"{time.perf_counter() - t0:.2f}"])
        sys.stdout.flush()


if __name__ == "__main__":
    main()
