"""Probability that one embedded coordinate stays inside the box, for a range of d.

    python3 scripts/bound_probability.py --dims 1 2 4 10 20 --samples 1000000
"""

import argparse

from s3bo.embedding import mc_bound_probability


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--dims", type=int, nargs="+", default=[1, 2, 3, 4, 5, 10, 20, 50])
    p.add_argument("--samples", type=int, default=10**6)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()

    print("d   scaled/sqrt_d  scaled/unit  unscaled/sqrt_d")
    for d in args.dims:
        row = [mc_bound_probability(d, args.samples, args.seed, scaled=s, interval=i)
               for s, i in ((True, "sqrt_d"), (True, "unit"), (False, "sqrt_d"))]
        print(f"{d:<3d} {row[0]:13.4f}  {row[1]:11.4f}  {row[2]:15.4f}")


if __name__ == "__main__":
    main()
