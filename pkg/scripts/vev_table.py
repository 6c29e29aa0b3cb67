"""Print vacuum expectation values for every exponent vector up to a size.

Each row also carries the number of Wick contractions and checks the three
routes (star chain, graph matrices, contraction enumeration) against each other.
"""

import argparse
import itertools

from renorm import fields_hopf as fh


def main() -> None:
    parser = argparse.ArgumentParser(description="VEV table")
    parser.add_argument("--vertices", type=int, default=3)
    parser.add_argument("--max-power", type=int, default=3)
    args = parser.parse_args()

    print("p,contractions,agree,amp")
    for n in range(2, args.vertices + 1):
        for p in itertools.product(range(1, args.max_power + 1), repeat=n):
            if sum(p) % 2:
                continue
            routes = [fh.vev_by_star_chain(p), fh.vev_by_graphs(p), fh.vev_by_contraction(p)]
            agree = all(r == routes[0] for r in routes)
            print(f'"{",".join(map(str, p))}",{fh.contraction_count(p)},{agree},"{routes[0]}"')


if __name__ == "__main__":
    main()
