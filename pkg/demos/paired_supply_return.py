"""
Paired supply and return trees over shared endpoints
====================================================

Builds two trees over the same source and targets, like an artery and
a vein serving one tissue.  A small frozen random displacement applied
to every branch point keeps the two layouts from collapsing onto each
other, while the endpoints stay exactly shared.
"""

import argparse
from pathlib import Path

import numpy as np

from branchflow import BotParams, OneToManyProblem, bot_cost, dual_network, render_svg
from branchflow.seeding import substream


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[1])
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--n-targets", type=int, default=200)
    ap.add_argument("--shift", type=float, default=0.01, help="branch displacement norm")
    ap.add_argument("--out", type=Path, default=None, help="write both trees in one SVG")
    args = ap.parse_args()

    targets = substream(args.seed, "demo-dual", "positions").uniform(
        -1.0, 1.0, (args.n_targets, 2)
    )
    w = substream(args.seed, "demo-dual", "areas").random(args.n_targets) + 0.05
    problem = OneToManyProblem(np.zeros(2), targets, w / w.sum())

    params = BotParams(alpha=0.5, shift_norm=args.shift, shift_delta=0.01, seed=args.seed)
    artery, vein = dual_network(problem, params)

    print(f"{args.n_targets} shared endpoints, displacement norm {args.shift}")
    print(f"artery cost {bot_cost(artery, 0.5):.6f}, "
          f"{int(np.sum(artery.kind == 'branch'))} branches")
    print(f"vein cost   {bot_cost(vein, 0.5):.6f}, "
          f"{int(np.sum(vein.kind == 'branch'))} branches")

    n = args.n_targets
    shared = np.array_equal(artery.coords[1:n + 1], vein.coords[1:n + 1])
    print(f"endpoint coordinates identical in both trees: {shared}")

    if args.out is not None:
        args.out.write_text(render_svg([artery, vein], alpha=0.5), encoding="utf-8")
        print(f"\nwrote {args.out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
