"""
A three-level delivery hierarchy over real-looking cities
=========================================================

Loads the bundled 1000-city sample, then builds trees at three scales:
one global tree from a pole to every national center, one tree per
country down to its regional centers, and one tree per region down to
the cities themselves.  Every branch point is kept on the sphere and
leaf demands are population shares.
"""

import argparse
from pathlib import Path

from branchflow import (
    BotParams,
    bot_cost,
    load_cities_csv,
    render_geojson,
    sample_cities_path,
    santa_pipeline,
)


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[1])
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--cities", type=Path, default=None,
                    help="cities CSV (default: bundled sample)")
    ap.add_argument("--pole-lat", type=float, default=90.0)
    ap.add_argument("--pole-lon", type=float, default=0.0)
    ap.add_argument("--out", type=Path, default=None, help="write the network as GeoJSON")
    args = ap.parse_args()

    path = args.cities if args.cities is not None else sample_cities_path()
    report = load_cities_csv(path)
    print(report.summary())

    network = santa_pipeline(
        report.cities,
        (args.pole_lat, args.pole_lon),
        BotParams(alpha=0.5, seed=args.seed),
    )

    entries = list(network.all_trees())
    by_level = {"global": 0, "country": 0, "regional": 0}
    for level, _, _ in entries:
        by_level[level] += 1
    print(f"{len(network.countries)} countries, {network.n_trees} trees "
          f"({by_level['global']} global, {by_level['country']} country, "
          f"{by_level['regional']} regional)")

    # the three countries carrying the largest population shares
    ranked = sorted(zip(network.shares, network.countries), reverse=True)
    print("\nlargest shares of the global flow:")
    for share, name in ranked[:3]:
        k = len(network.regional_trees[network.countries.index(name)])
        print(f"  {name:<20s} {share:.1%} of mass, {k} regions")

    total = sum(bot_cost(tree, 0.5) for _, _, tree in entries)
    print(f"\ntotal network cost {total:.4f}")

    if args.out is not None:
        geo = render_geojson(
            [tree for _, _, tree in entries], [level for level, _, _ in entries]
        )
        args.out.write_text(geo, encoding="utf-8")
        print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
