"""Regenerate the bundled synthetic cities dataset.

Writes src/branchflow/data/cities_sample.csv: 1000 cities in 20 invented
countries, each country a compact cluster of at least 3 cities with
log-normal populations.  The extra elevation column is deliberate; the
loader must ignore columns it does not know.  Fully deterministic.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

N_CITIES = 1000
SEED = 20240817

COUNTRIES = [
    "Aravelle", "Borvia", "Caldria", "Dorsania", "Elvenia",
    "Fjordane", "Galvora", "Hestland", "Ithria", "Jundara",
    "Kesteron", "Lumavia", "Morvania", "Nordyssa", "Ostrelia",
    "Penrovia", "Qirestan", "Rovandia", "Sulmara", "Tervenia",
]


def main():
    rng = np.random.default_rng(SEED)
    k = len(COUNTRIES)

    sizes = np.full(k, 3)
    weights = rng.dirichlet(np.full(k, 1.5))
    sizes = sizes + rng.multinomial(N_CITIES - sizes.sum(), weights)
    assert sizes.sum() == N_CITIES

    centers_lat = rng.uniform(-60.0, 70.0, k)
    centers_lon = rng.uniform(-180.0, 180.0, k)
    spreads = rng.uniform(1.5, 5.0, k)

    out = Path(__file__).resolve().parents[1] / "src" / "branchflow" / "data"
    out.mkdir(parents=True, exist_ok=True)
    path = out / "cities_sample.csv"
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["city", "country", "lat", "lng", "population", "elevation"])
        for c, country in enumerate(COUNTRIES):
            lat = np.clip(centers_lat[c] + rng.normal(0, spreads[c], sizes[c]), -89.0, 89.0)
            lon = centers_lon[c] + rng.normal(0, spreads[c], sizes[c])
            pop = np.maximum(np.round(rng.lognormal(11.0, 1.2, sizes[c])), 100).astype(np.int64)
            elev = np.round(rng.uniform(0, 2500, sizes[c]), 1)
            for i in range(sizes[c]):
                writer.writerow(
                    [f"{country} {i + 1:03d}", country,
                     f"{lat[i]:.6f}", f"{lon[i]:.6f}", int(pop[i]), elev[i]]
                )
    print(f"wrote {path}")


if __name__ == "__main__":
    main()
