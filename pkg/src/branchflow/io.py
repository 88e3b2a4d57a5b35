"""File formats: network JSON, transport-plan JSON, and the cities CSV.

The network JSON layout is the package's bit-exact interchange contract:
an object with "nodes" (id, kind, coords), "edges" (from, to, area),
"alpha" and "cost", fields always in that order, nodes ordered by id and
edges by their "to" endpoint.  Writing the same tree twice yields
byte-identical text.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .core import (
    KINDS,
    KIND_SOURCE,
    KIND_TARGET,
    FlowTree,
    InputError,
    ParameterError,
    StructuralError,
    TransportInstance,
    TransportPlan,
    bot_cost,
    validate_tree,
)
from .ot import plan_cost


# ---------------------------------------------------------------------------
# network JSON


def network_to_json(tree: FlowTree, alpha: float, cost: float | None = None) -> str:
    """Serialize a validated flow tree to the network JSON contract."""
    report = validate_tree(tree)
    if not report.ok:
        raise StructuralError(f"cannot serialize invalid tree: {report.summary()}")
    if cost is None:
        cost = bot_cost(tree, alpha)
    nodes = [
        {"id": i, "kind": str(tree.kind[i]), "coords": [float(c) for c in tree.coords[i]]}
        for i in range(tree.n_nodes)
    ]
    edges = [
        {"from": int(tree.parent[i]), "to": i, "area": float(tree.area[i])}
        for i in range(tree.n_nodes)
        if tree.parent[i] >= 0
    ]
    doc = {"nodes": nodes, "edges": edges, "alpha": float(alpha), "cost": float(cost)}
    return json.dumps(doc, separators=(",", ":"))


@dataclass(frozen=True)
class NetworkDocument:
    tree: FlowTree
    alpha: float
    cost: float | None


def _require(cond: bool, message: str):
    if not cond:
        raise InputError(message)


def _as_number(value, message) -> float:
    # bool is an int subclass and must not pass as a number
    _require(isinstance(value, (int, float)) and not isinstance(value, bool), message)
    _require(math.isfinite(value), message)
    return float(value)


def network_from_json(text: str) -> NetworkDocument:
    """Parse network JSON back into a flow tree.

    Malformed documents raise InputError; well-formed documents that do
    not describe a valid single-source tree raise StructuralError.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"not valid JSON: {exc}") from None
    _require(isinstance(doc, dict), "network document must be a JSON object")
    for key in ("nodes", "edges", "alpha", "cost"):
        _require(key in doc, f"network document is missing the {key!r} field")
    _require(isinstance(doc["nodes"], list) and doc["nodes"], "nodes must be a nonempty array")
    _require(isinstance(doc["edges"], list), "edges must be an array")
    alpha = _as_number(doc["alpha"], "alpha must be a finite number")
    _require(0.0 <= alpha <= 1.0, f"alpha must lie in [0, 1], got {alpha}")
    cost = None if doc["cost"] is None else _as_number(doc["cost"], "cost must be a finite number")

    n = len(doc["nodes"])
    coords = None
    kind = np.empty(n, dtype="U6")
    seen = np.zeros(n, dtype=bool)
    for node in doc["nodes"]:
        _require(isinstance(node, dict), "each node must be an object")
        i = node.get("id")
        _require(type(i) is int and 0 <= i < n, f"node ids must cover 0..{n - 1}, got {i!r}")
        _require(not seen[i], f"duplicate node id {i}")
        seen[i] = True
        k = node.get("kind")
        _require(k in KINDS, f"node {i} has unknown kind {k!r}")
        kind[i] = k
        cs = node.get("coords")
        _require(isinstance(cs, list) and len(cs) in (2, 3), f"node {i} coords must be 2-D or 3-D")
        row = [_as_number(c, f"node {i} has a non-finite coordinate") for c in cs]
        if coords is None:
            coords = np.zeros((n, len(row)))
        _require(len(row) == coords.shape[1], "all nodes must share one dimension")
        coords[i] = row

    parent = np.full(n, -1, dtype=np.int64)
    area = np.zeros(n)
    has_edge = np.zeros(n, dtype=bool)
    for edge in doc["edges"]:
        _require(isinstance(edge, dict), "each edge must be an object")
        src, dst = edge.get("from"), edge.get("to")
        _require(type(src) is int and 0 <= src < n, f"edge 'from' must be a node id, got {src!r}")
        _require(type(dst) is int and 0 <= dst < n, f"edge 'to' must be a node id, got {dst!r}")
        if has_edge[dst]:
            raise StructuralError(f"node {dst} has two incoming edges")
        has_edge[dst] = True
        parent[dst] = src
        area[dst] = _as_number(edge["area"] if "area" in edge else None,
                               f"edge into {dst} needs a finite area")

    src_ids = np.flatnonzero(kind == KIND_SOURCE)
    for s in src_ids:
        kids = np.flatnonzero(parent == s)
        area[s] = float(area[kids].sum())

    tree = FlowTree(coords, kind, parent, area)
    report = validate_tree(tree)
    if not report.ok:
        raise StructuralError(f"document is not a valid flow tree: {report.summary()}")
    return NetworkDocument(tree, alpha, cost)


def plan_to_json(instance: TransportInstance, plan: TransportPlan, threshold: float = 0.0) -> str:
    """Debug view of a transport plan in the network JSON edge shape.

    Sources and targets become nodes, every above-threshold coupling entry
    a direct edge.  With several sources this is a forest, not a tree, so
    it is for inspection only and not readable by network_from_json.
    """
    m, n = instance.n_sources, instance.n_targets
    nodes = [
        {"id": i, "kind": KIND_SOURCE, "coords": [float(c) for c in instance.sources[i]]}
        for i in range(m)
    ] + [
        {"id": m + j, "kind": KIND_TARGET, "coords": [float(c) for c in instance.targets[j]]}
        for j in range(n)
    ]
    edges = [
        {"from": i, "to": m + j, "area": float(plan.gamma[i, j])}
        for i in range(m)
        for j in range(n)
        if plan.gamma[i, j] > threshold
    ]
    from .ot import cost_matrix

    cost = plan_cost(plan, cost_matrix(instance))
    doc = {"nodes": nodes, "edges": edges, "alpha": 1.0, "cost": cost}
    return json.dumps(doc, separators=(",", ":"))


# ---------------------------------------------------------------------------
# cities CSV

_CITY_ALIASES = {
    "city": ("city", "name"),
    "country": ("country",),
    "lat": ("lat", "latitude"),
    "lng": ("lng", "lon", "longitude"),
    "population": ("population", "pop"),
}


def normalize_lon(lon: float) -> float:
    """Wrap a longitude in degrees into (-180, 180]."""
    return -((180.0 - lon) % 360.0 - 180.0)


@dataclass(frozen=True)
class GeoCity:
    """A named, populated place; longitude is normalized to (-180, 180]."""

    name: str
    country: str
    lat: float
    lon: float
    population: float

    def __post_init__(self):
        lat, lon, pop = float(self.lat), float(self.lon), float(self.population)
        if not (math.isfinite(lat) and -90.0 <= lat <= 90.0):
            raise ParameterError(f"latitude must lie in [-90, 90], got {self.lat}")
        if not math.isfinite(lon):
            raise ParameterError("longitude must be finite")
        if not (math.isfinite(pop) and pop > 0):
            raise ParameterError(f"population must be positive, got {self.population}")
        object.__setattr__(self, "lat", lat)
        object.__setattr__(self, "lon", normalize_lon(lon))
        object.__setattr__(self, "population", pop)


@dataclass(frozen=True)
class CityLoadReport:
    cities: tuple
    n_rows: int
    dropped: dict

    @property
    def n_dropped(self) -> int:
        return sum(self.dropped.values())

    def summary(self) -> str:
        parts = [f"{len(self.cities)} cities loaded from {self.n_rows} rows"]
        for reason in sorted(self.dropped):
            parts.append(f"{self.dropped[reason]} dropped ({reason})")
        return ", ".join(parts)


def _parse_city_row(row: dict) -> tuple[GeoCity | None, str | None]:
    raw = {}
    for field in _CITY_ALIASES:
        value = row.get(field)
        if value is None or value.strip() == "":
            return None, f"missing-{field}"
        raw[field] = value.strip()
    try:
        lat = float(raw["lat"])
        lon = float(raw["lng"])
        pop = float(raw["population"])
    except ValueError:
        return None, "unparsable-number"
    if not (math.isfinite(lat) and math.isfinite(lon) and math.isfinite(pop)):
        return None, "unparsable-number"
    if not -90.0 <= lat <= 90.0:
        return None, "latitude-out-of-range"
    if pop <= 0:
        return None, "nonpositive-population"
    return GeoCity(raw["city"], raw["country"], lat, lon, pop), None


def load_cities_csv(path) -> CityLoadReport:
    """Load a cities CSV with columns city, country, lat, lng, population.

    Header names are case-insensitive and common aliases (name, lon,
    longitude, latitude, pop) are accepted; extra columns are ignored.
    Rows with missing fields, unparsable numbers, out-of-range latitudes
    or nonpositive populations are dropped and counted per reason.
    Missing files or missing required columns raise InputError.
    """
    path = Path(path)
    try:
        handle = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from None
    with handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise InputError(f"{path} is empty") from None

        lower = [h.strip().lower() for h in header]
        col_of: dict[str, int] = {}
        missing = []
        for field, aliases in _CITY_ALIASES.items():
            for alias in aliases:
                if alias in lower:
                    col_of[field] = lower.index(alias)
                    break
            else:
                missing.append(f"{field} (accepted: {', '.join(aliases)})")
        if missing:
            raise InputError(
                f"{path} is missing required columns: {'; '.join(missing)}; "
                f"found header {header!r}"
            )

        cities = []
        dropped: dict[str, int] = {}
        n_rows = 0
        width = max(col_of.values()) + 1
        for cells in reader:
            if not cells:
                continue
            n_rows += 1
            if len(cells) < width:
                dropped["short-row"] = dropped.get("short-row", 0) + 1
                continue
            record, reason = _parse_city_row({f: cells[c] for f, c in col_of.items()})
            if record is None:
                dropped[reason] = dropped.get(reason, 0) + 1
            else:
                cities.append(record)
    return CityLoadReport(tuple(cities), n_rows, dropped)


def sample_cities_path() -> Path:
    """Path of the bundled synthetic 1000-city sample dataset."""
    return Path(str(resources.files("branchflow") / "data" / "cities_sample.csv"))
