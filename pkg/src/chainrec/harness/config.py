"""Scenario configuration: a single YAML file describing the system, the
grid sweep, the delta/epsilon ladders, named regions, and the suite list.

Schema (all keys at top level unless noted):

    name:     str                       scenario label (default: system name)
    seed:     int                       master seed (default 0)
    out_dir:  str                       report output directory (default "out";
                                        overridable by $CHAINREC_OUT only)
    system:
      builtin: str                      one of the built-in map names
      params:  [float, ...]             map parameters (optional)
      # -- or --
      digraph: {nodes: int, density: float, seed: int}
    grid:
      kind:        circle|torus2|interval
      resolutions: [int, ...]           strictly increasing
    deltas:   [float, ...]              in cell-diameter units, strictly
                                        decreasing
    epsilons: [float, ...]              tolerances in space units
    regions:                            named region specs (see region_cells)
      <name>: {kind: arc|box|ball|cells, ...}
    lambda_region: str                  region name for the transitive-set
                                        suite (default: whole space)
    trapping_regions: [str, ...]        region names used as trapping-region
                                        candidates (default: all regions)
    suites:   [str, ...]                subset of the known suite names
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field

import yaml

from ..systems import ConfigurationError

KNOWN_SUITES = ("components", "transitive_interior", "boundary_stability",
                "attractor_boundaries", "negative_controls", "refinement",
                "digraph_oracle")

GRID_KINDS = ("circle", "torus2", "interval")


@dataclass
class Scenario:
    name: str
    system: dict
    grid: dict
    deltas: list = field(default_factory=lambda: [1.0])
    epsilons: list = field(default_factory=lambda: [0.01])
    regions: dict = field(default_factory=dict)
    lambda_region: str | None = None
    trapping_regions: list | None = None
    suites: list = field(default_factory=lambda: ["components"])
    seed: int = 0
    out_dir: str = "out"
    raw: dict | None = None


def _fail(field_path: str, msg: str):
    raise ConfigurationError(f"config field {field_path!r}: {msg}")


def _require(cond, field_path: str, msg: str):
    if not cond:
        _fail(field_path, msg)


def scenario_from_dict(doc: dict) -> Scenario:
    """Validate a parsed config document and build a Scenario."""
    if not isinstance(doc, dict):
        raise ConfigurationError("config root must be a mapping")
    unknown = set(doc) - {"name", "seed", "out_dir", "system", "grid",
                          "deltas", "epsilons", "regions", "lambda_region",
                          "trapping_regions", "suites"}
    if unknown:
        _fail(sorted(unknown)[0], "unknown key")

    system = doc.get("system")
    _require(isinstance(system, dict), "system", "required mapping")
    if "digraph" in system:
        dg = system["digraph"]
        _require(isinstance(dg, dict), "system.digraph", "must be a mapping")
        n = dg.get("nodes")
        _require(isinstance(n, int) and 1 <= n <= 16, "system.digraph.nodes",
                 "integer in [1, 16] (oracle does full reachability closure)")
        p = dg.get("density")
        _require(isinstance(p, (int, float)) and 0.0 <= p <= 1.0,
                 "system.digraph.density", "number in [0, 1]")
        _require(isinstance(dg.get("seed", 0), int), "system.digraph.seed",
                 "must be an integer")
    else:
        _require(isinstance(system.get("builtin"), str), "system.builtin",
                 "required (or supply system.digraph)")
        params = system.get("params", [])
        _require(isinstance(params, (list, tuple)), "system.params",
                 "must be a list of numbers")

    grid = doc.get("grid", {})
    if "digraph" not in system:
        _require(isinstance(grid, dict), "grid", "required mapping")
        _require(grid.get("kind") in GRID_KINDS, "grid.kind",
                 f"one of {GRID_KINDS}")
        res = grid.get("resolutions")
        _require(isinstance(res, list) and res and
                 all(isinstance(n, int) and n >= 2 for n in res),
                 "grid.resolutions", "non-empty list of integers >= 2")
        _require(all(b > a for a, b in zip(res, res[1:])),
                 "grid.resolutions", "must be strictly increasing")

    deltas = doc.get("deltas", [1.0])
    _require(isinstance(deltas, list) and deltas and
             all(isinstance(d, (int, float)) and d > 0 for d in deltas),
             "deltas", "non-empty list of positive numbers")
    _require(all(b < a for a, b in zip(deltas, deltas[1:])),
             "deltas", "must be strictly decreasing")

    epsilons = doc.get("epsilons", [0.01])
    _require(isinstance(epsilons, list) and epsilons and
             all(isinstance(e, (int, float)) and e > 0 for e in epsilons),
             "epsilons", "non-empty list of positive numbers")

    regions = doc.get("regions", {})
    _require(isinstance(regions, dict), "regions", "must be a mapping")
    for rname, spec in regions.items():
        _require(isinstance(spec, dict) and "kind" in spec,
                 f"regions.{rname}", "must be a mapping with a 'kind' key")
        _require(spec["kind"] in ("arc", "box", "ball", "cells"),
                 f"regions.{rname}.kind", "one of arc|box|ball|cells")

    lam = doc.get("lambda_region")
    if lam is not None:
        _require(lam in regions, "lambda_region",
                 f"references unknown region {lam!r}")
    traps = doc.get("trapping_regions")
    if traps is not None:
        _require(isinstance(traps, list), "trapping_regions", "must be a list")
        for t in traps:
            _require(t in regions, "trapping_regions",
                     f"references unknown region {t!r}")

    suites = doc.get("suites", ["components"])
    _require(isinstance(suites, list) and suites, "suites", "non-empty list")
    for s in suites:
        _require(s in KNOWN_SUITES, "suites", f"unknown suite {s!r}; "
                 f"known: {KNOWN_SUITES}")

    seed = doc.get("seed", 0)
    _require(isinstance(seed, int), "seed", "must be an integer")

    out_dir = os.environ.get("CHAINREC_OUT") or doc.get("out_dir", "out")
    _require(isinstance(out_dir, str), "out_dir", "must be a string")

    name = doc.get("name") or system.get("builtin", "digraph")
    return Scenario(name=str(name), system=system, grid=grid,
                    deltas=[float(d) for d in deltas],
                    epsilons=[float(e) for e in epsilons],
                    regions=regions, lambda_region=lam,
                    trapping_regions=traps, suites=list(suites),
                    seed=seed, out_dir=out_dir, raw=doc)


def load_scenario(path: str) -> Scenario:
    try:
        with open(path) as fh:
            doc = yaml.safe_load(fh)
    except yaml.YAMLError as e:
        raise ConfigurationError(f"cannot parse {path}: {e}") from e
    except OSError as e:
        raise ConfigurationError(f"cannot read {path}: {e}") from e
    if doc is None:
        raise ConfigurationError(f"{path} is empty")
    return scenario_from_dict(doc)
