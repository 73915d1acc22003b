"""Command-line entry point.

Subcommands: ``run`` (full scenario from a config file), ``verify`` (one
suite on one system with defaults), ``oracle`` (random-digraph agreement
sweep), ``report`` (re-emit a saved report).  Exit codes: 0 all pass,
1 any fail, 2 configuration error, 3 resolution insufficient anywhere.
"""
from __future__ import annotations

import argparse
import math
import sys

from ..systems import ConfigurationError, builtin
from .config import KNOWN_SUITES, load_scenario, scenario_from_dict
from .report import emit_report, load_report, render_text
from .suites import random_digraph_oracle, run_scenario, _digraph_engine_vs_oracle


def _default_config(system: str, suite: str, grid_n: int, delta: float,
                    seed: int) -> dict:
    if system == "digraph":
        return {"name": "digraph", "seed": seed,
                "system": {"digraph": {"nodes": 12, "density": 0.2,
                                       "seed": seed, "count": 50}},
                "suites": [suite]}
    f = builtin(system, _default_params(system))
    kind = {"any": "circle"}.get(f.domain_kind, f.domain_kind)
    doc = {
        "name": system,
        "seed": seed,
        "system": {"builtin": system, "params": list(_default_params(system))},
        "grid": {"kind": kind, "resolutions": [max(2, grid_n // 2), grid_n]},
        "deltas": [delta],
        "epsilons": [0.05, 0.01],
        "suites": [suite],
    }
    if kind == "circle":
        doc["regions"] = {"U": {"kind": "arc", "lo": -0.3,
                                "hi": math.pi + 0.3}}
    elif kind == "interval":
        doc["regions"] = {"U": {"kind": "box", "lo": 0.0, "hi": 0.5}}
    return doc


def _default_params(system: str) -> tuple:
    return {"ns_circle": (0.5,), "ms4_circle": (0.3,),
            "rotation_circle": (0.7,)}.get(system, ())


def _finish(report, out_dir: str, quiet: bool = False) -> int:
    emit_report(report, ("text", "csv"), out_dir)
    if not quiet:
        sys.stdout.write(render_text(report))
    return report.exit_code()


def main(argv=None) -> int:
    p = argparse.ArgumentParser(prog="chainrec")
    sub = p.add_subparsers(dest="cmd", required=True)

    pr = sub.add_parser("run", help="run a scenario config file")
    pr.add_argument("config")
    pr.add_argument("--quiet", action="store_true")

    pv = sub.add_parser("verify", help="run one suite with default settings")
    pv.add_argument("suite", choices=KNOWN_SUITES)
    pv.add_argument("--system", required=True)
    pv.add_argument("--grid", type=int, default=360)
    pv.add_argument("--delta", type=float, default=1.0,
                    help="delta in cell-diameter units")
    pv.add_argument("--seed", type=int, default=0)
    pv.add_argument("--out", default="out")
    pv.add_argument("--quiet", action="store_true")

    po = sub.add_parser("oracle", help="random-digraph agreement sweep")
    po.add_argument("--nodes", type=int, default=12)
    po.add_argument("--density", type=float, default=0.2)
    po.add_argument("--seeds", type=int, default=100)

    pp = sub.add_parser("report", help="re-emit a saved report")
    pp.add_argument("--format", choices=("csv", "text"), default="text")
    pp.add_argument("--out", dest="out", default="out")
    pp.add_argument("--from", dest="src", default="out/report.json")

    args = p.parse_args(argv)
    try:
        if args.cmd == "run":
            scn = load_scenario(args.config)
            return _finish(run_scenario(scn), scn.out_dir, args.quiet)

        if args.cmd == "verify":
            doc = _default_config(args.system, args.suite, args.grid,
                                  args.delta, args.seed)
            doc["out_dir"] = args.out
            scn = scenario_from_dict(doc)
            return _finish(run_scenario(scn), scn.out_dir, args.quiet)

        if args.cmd == "oracle":
            if not 1 <= args.nodes <= 16:
                raise ConfigurationError("--nodes must be in [1, 16]")
            bad = 0
            for s in range(args.seeds):
                oracle = random_digraph_oracle(args.nodes, args.density, s)
                res = _digraph_engine_vs_oracle(oracle)
                ok = (not res["mismatches"]
                      and res["dichotomy_agree"] == res["dichotomy_total"])
                if not ok:
                    bad += 1
                    print(f"seed {s}: MISMATCH {res['mismatches']}")
            print(f"{args.seeds - bad}/{args.seeds} digraphs agree "
                  f"(n={args.nodes}, density={args.density})")
            return 0 if bad == 0 else 1

        if args.cmd == "report":
            rep = load_report(args.src)
            fmts = ("text",) if args.format == "text" else ("csv",)
            for path in emit_report(rep, fmts, args.out):
                print(path)
            return rep.exit_code()
    except ConfigurationError as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    return 2


if __name__ == "__main__":
    sys.exit(main())
