"""Command line entry point: ``enclosure {run,sweep,validate,emit-reference}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .geometry import ConfigurationError
from .runner import (EXIT_CONFIG, EXIT_OK, emit_reference, load_config, run_experiment,
                     sweep)


def _parse_values(text: str) -> list:
    """``0.25,0.5,2`` or a JSON list."""
    text = text.strip()
    if not text:
        return []
    if text.startswith("["):
        return json.loads(text)
    out = []
    for item in text.split(","):
        item = item.strip()
        try:
            out.append(int(item))
        except ValueError:
            try:
                out.append(float(item))
            except ValueError:
                out.append(item)
    return out


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="enclosure", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out=True):
        sp.add_argument("--config", required=True, help="experiment config (JSON)")
        if out:
            sp.add_argument("--out", help="output directory (overrides config 'output')")
        sp.add_argument("--tau-min", type=float)
        sp.add_argument("--tau-max", type=float)
        sp.add_argument("--tau-count", type=int)

    common(sub.add_parser("run", help="run one experiment"))
    sw = sub.add_parser("sweep", help="run a config once per parameter value")
    common(sw)
    sw.add_argument("--param", required=True, help="dotted config path, e.g. scene.gamma")
    sw.add_argument("--values", required=True, help="comma list or JSON list of values")
    sw.add_argument("--workers", type=int, default=1)
    common(sub.add_parser("validate", help="check a config without running it"), out=False)
    common(sub.add_parser("emit-reference", help="closed-form 1D reference curve"))
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    overrides = {"tau_min": args.tau_min, "tau_max": args.tau_max,
                 "tau_count": args.tau_count, "out": getattr(args, "out", None)}
    try:
        cfg = load_config(args.config, overrides)
        if args.command == "validate":
            print(f"{args.config}: valid; minimum observation time "
                  f"{cfg.min_observation_time:.6g}, T = {cfg.final_time:.6g}")
            return EXIT_OK
        if args.command == "emit-reference":
            print(emit_reference(cfg, args.out or cfg.output or f"runs/{cfg.name}"))
            return EXIT_OK
        if args.command == "sweep":
            out = args.out or cfg.output or f"runs/{cfg.name}-sweep"
            rows = sweep(cfg.raw, args.param, _parse_values(args.values), out,
                         workers=args.workers, overrides=overrides)
            for row in rows:
                print(json.dumps(row, sort_keys=True, default=str))
            return EXIT_OK
        art = run_experiment(cfg)
    except ConfigurationError as exc:
        print(f"config invalid: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    r = art.report
    if r is None:
        print(f"{cfg.name}: {art.status}: {art.error}", file=sys.stderr)
    else:
        d = "n/a" if r.distance is None else f"{r.distance:.4f}"
        extra = ""
        if r.gamma is not None:
            extra = f" gamma={r.gamma:.4f} beta={r.beta:.4f}"
        print(f"{cfg.name}: status={art.status} distance={d} sign={r.sign_label}{extra}")
        for note in r.notes:
            print(f"  note: {note}")
    return art.exit_code


if __name__ == "__main__":
    sys.exit(main())
