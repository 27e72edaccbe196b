"""Command line: ``markovlab run|suite|verdict|compare``.

Exit codes: 0 ok (a DISCREPANCY finding still exits 0), 1 usage or
configuration error, 2 numeric failure or a failed suite row.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .config import DEFAULT_GRIDS, VARIANT_CHOICES, config_from_dict, dump_config, parse_assignment
from .errors import ConfigError, MarkovLabError
from .evolution import _fmt, read_trajectory_csv
from .runner import OUT_ENV, output_root, run, suite, suite_table, write_suite

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _add_run_flags(p):
    p.add_argument("config", nargs="?", help="YAML run configuration")
    p.add_argument("--model", help="model tag (overrides the file)")
    p.add_argument("--t-end", type=float)
    p.add_argument("--n-points", type=int)
    p.add_argument("--path", action="append", dest="paths",
                   help="oracle, closedform or zassenhaus:K (repeatable)")
    p.add_argument("--output", help=f"output directory (relative paths go under ${OUT_ENV})")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="model parameter")
    p.add_argument("--variant", action="append", default=[], metavar="KEY=VALUE",
                   help=f"closed-form / Zassenhaus variant: {', '.join(VARIANT_CHOICES)}")
    p.add_argument("--tol", type=float, help="closed-form vs oracle tolerance")
    p.add_argument("--print-config", action="store_true", help="print the resolved config and exit")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="markovlab", description="Reduced dynamics of open quantum system models.")
    sub = ap.add_subparsers(dest="verb", required=True, parser_class=_Parser)
    _add_run_flags(sub.add_parser("run", help="run one scenario and write artifacts"))
    _add_run_flags(sub.add_parser("verdict", help="print the Markovianity and coherence verdict"))
    s = sub.add_parser("suite", help="run the six-row verdict suite")
    s.add_argument("--set", action="append", default=[], metavar="MODEL.KEY=VALUE")
    s.add_argument("--output", help=f"output directory (relative paths go under ${OUT_ENV})")
    c = sub.add_parser("compare", help="per-time max |Δ| between two trajectory CSVs")
    c.add_argument("a")
    c.add_argument("b")
    c.add_argument("--out", help="write the comparison CSV here")
    return ap


def resolve_config(args):
    data = {}
    if args.config:
        import yaml

        try:
            data = yaml.safe_load(Path(args.config).read_text()) or {}
        except OSError as exc:
            raise ConfigError(f"cannot read {args.config}: {exc}") from None
        except yaml.YAMLError as exc:
            raise ConfigError(f"invalid YAML: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("configuration must be a mapping")
    if args.model:
        if data.get("model") not in (None, args.model):
            data.pop("params", None)
        data["model"] = args.model
    if "model" not in data:
        raise ConfigError("no model given (config file or --model)")
    time = dict(data.get("time") or {})
    if args.t_end is not None:
        time["t_end"] = args.t_end
    if args.n_points is not None:
        time["n_points"] = args.n_points
    data["time"] = time
    if args.paths:
        data["paths"] = args.paths
    if args.output:
        data["output"] = args.output
    params = dict(data.get("params") or {})
    for a in args.set:
        k, v = parse_assignment(a)
        params[k] = v
    data["params"] = params
    variants = dict(data.get("variants") or {})
    for a in args.variant:
        k, v = parse_assignment(a)
        variants[k] = v
    data["variants"] = variants
    if args.tol is not None:
        data.setdefault("tolerances", {})
        data["tolerances"] = {**(data["tolerances"] or {}), "closedform": args.tol}
    return config_from_dict(data)


def _cmd_run(args) -> int:
    cfg = resolve_config(args)
    if args.print_config:
        print(dump_config(cfg), end="")
        return EXIT_OK
    res = run(cfg)
    print(f"wrote {len(res.files)} files to {res.outdir}")
    print(f"verdict: {res.verdict['verdict']}; coherence: {res.verdict['coherence']['classification']}")
    if res.flagged:
        print(f"DISCREPANCY: closed form vs oracle max |Δ| = {res.discrepancy['max_deviation']:.3e} "
              f"(tolerance {res.discrepancy['tolerance']:g})")
    return EXIT_OK


def _cmd_verdict(args) -> int:
    from .diagnostics import markovianity_verdict
    from .models import build
    from .runner import coherence_record, compute_paths

    cfg = resolve_config(args)
    if args.print_config:
        print(dump_config(cfg), end="")
        return EXIT_OK
    model = build(cfg.model, cfg.params)
    _, trajs, _, _ = compute_paths(cfg.__class__(**{**cfg.__dict__, "paths": ("oracle",)}), model)
    v = markovianity_verdict(model, cfg.times if cfg.model in ("model4b", "model5") else None)
    out = {"model": cfg.model, "commutator": v["commutator"], "coherence": coherence_record(trajs["oracle"]),
           "verdict": v["verdict"]}
    print(json.dumps(out, indent=2, default=_jsonable))
    return EXIT_OK


def _jsonable(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, complex):
        return [o.real, o.imag]
    raise TypeError(type(o).__name__)


def _cmd_suite(args) -> int:
    overrides = {}
    for a in args.set:
        k, v = parse_assignment(a)
        if "." not in k:
            raise ConfigError(f"suite overrides are MODEL.KEY=VALUE, got {a!r}")
        tag, key = k.split(".", 1)
        if tag not in DEFAULT_GRIDS:
            raise ConfigError(f"unknown model {tag!r}")
        overrides.setdefault(tag, {})[key] = v
    rows = suite(overrides)
    outdir = Path(args.output) if args.output else output_root() / "suite"
    if args.output and not outdir.is_absolute():
        outdir = output_root() / outdir
    write_suite(rows, outdir)
    print(suite_table(rows), end="")
    return EXIT_OK if all(r["passed"] for r in rows) else EXIT_NUMERIC


def _cmd_compare(args) -> int:
    try:
        tra, _ = read_trajectory_csv(args.a)
        trb, _ = read_trajectory_csv(args.b)
    except (OSError, ValueError, KeyError, IndexError, MarkovLabError) as exc:
        raise ConfigError(f"cannot read trajectories: {exc}") from None
    ta, sa, tb, sb = tra.times, tra.states, trb.times, trb.states
    if ta.shape != tb.shape or not np.allclose(ta, tb, rtol=0, atol=1e-12) or sa.shape != sb.shape:
        raise ConfigError("trajectories have different grids or dimensions")
    d = np.abs(sa - sb).max(axis=(1, 2))
    lines = ["t,maxabs"] + [f"{_fmt(t)},{_fmt(x)}" for t, x in zip(ta, d)]
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    print(f"max |Δ| = {d.max():.6e} at t = {ta[int(np.argmax(d))]:g}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    handlers = {"run": _cmd_run, "verdict": _cmd_verdict, "suite": _cmd_suite, "compare": _cmd_compare}
    try:
        return handlers[args.verb](args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (MarkovLabError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numeric failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
