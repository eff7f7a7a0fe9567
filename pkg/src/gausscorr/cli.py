"""Command-line interface.

Every command resolves its settings as defaults < ``--config`` JSON file <
explicit flags, echoes the resolved settings in the output header, and
writes floats with 17 significant digits. Exit status: 0 on success, 1 for
bad input, 2 for a numerically degenerate result; errors are also written to
stderr as one JSON object.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import re
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from .channels import FiniteChannel, enumerate_expectation, gaussian_as_channel, lemma2_check
from .errors import DegeneracyError, GausscorrError, PreconditionError
from .fmt import dumps, fmt
from .functions import CORPUS, as_function, label_of, parse_function
from .hermite import DEFAULT_NODES, DEFAULT_ORDER, gauss_hermite_rule, project, rule_for
from .ident import (
    default_order,
    identify_forward,
    identify_forward_oracle,
    identify_inverse,
    k2_difference,
    recover_scale,
)
from .inequality import ENGINES, corollary_check, lemma1_check, maxcorr_bound, parity_of
from .mehler import GaussianPairParams, cross_moment, cross_moment_quadrature
from .simulate import ChainConfig, read_dataset, run_chain, sample_bivariate, synth_noise, write_dataset

REPORT_COLUMNS = ("g1", "g2", "sigma", "rho", "engine", "lhs", "rhs", "slack", "equality")
SWEEP_COLUMNS = REPORT_COLUMNS + ("error",)

REQUIRED = object()


def _float(v):
    try:
        out = float(v)
    except (TypeError, ValueError):
        raise PreconditionError(f"expected a number, got {v!r}") from None
    if not math.isfinite(out):
        raise PreconditionError(f"expected a finite number, got {v!r}")
    return out


def _int(v):
    if isinstance(v, bool):
        raise PreconditionError(f"expected an integer, got {v!r}")
    try:
        f = float(v)
    except (TypeError, ValueError):
        raise PreconditionError(f"expected an integer, got {v!r}") from None
    if not f.is_integer():
        raise PreconditionError(f"expected an integer, got {v!r}")
    return int(f)


def _opt_int(v):
    return None if v is None else _int(v)


def _str(v):
    if not isinstance(v, str):
        raise PreconditionError(f"expected a string, got {v!r}")
    return v


def _opt_str(v):
    return None if v is None else _str(v)


def _func(v):
    v = _str(v)
    parse_function(v)  # fail early with a position
    return v


def _float_list(v):
    if isinstance(v, str):
        return [_float(s) for s in v.split(",") if s.strip()]
    if isinstance(v, (list, tuple)):
        return [_float(s) for s in v]
    return [_float(v)]


def _func_list(v):
    if isinstance(v, str):
        v = [v]
    return [_func(s) for s in v]


def _json_value(v):
    # a literal JSON value, a path to a JSON file, or a function description
    if not isinstance(v, str):
        return v
    s = v.strip()
    if s[:1] in "{[":
        try:
            return json.loads(s)
        except json.JSONDecodeError as exc:
            raise PreconditionError(f"invalid JSON: {exc}") from None
    if s.endswith(".json"):
        try:
            return json.loads(Path(s).read_text())
        except OSError as exc:
            raise PreconditionError(f"cannot read {s}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise PreconditionError(f"invalid JSON in {s}: {exc}") from None
    return s


def _choice(*options):
    def conv(v):
        v = _str(v)
        if v not in options:
            raise PreconditionError(f"expected one of {options}, got {v!r}")
        return v

    return conv


_ENGINE = _choice(*ENGINES)
_FORMAT = _choice("json", "csv")

SCHEMAS = {
    "project": {
        "g": (_func, REQUIRED),
        "sigma": (_float, 1.0),
        "order": (_int, DEFAULT_ORDER),
        "nodes": (_opt_int, None),
    },
    "xmoment": {
        "g1": (_func, REQUIRED),
        "g2": (_func, REQUIRED),
        "sigma": (_float, 1.0),
        "rho": (_float, REQUIRED),
        "engine": (_ENGINE, "series"),
        "order": (_int, 40),
        "nodes": (_int, DEFAULT_NODES),
        "samples": (_int, 1_000_000),
        "seed": (_int, 0),
    },
    "verify": {
        "g1": (_func, REQUIRED),
        "g2": (_func, REQUIRED),
        "sigma": (_float, 1.0),
        "rho": (_float, REQUIRED),
        "engine": (_ENGINE, "series"),
        "order": (_int, DEFAULT_ORDER),
        "nodes": (_int, DEFAULT_NODES),
        "samples": (_int, 100_000),
        "seed": (_int, 0),
    },
    "channel": {
        "channel": (_json_value, None),
        "g1": (_json_value, REQUIRED),
        "g2": (_json_value, REQUIRED),
        "sigma": (_float, None),
        "rho": (_float, None),
        "nodes": (_int, DEFAULT_NODES),
    },
    "simulate": {
        "f": (_func, REQUIRED),
        "sigma_x2": (_float, 1.0),
        "sigma_w2": (_float, 1.0),
        "samples": (_int, 100_000),
        "seed": (_int, 0),
        "chunks": (_int, 1),
    },
    "identify": {
        "method": (_choice("forward", "inverse", "oracle"), "forward"),
        "data": (_opt_str, None),
        "f": (_func, None),
        "sigma_x2": (_float, 1.0),
        "sigma_w2": (_float, 1.0),
        "samples": (_int, 100_000),
        "seed": (_int, 0),
        "chunks": (_int, 1),
        "order": (_opt_int, None),
        "degree": (_int, 3),
        "nodes": (_int, DEFAULT_NODES),
        "noise_seed": (_int, 1),
        "challengers": (_func_list, []),
    },
    "sweep": {
        "functions": (_func_list, list(CORPUS)),
        "sigmas": (_float_list, [1.0]),
        "rhos": (_float_list, [0.1, 0.3, 0.5, 0.7, 0.9]),
        "engine": (_ENGINE, "series"),
        "order": (_int, DEFAULT_ORDER),
        "nodes": (_int, DEFAULT_NODES),
        "samples": (_int, 100_000),
        "seed": (_int, 0),
        "jobs": (_int, 1),
    },
}

HELP = {
    "project": "Hermite coefficients of a function",
    "xmoment": "cross-moment E[g1(Z1) g2(Z2)] of a Gaussian pair",
    "verify": "check the squared-correlation inequality for one pair",
    "channel": "conditional-mean check on a finite or Gaussian channel",
    "simulate": "simulate y = f(x + w) and write the dataset",
    "identify": "identify the nonlinearity of a chain",
    "sweep": "inequality checks over a grid, one CSV row per cell",
}

_LIST_KEYS = {"challengers", "functions"}


class _Parser(argparse.ArgumentParser):
    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        # let lists such as "-0.5,0.5" through as values
        self._negative_number_matcher = re.compile(r"^-\.?\d")

    def error(self, message):
        raise PreconditionError(message)


def build_parser():
    parser = _Parser(prog="gausscorr", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", metavar="command", parser_class=_Parser)
    for name, schema in SCHEMAS.items():
        p = sub.add_parser(name, help=HELP[name], description=HELP[name])
        p.add_argument("--config", default=None, help="JSON file of settings; flags override it")
        p.add_argument("--out", default=None,
                       help="output path" + (" (dataset CSV, required)" if name == "simulate" else ""))
        p.add_argument("--format", default=argparse.SUPPRESS, help="json or csv")
        for key in schema:
            flag = "--" + key.replace("_", "-")
            if key in _LIST_KEYS:
                dest = "function" if key == "functions" else "challenger"
                p.add_argument("--" + dest, dest=key, action="append", default=argparse.SUPPRESS,
                               help="repeatable")
            else:
                p.add_argument(flag, dest=key, default=argparse.SUPPRESS)
    return parser


def resolve(command, file_settings, flags):
    """Merge defaults, config-file values and flags; convert and validate."""
    schema = SCHEMAS[command]
    allowed = set(schema) | {"format"}
    unknown = sorted(set(file_settings) - allowed)
    if unknown:
        raise PreconditionError(f"unknown setting(s) for {command}: {', '.join(unknown)}")
    raw = {k: d for k, (_, d) in schema.items()}
    raw["format"] = "csv" if command == "sweep" else "json"
    raw.update(file_settings)
    raw.update(flags)
    out = {}
    for key, (conv, _) in schema.items():
        v = raw[key]
        if v is REQUIRED:
            raise PreconditionError(f"missing required setting --{key.replace('_', '-')}")
        out[key] = v if v is None else conv(v)
    out["format"] = _FORMAT(raw["format"])
    return out


# -- commands ---------------------------------------------------------------

def cmd_project(cfg):
    g = parse_function(cfg["g"])
    rule = None
    if cfg["nodes"] is not None:
        rule = gauss_hermite_rule(cfg["nodes"]) if g.is_polynomial else rule_for(g, cfg["sigma"], cfg["nodes"])
    s = project(g, cfg["sigma"], cfg["order"], rule)
    rows = [[n, fmt(c)] for n, c in enumerate(s.coeffs)]
    return s.to_dict(), ("n", "coeff"), rows


def cmd_xmoment(cfg):
    g1, g2 = parse_function(cfg["g1"]), parse_function(cfg["g2"])
    p = GaussianPairParams(cfg["sigma"], cfg["rho"])
    stderr = 0.0
    if cfg["engine"] == "series":
        value = cross_moment(project(g1, p.sigma, cfg["order"]), project(g2, p.sigma, cfg["order"]), p.rho)
    elif cfg["engine"] == "quadrature":
        value = cross_moment_quadrature(g1, g2, p, cfg["nodes"])
    else:
        if cfg["samples"] < 2:
            raise PreconditionError("samples must be >= 2")
        z1, z2 = sample_bivariate(p, cfg["samples"], cfg["seed"])
        prod = np.asarray(g1(z1)) * np.asarray(g2(z2))
        value = float(prod.mean())
        stderr = float(prod.std(ddof=1) / math.sqrt(prod.size))
    result = {"value": float(value), "stderr": stderr}
    cols = ("g1", "g2", "sigma", "rho", "engine", "value", "stderr")
    row = [label_of(g1), label_of(g2), fmt(p.sigma), fmt(p.rho), cfg["engine"], fmt(value), fmt(stderr)]
    return result, cols, [row]


def _check(g1, g2, sigma, rho, cfg):
    kw = dict(order=cfg["order"], nodes=cfg["nodes"], samples=cfg["samples"], seed=cfg["seed"])
    p = GaussianPairParams(sigma, rho)
    if p.rho < 0:
        return replace(corollary_check(g1, g2, p, cfg["engine"], **kw), engine="corollary")
    return lemma1_check(g1, g2, p, cfg["engine"], **kw)


def _report_row(r):
    return [r.g1, r.g2, fmt(r.sigma), fmt(r.rho), r.engine, fmt(r.lhs), fmt(r.rhs),
            fmt(r.slack), "true" if r.equality else "false"]


def cmd_verify(cfg):
    g1, g2 = parse_function(cfg["g1"]), parse_function(cfg["g2"])
    r = _check(g1, g2, cfg["sigma"], cfg["rho"], cfg)
    extra = {}
    if parity_of(g1, cfg["sigma"]) == "odd" and parity_of(g2, cfg["sigma"]) == "odd":
        extra["maxcorr_bound"] = maxcorr_bound(g1, g2, (cfg["sigma"], cfg["rho"]))
    return r.to_dict(), REPORT_COLUMNS, [_report_row(r)], extra


def _table_or_function(v):
    if isinstance(v, (dict, list)):
        return v
    g = as_function(v)

    def on_symbol(o):
        return float(g(float(o)))

    on_symbol.label = label_of(g)
    return on_symbol


def cmd_channel(cfg):
    spec = cfg["channel"]
    extra = {}
    if spec is not None:
        if cfg["sigma"] is not None or cfg["rho"] is not None:
            raise PreconditionError("give either --channel or --sigma/--rho, not both")
        if not isinstance(spec, dict):
            raise PreconditionError("channel must be a JSON object or a .json file")
        ch = FiniteChannel.from_dict(spec)
        g1, g2 = _table_or_function(cfg["g1"]), _table_or_function(cfg["g2"])
        r = lemma2_check(ch, g1, g2)
        extra["expectation"] = enumerate_expectation(ch, g1, g2)
    else:
        if cfg["sigma"] is None or cfg["rho"] is None:
            raise PreconditionError("a Gaussian channel needs --sigma and --rho")
        for key in ("g1", "g2"):
            if not isinstance(cfg[key], str):
                raise PreconditionError(f"{key} must be a function description for a Gaussian channel")
        ch = gaussian_as_channel(cfg["sigma"], cfg["rho"])
        r = lemma2_check(ch, parse_function(cfg["g1"]), parse_function(cfg["g2"]), nodes=cfg["nodes"])
    return r.to_dict(), REPORT_COLUMNS, [_report_row(r)], extra


def _chain_config(cfg):
    if cfg["f"] is None:
        raise PreconditionError("missing required setting --f")
    return ChainConfig(cfg["sigma_x2"], cfg["sigma_w2"], parse_function(cfg["f"]),
                       cfg["samples"], cfg["seed"], cfg["chunks"])


def cmd_simulate(cfg, out):
    if out is None:
        raise PreconditionError("simulate needs --out for the dataset")
    ds = run_chain(_chain_config(cfg))
    write_dataset(ds, out)
    result = {"path": str(out), "samples": len(ds), "stats": ds.stats}
    cols = ("column", "mean", "var")
    rows = [[k, fmt(v["mean"]), fmt(v["var"])] for k, v in ds.stats.items()]
    return result, cols, rows


def cmd_identify(cfg):
    method = cfg["method"]
    extra = {}
    if method == "oracle":
        cc = _chain_config(dict(cfg, samples=max(cfg["samples"], 1)))
        order = cfg["order"] if cfg["order"] is not None else default_order(cc.alpha)
        res = identify_forward_oracle(cc.f, cc.sigma_x2, cc.sigma_w2, order, cfg["nodes"])
    else:
        if cfg["data"] is not None:
            if cfg["f"] is not None:
                raise PreconditionError("give either --data or --f, not both")
            try:
                ds = read_dataset(cfg["data"])
            except OSError as exc:
                raise PreconditionError(f"cannot read dataset {cfg['data']}: {exc.strerror}") from None
        else:
            ds = run_chain(_chain_config(cfg))
        if method == "forward":
            res = identify_forward(ds, cfg["order"])
            extra["recovered_scale"] = recover_scale(res, ds, cfg["noise_seed"])
            if cfg["challengers"]:
                w = synth_noise(ds.config, cfg["noise_seed"])
                extra["challengers"] = []
                for c in cfg["challengers"]:
                    d = k2_difference(ds, w, res, parse_function(c))
                    extra["challengers"].append({"g": c, "margin": d.value, "stderr": d.stderr})
        else:
            res = identify_inverse(ds, cfg["degree"])
    result = res.to_dict()
    cols = ("n", "coeff", "stderr")
    rows = [[n, fmt(c), fmt(s)] for n, (c, s) in enumerate(zip(res.coeffs, res.stderr))]
    return result, cols, rows, extra


def _sweep_cell(cell, cfg):
    g1, g2, sigma, rho = cell
    try:
        r = _check(parse_function(g1), parse_function(g2), sigma, rho, cfg)
        return r, None
    except GausscorrError as exc:
        return None, f"{type(exc).__name__}: {exc}"


def cmd_sweep(cfg):
    cells = [(a, b, s, r) for a in cfg["functions"] for b in cfg["functions"]
             for s in cfg["sigmas"] for r in cfg["rhos"]]
    if cfg["jobs"] < 1:
        raise PreconditionError("jobs must be >= 1")
    if cfg["jobs"] > 1:
        with ThreadPoolExecutor(cfg["jobs"]) as ex:
            outcomes = list(ex.map(lambda c: _sweep_cell(c, cfg), cells))
    else:
        outcomes = [_sweep_cell(c, cfg) for c in cells]
    rows, records, slacks = [], [], []
    for (g1, g2, s, rho), (r, err) in zip(cells, outcomes):
        if r is None:
            rows.append([g1, g2, fmt(s), fmt(rho), "", "", "", "", "", err])
            records.append({"g1": g1, "g2": g2, "sigma": s, "rho": rho, "error": err})
        else:
            rows.append(_report_row(r) + [""])
            records.append(r.to_dict())
            slacks.append(r.slack)
    extra = {"cells": len(cells), "errors": sum(r is None for r, _ in outcomes)}
    if cells:
        min_slack = min(slacks) if slacks else float("nan")
        rows.append(["summary", "", "", "", "", "", "", fmt(min_slack), "", ""])
        extra["min_slack"] = min_slack
    return records, SWEEP_COLUMNS, rows, extra


COMMANDS = {
    "project": cmd_project,
    "xmoment": cmd_xmoment,
    "verify": cmd_verify,
    "channel": cmd_channel,
    "identify": cmd_identify,
    "sweep": cmd_sweep,
}


def render(command, cfg, result, columns, rows, extra=None):
    """Output text for a finished command in the configured format."""
    echo = dict(cfg)
    if cfg["format"] == "json":
        doc = {"command": command, "config": echo, "result": result}
        doc.update(extra or {})
        return dumps(doc) + "\n"
    buf = io.StringIO()
    buf.write(f"# {command} {dumps(echo, indent=None)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    w.writerows(rows)
    return buf.getvalue()


def _load_config(path):
    if path is None:
        return {}
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise PreconditionError(f"cannot read config {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise PreconditionError(f"invalid JSON in config {path}: {exc}") from None
    if not isinstance(data, dict):
        raise PreconditionError("config file must hold a JSON object")
    return data


def run(argv):
    """Execute one command; returns the output text (already written if ``--out``)."""
    args = build_parser().parse_args(argv)
    if args.command is None:
        raise PreconditionError("no command given; choose one of " + ", ".join(SCHEMAS))
    flags = {k: v for k, v in vars(args).items() if k not in ("command", "config", "out")}
    cfg = resolve(args.command, _load_config(args.config), flags)
    if args.command == "simulate":
        # --out names the dataset; the summary goes to stdout
        text = render("simulate", cfg, *cmd_simulate(cfg, args.out))
        sys.stdout.write(text)
        return text
    text = render(args.command, cfg, *COMMANDS[args.command](cfg))
    if args.out is not None:
        with open(args.out, "w", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return text


def main(argv=None):
    if argv is None:
        argv = sys.argv[1:]
    try:
        run(argv)
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except DegeneracyError as exc:
        return _fail(exc, 2)
    except (GausscorrError, ValueError) as exc:
        return _fail(exc, 1)
    return 0


def _fail(exc, code):
    sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc), "exit": code}) + "\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
