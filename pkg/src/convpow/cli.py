"""Command-line front end.

Exit codes: 0 success, 1 configuration error, 2 math-domain error,
3 I/O error, 4 condition check came back suspect (or inconclusive).
Data goes to stdout or ``--out``; logs go to stderr.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

from . import asymptotics as asy
from .conditions import Regime, check_conditions
from .errors import (ConvPowError, InvalidSpec, MissingMoment, NotProbability,
                     RatioOutOfRange, ScanInconclusive)
from .measure import MeasureSpec, discretize, spec_from_json
from .oracle import convolve_power, exact_family, grid_oracle, table_to_csv
from .renewal import RenewalInput, build_renewal_grid, renewal_asymptotic, renewal_input_from_json
from .saddle import solve_kappa

log = logging.getLogger("convpow")

EXIT_OK, EXIT_CONFIG, EXIT_DOMAIN, EXIT_IO, EXIT_SUSPECT = 0, 1, 2, 3, 4
SCHEMA_VERSION = 1


class ConfigError(Exception):
    pass


# ---------------------------------------------------------------------------
# inputs
# ---------------------------------------------------------------------------

def _read_text(arg: str) -> str:
    """Inline JSON when the argument starts with '{', otherwise a file path."""
    if arg.lstrip().startswith("{"):
        return arg
    with open(arg, "r", encoding="utf-8") as fh:
        return fh.read()


def load_spec(arg: str) -> MeasureSpec:
    return spec_from_json(_read_text(arg))


def load_renewal(arg: str) -> RenewalInput:
    text = _read_text(arg)
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidSpec(f"malformed renewal JSON: {exc}") from None
    return renewal_input_from_json(doc)


def _parse_js(text: str) -> List[int]:
    """'10,20,40' or a doubling range '10..160'."""
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if ".." in part:
            lo, hi = (int(x) for x in part.split(".."))
            if lo < 1 or hi < lo:
                raise ConfigError(f"bad range {part!r}")
            j = lo
            while j <= hi:
                out.append(j)
                j *= 2
        else:
            out.append(int(part))
    if any(j < 1 for j in out):
        raise ConfigError("j values must be positive integers")
    return out


def parse_schedule(text: str) -> List[Tuple[int, float]]:
    """Schedules:

    ratio:C:JS   t = C j
    power:Q:JS   t = j^Q
    pairs:J@T,J@T,...
    JS is a comma list of integers, where 'A..B' expands to A, 2A, 4A, ... <= B.
    """
    if not text:
        raise ConfigError("empty schedule")
    kind, _, rest = text.partition(":")
    try:
        if kind == "pairs":
            rows = []
            for item in rest.split(","):
                item = item.strip()
                if not item:
                    continue
                j, t = item.split("@")
                rows.append((int(j), float(t)))
            if any(j < 1 for j, _ in rows):
                raise ConfigError("j values must be positive integers")
        elif kind in ("ratio", "power"):
            par, _, js = rest.partition(":")
            p = float(par)
            jl = _parse_js(js)
            if kind == "ratio":
                rows = [(j, p * j) for j in jl]
            else:
                rows = [(j, float(j) ** p) for j in jl]
        else:
            raise ConfigError(f"unknown schedule kind {kind!r}")
    except ValueError as exc:
        raise ConfigError(f"cannot parse schedule {text!r}: {exc}") from None
    if not rows:
        raise ConfigError("schedule produced no rows")
    return rows


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------

def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return f"{v:.12e}"
    return str(v)


def _json_value(v):
    if isinstance(v, float):
        if not math.isfinite(v):
            return None if math.isnan(v) else ("inf" if v > 0 else "-inf")
        return float(f"{v:.12e}")
    return v


def render(command: str, columns: Sequence[str], rows: Sequence[dict], fmt: str) -> str:
    if fmt == "json":
        doc = {"schema_version": SCHEMA_VERSION, "command": command, "columns": list(columns),
               "rows": [{c: _json_value(r.get(c)) for c in columns} for r in rows]}
        return json.dumps(doc, indent=1) + "\n"
    buf = io.StringIO()
    buf.write(f"# schema_version: {SCHEMA_VERSION}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r.get(c)) for c in columns])
    return buf.getvalue()


def emit(text: str, out: Optional[str]) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    with open(out, "w", encoding="utf-8") as fh:
        fh.write(text)


def _threads() -> int:
    raw = os.environ.get("CONVPOW_THREADS", "").strip()
    if not raw:
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        raise ConfigError(f"CONVPOW_THREADS must be an integer, got {raw!r}") from None


def run_rows(fn: Callable, rows: Sequence) -> list:
    """Evaluate rows in parallel; results come back in schedule order."""
    n = _threads()
    if n == 1 or len(rows) < 2:
        return [fn(r) for r in rows]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, rows))


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

_FORMULAS = {"thm_a": asy.thm_a, "thm_b": asy.thm_b}


def _oracle_fn(kind: str, h: Optional[float]):
    if kind == "none":
        return None
    if kind == "exact":
        return lambda spec, j, t: exact_family(spec, j, t)
    if kind == "grid":
        if h is None:
            raise ConfigError("--oracle grid needs --h")
        return lambda spec, j, t: grid_oracle(spec, j, t, h)
    raise ConfigError(f"unknown oracle {kind!r}")


def cmd_asym(args) -> int:
    spec = load_spec(args.spec)
    sched = parse_schedule(args.schedule)
    names = [f.strip() for f in args.formula.split(",") if f.strip()]
    if not names:
        raise ConfigError("no formula given")
    if "auto" in names:
        pick = asy.auto_estimate(spec, sched)
        log.info("auto mode picked %s", pick.value)
        names = [("thm_b" if pick is asy.Formula.THM_B else "thm_a") if n == "auto" else n
                 for n in names]
        names = list(dict.fromkeys(names))
    for n in names:
        if n not in _FORMULAS:
            raise ConfigError(f"unknown formula {n!r} (choose from thm_a, thm_b, auto)")
    oracle = _oracle_fn(args.oracle, args.h)
    if oracle is not None and args.oracle == "exact" and exact_family(spec, 1, 1.0) is None:
        raise ConfigError(f"no exact form for family {spec.family!r}")

    def row(jt):
        j, t = jt
        r = {"j": j, "t": float(t)}
        try:
            rep = solve_kappa(spec, j, t)
        except RatioOutOfRange as exc:
            r["status"] = "skipped:RatioOutOfRange"
            log.warning("j=%d t=%g skipped: %s", j, t, exc)
            return r
        r.update(kappa=rep.kappa, a_j=rep.a_j, T_j=rep.T_j, status="ok")
        for n in names:
            r[f"log_{n}"] = _FORMULAS[n](spec, j, t).log_value
        if oracle is not None:
            val = oracle(spec, j, t)
            lo = val.log_abs if val.sign > 0 else -math.inf
            r["log_oracle"] = lo
            for n in names:
                r[f"ratio_{n}"] = math.exp(r[f"log_{n}"] - lo) if math.isfinite(lo) else math.nan
        return r

    rows = run_rows(row, sched)
    cols = ["j", "t", "kappa", "a_j", "T_j"] + [f"log_{n}" for n in names]
    if oracle is not None:
        cols += ["log_oracle"] + [f"ratio_{n}" for n in names]
    cols.append("status")
    emit(render("asym", cols, rows, args.format), args.out)
    if all(r["status"] != "ok" for r in rows):
        log.error("every row was skipped")
        return EXIT_DOMAIN
    return EXIT_OK


def cmd_check(args) -> int:
    spec = load_spec(args.spec)
    if args.j is None or args.t is None:
        raise ConfigError("check needs --j and --t")
    try:
        rep = check_conditions(spec, args.j, args.t, gamma=args.gamma, z_max=args.z_max,
                               n_z=args.n_z, tj_threshold=args.tj_threshold,
                               sup_threshold=args.sup_threshold)
    except ScanInconclusive as exc:
        log.error("%s", exc)
        return EXIT_SUSPECT
    if args.format == "csv":
        d = rep.to_dict()
        text = render("check", list(d.keys()), [d], "csv")
    else:
        text = rep.to_json() + "\n"
    emit(text, args.out)
    return EXIT_SUSPECT if rep.regime is Regime.SUSPECT else EXIT_OK


def cmd_clt(args) -> int:
    spec = load_spec(args.spec)
    js = _parse_js(args.j_list) if args.j_list else []
    if not js:
        raise ConfigError("clt needs --j-list")
    y = args.y

    def row(j):
        t, limit, est = asy.cor_clt(spec, y, j)
        value = math.exp(est.log_value)
        return {"j": j, "t": t, "log_estimate": est.log_value, "estimate": value,
                "limit": limit, "gap": abs(value - limit) / limit}

    rows = run_rows(row, js)
    cols = ["j", "t", "log_estimate", "estimate", "limit", "gap"]
    emit(render("clt", cols, rows, args.format), args.out)
    return EXIT_OK


def cmd_renewal(args) -> int:
    inp = load_renewal(args.spec)
    sched = parse_schedule(args.schedule)
    use_grid = args.oracle == "grid"
    if args.oracle not in ("none", "grid"):
        raise ConfigError("renewal supports --oracle none or grid")
    if use_grid and (inp.dist is None or args.h is None):
        raise ConfigError("--oracle grid needs a 'dist' in the input and --h")
    grid = None
    if use_grid:
        t_max = max(t for _, t in sched)
        grid = build_renewal_grid(inp.dist, args.h, t_max)

    def row(jt):
        j, t = jt
        est = renewal_asymptotic(inp, j, t)
        for w in est.warnings:
            log.warning("j=%d t=%g: %s", j, t, w)
        r = {"j": j, "t": float(t), "log_estimate": est.log_value,
             "regime_warning": bool(est.warnings)}
        if grid is not None:
            tab = convolve_power(grid, j, 0.0)
            lo = tab.log_value(t)
            r["log_oracle"] = lo
            r["ratio"] = math.exp(est.log_value - lo)
        return r

    rows = run_rows(row, sched)
    cols = ["j", "t", "log_estimate", "regime_warning"]
    if grid is not None:
        cols += ["log_oracle", "ratio"]
    emit(render("renewal", cols, rows, args.format), args.out)
    return EXIT_OK


def cmd_oracle(args) -> int:
    spec = load_spec(args.spec)
    if args.j is None or args.t is None:
        raise ConfigError("oracle needs --j and --t")
    if args.h is None:
        raise ConfigError("oracle needs --h")
    gm = discretize(spec, args.h, args.t)
    try:
        kappa = solve_kappa(spec, args.j, args.t).kappa
    except RatioOutOfRange:
        kappa = 0.0
    tab = convolve_power(gm, args.j, kappa)
    if args.format == "json":
        doc = {"schema_version": SCHEMA_VERSION, "command": "oracle", "j": args.j,
               "h": _json_value(args.h), "tilt": _json_value(kappa),
               "grid_x": [_json_value(k * tab.h) for k in range(tab.log_cumulative.size)],
               "log_V_star_j": [_json_value(float(v)) for v in tab.log_cumulative]}
        text = json.dumps(doc) + "\n"
    else:
        text = f"# schema_version: {SCHEMA_VERSION}\n" + table_to_csv(tab)
    emit(text, args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="convpow",
                                description="Saddle-point asymptotics of convolution powers.")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, schedule=False):
        sp.add_argument("--spec", required=True, help="path to a JSON file or inline JSON")
        sp.add_argument("--out", default=None, help="output file (default stdout)")
        sp.add_argument("--format", choices=("csv", "json"), default="csv")
        if schedule:
            sp.add_argument("--schedule", required=True,
                            help="ratio:C:JS, power:Q:JS or pairs:J@T,...")

    a = sub.add_parser("asym", help="asymptotic formulas over a (j, t) schedule")
    common(a, schedule=True)
    a.add_argument("--formula", default="thm_a", help="comma list of thm_a, thm_b, auto")
    a.add_argument("--oracle", default="none", choices=("none", "exact", "grid"))
    a.add_argument("--h", type=float, default=None, help="grid step for --oracle grid")
    a.set_defaults(func=cmd_asym)

    c = sub.add_parser("check", help="condition diagnostics at one (j, t)")
    common(c)
    c.add_argument("--j", type=int)
    c.add_argument("--t", type=float)
    c.add_argument("--gamma", type=float, default=1.0)
    c.add_argument("--z-max", type=float, default=None)
    c.add_argument("--n-z", type=int, default=200)
    c.add_argument("--tj-threshold", type=float, default=0.2)
    c.add_argument("--sup-threshold", type=float, default=0.98)
    c.set_defaults(func=cmd_check, format="json")

    k = sub.add_parser("clt", help="finite limit along the critical threshold")
    common(k)
    k.add_argument("--y", type=float, default=0.0)
    k.add_argument("--j-list", default=None, help="comma list of j, or A..B")
    k.set_defaults(func=cmd_clt)

    r = sub.add_parser("renewal", help="expansion for powers of a renewal function")
    common(r, schedule=True)
    r.add_argument("--oracle", default="none", choices=("none", "grid"))
    r.add_argument("--h", type=float, default=None)
    r.set_defaults(func=cmd_renewal)

    o = sub.add_parser("oracle", help="tilted grid convolution table")
    common(o)
    o.add_argument("--j", type=int)
    o.add_argument("--t", type=float)
    o.add_argument("--h", type=float, default=None)
    o.set_defaults(func=cmd_oracle)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse uses 2 for usage errors; configuration problems map to 1 here
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except (ConfigError, InvalidSpec, MissingMoment, NotProbability) as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG
    except ConvPowError as exc:
        log.error("math-domain error: %s", exc)
        return EXIT_DOMAIN
    except ValueError as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG
    except OSError as exc:
        log.error("I/O error: %s", exc)
        return EXIT_IO


def main_entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_entry()
