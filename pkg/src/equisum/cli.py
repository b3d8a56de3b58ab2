"""Command-line front end.

Reads a JSON problem config, dispatches to the library, and prints a single
JSON report to stdout.  Exit codes: 0 solved/verified, 2 finished but
flagged (non-converged status, failed property check, uncertified minimum),
1 malformed input or internal error (diagnostic on stderr).
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .evaluator import Problem, profile, delta, jacobian_delta, sum_translates
from .kernels import from_config
from .oracle import (
    DEFAULT_SEED,
    check_mmatrix,
    check_sandwich,
    convergence_probe,
    grid_minimax,
    grid_sup,
)
from .extremal import (
    BojanovProblem,
    GtpProblem,
    eval_gap,
    gtp_value,
    solve_bojanov,
    solve_gtp,
)
from .solver import SolveOptions, minimax, minimax_global, maximin, solve_equioscillation
from .torus import TWO_PI, NodeSystem, Permutation, ValidationError, as_node_system, locate

OK, FLAGGED, ERROR = 0, 2, 1

# result keys holding torus angles, for --degrees conversion
_ANGLE_KEYS = {"nodes", "maximizers", "z", "z_trav", "t", "cut", "angles"}


def _jsonify(obj):
    """JSON-safe copy: numpy scalars/arrays unwrapped, non-finite floats as strings."""
    if isinstance(obj, dict):
        return {str(k): _jsonify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonify(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonify(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        obj = float(obj)
    if isinstance(obj, float):
        if math.isnan(obj):
            return "nan"
        if obj == math.inf:
            return "inf"
        if obj == -math.inf:
            return "-inf"
        return obj
    if isinstance(obj, (bool, int, str)) or obj is None:
        return obj
    if hasattr(obj, "to_dict"):
        return _jsonify(obj.to_dict())
    return str(obj)


def _to_degrees(obj, key=None):
    if isinstance(obj, dict):
        return {k: _to_degrees(v, k) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_to_degrees(v, key) for v in obj]
    if isinstance(obj, float) and key in _ANGLE_KEYS:
        return obj * 180.0 / math.pi
    return obj


def _load_config(path):
    if path is None:
        return {}
    if path == "-":
        text = sys.stdin.read()
    else:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ValidationError("config must be a JSON object")
    return cfg


def _problem_from(cfg) -> Problem:
    kernels = cfg.get("kernels")
    if not kernels:
        raise ValidationError("config needs a 'kernels' list")
    return Problem(tuple(from_config(k) for k in kernels))


def _angles_in(values, degrees):
    arr = np.asarray(values, dtype=float)
    if degrees:
        arr = arr * math.pi / 180.0
    return arr


def _nodes_from(cfg, args, n_expected=None):
    nodes = cfg.get("nodes")
    if getattr(args, "nodes", None):
        nodes = [float(v) for v in args.nodes.split(",")]
    if nodes is None:
        raise ValidationError("no nodes given (config 'nodes' or --nodes)")
    arr = _angles_in(nodes, args.degrees)
    ns = as_node_system(arr)
    if n_expected is not None and ns.n != n_expected:
        raise ValidationError(f"expected {n_expected} nodes, got {ns.n}")
    return ns


def _sigma_from(cfg, args, n):
    raw = cfg.get("sigma")
    if getattr(args, "sigma", None):
        raw = [int(v) for v in args.sigma.split(",")]
    if raw is None:
        return None
    sig = Permutation(tuple(int(v) for v in raw))
    if sig.n != n:
        raise ValidationError(f"sigma has {sig.n} entries but the problem has {n} free nodes")
    return sig


def _sigma_or_locate(cfg, args, ns: NodeSystem):
    sig = _sigma_from(cfg, args, ns.n)
    if sig is not None:
        return sig
    loc = locate(ns)
    if loc.kind != "interior":
        raise ValidationError("nodes sit on a cell face; pass --sigma explicitly")
    return loc.sigma


def _options_from(cfg, args) -> SolveOptions:
    opts = SolveOptions()
    raw = dict(cfg.get("options", {}))
    if args.tol is not None:
        raw["tol_residual"] = args.tol
    if args.max_iter is not None:
        raw["max_iter"] = args.max_iter
    if args.seed is not None:
        raw["seed"] = args.seed
    known = {f for f in vars(opts)}
    for key, val in raw.items():
        if key not in known:
            raise ValidationError(f"unknown solver option {key!r}")
        if key in ("homotopy_levels",):
            val = tuple(None if v in (None, "inf") else v for v in val)
        if key == "start" and isinstance(val, list):
            val = tuple(val)
        setattr(opts, key, val)
    return opts


def _write_csv(path, header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(f"{v:.17g}" for v in row))
    text = "\n".join(lines) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    return len(rows)


def _curve_rows(p, ns, resolution):
    ts = np.arange(resolution) * (TWO_PI / resolution)
    vals = sum_translates(p, ns, ts)
    return ts, vals


# ---------------------------------------------------------------- commands

def _cmd_eval(cfg, args):
    p = _problem_from(cfg)
    ns = _nodes_from(cfg, args, p.n)
    t = cfg.get("t")
    if t is None:
        raise ValidationError("eval needs 't' in the config (angle or list)")
    ts = np.atleast_1d(_angles_in(t, args.degrees))
    vals = sum_translates(p, ns, ts)
    result = {"nodes": list(ns.values), "t": [float(v) for v in ts],
              "F": [float(v) for v in np.atleast_1d(vals)]}
    return result, OK, p, ns


def _cmd_profile(cfg, args):
    p = _problem_from(cfg)
    ns = _nodes_from(cfg, args, p.n)
    sig = _sigma_or_locate(cfg, args, ns)
    prof = profile(p, ns, sig)
    d = delta(p, ns, sig, prof)
    result = {
        "nodes": list(ns.values),
        "sigma": list(sig.sigma),
        "profile": prof.to_dict(),
        "delta": [float(v) for v in d],
        "m_bar": prof.m_bar,
        "m_under": prof.m_under,
    }
    return result, OK, p, ns


def _solve_common(cfg, args, fn):
    p = _problem_from(cfg)
    opts = _options_from(cfg, args)
    if cfg.get("nodes") is not None or getattr(args, "nodes", None):
        opts.start = tuple(_nodes_from(cfg, args, p.n).values)
    if args.all_sigma:
        glob = minimax_global(p, opts, max_permutations=int(cfg.get("max_permutations", 6)))
        rep = glob.best
        result = glob.to_dict()
        code = OK if rep.converged else FLAGGED
        return result, code, p, rep.nodes
    sig = _sigma_from(cfg, args, p.n)
    if sig is None:
        sig = Permutation.identity(p.n)
    rep = fn(p, sig, opts)
    result = rep.to_dict()
    code = OK if rep.converged else FLAGGED
    if fn is minimax and not rep.flags.get("local_min_certified", True):
        code = FLAGGED
    return result, code, p, rep.nodes


def _cmd_equioscillate(cfg, args):
    return _solve_common(cfg, args, solve_equioscillation)


def _cmd_minimax(cfg, args):
    return _solve_common(cfg, args, minimax)


def _cmd_maximin(cfg, args):
    return _solve_common(cfg, args, maximin)


def _cmd_gtp(cfg, args):
    exps = cfg.get("exponents")
    if args.exponents:
        exps = [float(v) for v in args.exponents.split(",")]
    if not exps:
        raise ValidationError("gtp needs --exponents r0,r1,...")
    res = solve_gtp(GtpProblem(tuple(exps)), _options_from(cfg, args))
    code = OK if res.report.converged else FLAGGED
    return res.to_dict(), code, None, ("gtp", res)


def _cmd_bojanov(cfg, args):
    exps = cfg.get("exponents")
    if args.exponents:
        exps = [float(v) for v in args.exponents.split(",")]
    interval = cfg.get("interval")
    if args.interval:
        interval = [float(v) for v in args.interval.split(",")]
    if not exps or not interval or len(interval) != 2:
        raise ValidationError("bojanov needs --interval a,b and --exponents nu1,...")
    q = BojanovProblem(interval[0], interval[1], tuple(exps))
    poly = solve_bojanov(q, _options_from(cfg, args))
    ok = poly.flags["equioscillates"] and poly.flags["interlacing"] and poly.flags["converged"]
    result = poly.to_dict()
    result["doubled"] = poly.doubled.to_dict()
    return result, OK if ok else FLAGGED, None, ("bojanov", poly)


def _cmd_sample(cfg, args):
    p = _problem_from(cfg)
    ns = _nodes_from(cfg, args, p.n)
    resolution = args.resolution or int(cfg.get("resolution", 1024))
    ts, vals = _curve_rows(p, ns, resolution)
    if args.degrees:
        ts = ts * 180.0 / math.pi
    rows = list(zip(ts, vals))
    count = _write_csv(args.emit_samples, ["t", "F"], rows)
    if args.emit_samples is None:
        return None, OK, p, ns  # CSV already on stdout
    return {"rows": count, "path": args.emit_samples}, OK, p, ns


def _cmd_verify(cfg, args):
    check = args.check
    if check is None:
        raise ValidationError("verify needs --check sandwich|mmatrix|convergence|grid-minimax")
    if check == "sandwich":
        p = _problem_from(cfg)
        sig = _sigma_from(cfg, args, p.n)
        if sig is None:
            raise ValidationError("sandwich check needs --sigma")
        include = [
            _angles_in(pt, args.degrees) for pt in cfg.get("include", [])
        ]
        rep = check_sandwich(
            p, sig,
            m_estimate=cfg.get("m_estimate"),
            samples=int(cfg.get("samples", 100)),
            seed=args.seed if args.seed is not None else int(cfg.get("seed", DEFAULT_SEED)),
            tol=float(cfg.get("check_tol", 1e-9)),
            include=include,
        )
        return rep.to_dict(), OK if rep.ok else FLAGGED, p, None
    if check == "mmatrix":
        p = _problem_from(cfg)
        ns = _nodes_from(cfg, args, p.n)
        sig = _sigma_or_locate(cfg, args, ns)
        J = jacobian_delta(p, ns, sig, relaxed=bool(cfg.get("relaxed", True)))
        rep = check_mmatrix(J)
        result = rep.to_dict()
        result["jacobian"] = [[float(v) for v in row] for row in J]
        return result, OK if rep.ok else FLAGGED, p, ns
    if check == "convergence":
        p = _problem_from(cfg)
        ns = _nodes_from(cfg, args, p.n)
        kind = cfg.get("kind", "sqrt_cusp")
        levels = tuple(cfg.get("levels", (4, 16, 64, 256)))
        tab = convergence_probe(p, ns, kind, levels)
        bound_ok = all(
            r.deviation <= (p.n + 1) / r.level + 1e-7 for r in tab.rows
        )
        result = tab.to_dict()
        result["bound_ok"] = bound_ok
        return result, OK if (tab.decreasing and bound_ok) else FLAGGED, p, ns
    if check == "grid-minimax":
        p = _problem_from(cfg)
        sig = _sigma_from(cfg, args, p.n)
        if sig is None:
            raise ValidationError("grid-minimax check needs --sigma")
        res = grid_minimax(
            p, sig,
            node_resolution=int(cfg.get("node_resolution", 120)),
            t_resolution=int(cfg.get("t_resolution", 512)),
        )
        result = res.to_dict()
        result["grid_sup_at_nodes"] = grid_sup(p, res.nodes, 4096)
        return result, OK, p, res.nodes
    raise ValidationError(f"unknown check {check!r}")


_COMMANDS = {
    "eval": _cmd_eval,
    "profile": _cmd_profile,
    "equioscillate": _cmd_equioscillate,
    "minimax": _cmd_minimax,
    "maximin": _cmd_maximin,
    "gtp": _cmd_gtp,
    "bojanov": _cmd_bojanov,
    "sample": _cmd_sample,
    "verify": _cmd_verify,
}


def _emit_solution_samples(args, p, nodes_like):
    """Write (t, value) curves next to solve/extremal reports when asked."""
    if args.emit_samples is None:
        return None
    resolution = args.resolution or 1024
    if isinstance(nodes_like, tuple) and nodes_like and nodes_like[0] == "bojanov":
        poly = nodes_like[1]
        xs = np.linspace(poly.problem.a, poly.problem.b, resolution)
        rows = list(zip(xs, eval_gap(xs, poly)))
        return _write_csv(args.emit_samples, ["x", "P"], rows)
    if isinstance(nodes_like, tuple) and nodes_like and nodes_like[0] == "gtp":
        res = nodes_like[1]
        ts = np.arange(resolution) * (TWO_PI / resolution)
        rows = list(zip(ts, gtp_value(ts, res.nodes, res.problem.exponents)))
        return _write_csv(args.emit_samples, ["t", "T"], rows)
    if p is not None and nodes_like is not None:
        ts, vals = _curve_rows(p, as_node_system(nodes_like), resolution)
        return _write_csv(args.emit_samples, ["t", "F"], rows=list(zip(ts, vals)))
    return None


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="equisum",
        description="Equilibrium node placement for sums of translated concave kernels.",
    )
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("command", choices=sorted(_COMMANDS))
    ap.add_argument("--config", help="JSON config file, or - for stdin")
    ap.add_argument("--sigma", help="ordering permutation, e.g. 2,1,3")
    ap.add_argument("--all-sigma", action="store_true",
                    help="sweep all orderings (minimax only)")
    ap.add_argument("--nodes", help="node angles, e.g. 3.14,1.57,4.71")
    ap.add_argument("--exponents", help="exponent list for gtp/bojanov")
    ap.add_argument("--interval", help="interval a,b for bojanov")
    ap.add_argument("--tol", type=float, help="residual tolerance")
    ap.add_argument("--max-iter", type=int, help="iteration cap")
    ap.add_argument("--seed", type=int, help="seed recorded in reports")
    ap.add_argument("--resolution", type=int, help="grid/sample resolution")
    ap.add_argument("--check", help="verify: sandwich|mmatrix|convergence|grid-minimax")
    ap.add_argument("--emit-samples", metavar="PATH",
                    help="write a CSV of curve samples (sample: stdout if omitted)")
    ap.add_argument("--degrees", action="store_true",
                    help="angles in degrees on input and output")
    ap.add_argument("--no-timestamp", action="store_true",
                    help="omit the timestamp field (byte-stable output)")
    return ap


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _load_config(args.config)
        result, code, p, nodes_like = _COMMANDS[args.command](cfg, args)
        if args.command != "sample":
            emitted = _emit_solution_samples(args, p, nodes_like)
            if emitted is not None and isinstance(result, dict):
                result["samples_written"] = emitted
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return ERROR
    except (OSError, ValueError, KeyError, TypeError) as exc:
        print(f"error: {exc.__class__.__name__}: {exc}", file=sys.stderr)
        return ERROR

    if result is None:  # bare CSV already written
        return code
    doc = {"schema": 1, "command": args.command}
    if not args.no_timestamp:
        doc["timestamp"] = datetime.now(timezone.utc).isoformat()
    doc["seed"] = args.seed if args.seed is not None else int(cfg.get("seed", DEFAULT_SEED))
    doc["result"] = _jsonify(result)
    if args.degrees:
        doc["result"] = _to_degrees(doc["result"])
        doc["units"] = "degrees"
    json.dump(doc, sys.stdout, indent=2)
    sys.stdout.write("\n")
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
