"""Command-line interface.

Exit codes: 0 success, 1 a checked identity or inequality failed, 2 usage error,
3 unsupported input (including exhausted budgets).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import random
import sys
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from fractions import Fraction
from typing import Any, Sequence

import numpy as np

from . import __version__
from . import archimedean as arch
from . import experiments as ex
from . import nonarch as na
from .algebra import ZerosDivisor, dstar_divisor, fraction_str
from .errors import AdelicError, BudgetExceeded, CheckFailed, NumericalFailure, RejectedInput, UnsupportedInput
from .grammar import parse_form, parse_map, parse_point
from .heights import AdelicWeight, canonical_height_point, global_fekete_identity, height_g
from .places import Place, gauss_norm_exponent

SCHEMA = 1


@dataclass
class RunConfig:
    command: str
    inputs: dict[str, Any]
    places: list[str] = field(default_factory=list)
    n_range: list[int] = field(default_factory=list)
    seed: int = 0
    tolerances: dict[str, float] = field(default_factory=dict)
    output: str | None = None
    format: str = "text"
    workers: int = 1
    version: str = __version__


@dataclass
class Outcome:
    result: Any
    rows: list[dict] | None = None
    ok: bool = True
    message: str = ""
    text: str | None = None


def parse_n_range(text: str) -> list[int]:
    """``"2:16"`` (inclusive) or ``"1,3,5"``."""
    text = text.strip()
    try:
        if ":" in text:
            a, b = text.split(":", 1)
            return list(range(int(a), int(b) + 1))
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise RejectedInput(f"cannot parse n range {text!r}") from None


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise RejectedInput(f"cannot parse number list {text!r}") from None


def _divisor(text: str) -> ZerosDivisor:
    form = parse_form(text)
    if form.is_zero():
        raise RejectedInput("the zero form has no divisor")
    return ZerosDivisor.of(form)


def _weight(args) -> AdelicWeight:
    return AdelicWeight.dynamical(parse_map(args.map)) if getattr(args, "map", None) else AdelicWeight.trivial()


def _point_json(pt: tuple[Fraction, Fraction]) -> str:
    return f"({fraction_str(pt[0])}:{fraction_str(pt[1])})"


# ---------------------------------------------------------------------------
# subcommands


def cmd_dstar(args, cfg: RunConfig) -> Outcome:
    Z = _divisor(args.poly)
    val = dstar_divisor(Z)
    return Outcome({"dstar": fraction_str(val), "method": "exact"}, text=fraction_str(val))


def cmd_height(args, cfg: RunConfig) -> Outcome:
    rep = height_g(_divisor(args.form), _weight(args))
    return Outcome(rep.to_json(), rows=rep.to_json()["rows"], text=f"{rep.total:.15g} +- {rep.total_error:.3g}")


def cmd_canonical_height(args, cfg: RunConfig) -> Outcome:
    F = parse_map(args.map)
    pt = parse_point(args.point)
    rep = canonical_height_point(F, pt)
    out = rep.to_json()
    out["point"] = _point_json(pt)
    return Outcome(out, rows=out["rows"], text=f"{rep.total:.15g} +- {rep.total_error:.3g}")


def cmd_mahler(args, cfg: RunConfig) -> Outcome:
    Z = _divisor(args.form)
    v = Place.parse(args.place)
    if v.is_infinite:
        g = AdelicWeight.dynamical(parse_map(args.map)).archimedean() if args.map else arch.ZeroWeight()
        val, err = arch.mahler_g(Z.form, g)
        res = {"place": "inf", "value": val, "error": err, "method": "numeric"}
    else:
        if args.map:
            rep = height_g(Z, AdelicWeight.dynamical(parse_map(args.map)))
            row = rep.row(v)
            val = (row.value * Z.degree) if row else float(gauss_norm_exponent(Z.form, v.prime)) * math.log(v.prime)
            res = {"place": str(v), "value": val, "error": row.error * Z.degree if row else 0.0, "method": row.method if row else "exact"}
        else:
            c = gauss_norm_exponent(Z.form, v.prime)
            res = {"place": str(v), "value": float(c) * math.log(v.prime), "error": 0.0, "method": "exact",
                   "log_p_coefficient": fraction_str(c)}
    return Outcome(res, rows=[res], text=f"{res['value']:.15g} +- {res['error']:.3g}")


def cmd_fekete_check(args, cfg: RunConfig) -> Outcome:
    Z = _divisor(args.form)
    tol = args.tol
    if args.local:
        g = AdelicWeight.dynamical(parse_map(args.map)).archimedean() if args.map else arch.ZeroWeight()
        chk = arch.discrepancy_identity_check(Z, g)
        res = {"scope": "archimedean", "lhs": chk.lhs, "rhs": chk.rhs, "gap": chk.gap, "error": chk.error}
        ok = abs(chk.gap) <= tol * (1 + abs(chk.lhs)) + chk.error
    else:
        chk = global_fekete_identity(Z, _weight(args))
        res = {"scope": "global", **chk.to_json()}
        ok = abs(chk.gap) <= tol * (1 + abs(chk.lhs)) + chk.error
    res["tolerance"] = tol
    return Outcome(res, rows=[res], ok=ok, message="" if ok else f"gap {res['gap']:.3g} exceeds tolerance",
                   text=f"lhs={res['lhs']:.15g} rhs={res['rhs']:.15g} gap={res['gap']:.3g}")


def cmd_green(args, cfg: RunConfig) -> Outcome:
    F = parse_map(args.map)
    pt = parse_point(args.point)
    v = Place.parse(args.place)
    if v.is_infinite:
        G = arch.GreenEvaluator.build(F)
        x0, x1 = complex(float(pt[0])), complex(float(pt[1]))
        s = max(abs(x0), abs(x1))
        val = float(G.values(np.array([x0 / s]), np.array([x1 / s]))[0])
        res = {"place": "inf", "value": val, "error": G.bound, "depth": G.depth, "sup_T": G.sup_tf_bound,
               "sup_method": G.sup_method, "method": "numeric"}
    else:
        r = na.green_escape_p(F, pt, v.prime)
        lp = math.log(v.prime)
        res = {"place": str(v), "value": float(r.value) * lp, "error": float(r.bound) * lp,
               "log_p_coefficient": fraction_str(r.value), "method": r.method}
    res["point"] = _point_json(pt)
    return Outcome(res, rows=[res], text=f"{res['value']:.15g} +- {res['error']:.3g}")


def cmd_energy(args, cfg: RunConfig) -> Outcome:
    F = parse_map(args.map)
    samples = arch.equilibrium_sample(F, 2 * args.pairs, args.seed)
    est = arch.energy_estimate(F, samples)
    res = {"estimate": est.estimate, "stderr": est.stderr, "target": est.target, "pairs": est.pairs, "z_score": est.z_score}
    ok = abs(est.z_score) <= 3
    return Outcome(res, rows=[res], ok=ok, message="" if ok else "energy estimate beyond 3 standard errors",
                   text=f"{est.estimate:.6g} +- {est.stderr:.2g} (target {est.target:.6g})")


def cmd_equidist(args, cfg: RunConfig) -> Outcome:
    F, A = parse_map(args.map), parse_map(args.target)
    rows = ex.equidist_run(F, A, cfg.n_range, samples=args.samples, seed=args.seed)
    fits = ex.fitted_constants(rows)
    ok = all(math.isfinite(r.ratio) for r in rows)
    return Outcome({"fitted": fits}, rows=ex.rows_to_dicts(rows), ok=ok)


def cmd_fekete_config(args, cfg: RunConfig) -> Outcome:
    rows = ex.fekete_config_check(parse_map(args.map), parse_map(args.target), cfg.n_range)
    ok = all(r.within for r in rows)
    return Outcome({"all_within_envelope": ok}, rows=ex.rows_to_dicts(rows), ok=ok,
                   message="" if ok else "normalized Fekete sum above its envelope")


def cmd_periodic_diag(args, cfg: RunConfig) -> Outcome:
    rows = ex.periodic_diag_scan(parse_map(args.map), cfg.n_range)
    return Outcome({"max_ratio": max(r.ratio for r in rows)}, rows=ex.rows_to_dicts(rows))


def cmd_proximity(args, cfg: RunConfig) -> Outcome:
    F, A = parse_map(args.map), parse_map(args.target)
    center = complex(args.center.replace("i", "j"))
    rows = ex.proximity_scan(F, A, center, args.radius, cfg.n_range, args.grid)
    C, ok = ex.fit_proximity_constant(rows)
    ok = ok and all(r.sup_log_proximity <= 0 for r in rows)
    return Outcome({"fitted_C": C, "within_budget": ok}, rows=ex.rows_to_dicts(rows), ok=ok,
                   message="" if ok else "proximity outside the fitted budget")


def cmd_regularize_check(args, cfg: RunConfig) -> Outcome:
    eps = _floats(args.eps)
    if args.form:
        corpus = [ex.CorpusEntry(args.form, _divisor(args.form), _weight(args))]
    else:
        corpus = ex.default_corpus()
    rows = ex.regularized_inequality_suite(corpus, eps)
    ok = all(r.holds for r in rows)
    return Outcome({"all_hold": ok, "C_meas": arch.fit_regularization_constant(eps)}, rows=ex.rows_to_dicts(rows), ok=ok,
                   message="" if ok else "a regularized inequality failed")


def random_skeleton_instance(rng: random.Random, p: int):
    pts = []
    for _ in range(rng.randint(1, 4)):
        c = Fraction(rng.randint(-60, 60), rng.randint(1, 12))
        pts.append(na.SkeletonPoint(c, Fraction(rng.randint(-5, 2)), p))
    tree = na.SkeletonTree.span(pts, p)
    vs = list(tree.vertices)
    weights = [Fraction(rng.randint(-4, 4), rng.randint(1, 3)) for _ in vs]
    weights[-1] -= sum(weights)
    mu = {v: w for v, w in zip(vs, weights) if w}
    phi = na.TreeFunction(tree, {v: Fraction(rng.randint(-8, 8), rng.randint(1, 4)) for v in vs})
    return tree, phi, mu


def cmd_cs_check(args, cfg: RunConfig) -> Outcome:
    rng = random.Random(args.seed)
    rows = []
    fails = 0
    gromov_fail = 0
    for i in range(args.count):
        p = rng.choice(cfg_primes(args))
        tree, phi, mu = random_skeleton_instance(rng, p)
        if not mu:
            continue
        cs = na.cauchy_schwarz_check(phi, mu)
        fails += not cs.holds
        vs = list(tree.vertices)
        for a in vs:
            for b in vs:
                gromov_fail += na.hsia_can(a, b) != na.hsia_can_gromov(a, b)
        rows.append({"instance": i, "p": p, "lhs_sq_log_p2": fraction_str(cs.lhs_sq), "rhs_log_p2": fraction_str(cs.rhs),
                     "holds": cs.holds, "method": "exact"})
    ok = fails == 0 and gromov_fail == 0
    return Outcome({"instances": len(rows), "cs_failures": fails, "gromov_mismatches": gromov_fail}, rows=rows, ok=ok,
                   message="" if ok else "exact tree inequality failed")


def cfg_primes(args) -> list[int]:
    return [int(t) for t in args.primes.split(",")]


def cmd_riesz(args, cfg: RunConfig) -> Outcome:
    F, A = parse_map(args.map), parse_map(args.target)
    rng = np.random.default_rng(args.seed)
    pts = rng.normal(size=args.points) + 1j * rng.normal(size=args.points)
    r = ex.riesz_residual(F, A, args.n, pts, args.mc, args.seed)
    res = asdict(r)
    ok = r.max_residual <= r.envelope
    return Outcome(res, rows=[res], ok=ok, message="" if ok else "residual beyond the 3-sigma envelope",
                   text=f"max residual {r.max_residual:.3g} (envelope {r.envelope:.3g})")


# ---------------------------------------------------------------------------
# parser and dispatch


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=["text", "json", "csv"], default="text")
    common.add_argument("--output", help="write the report here instead of stdout")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--workers", type=int, default=1, help="accepted for reproducibility headers; evaluation is serial")

    ap = argparse.ArgumentParser(prog="adelicdiv", description="Exact and numerical adelic potential theory over Q.")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("dstar", parents=[common], help="exact root-difference unit of a polynomial or form")
    s.add_argument("poly")
    s.set_defaults(func=cmd_dstar)

    s = sub.add_parser("height", parents=[common], help="g-height of a divisor")
    s.add_argument("--form", required=True)
    s.add_argument("--map", help="use the dynamical Green weight of this map")
    s.set_defaults(func=cmd_height)

    s = sub.add_parser("canonical-height", parents=[common], help="canonical height of a rational point")
    s.add_argument("--map", required=True)
    s.add_argument("--point", required=True)
    s.set_defaults(func=cmd_canonical_height)

    s = sub.add_parser("mahler", parents=[common], help="local weighted Mahler measure")
    s.add_argument("--form", required=True)
    s.add_argument("--place", default="inf")
    s.add_argument("--map")
    s.set_defaults(func=cmd_mahler)

    s = sub.add_parser("fekete-check", parents=[common], help="local or global Fekete identity")
    s.add_argument("--form", required=True)
    s.add_argument("--map")
    s.add_argument("--local", action="store_true", help="archimedean identity only")
    s.add_argument("--tol", type=float, default=1e-6)
    s.set_defaults(func=cmd_fekete_check)

    s = sub.add_parser("green", parents=[common], help="escape-rate Green function at a point")
    s.add_argument("--map", required=True)
    s.add_argument("--point", required=True)
    s.add_argument("--place", default="inf")
    s.set_defaults(func=cmd_green)

    s = sub.add_parser("energy", parents=[common], help="Monte Carlo energy versus the resultant formula")
    s.add_argument("--map", required=True)
    s.add_argument("--pairs", type=int, default=10_000)
    s.set_defaults(func=cmd_energy)

    for name, func, extra in [
        ("equidist", cmd_equidist, "samples"),
        ("fekete-config", cmd_fekete_config, None),
        ("proximity", cmd_proximity, "disk"),
    ]:
        s = sub.add_parser(name, parents=[common])
        s.add_argument("--map", required=True)
        s.add_argument("--target", default="id")
        s.add_argument("--n", default="1:8")
        if extra == "samples":
            s.add_argument("--samples", type=int, default=2**17)
        if extra == "disk":
            s.add_argument("--center", default="0.5")
            s.add_argument("--radius", type=float, default=0.1)
            s.add_argument("--grid", type=int, default=4096)
        s.set_defaults(func=func)

    s = sub.add_parser("periodic-diag", parents=[common], help="diagonals of [f^n = id]")
    s.add_argument("--map", required=True)
    s.add_argument("--n", default="1:8")
    s.set_defaults(func=cmd_periodic_diag)

    s = sub.add_parser("regularize-check", parents=[common], help="regularized Fekete inequalities")
    s.add_argument("--form")
    s.add_argument("--map")
    s.add_argument("--eps", default="1e-1,1e-2,1e-3,1e-4,1e-5,1e-6")
    s.set_defaults(func=cmd_regularize_check)

    s = sub.add_parser("cs-check", parents=[common], help="exact tree Cauchy-Schwarz and Gromov checks")
    s.add_argument("--count", type=int, default=1000)
    s.add_argument("--primes", default="2,3,5")
    s.set_defaults(func=cmd_cs_check)

    s = sub.add_parser("riesz", parents=[common], help="Riesz decomposition residual")
    s.add_argument("--map", required=True)
    s.add_argument("--target", default="0")
    s.add_argument("--n", type=int, default=2)
    s.add_argument("--points", type=int, default=20)
    s.add_argument("--mc", type=int, default=4000)
    s.set_defaults(func=cmd_riesz)
    return ap


def _config(args) -> RunConfig:
    skip = {"func", "format", "output", "seed", "workers", "command"}
    inputs = {k: v for k, v in vars(args).items() if k not in skip}
    n_range = []
    if isinstance(getattr(args, "n", None), str):
        n_range = parse_n_range(args.n)
    places = [args.place] if getattr(args, "place", None) else []
    tol = {"tol": args.tol} if hasattr(args, "tol") else {}
    return RunConfig(args.command, inputs, places, n_range, args.seed, tol, args.output, args.format, args.workers)


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    if isinstance(x, Fraction):
        return fraction_str(x)
    if isinstance(x, complex):
        return [x.real, x.imag]
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    return x


def render(cfg: RunConfig, out: Outcome, timestamp: str) -> str:
    if cfg.format == "json":
        doc = {"schema": SCHEMA, "config": asdict(cfg), "timestamp": timestamp, "ok": out.ok, "result": out.result}
        if out.rows is not None:
            doc["rows"] = out.rows
        return json.dumps(_jsonable(doc), sort_keys=True, indent=2) + "\n"
    if cfg.format == "csv":
        rows = _jsonable(out.rows if out.rows is not None else [out.result])
        buf = io.StringIO()
        keys: list[str] = []
        for r in rows:
            for k in r:
                if k not in keys:
                    keys.append(k)
        w = csv.DictWriter(buf, fieldnames=keys, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: json.dumps(v) if isinstance(v, (list, dict)) else v for k, v in r.items()})
        return buf.getvalue()
    if out.text is not None:
        return out.text + "\n"
    if out.rows:
        return render(RunConfig(**{**asdict(cfg), "format": "csv"}), out, timestamp)
    return json.dumps(_jsonable(out.result), sort_keys=True) + "\n"


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = _config(args)
        out = args.func(args, cfg)
    except (UnsupportedInput, BudgetExceeded) as exc:
        print(f"unsupported: {exc}", file=sys.stderr)
        return 3
    except RejectedInput as exc:
        print(f"usage: {exc}", file=sys.stderr)
        return 2
    except (NumericalFailure, CheckFailed) as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return 1
    except AdelicError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    ts = datetime.now(timezone.utc).isoformat(timespec="seconds")
    text = render(cfg, out, ts)
    if cfg.output:
        with open(cfg.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if not out.ok:
        print(f"check failed: {out.message}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
