"""Batch front end: potentials from flags or an INI config, CSV data files and a JSON summary.

Exit codes: 0 when every report holds, 2 on any violation, 1 on usage or runtime errors.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import catenoid, verifier
from .errors import (
    ConstraintError,
    DichotomyViolated,
    DynamicRangeError,
    GapNotFoundError,
    HypothesisViolated,
    NodalSliceError,
    NotSymplecticError,
)
from .field_solver import FieldTrajectory, energy_profile, evolve_field, write_profile_csv
from .poincare import compute_map, hyperbolize, periodic_mode_decay, shifted
from .potentials import PRESETS, Potential, build_preset, load_config, potential_from_config
from .spectral_basis import circle_basis, cluster_basis

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_VIOLATION = 2
SIG_DIGITS = 12

NUMERICAL_ERRORS = (
    ConstraintError,
    DichotomyViolated,
    DynamicRangeError,
    GapNotFoundError,
    HypothesisViolated,
    NodalSliceError,
    NotSymplecticError,
    ArithmeticError,
    RuntimeError,
)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# ---------------------------------------------------------------- JSON


def _normalise(x):
    if isinstance(x, dict):
        return {str(k): _normalise(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_normalise(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_normalise(v) for v in x.tolist()]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if not math.isfinite(x):
            return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
        return float(f"{x:.{SIG_DIGITS}g}")
    return x


def dumps(obj) -> str:
    return json.dumps(_normalise(obj), sort_keys=True, indent=2) + "\n"


def run_id(config_echo: dict) -> str:
    return hashlib.sha256(dumps(config_echo).encode()).hexdigest()[:16]


def _report_dict(r) -> dict:
    return r.to_dict() if hasattr(r, "to_dict") else dict(r)


def emit_report(reports: Sequence, path, config_echo: Optional[dict] = None) -> int:
    """Write {run_id, config_echo, reports} and return the exit-code contribution (0 or 2)."""
    if not reports:
        raise ValueError("emit_report needs at least one report")
    echo = dict(config_echo or {})
    items = [_report_dict(r) for r in reports]
    doc = {"run_id": run_id(echo), "config_echo": echo, "reports": items}
    Path(path).write_text(dumps(doc))
    return EXIT_OK if all(item.get("holds", True) for item in items) else EXIT_VIOLATION


def _write_rows(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(header)
        for row in rows:
            wr.writerow([f"{x:.{SIG_DIGITS}g}" if isinstance(x, (float, np.floating)) else x for x in row])


# ---------------------------------------------------------------- config resolution


def _parse_value(v: str):
    for cast in (int, float):
        try:
            return cast(v)
        except ValueError:
            pass
    return v


def resolve(args) -> dict:
    """Merge config file values with command-line flags (flags win)."""
    cfg = {"params": {}}
    base_dir = None
    if args.config:
        path = Path(args.config)
        if not path.exists():
            raise FileNotFoundError(f"config file not found: {path}")
        base_dir = path.parent
        sections = load_config(path)
        pot = sections.get("potential", {})
        if pot:
            cfg["preset"] = pot.get("preset")
            cfg["params"] = {k: _parse_value(v) for k, v in pot.items() if k != "preset"}
        for k, v in sections.get("run", {}).items():
            cfg[k.replace("-", "_")] = _parse_value(v)
    for key in ("preset", "t_min", "T", "h", "k_max", "field", "m", "alpha", "alpha_bar", "out", "seed"):
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    for item in getattr(args, "param", None) or []:
        if "=" not in item:
            raise UsageError(f"--param expects key=value, got '{item}'")
        k, v = item.split("=", 1)
        cfg["params"][k] = _parse_value(v)
    cfg.setdefault("preset", "zero")
    cfg.setdefault("t_min", 0.0)
    cfg.setdefault("T", 2.0)
    cfg.setdefault("h", 0.01)
    cfg.setdefault("k_max", 4)
    cfg.setdefault("out", ".")
    if cfg["h"] <= 0 or cfg["T"] <= cfg["t_min"]:
        raise UsageError("need h > 0 and T > t_min")
    if cfg["preset"] not in PRESETS:
        raise UsageError(f"unknown preset '{cfg['preset']}'")
    cfg["_base_dir"] = base_dir
    return cfg


def make_potential(cfg: dict) -> Potential:
    section = {"preset": cfg["preset"], **{k: str(v) for k, v in cfg["params"].items()}}
    section.update({"t_min": str(cfg["t_min"]), "T": str(cfg["T"]), "h": str(cfg["h"])})
    if cfg["preset"] == "tabulated":
        V = potential_from_config(section, cfg["_base_dir"])
        return V
    params = {k: _parse_value(v) for k, v in section.items() if k != "preset"}
    return build_preset(cfg["preset"], params)


def echo(cfg: dict, command: str, **extra) -> dict:
    out = {k: v for k, v in cfg.items() if not k.startswith("_") and k != "out"}
    out["command"] = command
    out.update(extra)
    return out


def make_field(cfg: dict, V: Potential) -> FieldTrajectory:
    """Field from a spec: a closed-form catenoid label, 'exp:k:cos|sin:+|-' or 'random:seed'."""
    spec = str(cfg.get("field") or "random:0")
    span = (float(cfg["t_min"]), float(cfg["T"]))
    basis = circle_basis(int(cfg["k_max"]))
    if spec in catenoid.SOLUTIONS:
        if cfg["preset"] != "catenoid":
            raise UsageError(f"closed-form field '{spec}' needs --preset catenoid")
        return catenoid.closed_form_field(spec, span[0], span[1], float(cfg["h"]), int(cfg["k_max"]))
    kind, _, rest = spec.partition(":")
    a0 = np.zeros(basis.size)
    b0 = np.zeros(basis.size)
    if kind == "exp":
        parts = rest.split(":")
        if len(parts) != 3 or parts[1] not in ("cos", "sin") or parts[2] not in ("+", "-"):
            raise UsageError(f"field spec '{spec}' should look like exp:k:cos|sin:+|-")
        k = int(parts[0])
        if not 0 <= k <= basis.max_wave_number:
            raise UsageError(f"wave number {k} outside the basis (k_max={basis.max_wave_number})")
        j = 0 if k == 0 else (2 * k if parts[1] == "cos" else 2 * k - 1)
        sign = 1.0 if parts[2] == "+" else -1.0
        a0[j] = math.exp(sign * k * span[0])
        b0[j] = sign * k * a0[j]
    elif kind == "random":
        rng = np.random.default_rng(int(rest or 0))
        damp = 1.0 / (1.0 + basis.eigenvalues)
        a0 = rng.normal(size=basis.size) * damp
        b0 = rng.normal(size=basis.size) * damp
    else:
        raise UsageError(f"unknown field spec '{spec}'")
    return evolve_field(V, basis, (a0, b0), span, float(cfg["h"]), spec)


# ---------------------------------------------------------------- subcommands


def _out(cfg: dict) -> Path:
    d = Path(cfg["out"])
    d.mkdir(parents=True, exist_ok=True)
    return d


def cmd_basis(args, cfg) -> int:
    if args.kind == "circle":
        basis = circle_basis(int(cfg["k_max"]))
    else:
        basis = cluster_basis(args.n, args.clusters)
    d = _out(cfg)
    rows = [(j, float(lam), int(c)) for j, (lam, c) in enumerate(zip(basis.eigenvalues, basis.cluster_index))]
    _write_rows(d / "basis.csv", ["index", "eigenvalue", "cluster"], rows)
    rep = {"name": "basis", "holds": True, **basis.to_dict()}
    return emit_report([rep], d / "basis.json", echo(cfg, "basis", kind=args.kind, n=args.n, clusters=args.clusters))


def cmd_evolve(args, cfg) -> int:
    V = make_potential(cfg)
    f = make_field(cfg, V)
    d = _out(cfg)
    J = f.basis.size
    header = ["t"] + [f"a{j}" for j in range(J)] + [f"b{j}" for j in range(J)]
    rows = ([float(t)] + [float(x) for x in a] + [float(x) for x in b] for t, a, b in zip(f.t, f.a, f.b))
    _write_rows(d / "field.csv", header, rows)
    rep = {"name": "evolve", "holds": True, "steps": int(f.t.size - 1), "dynamic_range": f.dynamic_range}
    return emit_report([rep], d / "evolve.json", echo(cfg, "evolve"))


def cmd_profile(args, cfg) -> int:
    V = make_potential(cfg)
    f = make_field(cfg, V)
    m = int(cfg.get("m") if cfg.get("m") not in (None, "auto") else 1)
    prof = energy_profile(f, m)
    d = _out(cfg)
    write_profile_csv(prof, d / "profile.csv")
    rep = {"name": "profile", "holds": True, "m": m, "I0": float(prof.I[0]), "IT": float(prof.I[-1])}
    return emit_report([rep], d / "profile.json", echo(cfg, "profile"))


def cmd_verify(args, cfg) -> int:
    V = make_potential(cfg)
    f = make_field(cfg, V)
    ledger = verifier.build_ledger(f.potential)
    m = cfg.get("m", "auto")
    m = "auto" if m in (None, "auto") else int(m)
    alpha = cfg.get("alpha", "auto")
    alpha_bar = cfg.get("alpha_bar", "auto")
    closed_form = str(cfg.get("field")) in catenoid.SOLUTIONS
    tol = verifier.IDENTITY_TOL if closed_form else verifier.EVOLVED_IDENTITY_TOL
    reports = verifier.run_all(f, m, alpha, alpha_bar, ledger, identity_tol=tol)
    d = _out(cfg)
    _write_rows(
        d / "verify.csv",
        ["check", "holds", "worst_margin", "worst_t"],
        [(r.name, int(r.holds), float(r.worst_margin), float(r.worst_t)) for r in reports],
    )
    return emit_report(reports, d / "verify.json", echo(cfg, "verify"))


def cmd_poincare(args, cfg) -> int:
    V = make_potential(cfg)
    t1, t2 = args.span
    P = compute_map(args.lam, V, t1, t2, float(cfg["h"]))
    d = _out(cfg)
    M = P.matrix
    _write_rows(
        d / "poincare.csv",
        ["lambda", "t1", "t2", "p11", "p12", "p21", "p22", "det_residual", "trace", "kind"],
        [(P.lam, float(t1), float(t2), *[float(x) for x in M.ravel()], P.det_residual, P.trace, P.classification.kind)],
    )
    rep = {"name": "poincare", "holds": P.det_residual <= 1e-8, **P.to_dict()}
    return emit_report([rep], d / "poincare.json", echo(cfg, "poincare", lam=args.lam, span=list(args.span)))


def cmd_catenoid(args, cfg) -> int:
    d = _out(cfg)
    reports = []
    if args.scan is not None:
        lo, hi = args.scan
        lams = np.linspace(lo, hi, args.steps)
        rows = []
        for k in args.k:
            rep = catenoid.spectrum_scan(lams, k, args.scan_T, float(cfg["h"]))
            rows += [(k, float(x), float(c)) for x, c in zip(rep.lambdas, rep.coefficients)]
            reports.append(
                {
                    "name": f"spectrum_scan_k{k}",
                    "holds": rep.bound_state_free,
                    "min_abs": rep.min_abs,
                    "sign_changes": rep.sign_changes,
                    "eigenfunction_residual": rep.eigenfunction_residual,
                }
            )
        _write_rows(d / "catenoid_scan.csv", ["k", "lambda", "growing_coefficient"], rows)
    else:
        V = catenoid.catenoid_potential(0.0, max(args.times), float(cfg["h"]))
        rows = []
        worst = 0.0
        for t in args.times:
            num = compute_map(0.0, V, 0.0, t, float(cfg["h"])).matrix
            ref = catenoid.closed_form_poincare(t).matrix
            err = float(np.max(np.abs(num - ref)))
            worst = max(worst, err)
            rows.append((float(t), *[float(x) for x in num.ravel()], err))
        _write_rows(d / "catenoid_poincare.csv", ["t", "p11", "p12", "p21", "p22", "max_error"], rows)
        tt = np.linspace(0.0, max(args.times), 401)
        kern = {k: float(np.max(s.kernel_residual(tt))) for k, s in catenoid.SOLUTIONS.items()}
        reports.append({"name": "closed_form_poincare", "holds": worst <= 1e-6, "max_error": worst})
        reports.append({"name": "kernel_residuals", "holds": max(kern.values()) <= 1e-8, "residuals": kern})
    extra = {"scan": args.scan, "steps": args.steps, "k": args.k, "times": args.times}
    return emit_report(reports, d / "catenoid.json", echo(cfg, "catenoid", **extra))


def cmd_perturb(args, cfg) -> int:
    V = make_potential(cfg)
    ell = args.ell
    res = hyperbolize(V, args.lam, ell, float(cfg["h"]))
    d = _out(cfg)
    _write_rows(d / "perturb_sweep.csv", ["s", "trace"], [(float(s), float(tr)) for s, tr in res.sweep])
    rep = {
        "name": "hyperbolize",
        "holds": abs(res.new_trace) >= 2.0 or res.f is None,
        "s": res.s,
        "old_trace": res.old_trace,
        "new_trace": res.new_trace,
        "direction": res.direction,
        "notices": list(res.notices),
    }
    reports = [rep]
    if res.f is not None:
        W = shifted(V, res.f, res.s)
        decay = periodic_mode_decay(W, [args.lam], ell, 0.0, float(cfg["h"]))[0]
        reports.append(
            {"name": "periodic_decay", "holds": decay.contraction_ok, "c": decay.c, "contraction_error": decay.contraction_error}
        )
    return emit_report(reports, d / "perturb.json", echo(cfg, "perturb", lam=args.lam, ell=ell))


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="INI file with [potential] and [run] sections")
    common.add_argument("--preset", choices=PRESETS)
    common.add_argument("--param", action="append", metavar="KEY=VALUE", help="preset parameter (repeatable)")
    common.add_argument("--t-min", dest="t_min", type=float)
    common.add_argument("--T", type=float, help="end of the span")
    common.add_argument("--h", type=float, help="step size")
    common.add_argument("--k-max", dest="k_max", type=int, help="largest circle wave number")
    common.add_argument("--field", help="N1|N2|N3|k0_growing|k1_growing|k1_decaying|exp:k:cos|sin:+|-|random:SEED")
    common.add_argument("--out", help="output directory")

    p = _Parser(prog="threecircles", description=__doc__)
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    s = sub.add_parser("basis", parents=[common])
    s.add_argument("--kind", choices=("circle", "cluster"), default="circle")
    s.add_argument("--n", type=int, default=2, help="sphere dimension for the cluster basis")
    s.add_argument("--clusters", type=int, default=4)
    s.set_defaults(func=cmd_basis)

    for name, func in (("evolve", cmd_evolve), ("profile", cmd_profile)):
        s = sub.add_parser(name, parents=[common])
        s.add_argument("--m", help="cut index")
        s.set_defaults(func=func)

    s = sub.add_parser("verify", parents=[common])
    s.add_argument("--m", help="cut index or 'auto'")
    s.add_argument("--alpha", help="growth rate or 'auto'")
    s.add_argument("--alpha-bar", dest="alpha_bar", help="weight exponent or 'auto'")
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("poincare", parents=[common])
    s.add_argument("--lambda", dest="lam", type=float, required=True)
    s.add_argument("--span", type=float, nargs=2, required=True, metavar=("T1", "T2"))
    s.set_defaults(func=cmd_poincare)

    s = sub.add_parser("catenoid", parents=[common])
    s.add_argument("--scan", type=float, nargs=2, metavar=("LO", "HI"))
    s.add_argument("--steps", type=int, default=17)
    s.add_argument("--k", type=int, nargs="+", default=[0, 1])
    s.add_argument("--scan-T", dest="scan_T", type=float, default=8.0)
    s.add_argument("--times", type=float, nargs="+", default=[0.5, 1.0, 2.0, 3.0])
    s.set_defaults(func=cmd_catenoid)

    s = sub.add_parser("perturb", parents=[common])
    s.add_argument("--lambda", dest="lam", type=float, default=0.0)
    s.add_argument("--ell", type=float, default=1.0, help="period length")
    s.set_defaults(func=cmd_perturb)
    return p


def _coerce(cfg: dict) -> dict:
    for key in ("m", "alpha", "alpha_bar"):
        v = cfg.get(key)
        if isinstance(v, str) and v != "auto":
            cfg[key] = _parse_value(v)
            if isinstance(cfg[key], str):
                raise UsageError(f"--{key.replace('_', '-')} must be a number or 'auto'")
    return cfg


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = _coerce(resolve(args))
        return args.func(args, cfg)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except NUMERICAL_ERRORS as exc:
        print(f"numerical error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
