"""``tvlab`` command line: simulate, diagnose and certify, with verdict-based exit codes.

Exit codes: 0 pass (or no verdict), 2 failed verdict, 1 error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from pathlib import Path

import jsonschema
import numpy as np
import scipy

from . import __version__
from .certify import (
    backward_time_derivative,
    calibrate_tolerance,
    consistency_tolerance,
    dumps,
    energy_suite,
    file_sha256,
    fitted_gamma,
    minimizer_suite,
    onelap_suite,
    suite_report,
)
from .continuity import (
    cascade_parameters,
    critical_sequence,
    degiorgi_lemma_check,
    degiorgi_nu,
    expansion_check,
    expansion_constants,
    indicator,
    iterate_Yn,
    oscillation_cascade,
    sup_bound_check,
    sup_bound_corpus,
)
from .examples import NAMES, gaussian_bumps, make_example
from .flow import SolverConfig, evolve
from .grid import (
    Ball,
    Cylinder,
    FieldFormatError,
    OscillationData,
    read_dual,
    read_field,
    sample_analytic,
    write_dual,
    write_field,
)
from .tvmeasure import tv_slice

PASS, ERROR, FAIL = 0, 1, 2

CONFIG_SCHEMA = {
    "type": "object",
    "required": ["grid", "initial", "solver"],
    "additionalProperties": False,
    "properties": {
        "seed": {"type": "integer", "minimum": 0},
        "grid": {
            "type": "object",
            "required": ["dim", "h", "box"],
            "additionalProperties": False,
            "properties": {
                "dim": {"type": "integer", "minimum": 1, "maximum": 3},
                "h": {"type": "number", "exclusiveMinimum": 0},
                "box": {
                    "type": "array",
                    "minItems": 1,
                    "maxItems": 3,
                    "items": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
                },
            },
        },
        "initial": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "example": {"enum": list(NAMES)},
                "params": {"type": "object"},
                "t": {"type": "number"},
                "bumps": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {
                        "count": {"type": "integer", "minimum": 1},
                        "amplitude": {"type": "number", "exclusiveMinimum": 0},
                        "spread": {"type": "number", "exclusiveMinimum": 0},
                    },
                },
            },
            "oneOf": [{"required": ["example"]}, {"required": ["bumps"]}],
        },
        "solver": {
            "type": "object",
            "required": ["steps"],
            "additionalProperties": False,
            "properties": {
                "steps": {"type": "integer", "minimum": 1},
                "dt": {"type": "number", "exclusiveMinimum": 0},
                "inner_iters": {"type": "integer", "minimum": 1},
                "tolerance": {"type": "number", "exclusiveMinimum": 0},
                "epsilon": {"type": "number", "exclusiveMinimum": 0},
                "ratio": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "diagnostics": {
            "type": "object",
            "properties": {
                "points": {"type": "array", "items": {"type": "array", "items": {"type": "number"}}},
                "rhos": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}},
                "draws": {"type": "integer", "minimum": 1},
                "mode": {"enum": ["paper", "empirical"]},
            },
        },
        "io": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "out": {"type": "string"},
                "field_name": {"type": "string"},
                "dual_name": {"type": "string"},
            },
        },
    },
}


class ConfigError(ValueError):
    pass


def _path(err: jsonschema.ValidationError) -> str:
    return ".".join(str(p) for p in err.absolute_path) or "<root>"


def validate_config(cfg: dict) -> None:
    """Raise :class:`ConfigError` listing every violation as ``path: message``."""
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(cfg), key=lambda e: list(e.absolute_path))
    msgs = [f"{_path(e)}: {e.message}" for e in errors]
    if not errors:
        g = cfg["grid"]
        if len(g["box"]) != g["dim"]:
            msgs.append(f"grid.box: expected {g['dim']} intervals, got {len(g['box'])}")
        for i, (lo, hi) in enumerate(g["box"]):
            if not hi > lo:
                msgs.append(f"grid.box.{i}: upper end must exceed lower end")
        ini = cfg["initial"]
        if "bumps" in ini and "seed" not in cfg:
            msgs.append("seed: required when initial.bumps is used")
    if msgs:
        raise ConfigError("invalid config:\n  " + "\n  ".join(msgs))


def config_hash(cfg: dict) -> str:
    return hashlib.sha256(json.dumps(cfg, sort_keys=True, separators=(",", ":")).encode()).hexdigest()


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _emit(args, name: str, text: str) -> None:
    if getattr(args, "out", None):
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / name).write_text(text)
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _json(obj) -> str:
    def default(o):
        if isinstance(o, np.generic):
            return o.item()
        if isinstance(o, np.ndarray):
            return o.tolist()
        if isinstance(o, tuple):
            return list(o)
        raise TypeError(f"not serializable: {type(o)}")

    return json.dumps(obj, indent=2, sort_keys=True, default=default) + "\n"


def _inputs(args, *paths) -> dict:
    out = {"seed": getattr(args, "seed", None)}
    for p in paths:
        if p:
            out[str(p)] = file_sha256(p)
    return out


def _tol(args, h: float, dt: float) -> tuple[float, float]:
    c = args.tol_c if args.tol_c is not None else calibrate_tolerance(h, dt)
    return c, consistency_tolerance(c, h, dt)


def _point(args, f) -> tuple[tuple[float, ...], float]:
    if len(args.point) != f.dim + 1:
        raise ValueError(f"--point needs {f.dim} space coordinates and a time, got {len(args.point)} values")
    return tuple(args.point[:-1]), float(args.point[-1])


def _field_dt(field_) -> float:
    return float(np.diff(field_.times).max()) if field_.times.size > 1 else field_.h / 4


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_simulate(args) -> int:
    if not args.config:
        raise ConfigError("simulate needs --config")
    cfg = json.loads(Path(args.config).read_text())
    validate_config(cfg)
    g, ini, sol = cfg["grid"], cfg["initial"], cfg["solver"]
    if args.seed is not None:
        cfg["seed"] = args.seed
    t_start = float(ini.get("t", 0.0))
    if "example" in ini:
        ex = make_example(ini["example"], **ini.get("params", {}))
        if ex.dim != g["dim"]:
            raise ConfigError(f"initial.example: {ex.name} is {ex.dim}-dimensional, grid.dim is {g['dim']}")
        fn = ex.value
    else:
        b = ini["bumps"]
        fn = gaussian_bumps(cfg["seed"], b.get("count", 6), b.get("amplitude", 4.0), b.get("spread", 0.3), dim=g["dim"])
    f0 = sample_analytic(fn, [tuple(x) for x in g["box"]], g["h"], [t_start])
    kw = {k: sol[k] for k in ("inner_iters", "tolerance", "epsilon") if k in sol}
    scfg = SolverConfig.for_grid(g["h"], g["dim"], sol.get("dt"), ratio=sol.get("ratio", 0.015), **kw)
    res = evolve(f0, sol["steps"], scfg)
    io_ = cfg.get("io", {})
    out = Path(args.out or io_.get("out", "."))
    out.mkdir(parents=True, exist_ok=True)
    fpath = out / io_.get("field_name", "field.tvf")
    zpath = out / io_.get("dual_name", "dual.tvz")
    write_field(res.field, fpath)
    write_dual(res.dual, zpath)
    ok = all(r.converged and r.descent >= -scfg.tolerance * max(1.0, r.objective_prev) for r in res.reports)
    manifest = {
        "config": cfg,
        "config_sha256": config_hash(cfg),
        "versions": {"tvlab": __version__, "numpy": np.__version__, "scipy": scipy.__version__},
        "solver": {"dt": scfg.dt, "primal_step": scfg.primal_step, "dual_step": scfg.dual_step,
                   "inner_iters": scfg.inner_iters, "tolerance": scfg.tolerance},
        "steps": [r.as_dict() for r in res.reports],
        "outputs": {fpath.name: file_sha256(fpath), zpath.name: file_sha256(zpath)},
        "dual_sup_norm": res.dual.sup_norm,
        "verdict": "pass" if ok else "fail",
    }
    (out / "manifest.json").write_text(_json(manifest))
    return PASS if ok else FAIL


def cmd_indicator(args) -> int:
    f = read_field(args.field)
    curve = indicator(f, args.point, args.rhos, tuple(args.fit) if args.fit else None)
    _emit(args, "indicator.csv", curve.to_csv())
    return PASS


def cmd_tv(args) -> int:
    f = read_field(args.field)
    x0, t = _point(args, f)
    res = tv_slice(f, f.time_index(t), Ball(tuple(x0), args.rho))
    _emit(args, "tv.json", _json({"primal": res.primal, "dual_lower": res.dual_lower, "gap": res.gap}))
    return PASS


def cmd_example(args) -> int:
    params = {}
    for item in args.param or []:
        k, _, v = item.partition("=")
        params[k] = float(v)
    ex = make_example(args.name, **params)
    lo, hi = args.box
    f = sample_analytic(ex.value, [(lo, hi)] * ex.dim, args.h, args.times)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_field(f, out)
    return PASS


def cmd_certify_minimizer(args) -> int:
    f = read_field(args.field)
    if args.example:
        ex = make_example(args.example)
        u_t = np.stack([np.broadcast_to(ex.time_derivative(f.coords(), float(t)), f.shape) for t in f.times])
    else:
        u_t = backward_time_derivative(f)
    x0 = _point(args, f)[0] if args.point else tuple(0.0 for _ in range(f.dim))
    window = tuple(args.window) if args.window else (float(f.times[0]), float(f.times[-1]))
    dt = args.dt if args.dt is not None else _field_dt(f)
    c, tol = _tol(args, f.h, dt)
    res = minimizer_suite(f, u_t, Ball(x0, args.rho), window, args.draws, args.seed, tol)
    rep = suite_report("minimizer", res, _inputs(args, args.field), {"C": c, "h": f.h, "dt": dt})
    _emit(args, "certify_minimizer.json", dumps(rep) + "\n")
    return PASS if res.passed else FAIL


def cmd_certify_energy(args) -> int:
    f = read_field(args.field)
    c, tol = _tol(args, f.h, _field_dt(f))
    res = energy_suite(f, args.draws, args.seed, args.gamma, tol)
    g_fit = fitted_gamma(res)
    ok = res.passed and g_fit <= args.gamma
    rep = suite_report("energy", res, _inputs(args, args.field), {"C": c, "gamma": args.gamma, "fitted_gamma": g_fit})
    rep["verdict"] = "pass" if ok else "fail"
    _emit(args, "certify_energy.json", dumps(rep) + "\n")
    return PASS if ok else FAIL


def cmd_certify_onelap(args) -> int:
    f = read_field(args.field)
    z = read_dual(args.dual)
    c, tol = _tol(args, f.h, _field_dt(f))
    res = onelap_suite(f, z, args.draws, args.seed, tol)
    rep = suite_report("onelap", res, _inputs(args, args.field, args.dual), {"C": c, "dual_sup_norm": z.sup_norm})
    _emit(args, "certify_onelap.json", dumps(rep) + "\n")
    return PASS if res.passed else FAIL


def _y0(text: str, nu: float) -> float:
    if text == "at-critical":
        return nu
    if text == "twice-critical":
        return 2 * nu
    return float(text)


def cmd_degiorgi_iterate(args) -> int:
    const = degiorgi_nu(args.N, args.gamma)
    y0 = _y0(args.Y0, const.nu)
    res = iterate_Yn(y0, const, args.steps)
    rep = {
        "constants": const.as_dict(),
        "Y0": y0,
        "sequence": res.sequence,
        "ratios": res.ratios(),
        "expected_critical_ratio": const.b ** (-const.N),
        "verdict": res.verdict,
        "step": res.step,
    }
    if args.Y0 == "at-critical":
        exact = critical_sequence(const, len(res.sequence) - 1)
        rep["max_rel_error_vs_critical"] = max(abs(a - b) / b for a, b in zip(res.sequence, exact))
    _emit(args, "degiorgi_iterate.json", _json(rep))
    return PASS


def _osc_closed(f, center, radius, lo, hi) -> OscillationData:
    ms = f.time_indices(lo, hi, closed_left=True)
    mask = f.ball_mask(Ball(tuple(center), radius))
    if ms.size == 0 or not mask.any():
        raise ValueError("oscillation window contains no sample")
    v = f.data[ms][:, mask]
    return OscillationData(float(v.max()), float(v.min()), float(v.max() - v.min()))


def lemma_oscillation(f, center, s, rho, xi, rounds: int = 8) -> OscillationData:
    """Oscillation data valid on ``Q_{2 rho}(2 xi omega)``, found by enlarging the window until stable."""
    theta = 1.0
    osc = _osc_closed(f, center, 2 * rho, s - 2 * rho * theta, s)
    for _ in range(rounds):
        need = 2 * xi * osc.omega
        if need <= theta:
            return osc
        theta = need
        lo = max(s - 2 * rho * theta, float(f.times[0]))
        osc = _osc_closed(f, center, 2 * rho, lo, s)
    return osc


def _xi(args, dim: int) -> float:
    return cascade_parameters(dim, args.gamma, args.mode, args.xi).xi


def cmd_degiorgi_lemma(args) -> int:
    f = read_field(args.field)
    y, s = _point(args, f)
    xi = _xi(args, f.dim)
    osc = lemma_oscillation(f, y, s, args.rho, xi)
    v = degiorgi_lemma_check(f, args.point, args.rho, xi, osc, args.sign, args.nu, args.gamma)
    rep = {**v.as_dict(), "mode": args.mode, "inputs": _inputs(args, args.field)}
    _emit(args, "degiorgi_lemma.json", _json(rep))
    return FAIL if v.verdict == "fail" else PASS


def cmd_degiorgi_expansion(args) -> int:
    f = read_field(args.field)
    y, s = _point(args, f)
    const = expansion_constants(f.dim, args.gamma)
    if args.mode == "empirical":
        const = const.relaxed(args.relax)
    xi = args.xi
    hi = min(s + 2 * args.rho, float(f.times[-1]))
    osc = _osc_closed(f, y, 2 * args.rho, s, hi)
    v = expansion_check(f, y, s, args.rho, xi, osc, const)
    rep = {**v.as_dict(), "mode": args.mode, "delta": const.delta, "epsilon": const.epsilon,
           "inputs": _inputs(args, args.field)}
    _emit(args, "degiorgi_expansion.json", _json(rep))
    return FAIL if v.verdict == "fail" else PASS


def cmd_cascade(args) -> int:
    f = read_field(args.field)
    st = oscillation_cascade(f, args.point, args.rho0, args.mode, args.xi, args.gamma)
    rep = {**st.as_dict(), "inputs": _inputs(args, args.field)}
    _emit(args, "cascade.json", _json(rep))
    return FAIL if st.verdict == "fail" else PASS


def cmd_supbound(args) -> int:
    f = read_field(args.field)
    r = args.r if args.r is not None else f.dim + 1.0
    if args.point:
        y, s = _point(args, f)
        if args.t is None or args.rho is None:
            raise ValueError("single-cylinder supbound needs --t and --rho")
        res = sup_bound_check(f, y, s, args.t, args.rho, r)
        rep = {**res.as_dict(), "r": r}
        ok = math.isfinite(res.ratio)
    else:
        g_fit, details = sup_bound_corpus(f, args.draws, args.seed, r)
        rep = {"gamma_fit": g_fit, "r": r, "draws": details, "inputs": _inputs(args, args.field)}
        ok = math.isfinite(g_fit)
    rep["verdict"] = "pass" if ok else "fail"
    _emit(args, "supbound.json", _json(rep))
    return PASS if ok else FAIL


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--field", help="TVF1 field file")
    common.add_argument("--out", help="output directory (stdout if omitted)")
    common.add_argument("--seed", type=int, default=None, help="seed for randomized suites (required by them)")
    common.add_argument("--point", type=_floats, help="x,y[,z],t")
    common.add_argument("--rhos", type=_floats, help="comma-separated radii, decreasing")
    common.add_argument("--mode", choices=["paper", "empirical"], default="empirical")

    p = argparse.ArgumentParser(prog="tvlab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"tvlab {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", parents=[common], help="evolve initial data and write TVF1/TVZ1 files")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("indicator", parents=[common], help="indicator curve as CSV")
    s.add_argument("--fit", type=_floats, help="lo,hi radius range for the slope fit")
    s.set_defaults(func=cmd_indicator)

    s = sub.add_parser("tv", parents=[common], help="primal TV and dual lower bound of one slice")
    s.add_argument("--rho", type=float, required=True)
    s.set_defaults(func=cmd_tv)

    s = sub.add_parser("example", parents=[common], help="materialize an analytic example")
    s.add_argument("name", choices=list(NAMES))
    s.add_argument("--box", type=_floats, required=True, help="lo,hi (same for every axis)")
    s.add_argument("--h", type=float, required=True)
    s.add_argument("--times", type=_floats, required=True)
    s.add_argument("--param", action="append", help="key=value example parameter")
    s.set_defaults(func=cmd_example)

    cert = sub.add_parser("certify", help="randomized certification suites")
    csub = cert.add_subparsers(dest="which", required=True)
    tolp = argparse.ArgumentParser(add_help=False)
    tolp.add_argument("--tol-c", type=float, default=None, help="C in tol = C (h + dt); calibrated if omitted")
    s = csub.add_parser("minimizer", parents=[common, tolp])
    s.add_argument("--rho", type=float, required=True)
    s.add_argument("--window", type=_floats)
    s.add_argument("--example", choices=list(NAMES), help="use the example's closed-form u_t")
    s.add_argument("--dt", type=float)
    s.add_argument("--draws", type=int, default=50)
    s.set_defaults(func=cmd_certify_minimizer)
    s = csub.add_parser("energy", parents=[common, tolp])
    s.add_argument("--draws", type=int, default=100)
    s.add_argument("--gamma", type=float, default=2.0)
    s.set_defaults(func=cmd_certify_energy)
    s = csub.add_parser("onelap", parents=[common, tolp])
    s.add_argument("--dual", required=True, help="TVZ1 dual file")
    s.add_argument("--draws", type=int, default=50)
    s.set_defaults(func=cmd_certify_onelap)

    dg = sub.add_parser("degiorgi", help="DeGiorgi constants and checks")
    dsub = dg.add_subparsers(dest="which", required=True)
    s = dsub.add_parser("iterate", parents=[common])
    s.add_argument("--N", type=int, required=True)
    s.add_argument("--gamma", type=float, required=True)
    s.add_argument("--Y0", default="at-critical", help="number, at-critical or twice-critical")
    s.add_argument("--steps", type=int, default=20)
    s.set_defaults(func=cmd_degiorgi_iterate)
    s = dsub.add_parser("lemma", parents=[common])
    s.add_argument("--rho", type=float, required=True)
    s.add_argument("--xi", type=float, default=0.125)
    s.add_argument("--gamma", type=float, default=2.0)
    s.add_argument("--sign", choices=["plus", "minus"], default="minus")
    s.add_argument("--nu", type=float, help="critical density (default: closed-form value)")
    s.set_defaults(func=cmd_degiorgi_lemma)
    s = dsub.add_parser("expansion", parents=[common])
    s.add_argument("--rho", type=float, required=True)
    s.add_argument("--xi", type=float, default=0.125)
    s.add_argument("--gamma", type=float, default=2.0)
    s.add_argument("--relax", type=float, default=256.0, help="delta multiplier in empirical mode")
    s.set_defaults(func=cmd_degiorgi_expansion)

    s = sub.add_parser("cascade", parents=[common], help="oscillation-decay cascade")
    s.add_argument("--rho0", type=float, required=True)
    s.add_argument("--xi", type=float, default=0.125)
    s.add_argument("--gamma", type=float, default=2.0)
    s.set_defaults(func=cmd_cascade)

    s = sub.add_parser("supbound", parents=[common], help="sup-bound shape ratio")
    s.add_argument("--r", type=float)
    s.add_argument("--t", type=float)
    s.add_argument("--rho", type=float)
    s.add_argument("--draws", type=int, default=20)
    s.set_defaults(func=cmd_supbound)
    return p


def _require(args) -> None:
    needs_field = args.func not in (cmd_simulate, cmd_example, cmd_degiorgi_iterate)
    if needs_field and not args.field:
        raise ValueError("--field is required")
    needs_point = args.func in (cmd_indicator, cmd_tv, cmd_degiorgi_lemma, cmd_degiorgi_expansion, cmd_cascade)
    if needs_point and not args.point:
        raise ValueError("--point is required")
    if args.func is cmd_indicator and not args.rhos:
        raise ValueError("--rhos is required")
    randomized = (cmd_certify_minimizer, cmd_certify_energy, cmd_certify_onelap)
    if (args.func in randomized or (args.func is cmd_supbound and not args.point)) and args.seed is None:
        raise ValueError("--seed is required for randomized suites")
    if args.func is cmd_example and not args.out:
        raise ValueError("example needs --out FILE")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _require(args)
        return args.func(args)
    except (ConfigError, FieldFormatError, ValueError, KeyError, OSError) as exc:
        code = getattr(exc, "code", None)
        prefix = f"error[{code}]" if isinstance(code, str) else "error"
        print(f"{prefix}: {exc}", file=sys.stderr)
        return ERROR


if __name__ == "__main__":
    sys.exit(main())
