"""Command-line front end.

Every subcommand writes plain files (CSV at 17 significant digits, JSON
reports tagged ``xcurve-report/1``) and prints a JSON summary on stdout.
Module errors become a JSON error record and exit status 1; usage errors
exit with status 2.

Reports hold no clock readings, so two runs with the same flags produce the
same bytes. Wall time goes to ``timing.json`` next to the report.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from pathlib import Path
from typing import Any, Sequence

import numpy as np
import sympy as sp
import yaml

from . import __version__, algebra, so2, so3
from .errors import ProfileInvalid, XCurveError, _jsonable
from .numerics.integrate import IntegratorConfig
from .profiles import EVEN, ODD, R, AnalyticProfile, RadialProfile, SampledProfile, named_profile

REPORT_SCHEMA = "xcurve-report/1"
ERROR_SCHEMA = "xcurve-error/1"
PROFILE_TOL = 1e-6
CANONICAL = {"so3": (-1.0, 1.0), "so2": (0.0, 1.0)}


# ------------------------------------------------------------------ output


def _fmt(v: float) -> str:
    return format(float(v), ".16e")


def write_csv(path: Path, columns: dict[str, Sequence[float]]) -> None:
    names = list(columns)
    cols = [np.asarray(columns[k], float) for k in names]
    lines = [",".join(names)]
    for row in zip(*cols):
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n")


def read_csv(path: str | Path) -> dict[str, np.ndarray]:
    try:
        data = np.genfromtxt(path, delimiter=",", names=True, dtype=float)
    except (OSError, ValueError) as exc:
        raise ProfileInvalid(f"cannot read CSV {path}", defects=[str(exc)]) from None
    return {name: np.atleast_1d(data[name]) for name in data.dtype.names}


def _dumps(obj: Any) -> str:
    return json.dumps(_jsonable(obj), indent=2, allow_nan=True) + "\n"


def write_json(path: Path, obj: Any) -> None:
    path.write_text(_dumps(obj))


def _report(command: dict, seed: int | None, tolerances: dict, **sections) -> dict:
    out = {"schema": REPORT_SCHEMA, "version": __version__, "command": command, "seed": seed,
           "tolerances": tolerances}
    out.update(sections)
    out.setdefault("warnings", [])
    return out


def _out_dir(path: str) -> Path:
    d = Path(path)
    d.mkdir(parents=True, exist_ok=True)
    return d


# --------------------------------------------------------------- profiles


def _load_config(path: str) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ProfileInvalid(f"cannot read profile config {path}", defects=[str(exc)]) from None
    try:
        cfg = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ProfileInvalid("profile config is not valid YAML/JSON", defects=[str(exc)]) from None
    if not isinstance(cfg, dict):
        raise ProfileInvalid("profile config must be a mapping", defects=["top level is not a mapping"])
    return cfg


def _expr(text: str, params: dict) -> sp.Expr:
    local = {"r": R, "pi": sp.pi}
    local.update({k: sp.Float(v) if not isinstance(v, int) else sp.Integer(v) for k, v in params.items()})
    try:
        e = sp.sympify(text, locals=local)
    except (sp.SympifyError, TypeError, SyntaxError) as exc:
        raise ProfileInvalid("cannot parse profile expression", defects=[f"{text!r}: {exc}"]) from None
    extra = {s.name for s in e.free_symbols} - {"r"}
    if extra:
        raise ProfileInvalid("profile expression has unbound symbols", defects=[f"unbound: {sorted(extra)}"])
    return e.subs({s: R for s in e.free_symbols if s.name == "r"})


def _parities(symmetry: str) -> dict[str, tuple[str, str]]:
    if symmetry == "so3":
        return {"y": (ODD, ODD)}
    return {"y1": (ODD, EVEN), "y2": (EVEN, ODD)}


def _endpoint_conditions(symmetry: str) -> list[tuple[str, float, float]]:
    """``(component, end, y'(end))`` with ``y(end) = 0`` at each collapsing end (arclength units)."""
    if symmetry == "so3":
        return [("y", 0, 1.0), ("y", 1, -1.0)]
    return [("y1", 0, 1.0), ("y2", 1, -1.0)]


def _one_sided_second(prof: RadialProfile, grid: np.ndarray | None, values: np.ndarray | None, end: int) -> float:
    """Second derivative at an end from the raw samples (or the exact profile)."""
    if grid is None:
        return float(prof(prof.a if end == 0 else prof.b, 2))
    k = min(8, grid.size)
    x = grid[:k] if end == 0 else grid[-k:]
    v = values[:k] if end == 0 else values[-k:]
    x0 = x[0] if end == 0 else x[-1]
    c = np.polynomial.polynomial.polyfit(x - x0, v, min(k - 1, 6))
    return float(2.0 * c[2])


def validate_profile(config: dict, symmetry: str | None = None) -> dict:
    """Parse, normalize and check a profile config.

    Returns ``{"symmetry", "profiles", "normalization", "checks"}`` with the
    profiles in the canonical coordinate (so3: ``[-1, 1]``, so2: ``[0, 1]``,
    both arclength up to the scale ``c`` reported in ``normalization``).
    Raises :class:`ProfileInvalid` listing every failed condition.
    """
    sym = symmetry or config.get("symmetry")
    if sym not in CANONICAL:
        raise ProfileInvalid("symmetry must be so3 or so2 for a profile", defects=[f"symmetry: {sym!r}"])
    if symmetry and config.get("symmetry") not in (None, symmetry):
        raise ProfileInvalid("config symmetry does not match the command",
                             defects=[f"config: {config.get('symmetry')}, command: {symmetry}"])
    spec = config.get("profile")
    if isinstance(spec, str):
        spec = {"kind": "analytic", "name": spec}
    if not isinstance(spec, dict):
        raise ProfileInvalid("missing profile section", defects=["profile: expected a mapping or a name"])
    kind = spec.get("kind", "analytic")
    parities = _parities(sym)
    names = list(parities)
    y0 = float(spec.get("y0", 1.0))
    if not (math.isfinite(y0) and y0 > 0):
        raise ProfileInvalid("y0 must be a positive number", defects=[f"y0 = {y0}"])
    raw: dict[str, RadialProfile] = {}
    samples: dict[str, tuple[np.ndarray, np.ndarray]] = {}

    if kind == "analytic":
        if "name" in spec:
            prof = named_profile(spec["name"])
            if set(prof) != set(names):
                raise ProfileInvalid(f"profile {spec['name']!r} is not a {sym} profile", defects=[f"components {sorted(prof)}"])
            a, b = CANONICAL[sym]
            raw = prof
        else:
            exprs = spec.get("expression")
            if sym == "so3" and isinstance(exprs, str):
                exprs = {"y": exprs}
            if not isinstance(exprs, dict) or set(exprs) != set(names):
                raise ProfileInvalid("analytic profile needs an expression per component", defects=[f"expected {names}"])
            a, b = (float(v) for v in spec.get("domain", CANONICAL[sym]))
            params = dict(spec.get("parameters", {}) or {})
            raw = {k: AnalyticProfile(_expr(exprs[k], params), a, b, parities[k], k) for k in names}
    elif kind in ("samples", "sampled"):
        interp = spec.get("interpolation", "clamped-cubic")
        if interp != "clamped-cubic":
            raise ProfileInvalid("unsupported interpolation", defects=[f"interpolation: {interp!r}"])
        grid = np.asarray(spec.get("grid", []), float)
        vals = spec.get("values")
        if sym == "so3" and not isinstance(vals, dict):
            vals = {"y": vals}
        if not isinstance(vals, dict) or set(vals) != set(names):
            raise ProfileInvalid("sampled profile needs values per component", defects=[f"expected {names}"])
        if grid.ndim != 1 or grid.size < 8:
            raise ProfileInvalid("sample grid needs at least 8 points", defects=[f"grid size {grid.size}"])
        if not np.all(np.diff(grid) > 0):
            raise ProfileInvalid("sample grid must be strictly increasing", defects=["grid not increasing"])
        a, b = float(grid[0]), float(grid[-1])
        for k in names:
            v = np.asarray(vals[k], float)
            samples[k] = (grid, v)
            raw[k] = SampledProfile(grid, v, parities[k], k)
    else:
        raise ProfileInvalid("profile kind must be analytic or samples", defects=[f"kind: {kind!r}"])

    if not b > a:
        raise ProfileInvalid("profile domain is empty", defects=[f"domain [{a}, {b}]"])

    # endpoint conditions in arclength s = y0 (r - a)
    defects: list[str] = []
    checks: dict[str, float] = {}
    for comp, end, want in _endpoint_conditions(sym):
        prof = raw[comp]
        e = a if end == 0 else b
        tag = f"{comp}({'a' if end == 0 else 'b'})"
        val = float(prof(e))
        d1 = float(prof(e, 1)) / y0
        g, v = samples.get(comp, (None, None))
        d2 = _one_sided_second(prof, g, v, end) / (y0 * y0)
        checks[f"value {tag}"] = val
        checks[f"first_derivative_defect {tag}"] = d1 - want
        checks[f"parity_defect {tag}"] = d2
        if not np.isfinite(val) or abs(val) > PROFILE_TOL:
            defects.append(f"value: {tag} = {val:.6g}, expected 0")
        if not np.isfinite(d1) or abs(d1 - want) > PROFILE_TOL:
            defects.append(f"first derivative: {comp}'/y0 at {'a' if end == 0 else 'b'} = {d1:.12g}, expected {want:g}")
        if not np.isfinite(d2) or abs(d2) > PROFILE_TOL:
            defects.append(f"parity: {comp}'' at {'a' if end == 0 else 'b'} = {d2:.6g}, expected 0 (odd extension)")
    rr = np.linspace(a, b, 2001)[1:-1]
    for comp in names:
        v = np.asarray(raw[comp](rr), float)
        if not np.all(np.isfinite(v)) or np.any(v <= 0):
            defects.append(f"positivity: {comp} <= 0 inside the domain")
    if defects:
        raise ProfileInvalid(f"{sym} profile fails the endpoint conditions", defects=defects, checks=checks)

    # rescale to the canonical coordinate
    ca, cb = CANONICAL[sym]
    length = y0 * (b - a)
    c = (cb - ca) / length
    if (a, b, y0) == (ca, cb, 1.0):
        prof = raw
    elif kind == "analytic":
        t = sp.Symbol("t", real=True)
        back = a + (t - ca) / (c * y0)
        prof = {k: AnalyticProfile((c * raw[k].expr.subs(R, back)).subs(t, R), ca, cb, parities[k], k) for k in names}
    else:
        prof = {k: SampledProfile(ca + c * y0 * (g - a), c * v, parities[k], k) for k, (g, v) in samples.items()}
    profiles = prof["y"] if sym == "so3" else so2.ProfileSO2(prof["y1"], prof["y2"])
    return {
        "symmetry": sym,
        "profiles": profiles,
        "normalization": {"y0": y0, "domain": [a, b], "scale": c, "canonical_domain": [ca, cb]},
        "checks": checks,
    }


# --------------------------------------------------------------- commands


def _tolerances(args) -> dict:
    return {"solve": args.tol, "eps_singular": args.eps_singular, "grid": args.grid}


def _config(args) -> IntegratorConfig:
    if args.eps_singular is None:
        return IntegratorConfig()
    try:
        return IntegratorConfig(singular_offset=args.eps_singular)
    except ValueError as exc:
        raise _Usage(str(exc)) from None


def _echo(args, skip=("out", "func")) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _residual_section(rep) -> dict:
    return rep.to_dict()


def cmd_solve(args) -> dict:
    cfg_file = _load_config(args.profile)
    prof = validate_profile(cfg_file, args.symmetry)
    out = _out_dir(args.out)
    cfg = _config(args)
    rr = np.linspace(*CANONICAL[args.symmetry], args.grid)
    warnings: list[str] = []
    if args.symmetry == "so3":
        y = prof["profiles"]
        so3.validate_y(y, tol=PROFILE_TOL)
        sigma = so3.SquareOf(y, even=so3.is_even_profile(y))
        sol = so3.solve_sigma(sigma, cfg, tol=args.tol)
        so3.finish(sol, y, args.grid)
        st = sol.state(rr)
        g = sol.metric
        comps = sol.residual.components
        write_csv(out / "solution.csv", {
            "r": rr, "l": st[0], "lp": st[1], "f": g.f(rr), "h": g.h(rr), "sigma": np.asarray(y(rr)) ** 2,
            "res_rr": comps["rr"], "res_QQ": comps["QQ"],
        })
        degree = {"winding_J0": sol.degree.to_dict() if sol.degree else None}
        params = {"alpha": sol.alpha, "beta": sol.beta, "scalar_curvature_ends": list(sol.scalar)}
        path = [{"q": p.p, "alpha": p.x[0], "beta": p.x[1]} for p in sol.path.points] if sol.path else []
    else:
        y = prof["profiles"]
        so2.validate_y(y, tol=PROFILE_TOL)
        sol = so2.solve(y, cfg, tol=args.tol, n_grid=args.grid, validate=False)
        st = sol.state(rr)
        g = sol.metric
        comps = sol.residual.components
        write_csv(out / "solution.csv", {
            "r": rr, "l1": st[0], "l2": st[2], "l1p": st[1], "l2p": st[3], "h": g.h(rr), "f1": g.f1(rr),
            "f2": g.f2(rr), "res_rr": comps["rr"], "res_11": comps["11"], "res_22": comps["22"],
        })
        degree = {"G0_degree": sol.degree.to_dict() if sol.degree else None}
        params = {"alpha": list(sol.alpha), "beta": list(sol.beta), "bounds_margin": sol.extra.get("bounds_margin")}
        path = [{"p": p.p, "x": list(p.x)} for p in sol.path.points] if sol.path else []
        if not sol.extra.get("bounds_hold", True):
            warnings.append("maximum-principle bounds fail on the output grid")
    if "warning" in sol.extra:
        warnings.append(sol.extra["warning"])
    if not sol.extra.get("truncation_inactive", True):
        warnings.append("truncation active somewhere on the output grid")
    report = _report(_echo(args), args.seed, _tolerances(args), normalization=prof["normalization"],
                     profile_checks=prof["checks"], parameters=params, path=path,
                     residual=_residual_section(sol.residual), degree=degree,
                     checks={k: v for k, v in sol.extra.items() if k not in ("sigma0", "warning")},
                     warnings=warnings)
    write_json(out / "report.json", report)
    return {"out": str(out), "residual_sup": sol.residual.sup, "warnings": warnings}


def _su2_record(inp, out, residual, extra=None) -> dict:
    rec = {"input": list(map(float, inp)), "output": list(map(float, out)),
           "residual": residual, "signature": list(algebra.signature(out))}
    if extra:
        rec.update(extra)
    return rec


def _triple(text: str) -> list[float]:
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected three comma-separated numbers, got {text!r}") from None
    if len(vals) != 3:
        raise argparse.ArgumentTypeError(f"expected three comma-separated numbers, got {text!r}")
    return vals


def cmd_su2(args) -> list[dict]:
    records = []
    if args.forward is not None:
        X = algebra.su2_cross(args.forward)
        try:
            alt = np.diag(algebra.cross_from_einstein(np.diag(args.forward), algebra.su2_einstein(args.forward)))
            res = float(np.max(np.abs(alt - X)))
        except XCurveError:
            res = None
        records.append(_su2_record(args.forward, X, res, {"mode": "forward"}))
    if args.solve is not None:
        rho = algebra.su2_solve(args.solve)
        res = float(np.max(np.abs(algebra.su2_cross(rho) - np.asarray(args.solve))))
        records.append(_su2_record(args.solve, rho, res, {"mode": "solve"}))
    if args.iterate is not None:
        if args.rho is None:
            raise _Usage("--iterate needs --rho")
        orbit = algebra.su2_iterate(args.rho, args.iterate, normalize=args.normalize)
        for k in range(1, len(orbit)):
            records.append(_su2_record(orbit[k - 1], orbit[k], None,
                                       {"mode": "iterate", "step": k, "lambda": algebra.lambda_ratio(orbit[k])}))
    if args.lincheck:
        rng = np.random.default_rng(args.seed)
        for _ in range(args.directions):
            h = rng.standard_normal(3)
            d = algebra.su2_linearization_check(h, args.step)
            records.append(_su2_record(h, [d], d, {"mode": "lincheck", "step": args.step}))
    if not records:
        raise _Usage("su2 needs one of --forward, --solve, --iterate, --lincheck")
    return records


def _write_solution_files(out: Path, tag: str, sol, rr: np.ndarray) -> None:
    st = sol.state(rr)
    write_csv(out / f"l_{tag}.csv", {"r": rr, "l": st[0], "lp": st[1]})
    comps = sol.residual.components
    write_csv(out / f"metric_{tag}.csv", {"r": rr, "f": sol.metric.f(rr), "h": sol.metric.h(rr),
                                         "res_rr": comps["rr"], "res_QQ": comps["QQ"]})


def cmd_nonuniq(args) -> dict:
    from . import nonuniq

    out = _out_dir(args.out)
    t0 = time.perf_counter()
    cert = nonuniq.run(n_grid=args.grid)
    obstruction_error = None
    try:
        nonuniq.isometry_obstruction(cert)
    except XCurveError as exc:
        obstruction_error = exc.to_dict()
    rr = np.linspace(-1.0, 1.0, args.grid)
    write_csv(out / "sigma.csv", {"r": rr, "sigma": cert.sigma.values(rr), "y": cert.y(rr)})
    for tag, sol in cert.solutions().items():
        _write_solution_files(out, tag, sol, rr)
    data = cert.to_dict()
    timings = data.pop("timings_s", {})
    data = {"schema": REPORT_SCHEMA, "version": __version__, "command": _echo(args), "seed": args.seed, **data}
    if obstruction_error:
        data["warnings"] = [obstruction_error]
    write_json(out / "certificate.json", data)
    write_json(out / "timing.json", {"wall_time_s": time.perf_counter() - t0, **timings})
    return {"out": str(out), "residual_sup": max(r["sup"] for r in cert.residuals.values()),
            "p_star": cert.p_star, "alpha_star": cert.alpha_star, "alpha_hat": cert.alpha_hat}


def _metric_from_csv(path: str, symmetry: str) -> tuple[np.ndarray, Any]:
    data = read_csv(path)
    need = ["r", "f", "h"] if symmetry == "so3" else ["r", "h", "f1", "f2"]
    missing = [k for k in need if k not in data]
    if missing:
        raise ProfileInvalid("metric CSV lacks columns", defects=[f"missing {missing}"])
    r = data["r"]
    fit = lambda v, par, name: SampledProfile(r, v, par, name, degree=7)  # noqa: E731
    if symmetry == "so3":
        if (r[0], r[-1]) != CANONICAL["so3"]:
            raise ProfileInvalid("so3 metric grid must span [-1, 1]", defects=[f"grid [{r[0]}, {r[-1]}]"])
        return r, so3.MetricSO3(fit(data["h"], (EVEN, EVEN), "h"), fit(data["f"], (ODD, ODD), "f"))
    if (r[0], r[-1]) != CANONICAL["so2"]:
        raise ProfileInvalid("so2 metric grid must span [0, 1]", defects=[f"grid [{r[0]}, {r[-1]}]"])
    return r, so2.MetricSO2(fit(data["h"], (EVEN, EVEN), "h"), fit(data["f1"], (ODD, EVEN), "f1"),
                            fit(data["f2"], (EVEN, ODD), "f2"))


def cmd_verify(args) -> dict:
    prof = validate_profile(_load_config(args.profile), args.symmetry)
    sym = prof["symmetry"]
    r, g = _metric_from_csv(args.metric, sym)
    y = prof["profiles"]
    if sym == "so3":
        x_rr, x_qq = so3.forward_cross(g)
        yy = np.asarray(y(r), float)
        comps = {"rr": x_rr(r) - 1.0, "QQ": x_qq(r) - yy * yy}
    else:
        x_rr, x_11, x_22 = so2.forward_cross(g)
        y1, y2 = np.asarray(y.y1(r), float), np.asarray(y.y2(r), float)
        comps = {"rr": x_rr(r) - 1.0, "11": x_11(r) - y1 * y1, "22": x_22(r) - y2 * y2}
    sup = max(float(np.max(np.abs(v))) for v in comps.values())
    residual = {"sup": sup, "components": {k: float(np.max(np.abs(v))) for k, v in comps.items()}, "n_grid": int(r.size)}
    warnings = [] if sup <= args.tol_residual else [f"residual {sup:.3e} above {args.tol_residual:g}"]
    report = _report(_echo(args), args.seed, {"residual": args.tol_residual}, normalization=prof["normalization"],
                     residual=residual, warnings=warnings)
    if args.out:
        out = _out_dir(args.out)
        write_csv(out / "residual.csv", {"r": r, **{f"res_{k}": v for k, v in comps.items()}})
        write_json(out / "report.json", report)
    return report


def cmd_degree(args) -> dict:
    cfg = _config(args)
    if args.symmetry == "so3":
        from . import nonuniq

        sig0, cert = so3.build_sigma0(cfg)
        x0, wc = so3.solve_p0(sig0, cert, cfg)
        k0 = nonuniq.k0_degree(sig0, nonuniq.alpha_max(cert), cfg)
        J00 = so3.J(sig0, 0.0, 0.0, cfg)
        body = {"winding_J0": wc.winding, "degree_K0": k0["degree"], "J0_box": wc.to_dict(), "K0": k0,
                "J0_at_origin": list(J00), "J0_zero": list(x0)}
    else:
        y = so2.ProfileSO2(**named_profile("sine-cosine-round"))
        _, deg = so2.solve_p0(y, cfg)
        body = {"degree_G0": deg.degree, "G0_blocks": deg.to_dict()}
    report = _report(_echo(args), args.seed, {"eps_singular": args.eps_singular}, degree=body)
    if args.out:
        write_json(_out_dir(args.out) / "degree.json", report)
    return report


def oracle_columns(symmetry: str, n: int) -> dict[str, np.ndarray]:
    """Closed-form round solutions: the profile together with its exact ``l``, ``f`` and ``h``."""
    hp = 0.5 * math.pi
    if symmetry == "so3":
        r = np.linspace(-1.0, 1.0, n)
        return {"r": r, "y": np.cos(hp * r) / hp, "l": np.sin(hp * r), "lp": hp * np.cos(hp * r),
                "f": hp * np.cos(hp * r), "h": np.full(n, hp * hp)}
    if symmetry == "so2":
        r = np.linspace(0.0, 1.0, n)
        return {"r": r, "y1": np.sin(hp * r) / hp, "y2": np.cos(hp * r) / hp, "l1": -np.cos(hp * r),
                "l2": np.sin(hp * r), "l1p": hp * np.sin(hp * r), "l2p": hp * np.cos(hp * r),
                "h": np.full(n, hp * hp), "f1": hp * np.sin(hp * r), "f2": hp * np.cos(hp * r)}
    # su2: round metric and its cross curvature
    rho = np.array([[1.0, 1.0, 1.0], [0.25, 0.25, 0.25]])
    X = np.array([algebra.su2_cross(p) for p in rho])
    return {"rho1": rho[:, 0], "rho2": rho[:, 1], "rho3": rho[:, 2], "X1": X[:, 0], "X2": X[:, 1], "X3": X[:, 2]}


def cmd_oracle(args) -> dict:
    cols = oracle_columns(args.symmetry, args.grid)
    summary = {"symmetry": args.symmetry, "columns": list(cols), "rows": int(len(next(iter(cols.values()))))}
    if args.out:
        out = _out_dir(args.out)
        write_csv(out / f"oracle_{args.symmetry}.csv", cols)
        summary["out"] = str(out)
    return summary


# ------------------------------------------------------------------ parser


class _Usage(Exception):
    pass


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="seed for randomized checks (echoed in reports)")
    common.add_argument("--eps-singular", type=float, default=None,
                        help="initial series radius at singular endpoints")
    p = argparse.ArgumentParser(prog="xcurve", description="Cross-curvature solvers on the three-sphere.")
    p.add_argument("--version", action="version", version=f"xcurve {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", parents=[common], help="solve X(g) = Y for a cohomogeneity-one profile")
    s.add_argument("--symmetry", choices=["so3", "so2"], required=True)
    s.add_argument("--profile", required=True, help="profile config (YAML or JSON)")
    s.add_argument("--out", required=True)
    s.add_argument("--tol", type=float, default=1e-10, help="shooting Newton tolerance")
    s.add_argument("--grid", type=int, default=2001, help="output grid size")
    s.set_defaults(func=cmd_solve)

    s = sub.add_parser("su2", parents=[common], help="left-invariant metrics on SU(2)")
    s.add_argument("--forward", type=_triple, metavar="R1,R2,R3")
    s.add_argument("--solve", type=_triple, metavar="Y1,Y2,Y3")
    s.add_argument("--iterate", type=int, metavar="N")
    s.add_argument("--rho", type=_triple, metavar="R1,R2,R3", help="start of --iterate (required with it)")
    s.add_argument("--normalize", action="store_true", help="volume-normalize the iterates")
    s.add_argument("--lincheck", action="store_true", help="linearization identity at the round metric")
    s.add_argument("--directions", type=int, default=20)
    s.add_argument("--step", type=float, default=1e-5)
    s.set_defaults(func=cmd_su2)

    s = sub.add_parser("nonuniq", parents=[common], help="build Y with three solutions")
    s.add_argument("--out", required=True)
    s.add_argument("--grid", type=int, default=2001)
    s.set_defaults(func=cmd_nonuniq)

    s = sub.add_parser("verify", parents=[common], help="residual of a metric CSV against a profile")
    s.add_argument("--metric", required=True)
    s.add_argument("--profile", required=True)
    s.add_argument("--symmetry", choices=["so3", "so2"], default=None)
    s.add_argument("--out", default=None)
    s.add_argument("--tol-residual", type=float, default=1e-5)
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("degree", parents=[common], help="degree certificates of the starting problems")
    s.add_argument("--symmetry", choices=["so3", "so2"], required=True)
    s.add_argument("--out", default=None)
    s.set_defaults(func=cmd_degree)

    s = sub.add_parser("oracle", parents=[common], help="closed-form test pairs")
    s.add_argument("--symmetry", choices=["so3", "so2", "su2"], required=True)
    s.add_argument("--out", default=None)
    s.add_argument("--grid", type=int, default=2001)
    s.set_defaults(func=cmd_oracle)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        with np.errstate(all="ignore"):
            result = args.func(args)
    except _Usage as exc:
        parser.error(str(exc))
    except XCurveError as exc:
        sys.stdout.write(_dumps({"schema": ERROR_SCHEMA, **exc.to_dict()}))
        return 1
    if isinstance(result, list):
        for rec in result:
            sys.stdout.write(json.dumps(_jsonable(rec)) + "\n")
    else:
        sys.stdout.write(_dumps(result))
    return 0


if __name__ == "__main__":
    sys.exit(main())
