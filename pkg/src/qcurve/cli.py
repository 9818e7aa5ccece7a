"""Command-line front end: ``qcurve index|solve|verify --config <toml> --out <dir>``.

Exit codes: 0 ok, 1 usage/config, 2 precondition, 3 verification failure,
4 numerical failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import tomli
import tomli_w

from . import __version__
from .errors import (
    AccuracyError,
    ConfigurationError,
    DivergenceError,
    DomainError,
    LedgerFailure,
    NonConvergenceError,
    NotInClassError,
    ProfileMismatchError,
    SearchFailure,
    SeedError,
    SizeError,
)
from .sphere import ProblemParams, north_pole

log = logging.getLogger("qcurve")

EXIT_OK, EXIT_CONFIG, EXIT_PRECONDITION, EXIT_VERIFY, EXIT_NUMERICAL = 0, 1, 2, 3, 4

COMMANDS = ("index", "solve", "verify")

DEFAULTS = {
    "index": {"multistart": 200},
    "solve": {
        "L": 256,
        "schedule": [0.4, 0.2, 0.1, 0.05, 0.025],
        "seeds": ["bubble"],
        "tol": 1e-10,
    },
    "verify": {
        "L": 256,
        "pde_heights": [1.0, 2.0, 10.0],
        "pde_tol": 1e-6,
        "energy_heights": [1.0, 2.0, 5.0, 20.0],
        "energy_tol": 1e-8,
        "ledger_tol": 1e-9,
        "interaction_heights": [20.0, 40.0],
        "interaction_band": 0.05,
        "inequality_samples": 20000,
        "pohozaev_tol": 1e-6,
        "riesz_tol": 1e-8,
        "fault": 1.0,
    },
}


# --------------------------------------------------------------------------
# configuration


@dataclass
class RunConfig:
    m: int
    curvature: dict
    options: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = {"problem": {"m": self.m}, "curvature": dict(self.curvature)}
        for cmd in COMMANDS:
            if cmd in self.options:
                d[cmd] = dict(self.options[cmd])
        return d

    def dumps(self) -> str:
        return tomli_w.dumps(self.to_dict())

    def section(self, cmd: str) -> dict:
        out = dict(DEFAULTS[cmd])
        out.update(self.options.get(cmd, {}))
        return out

    @property
    def params(self) -> ProblemParams:
        return ProblemParams(self.m, green_fault=float(self.section("verify")["fault"]))

    def digest(self) -> str:
        return hashlib.sha256(self.dumps().encode()).hexdigest()


def _require(table, key, kind, where):
    if key not in table:
        raise ConfigurationError(f"missing field '{where}.{key}'")
    val = table[key]
    if kind is float and isinstance(val, int) and not isinstance(val, bool):
        val = float(val)
    if not isinstance(val, kind) or isinstance(val, bool) and kind is not bool:
        raise ConfigurationError(f"field '{where}.{key}' must be of type {kind.__name__}")
    return val


def parse_config(text: str) -> RunConfig:
    try:
        data = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigurationError(f"invalid TOML: {exc}") from None
    problem = data.get("problem")
    if not isinstance(problem, dict):
        raise ConfigurationError("missing table 'problem'")
    m = _require(problem, "m", int, "problem")
    if m < 1:
        raise ConfigurationError("field 'problem.m' must be >= 1")
    curv = data.get("curvature", {"kind": "k_star"})
    if not isinstance(curv, dict) or "kind" not in curv:
        raise ConfigurationError("missing field 'curvature.kind'")
    unknown = set(data) - {"problem", "curvature", *COMMANDS}
    if unknown:
        raise ConfigurationError(f"unknown table(s): {sorted(unknown)}")
    options = {}
    for cmd in COMMANDS:
        if cmd in data:
            extra = set(data[cmd]) - set(DEFAULTS[cmd])
            if extra:
                raise ConfigurationError(f"unknown field(s) in '{cmd}': {sorted(extra)}")
            options[cmd] = data[cmd]
    return RunConfig(m, curv, options)


def build_curvature(cfg: RunConfig, params: ProblemParams):
    from .curvature import CurvatureModel, k_star

    spec = cfg.curvature
    kind = spec["kind"]
    try:
        if kind == "k_star":
            return k_star(params)
        if kind == "constant":
            return CurvatureModel.constant(params, float(spec.get("c0", 1.0)))
        if kind == "affine":
            c0 = float(_require(spec, "c0", float, "curvature"))
            if "a" in spec:
                a = np.asarray(spec["a"], dtype=float)
            else:
                a = float(_require(spec, "a_last", float, "curvature")) * north_pole(params.n)
            return CurvatureModel.affine(params, c0, a)
        if kind == "quadratic":
            c0 = float(_require(spec, "c0", float, "curvature"))
            if "A" in spec:
                A = np.asarray(spec["A"], dtype=float)
            else:
                A = np.diag(np.asarray(_require(spec, "diag", list, "curvature"), dtype=float))
            return CurvatureModel.quadratic(params, c0, A)
        if kind == "zonal_poly":
            return CurvatureModel.zonal(params, _require(spec, "coeffs", list, "curvature"))
    except (ValueError, TypeError) as exc:
        raise ConfigurationError(f"field 'curvature': {exc}") from None
    raise ConfigurationError(f"field 'curvature.kind': unsupported kind {kind!r}")


# --------------------------------------------------------------------------
# output


def _fmt(obj) -> str:
    """Deterministic JSON with floats at 17 significant digits."""
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return "null"
        txt = format(x, ".17g")
        return txt if any(ch in txt for ch in ".en") else txt + ".0"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        items = sorted(obj.items(), key=lambda kv: str(kv[0]))
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_fmt(v)}" for k, v in items) + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        return "[" + ", ".join(_fmt(v) for v in obj) + "]"
    return json.dumps(str(obj))


def dumps_json(obj) -> str:
    return _fmt(obj) + "\n"


def worker_count(jobs: int) -> int:
    cap = os.environ.get("QCURVE_THREADS")
    limit = os.cpu_count() or 1
    if cap:
        try:
            limit = max(1, int(cap))
        except ValueError:
            raise ConfigurationError("QCURVE_THREADS must be a positive integer") from None
    return max(1, min(jobs, limit))


def run_jobs(fn, items):
    """Map fn over items on the worker pool; results keep input order."""
    items = list(items)
    workers = worker_count(len(items))
    if workers == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# --------------------------------------------------------------------------
# commands


def cmd_index(cfg: RunConfig, out: Path) -> int:
    from .degree import Census, blowup_configs, corollary_check, in_A, index_of, subset_table

    params = cfg.params
    K = build_curvature(cfg, params)
    opts = cfg.section("index")
    result = {"command": "index", "m": cfg.m, "n": params.n, "curvature": K.to_dict()}
    try:
        census = Census.of(K, int(opts["multistart"]), workers=worker_count(int(opts["multistart"])))
    except SearchFailure as exc:
        result["error"] = f"no isolated critical points: {exc}"
        _write(out / "index.json", result)
        return EXIT_PRECONDITION
    result["census"] = census.to_dict()
    result["blowup_configs"] = [
        {"subset": list(b.subset), "mu": b.mu, "zero_laplacian_singleton": b.zero_laplacian_singleton}
        for b in blowup_configs(census)
    ]
    try:
        ok, witnesses = in_A(census)
        result["in_A"] = ok
        result["witnesses"] = witnesses
        if not ok:
            raise NotInClassError("K is not in class A", witnesses)
        result["subset_mu"] = subset_table(census)
        idx = index_of(census)
        holds, simplified, agree = corollary_check(census)
    except (NotInClassError, SizeError) as exc:
        result["error"] = str(exc)
        result["witness"] = _witness(getattr(exc, "witness", None))
        _write(out / "index.json", result)
        return EXIT_PRECONDITION
    result["index"] = idx
    result["verdict"] = "solution exists" if idx != 0 else "inconclusive"
    result["corollary"] = {"criterion_holds": holds, "simplified_index": simplified, "agreement": agree}
    _write(out / "index.json", result)
    return EXIT_OK


def _witness(w):
    if w is None:
        return None
    if hasattr(w, "to_dict"):
        return w.to_dict()
    return w


def cmd_solve(cfg: RunConfig, out: Path) -> int:
    from .diagnostics import blowup_report
    from .solver import Seed, SeedKind, continue_branch

    params = cfg.params
    K = build_curvature(cfg, params)
    opts = cfg.section("solve")
    L = int(opts["L"])
    schedule = [float(x) for x in opts["schedule"]]
    try:
        seeds = [Seed(SeedKind(s)) for s in opts["seeds"]]
    except ValueError as exc:
        raise ConfigurationError(f"field 'solve.seeds': {exc}") from None
    if not K.is_zonal():
        raise ConfigurationError("field 'curvature': the solver needs K zonal about the north pole")

    def job(seed):
        try:
            br = continue_branch(K, schedule, seed, L=L, tol=float(opts["tol"]))
        except SeedError as exc:
            return seed, None, str(exc)
        return seed, br, None

    result = {"command": "solve", "m": cfg.m, "n": params.n, "L": L, "schedule": schedule, "branches": []}
    code = EXIT_OK
    for seed, br, err in run_jobs(job, seeds):
        name = seed.kind.value
        entry = {"seed": name}
        if br is None:
            entry["error"] = err
            (out / f"branch_{name}.csv").write_text("tau,vmax,vmin,tau_vmax_sq,residual\n")
            code = EXIT_NUMERICAL
        else:
            (out / f"branch_{name}.csv").write_text(br.to_csv())
            entry["states"] = [s.row() for s in br.states]
            entry["stopped"] = br.stopped
            entry["seed_heights"] = list(br.seed_heights)
            try:
                entry["diagnostics"] = blowup_report(br, K).to_dict()
            except (DomainError, ProfileMismatchError) as exc:
                entry["diagnostics"] = {"error": str(exc)}
        result["branches"].append(entry)
    _write(out / "solve.json", result)
    return code


def verification_items(params: ProblemParams, opts: dict) -> list:
    """(name, thunk) pairs; each thunk returns (value, tolerance, passed, detail)."""
    from . import bubbles, conformal_op, diagnostics

    n = params.n
    L = int(opts["L"])
    P = north_pole(n)
    items = []

    def ledger():
        try:
            rep = bubbles.radial_ledger(params, tol=float(opts["ledger_tol"]))
        except LedgerFailure as exc:
            return None, float(opts["ledger_tol"]), False, {"failures": exc.failures}
        worst = max(e["rel_error"] for e in rep)
        return worst, float(opts["ledger_tol"]), True, {"entries": rep}

    items.append(("radial_ledger", ledger))

    def energy():
        closed = params.c_pde * bubbles.self_energy_closed_form(params)
        vals = [bubbles.self_energy(bubbles.Bubble(P, t, params), L) for t in opts["energy_heights"]]
        err = max(abs(v - closed) / closed for v in vals)
        mass = bubbles.conformal_mass(bubbles.Bubble(P, 3.0, params))
        mass_err = abs(mass - bubbles.self_energy_closed_form(params)) / bubbles.self_energy_closed_form(params)
        tol = float(opts["energy_tol"])
        worst = max(err, mass_err)
        return worst, tol, worst <= tol, {"energies": vals, "expected": closed, "mass": mass}

    items.append(("self_energy", energy))

    def pde():
        res = [bubbles.pde_residual(bubbles.Bubble(P, t, params), L) for t in opts["pde_heights"]]
        tol = float(opts["pde_tol"])
        return max(res), tol, max(res) <= tol, {"residuals": res}

    items.append(("pde_residual", pde))

    def interaction():
        devs = []
        for t in opts["interaction_heights"]:
            b1, b2 = bubbles.Bubble(P, t, params), bubbles.Bubble(-P, t, params)
            ratio = bubbles.interaction(b1, b2, n - 1, 1) / bubbles.interaction_leading(b1, b2)
            devs.append(ratio - 1.0)
        band = float(opts["interaction_band"])
        ok = abs(devs[0]) <= band and all(abs(b) <= abs(a) for a, b in zip(devs, devs[1:]))
        return abs(devs[0]), band, ok, {"deviations": devs}

    items.append(("interaction_leading_term", interaction))

    def inequalities():
        try:
            rep = bubbles.inequality_suite(int(opts["inequality_samples"]))
        except LedgerFailure as exc:
            return None, None, False, {"unstable": exc.failures}
        return max(r["C"] for r in rep), None, True, {"constants": rep}

    items.append(("inequality_suite", inequalities))

    def pohozaev():
        Kc = diagnostics.integral_equation_constant(params)
        r = diagnostics.pohozaev_residual(diagnostics.flat_bubble(1.0), Kc, 2.0, n - 1.0, params)
        tol = float(opts["pohozaev_tol"])
        return r.residual, tol, r.residual <= tol, {"lhs": r.lhs, "rhs": r.rhs}

    items.append(("pohozaev_exact_bubble", pohozaev))

    def riesz():
        # independent quadrature of the Green representation against the spectral inverse
        b = bubbles.Bubble(P, 2.0, params)
        src = lambda u: params.c_pde * b.of_u(u) ** (n - 1)
        us = [0.9, 0.3, -0.5]
        direct = [conformal_op.riesz_direct(src, x, params) for x in us]
        exact = [float(b.of_u(x)) for x in us]
        err_direct = max(abs(d - e) / e for d, e in zip(direct, exact))
        lam = conformal_op.multipliers(64, params)
        err_fh = float(np.max(np.abs(conformal_op.funk_hecke_coefficients(params, 64) * lam - 1.0)))
        worst = max(err_direct, err_fh)
        tol = float(opts["riesz_tol"])
        return worst, tol, worst <= tol, {"direct": err_direct, "funk_hecke": err_fh}

    items.append(("riesz_spectral_cross_check", riesz))
    return items


def cmd_verify(cfg: RunConfig, out: Path) -> int:
    params = cfg.params
    opts = cfg.section("verify")
    items = verification_items(params, opts)

    def run(item):
        name, thunk = item
        try:
            value, tol, ok, detail = thunk()
        except (AccuracyError, DomainError) as exc:
            value, tol, ok, detail = None, None, False, {"error": str(exc)}
        return {"identity": name, "value": value, "tolerance": tol, "passed": bool(ok), "detail": detail}

    rows = run_jobs(run, items)
    failing = [r["identity"] for r in rows if not r["passed"]]
    result = {"command": "verify", "m": cfg.m, "n": params.n, "fault": opts["fault"], "items": rows, "failing": failing}
    _write(out / "verify.json", result)
    return EXIT_VERIFY if failing else EXIT_OK


def _write(path: Path, obj):
    path.write_text(dumps_json(obj))


def write_manifest(out: Path, cfg: RunConfig | None, command: str, code: int, wall: float, error: str | None = None):
    manifest = {
        "command": command,
        "config_hash": cfg.digest() if cfg is not None else None,
        "version": __version__,
        "wall_time_s": wall,
        "exit_code": code,
    }
    if error:
        manifest["error"] = error
    _write(out / "manifest.json", manifest)


HANDLERS = {"index": cmd_index, "solve": cmd_solve, "verify": cmd_verify}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qcurve", description="Prescribed fractional Q-curvature toolkit")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", required=True, type=Path)
    ap.add_argument("--out", required=True, type=Path)
    ap.add_argument("--m", type=int, default=None, help="override problem.m")
    ap.add_argument("--L", type=int, default=None, help="override the truncation of solve/verify")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    start = time.perf_counter()
    cfg = None
    try:
        args.out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        print(f"qcurve: cannot create output directory: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    error = None
    try:
        try:
            text = args.config.read_text()
        except OSError as exc:
            raise ConfigurationError(f"cannot read config: {exc}") from None
        cfg = parse_config(text)
        if args.m is not None:
            if args.m < 1:
                raise ConfigurationError("--m must be >= 1")
            cfg.m = args.m
        if args.L is not None:
            for cmd in ("solve", "verify"):
                cfg.options.setdefault(cmd, {})["L"] = args.L
        code = HANDLERS[args.command](cfg, args.out)
    except ConfigurationError as exc:
        code, error = EXIT_CONFIG, str(exc)
    except (NotInClassError, SearchFailure, SizeError) as exc:
        code, error = EXIT_PRECONDITION, str(exc)
    except DomainError as exc:
        # invalid model data (e.g. non-positive K) is a configuration problem
        code, error = EXIT_CONFIG, str(exc)
    except LedgerFailure as exc:
        code, error = EXIT_VERIFY, str(exc)
    except (AccuracyError, DivergenceError, NonConvergenceError, SeedError, np.linalg.LinAlgError) as exc:
        code, error = EXIT_NUMERICAL, str(exc)
    if error:
        print(f"qcurve: {error}", file=sys.stderr)
    write_manifest(args.out, cfg, args.command, code, time.perf_counter() - start, error)
    return code


if __name__ == "__main__":
    sys.exit(main())
