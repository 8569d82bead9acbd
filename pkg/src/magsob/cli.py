"""Configuration driven runs: hardy, bubble-sweep, minimize, chain, gauge-check.

A run reads a YAML document, merges it over the defaults below, validates
it, executes the named pipeline and writes JSON and/or CSV artifacts plus
a manifest.json into the output directory.  The manifest echoes the full
merged configuration, so passing it back through ``--config`` (or the
``rerun`` command) reproduces the artifacts byte for byte.

Exit codes: 0 finished, 1 unexpected error, 2 invalid configuration,
3 every inequality verdict inconclusive, 4 numerical divergence.
"""
from __future__ import annotations

import argparse
import copy
import csv
import hashlib
import io
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .bubbles import BubbleConfig, asymptotic_slope, parameter_selection, predicted_exponent
from .fields import Field2D, GridSpec, RadialGridSpec, make_grid, save_field
from .minimize import (DivergenceError, MinimizerOptions, MinimizerResult, critical_coupling,
                       el_residual, grid_ladder, symmetry_breaking_report)
from .potentials import (AharonovBohm, ElectricPotential, apply_gauge, biradial_phase, flux,
                         make_potential)
from .quadform import (Biradial, PositivityError, Radial, angular_eigenvalues, check_positivity,
                       diamagnetic_check, discretize, hardy_constant_ab, hardy_optimality_sweep,
                       rayleigh_quotient)

EXIT_OK, EXIT_ERROR, EXIT_VALIDATION, EXIT_INCONCLUSIVE, EXIT_DIVERGENCE = 0, 1, 2, 3, 4
COMMANDS = ("hardy", "bubble-sweep", "minimize", "chain", "gauge-check")
FORMATS = ("json", "csv", "both")
SWEEP_COLUMNS = ("quantity", "N", "k", "m", "R", "value", "error", "predicted_slope",
                 "fitted_slope")

DEFAULTS = {
    "command": None,
    "dimension_N": 4,
    "seed": 0,
    "threads": 1,
    "format": "both",
    "potential": {"type": "zero"},
    "electric": {"a": 0.0, "singular_set": None},
    "sector": {"kind": "biradial", "m": 0},
    "grid": {"r_max": None, "n": None, "grading_exponent": 2.0},
    "sweep": {"flux": [0.5], "m_range": [-2, 2], "widths": [], "k": [2], "m": [0],
              "R": [25.0, 50.0, 100.0, 200.0], "quantities": ["alpha"], "cutoff": None,
              "epsilon": None},
    "chain": {"k": 2, "flux": 0.5, "a": "auto", "offset": 0.25, "R": [25.0, 50.0, 100.0],
              "cutoff": 1.0, "include_biradial": True},
    "gauge": {"fields": 20, "potentials": ["rotational", "gradient", "aharonov_bohm"],
              "n": 24, "r_max": 6.0},
    "minimizer": {"max_iterations": 2000, "tol": 1e-9, "restarts": 0,
                  "certify_tol": 1e-3},
}


# --------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class Finding:
    level: str       # "error" or "warning"
    field: str
    message: str

    def __str__(self):
        return f"{self.level}: {self.field}: {self.message}"


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for key, val in over.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], val)
        else:
            out[key] = copy.deepcopy(val)
    return out


def load_config(path: str | Path | None) -> dict:
    """Read a YAML (or JSON) document; a manifest contributes its config."""
    if path is None:
        return {}
    with open(path, encoding="utf-8") as fh:
        doc = yaml.safe_load(fh) or {}
    if not isinstance(doc, dict):
        raise ValueError("configuration must be a mapping")
    if "config" in doc and "artifacts" in doc:
        doc = doc["config"]
    return doc


def resolve(doc: dict, command: str | None = None, seed: int | None = None,
            threads: int | None = None, fmt: str | None = None) -> dict:
    """Defaults, then the document, then command line overrides."""
    cfg = _merge(DEFAULTS, doc)
    if command is not None:
        cfg["command"] = command
    if seed is not None:
        cfg["seed"] = int(seed)
    if threads is not None:
        cfg["threads"] = int(threads)
    if fmt is not None:
        cfg["format"] = fmt
    return cfg


def _is_int(v) -> bool:
    return isinstance(v, (int, np.integer)) and not isinstance(v, bool)


def validate(cfg: dict) -> list[Finding]:
    """Static checks of a merged configuration.  Never raises."""
    out: list[Finding] = []

    def err(field, msg):
        out.append(Finding("error", field, msg))

    for key in cfg:
        if key not in DEFAULTS:
            err(key, "unknown configuration key")
    for key, sub in DEFAULTS.items():
        if isinstance(sub, dict) and isinstance(cfg.get(key), dict):
            for k2 in cfg[key]:
                if k2 not in sub and key not in ("potential",):
                    err(f"{key}.{k2}", "unknown configuration key")
    cmd = cfg.get("command")
    if cmd not in COMMANDS:
        err("command", f"unknown command {cmd!r}; expected one of {', '.join(COMMANDS)}")
    N = cfg.get("dimension_N")
    if not _is_int(N) or N < 3:
        err("dimension_N", "must be an integer >= 3")
        return out
    if cmd in ("bubble-sweep", "chain") and N < 4:
        err("dimension_N", "multi-bump configurations need N >= 4")
    if not _is_int(cfg.get("seed")) or cfg["seed"] < 0:
        err("seed", "an explicit nonnegative integer seed is required")
    if not _is_int(cfg.get("threads")) or cfg["threads"] < 1:
        err("threads", "must be a positive integer")
    if cfg.get("format") not in FORMATS:
        err("format", f"must be one of {', '.join(FORMATS)}")
    try:
        A = make_potential(cfg.get("potential"), N)
    except (ValueError, TypeError) as exc:
        err("potential", str(exc))
        A = None
    sweep, sec = cfg.get("sweep", {}), cfg.get("sector", {})
    for key in ("flux", "k", "m", "R", "quantities"):
        if key in sweep and isinstance(sweep[key], list) and not sweep[key]:
            err(f"sweep.{key}", "empty sweep range")
    if cmd == "hardy":
        mr = sweep.get("m_range")
        if not (isinstance(mr, list) and len(mr) == 2 and mr[0] <= mr[1]):
            err("sweep.m_range", "must be [m_min, m_max] with m_min <= m_max")
        w = sweep.get("widths") or []
        if any(b <= a for a, b in zip(w, w[1:])) or any(x <= 0 for x in w):
            err("sweep.widths", "widths must be positive and increasing")
    if cmd == "bubble-sweep":
        R = sweep.get("R") or []
        if R and (len(R) < 2 or min(R) <= 1):
            err("sweep.R", "need at least two radii above one")
        for q in sweep.get("quantities") or []:
            try:
                predicted_exponent(q, N)
            except ValueError as exc:
                err("sweep.quantities", str(exc))
        if any(_is_int(k) and k < 1 for k in sweep.get("k") or []):
            err("sweep.k", "bump counts must be positive")
        if isinstance(A, AharonovBohm) and sweep.get("cutoff") is None:
            err("sweep.cutoff", "the Aharonov-Bohm potential needs a cutoff")
        eps = sweep.get("epsilon")
        if eps is not None:
            try:
                parameter_selection(N, float(eps), [k for k in sweep.get("k", []) if k >= 2])
            except ValueError as exc:
                err("sweep.epsilon", f"schedule infeasible: {exc}")
    if cmd == "minimize":
        kind = sec.get("kind")
        if kind in ("zk", "ZkSector"):
            err("sector.kind", "Z_k sectors are not minimized on grids; only the multi-bump "
                               "upper bound is available (use bubble-sweep or chain)")
        elif kind not in ("radial", "biradial"):
            err("sector.kind", "must be 'radial' or 'biradial'")
        if kind == "radial" and cfg["potential"].get("type", "zero") != "zero":
            err("potential", "the radial sector needs A = 0")
        if not _is_int(sec.get("m", 0)):
            err("sector.m", "winding must be an integer")
        n = cfg["grid"].get("n")
        if n is not None and (not isinstance(n, list) or not n or any(v < 8 for v in n)):
            err("grid.n", "must be a nonempty list of point counts >= 8")
    if cmd == "chain":
        ch = cfg.get("chain", {})
        if not _is_int(ch.get("k")) or ch["k"] < 1:
            err("chain.k", "must be a positive integer")
        if not ch.get("R"):
            err("chain.R", "empty R sweep")
        a = ch.get("a")
        if a != "auto" and not isinstance(a, (int, float)):
            err("chain.a", "must be a number or 'auto'")
        elif isinstance(a, (int, float)) and a >= 0:
            err("chain.a", "the chain needs a < 0")
    if cmd == "gauge-check":
        g = cfg.get("gauge", {})
        if not _is_int(g.get("fields")) or g["fields"] < 1:
            err("gauge.fields", "must be a positive integer")
        if not g.get("potentials"):
            err("gauge.potentials", "empty potential list")
        if not _is_int(g.get("n")) or g["n"] < 8:
            err("gauge.n", "must be an integer >= 8")
    # positivity of the electric coupling
    el = cfg.get("electric", {})
    a = el.get("a", 0.0)
    if not isinstance(a, (int, float)):
        err("electric.a", "must be a number")
    elif A is not None and cmd in ("minimize", "bubble-sweep"):
        kind = el.get("singular_set") or A.singular_set
        try:
            m = sec.get("m", 0) if cmd == "minimize" else None
            check_positivity(A, ElectricPotential(float(a), kind), N, m)
        except (PositivityError, ValueError) as exc:
            err("electric.a", f"positivity requirement violated: {exc}")
    return out


# --------------------------------------------------------------------------
# pipelines; each returns (json payload, csv rows or None, csv columns,
# verdict list, error summary)


def _electric(cfg, A):
    el = cfg["electric"]
    return ElectricPotential(float(el.get("a", 0.0)), el.get("singular_set") or A.singular_set)


def _pmap(fn, items, threads):
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items))


def run_hardy(cfg, out):
    sw = cfg["sweep"]
    ms = list(range(int(sw["m_range"][0]), int(sw["m_range"][1]) + 1))
    payload, rows, worst = [], [], 0.0
    for alpha in sw["flux"]:
        alpha = float(alpha)
        disc = angular_eigenvalues(alpha, ms)
        closed = [(m - alpha) ** 2 for m in ms]
        dev = max(abs(x - y) for x, y in zip(disc, closed))
        worst = max(worst, dev)
        item = {"flux": alpha, "hardy_constant": hardy_constant_ab(alpha),
                "distance_squared": float(min(abs(alpha - np.round(alpha)), 0.5) ** 2),
                "modes": ms, "closed_form": closed, "discrete": disc, "max_deviation": dev}
        if sw.get("widths"):
            steps = hardy_optimality_sweep(alpha, sw["widths"], cfg["dimension_N"])
            item["optimality_sweep"] = [asdict(s) for s in steps]
        payload.append(item)
        rows += [[alpha, m, c, d, abs(c - d)] for m, c, d in zip(ms, closed, disc)]
    return ({"results": payload}, rows, ["flux", "m", "closed_form", "discrete", "deviation"],
            [], {"angular_max_deviation": worst})


def run_bubble_sweep(cfg, out):
    N, sw = cfg["dimension_N"], cfg["sweep"]
    A = make_potential(cfg["potential"], N)
    el = _electric(cfg, A)
    R = [float(r) for r in sw["R"]]
    cutoff = sw.get("cutoff")
    jobs = [(q, int(k), int(m)) for k in sw["k"] for m in sw["m"] for q in sw["quantities"]]

    def job(item):
        q, k, m = item
        base = BubbleConfig(N, k, m, R[0], cutoff=None if cutoff is None else float(cutoff))
        return asymptotic_slope(q, R, base, A, el)

    fits = _pmap(job, jobs, cfg["threads"])
    rows, worst = [], 0.0
    for (q, k, m), fit in zip(jobs, fits):
        for r, v, e in zip(fit.R_values, fit.values, fit.errors):
            rows.append([q, N, k, m, r, v, e, fit.predicted, fit.slope])
            worst = max(worst, abs(e / v) if v else float("inf"))
    payload = {"fits": [dict(fit.as_dict(), k=k, m=m) for (q, k, m), fit in zip(jobs, fits)]}
    if sw.get("epsilon") is not None:
        ks = [k for k in sw["k"] if k >= 2]
        payload["schedule"] = [asdict(p) for p in parameter_selection(N, float(sw["epsilon"]), ks)]
    return payload, rows, list(SWEEP_COLUMNS), [], {"max_relative_quadrature_error": worst}


def _ladder_specs(cfg, radial: bool):
    N, g = cfg["dimension_N"], cfg["grid"]
    p = float(g.get("grading_exponent", 2.0))
    if radial:
        r_max = float(g.get("r_max") or 240.0)
        return [RadialGridSpec(N, r_max, int(n), p) for n in (g.get("n") or [400, 800])]
    r_max = float(g.get("r_max") or 60.0)
    return [GridSpec(N, r_max, r_max, int(n), int(n), p) for n in (g.get("n") or [97, 193])]


def _options(cfg):
    mo = cfg["minimizer"]
    return MinimizerOptions(max_iterations=int(mo["max_iterations"]), tol=float(mo["tol"]),
                            restarts=int(mo["restarts"]), seed=int(cfg["seed"]))


def run_minimize(cfg, out):
    N, sec = cfg["dimension_N"], cfg["sector"]
    radial = sec["kind"] == "radial"
    A = None if radial else make_potential(cfg["potential"], N)
    el = ElectricPotential(float(cfg["electric"].get("a", 0.0)),
                           cfg["electric"].get("singular_set")
                           or ("origin" if radial else A.singular_set))
    sector = Radial() if radial else Biradial(int(sec.get("m", 0)))
    specs = _ladder_specs(cfg, radial)
    value, err, results = grid_ladder(sector, A, el, specs, _options(cfg))
    levels = []
    for spec, res in zip(specs, results):
        s = res.summary()
        s["log_tail"] = res.log[-5:]
        if res.field is not None:
            s["el_residual"] = el_residual(res.field, A, el)
            s["certified"] = bool(res.converged and s["el_residual"]
                                  < float(cfg["minimizer"]["certify_tol"]))
        levels.append(s)
    fin = results[-1]
    extra = {"minimize_log.csv": fin}
    if fin.field is not None:
        name = "field.csv" if cfg["format"] in ("csv", "both") else "field.bin"
        extra[name] = fin.field
    payload = {"sector": type(sector).__name__, "mode_m": getattr(sector, "m", 0),
               "value": value, "ladder_error": err, "levels": levels}
    rows = [[i, lv["grid"].get("n", lv["grid"].get("n1")), lv["value"], lv["iterations"],
             lv["residual"], lv["verdict"]] for i, lv in enumerate(levels)]
    return (payload, rows, ["level", "n", "value", "iterations", "residual", "verdict"], [],
            {"ladder_error": err}, extra)


def run_chain(cfg, out):
    N, ch = cfg["dimension_N"], cfg["chain"]
    k = int(ch["k"])
    a_star = None
    if ch["a"] == "auto":
        a_star = critical_coupling(N, k)
        a = a_star - float(ch["offset"])
    else:
        a = float(ch["a"])
    rep = symmetry_breaking_report(N, a, float(ch["flux"]), k,
                                   R_values=[float(r) for r in ch["R"]],
                                   cutoff=float(ch["cutoff"]), opts=_options(cfg),
                                   include_biradial=bool(ch["include_biradial"]))
    payload = dict(rep.as_dict(), a_star=a_star)
    rows = [[leg["name"], leg["lhs"], leg["rhs"], leg["margin"], leg["error"], leg["verdict"]]
            for leg in rep.legs]
    return (payload, rows, ["name", "lhs", "rhs", "margin", "error", "verdict"], rep.verdicts,
            {leg["name"]: leg["error"] for leg in rep.legs})


def _random_field(grid, rng, m):
    R1, R2 = grid.mesh()
    c = rng.normal(size=4) + 1j * rng.normal(size=4)
    s = rng.uniform(0.5, 2.0)
    env = np.exp(-(R1**2 + R2**2) / (2 * s**2))
    poly = c[0] + c[1] * R1 + c[2] * R2 + c[3] * R1 * R2
    f = poly * env
    if m != 0:
        f = f * R1
    return Field2D(grid, m, f)


def run_gauge_check(cfg, out):
    N, g = cfg["dimension_N"], cfg["gauge"]
    rng = np.random.default_rng(cfg["seed"])
    grid = make_grid(GridSpec(N, float(g["r_max"]), float(g["r_max"]), int(g["n"]), int(g["n"])))
    presets = {"zero": {"type": "zero"}, "rotational": {"type": "rotational", "b": 1.0},
               "gradient": {"type": "gradient", "c": 1.0},
               "aharonov_bohm": {"type": "aharonov_bohm", "flux_alpha": 0.5}}
    rows, worst_gauge, worst_dia = [], 0.0, float("inf")
    for name in g["potentials"]:
        A = make_potential(presets.get(name, {"type": name}), N)
        m = 1 if isinstance(A, AharonovBohm) else 0
        op = discretize(grid, A, None, m)
        for i in range(int(g["fields"])):
            u = _random_field(grid, rng, m)
            c = rng.normal(size=3)
            theta = biradial_phase(grid, lambda r1, r2: c[0] * r1 + c[1] * r2 ** 2
                                   + c[2] * np.sin(r1 * r2))
            q0 = rayleigh_quotient(u, op).value
            q1 = rayleigh_quotient(apply_gauge(u, theta), op.gauge_shifted(theta)).value
            rel = abs(q1 - q0) / abs(q0)
            dia = diamagnetic_check(u, op)
            worst_gauge = max(worst_gauge, rel)
            worst_dia = min(worst_dia, dia)
            rows.append([name, i, q0, q1, rel, dia])
    fluxes = {name: flux(make_potential(presets.get(name, {"type": name}), N), N)
              for name in g["potentials"]}
    payload = {"max_relative_gauge_change": worst_gauge, "min_diamagnetic_margin": worst_dia,
               "flux": fluxes, "grid": asdict(grid.spec)}
    return (payload, rows, ["potential", "field", "quotient", "gauged_quotient",
                            "relative_change", "diamagnetic_margin"], [],
            {"max_relative_gauge_change": worst_gauge})


PIPELINES = {"hardy": run_hardy, "bubble-sweep": run_bubble_sweep, "minimize": run_minimize,
             "chain": run_chain, "gauge-check": run_gauge_check}


# --------------------------------------------------------------------------
# artifacts


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        v = float(x)
        return v if np.isfinite(v) else repr(v)
    return x


def _dump_json(obj) -> bytes:
    return (json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n").encode("utf-8")


def _dump_csv(columns, rows, manifest_name) -> bytes:
    buf = io.StringIO()
    buf.write(f"# manifest={manifest_name}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue().encode("utf-8")


def execute(cfg: dict, out_dir: str | Path) -> int:
    """Run a validated configuration and write its artifacts.  Returns the exit code."""
    out_dir = Path(out_dir)
    findings = validate(cfg)
    errors = [f for f in findings if f.level == "error"]
    if errors:
        for f in errors:
            print(f, file=sys.stderr)
        return EXIT_VALIDATION
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        probe = out_dir / ".write_probe"
        probe.write_bytes(b"")
        probe.unlink()
    except OSError as exc:
        print(f"error: out: output directory not writable ({exc})", file=sys.stderr)
        return EXIT_VALIDATION
    cmd = cfg["command"]
    t0 = time.perf_counter()
    try:
        res = PIPELINES[cmd](cfg, out_dir)
    except DivergenceError as exc:
        print(f"divergence: {exc}", file=sys.stderr)
        _write_manifest(cfg, out_dir, {}, {}, time.perf_counter() - t0, EXIT_DIVERGENCE,
                        str(exc))
        return EXIT_DIVERGENCE
    except PositivityError as exc:
        print(f"error: electric.a: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    payload, rows, columns, verdicts, err_summary = res[:5]
    extra = res[5] if len(res) > 5 else {}
    stem = cmd.replace("-", "_")
    files: dict[str, bytes] = {}
    body = {"command": cmd, "manifest": "manifest.json", "result": payload}
    if cfg["format"] in ("json", "both"):
        files[f"{stem}.json"] = _dump_json(body)
    if cfg["format"] in ("csv", "both") and rows is not None:
        files[f"{stem}.csv"] = _dump_csv(columns, rows, "manifest.json")
    # artifact writes are serialized here, after all computation
    hashes = {}
    for name, data in files.items():
        (out_dir / name).write_bytes(data)
        hashes[name] = hashlib.sha256(data).hexdigest()
    for name, obj in extra.items():
        if isinstance(obj, MinimizerResult):
            path = obj.write_log(out_dir / name)
        else:
            path = save_field(obj, out_dir / name)
        hashes[name] = hashlib.sha256(path.read_bytes()).hexdigest()
    code = EXIT_OK
    if verdicts and all(v == "inconclusive" for v in verdicts):
        code = EXIT_INCONCLUSIVE
    _write_manifest(cfg, out_dir, hashes, err_summary, time.perf_counter() - t0, code, None)
    return code


def _grids(cfg):
    cmd = cfg["command"]
    if cmd == "minimize":
        return [asdict(s) for s in _ladder_specs(cfg, cfg["sector"]["kind"] == "radial")]
    if cmd == "chain":
        plain = dict(cfg, grid=DEFAULTS["grid"])
        return [asdict(s) for s in _ladder_specs(plain, True) + _ladder_specs(plain, False)]
    if cmd == "gauge-check":
        g = cfg["gauge"]
        return [{"dimension_N": cfg["dimension_N"], "r_max": g["r_max"], "n": g["n"]}]
    return []


def _write_manifest(cfg, out_dir, hashes, err_summary, runtime, code, failure):
    man = {"config": cfg, "version": __version__, "artifacts": hashes, "grids": _grids(cfg),
           "runtime_seconds": runtime, "errors": err_summary, "exit_code": code}
    if failure:
        man["failure"] = failure
    (out_dir / "manifest.json").write_bytes(_dump_json(man))


def rerun(manifest_path: str | Path, out_dir: str | Path) -> tuple[int, dict]:
    """Re-execute a manifest and compare artifact hashes.

    Returns (exit code, {artifact: identical?}).
    """
    with open(manifest_path, encoding="utf-8") as fh:
        man = json.load(fh)
    code = execute(man["config"], out_dir)
    with open(Path(out_dir) / "manifest.json", encoding="utf-8") as fh:
        new = json.load(fh)
    same = {k: new["artifacts"].get(k) == v for k, v in man["artifacts"].items()}
    return code, same


# --------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="magsob", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="action", required=True)

    def common(sp, need_out=True):
        sp.add_argument("--config", help="YAML run configuration or a manifest.json")
        if need_out:
            sp.add_argument("--out", default="runs/out", help="output directory")
        sp.add_argument("--seed", type=int, help="override the configured seed")
        sp.add_argument("--threads", type=int, help="worker threads for independent sub-runs")
        sp.add_argument("--format", choices=FORMATS, help="artifact format")

    for cmd in COMMANDS:
        common(sub.add_parser(cmd, help=f"run the {cmd} pipeline"))
    common(sub.add_parser("run", help="run the command named in the configuration"))
    common(sub.add_parser("validate", help="report configuration findings"), need_out=False)
    rr = sub.add_parser("rerun", help="re-execute a manifest and compare artifacts")
    rr.add_argument("manifest")
    rr.add_argument("--out", default="runs/rerun")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.action == "rerun":
        try:
            code, same = rerun(args.manifest, args.out)
        except (OSError, KeyError, json.JSONDecodeError) as exc:
            print(f"error: manifest: {exc}", file=sys.stderr)
            return EXIT_VALIDATION
        for name, ok in sorted(same.items()):
            print(f"{'identical' if ok else 'DIFFERENT'} {name}")
        return code if all(same.values()) else EXIT_ERROR
    try:
        doc = load_config(args.config)
    except (OSError, yaml.YAMLError, ValueError) as exc:
        print(f"error: config: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    command = args.action if args.action in COMMANDS else None
    if command and doc.get("command") not in (None, command):
        print(f"error: command: configuration is for {doc['command']!r}, not {command!r}",
              file=sys.stderr)
        return EXIT_VALIDATION
    cfg = resolve(doc, command, args.seed, args.threads, args.format)
    if args.action == "validate":
        findings = validate(cfg)
        for f in findings:
            print(f)
        if not findings:
            print("ok")
        return EXIT_VALIDATION if any(f.level == "error" for f in findings) else EXIT_OK
    try:
        return execute(cfg, args.out)
    except Exception as exc:  # report, do not dump a traceback on users
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
