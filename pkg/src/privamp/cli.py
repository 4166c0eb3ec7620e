"""Command-line front door: a TOML scenario in, CSV/JSON/text results out.

Commands are ``verify``, ``simulate``, ``leakage``, ``exponent`` and
``region``. Each writes ``results.csv``, ``results.json`` and ``report.txt``
into ``--out``. Output carries no timestamps or timings, so identical
configs give identical bytes.

Exit codes: 0 success, 1 invariant violation, 2 config error, 3 cap refusal.
"""

from __future__ import annotations

import argparse
import copy
import csv
import hashlib
import io
import json
import math
import os
import platform
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import jsonschema

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import __version__
from . import exponents as ex
from . import suites
from .affine_code import AffineEncoder, DecoderPolicy, error_prob_exact
from .cipher_sim import (STRATEGIES, AdversaryEncoder, SystemInstance, build_joint,
                         leakage_divergence_bound, leakage_exact, simulate, theta,
                         theta_tail_bound)
from .errors import EnumerationCapError, ModelError, UsageError
from .finite_field import (FieldMatrix, FieldSpec, FieldVector, _is_prime, make_rng,
                           random_affine, set_enumeration_cap)
from .prob_types import Channel, Distribution
from .rate_region import bsc_frontier, sum_rate_check, region_boundary

EXIT_OK, EXIT_VIOLATION, EXIT_CONFIG, EXIT_CAP = 0, 1, 2, 3
COMMANDS = ("verify", "simulate", "leakage", "exponent", "region")


class ConfigError(ValueError):
    """Invalid configuration; ``path`` names the offending field."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"config error at {path}: {message}")


# --- schema ------------------------------------------------------------------

_num = {"type": "number"}
_nums = {"type": "array", "items": _num, "minItems": 1}
_matrix = {"type": "array", "items": _nums, "minItems": 1}

SCHEMA: Dict[str, Any] = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "seed": {"type": "integer", "minimum": 0},
        "workers": {"type": "integer", "minimum": 1},
        "cap": {"type": "integer", "minimum": 1},
        "scenario": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "modulus": {"type": "integer"},
                "n": {"type": "integer", "minimum": 1},
                "m": {"type": "integer", "minimum": 1},
                "p_x": _nums,
                "W": _matrix,
                "bsc": {"type": "number", "minimum": 0, "maximum": 1},
                "adversary": {"enum": list(STRATEGIES)},
                "R_A": {"type": "number", "minimum": 0},
                "A": {"type": "array", "items": {"type": "array", "items": {"type": "integer"}}},
                "b": {"type": "array", "items": {"type": "integer"}},
            },
        },
        "verify": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"scale": {"enum": ["quick", "full"]}},
        },
        "simulate": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "trials": {"type": "integer", "minimum": 1},
                "chunk": {"type": "integer", "minimum": 1},
                "level": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "policy": {"enum": [p.value for p in DecoderPolicy]},
            },
        },
        "leakage": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"R": {"type": "number", "minimum": 0}, "eta": _nums},
        },
        "exponent": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "R": _nums,
                "R_A": _nums,
                "grid": {"type": "integer", "minimum": 3},
                "n_starts": {"type": "integer", "minimum": 1},
                "tilde": {"type": "boolean"},
            },
        },
        "region": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "sweep": {"type": "integer", "minimum": 3},
                "n_starts": {"type": "integer", "minimum": 1},
            },
        },
    },
}

DEFAULTS: Dict[str, Any] = {
    "seed": 0,
    "scenario": {"modulus": 2, "n": 2, "m": 1, "bsc": 0.1, "adversary": "identity"},
    "verify": {"scale": "quick"},
    "simulate": {"trials": 100_000, "chunk": 10_000, "level": 0.95, "policy": "declare-error"},
    "leakage": {"eta": [0.05, 0.1, 0.2, 0.5]},
    "exponent": {"R": [0.1, 0.2, 0.3, 0.4, 0.5], "R_A": [0.0], "grid": 33, "n_starts": 32,
                 "tilde": False},
    "region": {"sweep": 41, "n_starts": 12},
}


def _path(parts) -> str:
    out = ""
    for p in parts:
        out += f"[{p}]" if isinstance(p, int) else (f".{p}" if out else str(p))
    return out or "<root>"


def load_config(path: Optional[str]) -> Dict[str, Any]:
    if path is None:
        return {}
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError("<file>", f"no such file {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError("<file>", f"not valid TOML: {exc}") from None


def _merge(base: Dict[str, Any], over: Dict[str, Any]) -> Dict[str, Any]:
    out = dict(base)
    for k, v in over.items():
        out[k] = _merge(out[k], v) if isinstance(v, dict) and isinstance(out.get(k), dict) else v
    return out


def validate_config(raw: Dict[str, Any]) -> Dict[str, Any]:
    """Schema check, defaults, then semantic checks. Raises :class:`ConfigError`."""
    try:
        jsonschema.validate(raw, SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ConfigError(_path(exc.absolute_path), exc.message) from None
    cfg = _merge(copy.deepcopy(DEFAULTS), raw)
    sc = cfg["scenario"]
    given = raw.get("scenario", {})
    if "W" in given and "bsc" in given:
        raise ConfigError("scenario.W", "give either W or bsc, not both")
    if "W" in given:
        sc.pop("bsc", None)
    p = sc["modulus"]
    if not _is_prime(p):
        raise ConfigError("scenario.modulus", f"{p} is not prime")
    if sc["m"] > sc["n"]:
        raise ConfigError("scenario.m", "must not exceed scenario.n")
    px = sc.get("p_x", [1.0 / p] * p)
    sc["p_x"] = px
    if len(px) != p:
        raise ConfigError("scenario.p_x", f"needs {p} entries, got {len(px)}")
    _check_probs(px, "scenario.p_x")
    if "W" in sc:
        W = sc["W"]
        if len(W) != p:
            raise ConfigError("scenario.W", f"needs {p} rows, got {len(W)}")
        width = len(W[0])
        for i, row in enumerate(W):
            if len(row) != width:
                raise ConfigError(f"scenario.W[{i}]", f"has {len(row)} entries, expected {width}")
            _check_probs(row, f"scenario.W[{i}]")
    elif p != 2:
        raise ConfigError("scenario.bsc", "a BSC needs modulus 2; give W instead")
    if sc["adversary"] == "truncation" and "R_A" not in sc:
        raise ConfigError("scenario.R_A", "required by the truncation adversary")
    for key, shape in (("A", (sc["n"], sc["m"])), ("b", (sc["m"],))):
        if key in sc:
            arr = np.asarray(sc[key])
            if arr.shape != shape:
                raise ConfigError(f"scenario.{key}", f"shape {arr.shape}, expected {shape}")
            if arr.size and (arr.min() < 0 or arr.max() >= p):
                raise ConfigError(f"scenario.{key}", f"entries must lie in 0..{p - 1}")
    if ("A" in sc) != ("b" in sc):
        raise ConfigError("scenario.A" if "b" in sc else "scenario.b", "A and b go together")
    for i, eta in enumerate(cfg["leakage"]["eta"]):
        if eta <= 0:
            raise ConfigError(f"leakage.eta[{i}]", "must be positive")
    for key in ("R", "R_A"):
        for i, v in enumerate(cfg["exponent"][key]):
            if v < 0:
                raise ConfigError(f"exponent.{key}[{i}]", "must be non-negative")
    return cfg


def _check_probs(v: Sequence[float], where: str):
    arr = np.asarray(v, float)
    if np.any(arr < 0):
        raise ConfigError(where, "has a negative entry")
    if abs(arr.sum() - 1.0) > 1e-9:
        raise ConfigError(where, f"sums to {arr.sum():.12g}, expected 1")


def config_hash(cfg: Dict[str, Any]) -> str:
    text = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()[:16]


# --- scenario ----------------------------------------------------------------

def channel_of(sc) -> Channel:
    return Channel(np.asarray(sc["W"], float)) if "W" in sc else Channel.bsc(sc["bsc"])


def build_system(cfg) -> SystemInstance:
    sc = cfg["scenario"]
    spec = FieldSpec(sc["modulus"])
    W = channel_of(sc)
    if "A" in sc:
        A = FieldMatrix(spec, np.asarray(sc["A"], dtype=np.int64).reshape(sc["n"], sc["m"]))
        b = FieldVector(spec, np.asarray(sc["b"], dtype=np.int64))
    else:
        A, b = random_affine(sc["n"], sc["m"], spec, make_rng(cfg["seed"], 0))
    adv = AdversaryEncoder.from_strategy(sc["adversary"], sc["n"], W.output_size, sc.get("R_A"))
    if "R_A" in sc:
        adv.register(sc["R_A"])
    return SystemInstance(Distribution(sc["p_x"]), W, AffineEncoder(A, b), adv)


# --- output ------------------------------------------------------------------

def fmt(v) -> str:
    """12 significant digits, locale independent."""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(0.0 if v == 0 else v, ".12g")
    return str(v)


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else str(v)
    if isinstance(v, (np.bool_,)):
        return bool(v)
    return v


def provenance(cfg, command: str) -> Dict[str, Any]:
    import scipy
    return {"command": command, "config_hash": config_hash(cfg), "seed": cfg["seed"],
            "config": cfg,
            "versions": {"privamp": __version__, "numpy": np.__version__,
                         "scipy": scipy.__version__, "python": platform.python_version()}}


def write_outputs(out: Path, cfg, command: str, header: List[str], rows: List[list],
                  report: List[str], extra: Dict[str, Any]):
    out.mkdir(parents=True, exist_ok=True)
    h = config_hash(cfg)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header + ["config_hash"])
    for r in rows:
        w.writerow([fmt(v) for v in r] + [h])
    (out / "results.csv").write_text(buf.getvalue())
    doc = provenance(cfg, command)
    doc["results"] = {"header": header, "rows": [[_jsonable(v) for v in r] for r in rows]}
    doc.update(_jsonable(extra))
    (out / "results.json").write_text(json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n")
    (out / "report.txt").write_text("\n".join(report) + "\n")


# --- commands ----------------------------------------------------------------

def cmd_verify(cfg, workers: int):
    """Run the invariant suites; the quick scale finishes in seconds."""
    seed = cfg["seed"]
    if cfg["verify"]["scale"] == "quick":
        results = suites.quick_suite(seed=seed or 2024)
    else:
        results = [suites.check_collision_counts(), suites.check_leakage_bound(), suites.check_ensemble_leakage(),
                   suites.check_tail_events(), suites.check_error_exponent(),
                   suites.check_ensemble_error(), suites.check_region_sum_rate(),
                   suites.check_tilde_bounds(), suites.check_tilde_derivatives(),
                   suites.check_tilde_concavity(), suites.check_F_dominates_tilde(),
                   suites.check_tilde_quadratic_floor(), suites.check_tilde_positivity(),
                   suites.check_region_consistency(), suites.check_finite_n_trend()]
    rows = [[r.name, r.passed, r.margin] for r in results]
    report = [f"{'PASS' if r.passed else 'FAIL'}  {r.name}  (worst margin {fmt(r.margin)})"
              for r in results]
    for r in results:
        report += [f"  {r.name}: {d}" for d in r.details]
    ok = all(r.passed for r in results)
    report.append("all checks passed" if ok else "some checks FAILED")
    return ["check", "passed", "worst_margin"], rows, report, {}, ok


def cmd_simulate(cfg, workers: int):
    sys_ = build_system(cfg)
    s = cfg["simulate"]
    policy = DecoderPolicy(s["policy"])
    res = simulate(sys_, s["trials"], cfg["seed"], policy, s["chunk"], workers, s["level"])
    exact = error_prob_exact(sys_.encoder, sys_.p_x, policy)
    inside = res.ci_low - 1e-12 <= exact <= res.ci_high + 1e-12
    rows = [[res.trials, res.errors, res.error_rate, res.ci_low, res.ci_high, exact]]
    report = [f"encoder:\n{sys_.encoder.to_text().rstrip()}",
              f"simulated error rate {fmt(res.error_rate)} ({res.errors}/{res.trials}), "
              f"{s['level']:.0%} Wilson interval [{fmt(res.ci_low)}, {fmt(res.ci_high)}]",
              f"exact error probability {fmt(exact)} "
              f"({'inside' if inside else 'outside'} the interval)"]
    extra = {"system": sys_.provenance(), "encoder": sys_.encoder.to_text()}
    return ["trials", "errors", "error_rate", "ci_low", "ci_high", "exact_error_prob"], rows, report, extra, True


def cmd_leakage(cfg, workers: int):
    sys_ = build_system(cfg)
    j = build_joint(sys_)
    R = cfg["leakage"].get("R", sys_.encoder.rate())
    joint = leakage_exact(j, "joint", workers)
    reduced = leakage_exact(j, "reduced")
    bound = leakage_divergence_bound(j, check=False)
    th = theta(j, R)
    rows, report = [], [f"encoder:\n{sys_.encoder.to_text().rstrip()}",
                        f"adversary {sys_.adversary.name}, rate {fmt(sys_.adversary.rate)}",
                        f"leakage (joint route) {fmt(joint)}, (reduced route) {fmt(reduced)}",
                        f"divergence bound {fmt(bound)}, Theta({fmt(R)}) = {fmt(th)}"]
    ok = joint <= bound + 1e-10 and abs(joint - reduced) <= 1e-9
    for eta in cfg["leakage"]["eta"]:
        t = theta_tail_bound(j, R, eta)
        ok &= t.ok
        rows.append([eta, joint, reduced, bound, th, t.wp, t.bound, t.ok])
        report.append(f"eta={fmt(eta)}: tail probability {fmt(t.wp)}, bound {fmt(t.bound)}, "
                      f"{'holds' if t.ok else 'VIOLATED'}")
    extra = {"system": sys_.provenance(), "encoder": sys_.encoder.to_text(), "R": R}
    return (["eta", "leakage_joint", "leakage_reduced", "divergence_bound", "theta",
             "tail_prob", "tail_bound", "tail_ok"], rows, report, extra, ok)


def cmd_exponent(cfg, workers: int):
    sc, e = cfg["scenario"], cfg["exponent"]
    W = channel_of(sc)
    p_k = Distribution.uniform(sc["modulus"])
    p_x = Distribution(sc["p_x"])
    model = ex.SideModel.build(p_k, W)
    rows, report = [], []
    header = ["R_A", "R", "E", "F", "mu", "alpha"] + (["F_tilde", "tilde_mu", "tilde_lambda"]
                                                       if e["tilde"] else [])
    for ra in e["R_A"]:
        for r in e["R"]:
            E = ex.error_exponent_E(r, p_x)
            F = ex.F_exponent(ra, r, model, grid=e["grid"], n_starts=e["n_starts"], seed=cfg["seed"])
            row = [ra, r, E, F.value, F.argmax.get("mu", 0.0), F.argmax.get("alpha", 0.0)]
            line = f"R_A={fmt(ra)} R={fmt(r)}: E={fmt(E)} F={fmt(F.value)}"
            if e["tilde"]:
                Ft = ex.F_tilde(ra, r, model, grid=e["grid"], n_starts=e["n_starts"],
                                seed=cfg["seed"], check=False)
                row += [Ft.value, Ft.argmax.get("mu", 0.0), Ft.argmax.get("lambda", 0.0)]
                line += f" F~={fmt(Ft.value)}"
            rows.append(row)
            report.append(line)
    return header, rows, report, {}, True


def cmd_region(cfg, workers: int):
    sc, rg = cfg["scenario"], cfg["region"]
    W = channel_of(sc)
    p_k = Distribution.uniform(sc["modulus"])
    bnd = region_boundary(p_k, W, sweep=rg["sweep"], n_starts=rg["n_starts"], seed=cfg["seed"])
    p1 = sum_rate_check(p_k, W, boundary=bnd)
    closed = "bsc" in sc
    rows = []
    for (a, r), wit in zip(bnd.points, bnd.witnesses):
        row = [a, r]
        if closed:
            row.append(float(bsc_frontier(a, sc["bsc"])[0]))
        rows.append(row)
    report = [f"H(K) = {fmt(bnd.h_k)}, H(Z) = {fmt(bnd.h_z)}, H(K|Z) = {fmt(bnd.h_k_given_z)}",
              f"{len(rows)} frontier vertices from a {bnd.sweep}-point sweep",
              f"min R_A + R = {fmt(p1.min_sum)} (H(K) = {fmt(p1.h_k)}), convex: {p1.convex}"]
    if closed:
        dev = max(abs(r[1] - r[2]) for r in rows)
        report.append(f"largest deviation from the closed-form BSC frontier {fmt(dev)}")
    extra = {"witnesses": [w for w in bnd.witnesses], "sum_rate_ok": p1.ok}
    header = ["R_A", "R"] + (["R_closed_form"] if closed else [])
    return header, rows, report, extra, p1.ok


HANDLERS = {"verify": cmd_verify, "simulate": cmd_simulate, "leakage": cmd_leakage,
            "exponent": cmd_exponent, "region": cmd_region}


# --- entry point -------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="privamp", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", help="TOML scenario file (defaults apply to missing fields)")
    ap.add_argument("--out", default="out", help="output directory")
    ap.add_argument("--workers", type=int, help="worker processes (default: all cores)")
    ap.add_argument("--seed", type=int, help="override the config seed")
    return ap


def run(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        raw = load_config(args.config)
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("--seed", "must be non-negative")
            raw["seed"] = args.seed
        cfg = validate_config(raw)
        old_cap = set_enumeration_cap(cfg["cap"]) if "cap" in cfg else None
        workers = args.workers or cfg.get("workers") or os.cpu_count() or 1
        try:
            header, rows, report, extra, ok = HANDLERS[args.command](cfg, workers)
        finally:
            if old_cap is not None:
                set_enumeration_cap(old_cap)
    except ConfigError as exc:
        print(exc, file=sys.stderr)
        return EXIT_CONFIG
    except (UsageError, ModelError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except EnumerationCapError as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return EXIT_CAP
    write_outputs(Path(args.out), cfg, args.command, header, rows, report, extra)
    print("\n".join(report))
    return EXIT_OK if ok else EXIT_VIOLATION


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
