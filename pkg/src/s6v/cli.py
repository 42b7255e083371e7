"""Command-line experiment runner.

Configuration is resolved as flags > config file > defaults. The config file
is INI with an optional ``[run]`` section for the shared keys and one section
per subcommand; a manifest JSON written by an earlier run is also accepted
and reproduces that run.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import io
import json
import logging
import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Optional

import numpy as np

from . import __version__
from .noise import GENERATOR_VERSION, NoiseField

log = logging.getLogger("s6v")

EXIT_OK, EXIT_CHECK_FAILED, EXIT_CONFIG = 0, 1, 2
REQUIRED = object()


class ConfigError(Exception):
    pass


# ---- value parsers -------------------------------------------------------

def _floats(text) -> tuple[float, ...]:
    if isinstance(text, (list, tuple)):
        return tuple(float(v) for v in text)
    return tuple(float(v) for v in str(text).replace(" ", "").split(",") if v)


def _ints(text) -> tuple[int, ...]:
    if isinstance(text, (list, tuple)):
        return tuple(int(v) for v in text)
    return tuple(int(v) for v in str(text).replace(" ", "").split(",") if v)


def _opt_float(text):
    if text is None or str(text).strip().lower() in ("", "none"):
        return None
    return float(text)


@dataclass(frozen=True)
class Key:
    name: str
    parse: Callable[[Any], Any]
    default: Any = REQUIRED
    help: str = ""


COMMON = [
    Key("seed", int, 0, "top-level seed; all randomness derives from it"),
    Key("replicates", int, 1000, "number of Monte Carlo replicates"),
    Key("rep0", int, 0, "first replicate index"),
    Key("out", str, "out", "output directory"),
    Key("workers", int, 1, "worker processes"),
]

_LATTICE = [
    Key("delta1", float, REQUIRED, "straight-through probability of a lone vertical arrow"),
    Key("delta2", float, REQUIRED, "straight-through probability of a lone horizontal arrow"),
]
_BOUNDARY = [
    Key("boundary", str, "stationary", "stationary | bernoulli | step | empty"),
    Key("b1", _opt_float, None, "west entry density (stationary: derived from b2)"),
    Key("b2", float, 0.5, "south entry density"),
]
_BOX = [Key("x", int, REQUIRED, "box width"), Key("y", int, REQUIRED, "box height")]
_ASEP = [
    Key("L", float, 1.0, "leftward jump rate"),
    Key("R", float, 0.0, "rightward jump rate"),
    Key("b", float, 0.5, "Bernoulli density"),
]

SCHEMAS: dict[str, list[Key]] = {
    "sample": _LATTICE + _BOUNDARY + _BOX,
    "oracle": _LATTICE + _BOUNDARY + _BOX,
    "analytics": _LATTICE + [Key("b2", float, 0.5, "south entry density"),
                             Key("y", float, REQUIRED, "row"),
                             Key("x", _opt_float, None, "column for step constants (default: characteristic)")],
    "mgf-check": _LATTICE + [Key("a1", _floats, "0.2,0.5,0.8", "west densities"),
                             Key("a2", _floats, "0.2,0.5,0.8", "south densities"),
                             Key("x", int, 3, "largest width"), Key("y", int, 3, "largest height"),
                             Key("tolerance", float, 1e-12, "max allowed |log difference|")],
    "stationarity": _LATTICE + [Key("b2", float, 0.5, "south entry density"),
                                Key("b1", _opt_float, None, "west density (default: stationary)"),
                                Key("x", int, 3, "box width"), Key("y", int, 3, "box height"),
                                Key("method", str, "auto", "auto | exact | mc"),
                                Key("level", float, 1e-3, "family-wise test level")],
    "second-class": _LATTICE + _BOUNDARY + _BOX + [
        Key("side", str, "south", "boundary side of the removed entry: south | west"),
        Key("index", int, 1, "position of the removed entry along its side"),
        Key("mode", str, "discrepancy", "discrepancy | direct | antiparticle")],
    "height-tail": _LATTICE + [Key("b2", float, 0.5, "south entry density"),
                               Key("y", int, REQUIRED, "row of the characteristic point"),
                               Key("u", _floats, "0.5,0.75,1.0,1.25", "thresholds in (y(1-kappa))^(1/3) units"),
                               Key("r2_min", float, 0.9, "minimum R^2 of log P against u^(3/2)")],
    "step-tail": _LATTICE + _BOX + [Key("u", _floats, "0,1,2,3,4", "thresholds in sigma units"),
                                    Key("C", _opt_float, None, "template constant (default: fitted)")],
    "asep": _ASEP + [Key("T", float, REQUIRED, "time horizon"),
                     Key("sites", _ints, "0", "observation sites for the current"),
                     Key("observable", str, "current", "current | second_class"),
                     Key("margin", int, 64, "extra window padding")],
    "degenerate": [Key("L", float, 1.0, "leftward jump rate"), Key("R", float, 0.3, "rightward jump rate"),
                   Key("b", float, 0.5, "Bernoulli density"), Key("t", float, 5.0, "limit time"),
                           Key("X", int, 0, "exclusion-process site"),
                           Key("epsilons", _floats, "0.1,0.05,0.02", "decreasing epsilon sequence")],
    "two-point": _LATTICE + [Key("b2", float, 0.5, "south entry density"), Key("x", int, REQUIRED, "column"),
                             Key("y", int, REQUIRED, "row"),
                             Key("method", str, "auto", "auto | exact | mc"),
                             Key("sigmas", float, 3.0, "agreement tolerance in joint standard errors")],
}


# ---- resolution ----------------------------------------------------------

def _load_file(path: str, command: str) -> dict[str, str]:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file {path} not found")
    text = p.read_text()
    if p.suffix == ".json":
        doc = json.loads(text)
        if doc.get("subcommand") not in (None, command):
            raise ConfigError(f"manifest is for subcommand {doc.get('subcommand')!r}, not {command!r}")
        return {k: v for k, v in doc.get("config", doc).items()}
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    cp.read_string(text)
    allowed = {"run", *SCHEMAS}
    for section in cp.sections():
        if section not in allowed:
            raise ConfigError(f"unknown section [{section}]")
    out: dict[str, str] = {}
    for section in ("run", command):
        if cp.has_section(section):
            out.update(cp.items(section))
    return out


def resolve(command: str, file_values: dict, flag_values: dict) -> dict:
    schema = {k.name: k for k in COMMON + SCHEMAS[command]}
    unknown = sorted(set(file_values) - set(schema))
    if unknown:
        raise ConfigError(f"unknown config key(s) for {command}: {', '.join(unknown)}")
    resolved = {}
    for name, key in schema.items():
        raw = flag_values.get(name)
        if raw is None:
            raw = file_values.get(name)
        if raw is None:
            if key.default is REQUIRED:
                raise ConfigError(f"missing required key: {name}")
            raw = key.default
        try:
            resolved[name] = key.parse(raw) if raw is not None else None
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for {name}: {raw!r} ({exc})") from None
    return resolved


def _jsonable(v):
    if isinstance(v, tuple):
        return list(v)
    return v


# ---- artifacts -----------------------------------------------------------

class Artifacts:
    def __init__(self, out: Path):
        self.out = out
        self.files: dict[str, str] = {}
        out.mkdir(parents=True, exist_ok=True)

    def write(self, name: str, data) -> None:
        raw = data.encode() if isinstance(data, str) else bytes(data)
        (self.out / name).write_bytes(raw)
        self.files[name] = hashlib.sha256(raw).hexdigest()

    def json(self, name: str, doc: dict) -> None:
        self.write(name, json.dumps(doc, indent=2, sort_keys=True, default=_default) + "\n")

    def csv(self, name: str, header, rows) -> None:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
        self.write(name, buf.getvalue())


def _default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, tuple):
        return list(o)
    return str(o)


# ---- shared builders -----------------------------------------------------

def _params(cfg):
    from .model import derive_params
    return derive_params(cfg["delta1"], cfg["delta2"])


def _boundary(cfg, params):
    from .analytics import stationary_pair
    from .model import BoundarySpec
    kind = cfg["boundary"]
    if kind == "stationary":
        b1 = cfg["b1"] if cfg["b1"] is not None else stationary_pair(cfg["b2"], params)
        return BoundarySpec.bernoulli(b1, cfg["b2"]), b1
    if kind == "bernoulli":
        if cfg["b1"] is None:
            raise ConfigError("missing required key: b1")
        return BoundarySpec.bernoulli(cfg["b1"], cfg["b2"]), cfg["b1"]
    if kind == "step":
        return BoundarySpec.step(), None
    if kind == "empty":
        return BoundarySpec.empty(), None
    raise ConfigError(f"bad value for boundary: {kind!r}")


def _stationary_b1(cfg, params):
    from .analytics import stationary_pair
    return cfg["b1"] if cfg.get("b1") is not None else stationary_pair(cfg["b2"], params)


# ---- subcommands ---------------------------------------------------------

def cmd_sample(cfg, art: Artifacts) -> int:
    from .model import dump_ensemble, height_grid, sample_ensemble, text_grid
    params = _params(cfg)
    boundary, _ = _boundary(cfg, params)
    ens = sample_ensemble(params, boundary, (cfg["x"], cfg["y"]), NoiseField(cfg["seed"]).replicate(cfg["rep0"]))
    art.write("ensemble.bin", dump_ensemble(ens))
    art.write("ensemble.txt", text_grid(ens))
    H = height_grid(ens)
    rows = [(x, y, int(H[x, y])) for x in range(H.shape[0]) for y in range(H.shape[1])]
    art.csv("heights.csv", ("x", "y", "H"), rows)
    return EXIT_OK


def cmd_oracle(cfg, art: Artifacts) -> int:
    from .oracle import exact_height_dist
    params = _params(cfg)
    boundary, _ = _boundary(cfg, params)
    dist = exact_height_dist(params.delta1, params.delta2, boundary, cfg["x"], cfg["y"])
    rows = [(int(h), str(p), repr(float(p))) for h, p in zip(dist.support, dist.probabilities)]
    art.csv("pmf.csv", ("H", "probability", "float"), rows)
    total = dist.total()
    art.json("summary.json", {"mean": str(dist.mean()), "variance": str(dist.variance()), "total": str(total)})
    return EXIT_OK if total == 1 else EXIT_CHECK_FAILED


def cmd_analytics(cfg, art: Artifacts) -> int:
    from .analytics import OddsPair, admissible, expected_height, stationary_pair, step_constants, x0_of_y
    params = _params(cfg)
    b2 = cfg["b2"]
    b1 = stationary_pair(b2, params)
    y = cfg["y"]
    x0 = x0_of_y(y, OddsPair.from_b(b1).beta, params)
    x = cfg["x"] if cfg["x"] is not None else x0
    doc = {"kappa": params.kappa, "theta": params.theta, "b1": b1, "b2": b2, "y": y, "x0": x0, "x": x,
           "mean_height": expected_height(b1, b2, x, y), "admissible": admissible(x, y, params)}
    if params.open_ordered and doc["admissible"]:
        c = step_constants(x, y, params)
        doc.update({"step_H": c.H_script, "step_sigma": c.sigma, "step_sigma3": c.sigma3})
    art.json("analytics.json", doc)
    return EXIT_OK


def mgf_max_error(delta_pairs, a1s, a2s, xmax: int, ymax: int) -> tuple[float, list]:
    from .analytics import rains_ejs_mgf
    from .model import BoundarySpec, derive_params
    from .oracle import exact_height_dist, exact_mgf
    import mpmath
    worst = 0.0
    rows = []
    for d1, d2 in delta_pairs:
        params = derive_params(d1, d2)
        for a1 in a1s:
            for a2 in a2s:
                for x in range(1, xmax + 1):
                    for y in range(1, ymax + 1):
                        eps, closed = rains_ejs_mgf(a1, a2, params, x, y)
                        dist = exact_height_dist(d1, d2, BoundarySpec.bernoulli(a1, a2), x, y)
                        err = abs(float(mpmath.log(exact_mgf(dist, eps))) - closed)
                        worst = max(worst, err)
                        rows.append((d1, d2, a1, a2, x, y, repr(eps), repr(closed), repr(err)))
    return worst, rows


def cmd_mgf_check(cfg, art: Artifacts) -> int:
    worst, rows = mgf_max_error([(cfg["delta1"], cfg["delta2"])], cfg["a1"], cfg["a2"], cfg["x"], cfg["y"])
    art.csv("mgf.csv", ("delta1", "delta2", "a1", "a2", "x", "y", "epsilon", "log_mgf", "abs_error"), rows)
    ok = worst <= cfg["tolerance"]
    art.json("summary.json", {"max_abs_error": worst, "tolerance": cfg["tolerance"], "passed": ok})
    print(f"max |closed-form - exact| = {worst:.3e}")
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def _use_exact(cfg) -> bool:
    from .oracle import ENUM_CAP
    if cfg["method"] == "auto":
        return cfg["x"] * cfg["y"] <= ENUM_CAP
    if cfg["method"] not in ("exact", "mc"):
        raise ConfigError(f"bad value for method: {cfg['method']!r}")
    return cfg["method"] == "exact"


def cmd_stationarity(cfg, art: Artifacts) -> int:
    from .oracle import exact_stationarity
    from .stats import test_stationarity
    params = _params(cfg)
    b1 = _stationary_b1(cfg, params)
    if _use_exact(cfg):
        dev = exact_stationarity(params.delta1, params.delta2, b1, cfg["b2"], cfg["x"], cfg["y"])
        doc = {"method": "exact", **{k: float(v) for k, v in dev.items()}}
        ok = max(doc[k] for k in ("marginal", "pairwise", "joint")) <= 1e-12
    else:
        rep = test_stationarity(params, b1, cfg["b2"], cfg["x"], cfg["y"], cfg["replicates"], cfg["seed"],
                                cfg["rep0"], level=cfg["level"], require_stationary=cfg["b1"] is None)
        doc = {"method": "mc", "min_marginal_p": float(rep.marginal_p.min()),
               "min_pair_p": float(rep.pair_p.min(initial=1.0)), "level": cfg["level"]}
        ok = rep.passed
    doc["passed"] = bool(ok)
    art.json("stationarity.json", doc)
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def cmd_second_class(cfg, art: Artifacts) -> int:
    from .couplings import MODES, exit_batch
    params = _params(cfg)
    boundary, _ = _boundary(cfg, params)
    if cfg["mode"] not in MODES:
        raise ConfigError(f"bad value for mode: {cfg['mode']!r}")
    side, idx = cfg["side"], cfg["index"]
    if side not in ("south", "west"):
        raise ConfigError(f"bad value for side: {side!r}")
    v0 = (idx, 0) if side == "south" else (0, idx)
    ex = exit_batch(cfg["mode"], params, boundary, v0, (cfg["x"], cfg["y"]), cfg["seed"], cfg["rep0"],
                    cfg["replicates"])
    names = ("north", "east")
    rows = [(cfg["rep0"] + r, names[s], int(c)) for r, (s, c) in enumerate(ex)]
    art.csv("exits.csv", ("replicate", "side", "coord"), rows)
    art.json("summary.json", {"east_fraction": float((ex[:, 0] == 1).mean()), "mean_coord": float(ex[:, 1].mean())})
    return EXIT_OK


def cmd_height_tail(cfg, art: Artifacts) -> int:
    from .stats import stationary_height_tails, write_tail_csv
    params = _params(cfg)
    rep = stationary_height_tails(params, cfg["b2"], cfg["y"], cfg["u"], cfg["replicates"], cfg["seed"],
                                  cfg["rep0"], cfg["workers"])
    buf = io.StringIO()
    write_tail_csv([rep.upper, rep.lower], buf)
    art.write("tails.csv", buf.getvalue())
    ok = rep.upper_shape.passed(cfg["r2_min"]) and rep.lower.monotone()
    art.json("summary.json", {"point": rep.point, "scale": rep.scale, "upper_r2": rep.upper_shape.r2,
                              "upper_slope": rep.upper_shape.slope, "lower_r2": rep.lower_shape.r2,
                              "mode": "shape", "passed": ok})
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def cmd_step_tail(cfg, art: Artifacts) -> int:
    from .stats import step_tail_check, write_tail_csv
    params = _params(cfg)
    rep = step_tail_check(params, cfg["x"], cfg["y"], cfg["u"], cfg["replicates"], cfg["seed"], cfg["C"],
                          cfg["rep0"], workers=cfg["workers"])
    buf = io.StringIO()
    write_tail_csv([c for c in (rep.train, rep.valid) if c is not None], buf)
    art.write("tails.csv", buf.getvalue())
    art.json("summary.json", {"H_script": rep.H_script, "sigma": rep.sigma, "C": rep.C, "mode": rep.mode,
                              "bound": rep.bound, "passed_each": rep.passed_each, "passed": rep.passed})
    return EXIT_OK if rep.passed else EXIT_CHECK_FAILED


def cmd_asep(cfg, art: Artifacts) -> int:
    from .asep import LEFT_IS_L, ASEPConfig, current_batch, second_class_batch, stationary_current_mean
    conf = ASEPConfig.padded(cfg["L"], cfg["R"], cfg["b"], cfg["T"], cfg["sites"], cfg["margin"])
    n, r0 = cfg["replicates"], cfg["rep0"]
    if cfg["observable"] == "current":
        J = current_batch(conf, cfg["seed"], r0, n)
        rows = [(cfg["seed"], cfg["T"], x, int(J[r, q]), "") for r in range(n) for q, x in enumerate(conf.sites)]
        summary = {"mean_J": {str(x): float(J[:, q].mean()) for q, x in enumerate(conf.sites)},
                   "stationary_mean": {str(x): stationary_current_mean(cfg["L"], cfg["R"], cfg["b"], cfg["T"], x)
                                       for x in conf.sites}}
    elif cfg["observable"] == "second_class":
        Q = second_class_batch(conf, cfg["seed"], r0, n)
        rows = [(cfg["seed"], cfg["T"], "", "", int(q)) for q in Q]
        summary = {"mean_Q": float(Q.mean())}
    else:
        raise ConfigError(f"bad value for observable: {cfg['observable']!r}")
    art.csv("asep.csv", ("seed", "T", "x", "J", "Q"), rows)
    summary.update({"window": [-conf.M, conf.N], "convention": LEFT_IS_L})
    art.json("summary.json", summary)
    return EXIT_OK


def degeneration_distances(L, R, b, t, X, epsilons, N, seed, rep0=0):
    """KS distance between the vertex-model height and the exclusion current for each epsilon."""
    from scipy import stats as sps
    from .asep import ASEPConfig, current_batch, degeneration_heights
    conf = ASEPConfig.padded(L, R, b, t, (X,))
    J = current_batch(conf, seed, rep0 + N, N)[:, 0]
    out = []
    for eps in epsilons:
        H = degeneration_heights(eps, L, R, b, t, X, seed, rep0, N)
        out.append((eps, float(sps.ks_2samp(H, J).statistic), float(H.mean()), float(J.mean())))
    return out


def cmd_degenerate(cfg, art: Artifacts) -> int:
    eps = cfg["epsilons"]
    if list(eps) != sorted(eps, reverse=True):
        raise ConfigError("epsilons must be decreasing")
    res = degeneration_distances(cfg["L"], cfg["R"], cfg["b"], cfg["t"], cfg["X"], eps, cfg["replicates"],
                                 cfg["seed"], cfg["rep0"])
    art.csv("degeneration.csv", ("epsilon", "ks_distance", "mean_H", "mean_J"),
            [tuple(repr(v) for v in r) for r in res])
    d = [r[1] for r in res]
    ok = all(a > b for a, b in zip(d, d[1:]))
    art.json("summary.json", {"distances": d, "monotone": ok})
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def cmd_two_point(cfg, art: Artifacts) -> int:
    from .oracle import exact_two_point
    from .stats import two_point_estimate
    params = _params(cfg)
    b1 = _stationary_b1(cfg, params)
    if _use_exact(cfg):
        S, lap = exact_two_point(params.delta1, params.delta2, b1, cfg["b2"], cfg["x"], cfg["y"])
        ok = abs(float(lap - 2 * S)) <= 1e-12
        doc = {"method": "exact", "S": str(S), "laplacian": str(lap), "S_float": float(S)}
    else:
        est = two_point_estimate(params, b1, cfg["b2"], cfg["x"], cfg["y"], cfg["replicates"], cfg["seed"],
                                 cfg["rep0"], workers=cfg["workers"])
        ok = est.agree(cfg["sigmas"])
        doc = {"method": "mc", "S_direct": est.S_direct, "se_direct": est.se_direct,
               "S_laplacian": est.S_laplacian, "se_laplacian": est.se_laplacian, "z": est.z}
    doc["passed"] = bool(ok)
    art.json("two_point.json", doc)
    return EXIT_OK if ok else EXIT_CHECK_FAILED


COMMANDS = {
    "sample": cmd_sample, "oracle": cmd_oracle, "analytics": cmd_analytics, "mgf-check": cmd_mgf_check,
    "stationarity": cmd_stationarity, "second-class": cmd_second_class, "height-tail": cmd_height_tail,
    "step-tail": cmd_step_tail, "asep": cmd_asep, "degenerate": cmd_degenerate, "two-point": cmd_two_point,
}


# ---- entry point ---------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="s6v", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="INI config or a manifest.json from an earlier run")
        for key in COMMON + SCHEMAS[name]:
            sp.add_argument("--" + key.name.replace("_", "-"), dest=key.name, default=None, help=key.help)
    return ap


def main(argv: Optional[list[str]] = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_CONFIG
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format="%(levelname)s %(message)s")
    command = args.command
    flags = {k.name: getattr(args, k.name) for k in COMMON + SCHEMAS[command]}
    try:
        file_values = _load_file(args.config, command) if args.config else {}
        cfg = resolve(command, file_values, flags)
    except (ConfigError, configparser.Error, json.JSONDecodeError) as exc:
        log.error("invalid config: %s", exc)
        return EXIT_CONFIG
    art = Artifacts(Path(cfg["out"]))
    try:
        status = COMMANDS[command](cfg, art)
    except ConfigError as exc:
        log.error("invalid config: %s", exc)
        return EXIT_CONFIG
    except (ValueError, OverflowError) as exc:
        log.error("precondition violated: %s", exc)
        return EXIT_CONFIG
    manifest = {
        "subcommand": command,
        "config": {k: _jsonable(v) for k, v in cfg.items()},
        "generator_version": GENERATOR_VERSION,
        "package_version": __version__,
        "artifacts": dict(sorted(art.files.items())),
        "exit_status": status,
    }
    (art.out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    log.info("%s finished with status %d; artifacts in %s", command, status, art.out)
    return status


if __name__ == "__main__":
    sys.exit(main())
