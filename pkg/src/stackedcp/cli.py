"""Config-driven command line: runs, sweeps, and wrappers over the analyses.

Every artifact is a pure function of (config, seed): seeds are never invented
on the user's behalf, worker parallelism only reorders execution, and each
output directory receives a manifest.json recording the normalized config,
its hash, the seed, and package versions, plus a checksum per written file.
Rerunning a command with the same config and seed reproduces every artifact
byte for byte.

Config files are either JSON objects or flat ``key = value`` text with
optional ``[section]`` headers and dotted keys; both forms must carry
``schema = 1`` and normalize to the same canonical mapping (so they hash
identically). CSV artifacts carry series and tables, JSON artifacts carry
summaries.

Exit codes: 0 success, 1 config/validation error, 2 runtime failure,
3 a check command ran fine but its tolerances were not met.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import hashlib
import json
import math
import platform
import sys
from importlib import metadata
from pathlib import Path

import numpy as np

from stackedcp import __version__
from stackedcp.blockgeom import check_lemma_geometry
from stackedcp.engine import apply_harris, build_harris, run_gillespie
from stackedcp.meanfield import Outcome, classify, equilibria, integrate
from stackedcp.model import INFINITE, Configuration, Params
from stackedcp.observables import (
    check_segregation,
    density_series,
    edge_speed,
    estimate_lambda_c,
    is_segregated,
    occupied_edges,
    track_edges,
)
from stackedcp.oracle import oracle_vs_simulation

# stream tag for initial-condition draws, distinct from every engine channel
_INIT_TAG = 0xC0F
_GEOM_TAG = 0x6E0


class ConfigError(Exception):
    """Anything wrong with the config/flags; maps to exit code 1."""


# -- config files ----------------------------------------------------------------

_KNOWN_KEYS = {
    "schema", "seed", "out", "engine", "t_end", "replicas", "series_dt",
    "snap_times", "observers", "window",
    "params.lambda10", "params.lambda20", "params.lambda21", "params.delta",
    "params.dim", "params.side",
    "init.kind", "init.probs", "init.state", "init.blocks", "init.pattern",
    "sweep.axes",
    "oracle.t", "oracle.replicas", "oracle.engines", "oracle.tv_tol",
    "oracle.z_tol", "oracle.min_expected",
    "geometry.n", "geometry.draws", "geometry.side", "geometry.probs",
    "lambdac.dim", "lambdac.side", "lambdac.horizon", "lambdac.replicas",
    "lambdac.bracket", "lambdac.tol",
    "mf.t_end", "mf.starts",
}

_SWEEPABLE = ("lambda10", "lambda20", "lambda21", "delta")
_OBSERVERS = ("density", "edges", "segregation")


def _parse_scalar(text: str, ln: int):
    for candidate in (text, text.split("#", 1)[0].strip()):
        if not candidate:
            break
        try:
            return json.loads(candidate)
        except ValueError:
            pass
        if candidate.lower() in ("inf", "infinite", "infinity"):
            return "inf"
    if any(ch in text for ch in "[]{}\","):
        raise ConfigError(f"line {ln}: cannot parse value {text!r}")
    return text  # bare word, e.g. engine = gillespie


def _parse_kv(text: str) -> dict:
    flat, prefix = {}, ""
    for ln, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        if s.startswith("[") and s.endswith("]"):
            prefix = s[1:-1].strip()
            if not prefix:
                raise ConfigError(f"line {ln}: empty section name")
            continue
        key, eq, val = s.partition("=")
        key, val = key.strip(), val.strip()
        if not eq or not key:
            raise ConfigError(f"line {ln}: expected key = value, got {s!r}")
        full = f"{prefix}.{key}" if prefix and "." not in key else key
        if full in flat:
            raise ConfigError(f"line {ln}: duplicate key {full!r}")
        flat[full] = _parse_scalar(val, ln)
    return flat


def load_config(path) -> dict:
    """Read a config file (JSON or key=value text) into a flat dotted dict."""
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}")
    if text.lstrip().startswith("{"):
        try:
            raw = json.loads(text)
        except ValueError as e:
            raise ConfigError(f"invalid JSON in {path}: {e}")
        if not isinstance(raw, dict):
            raise ConfigError("config JSON must be an object")
        flat = {}
        for k, v in raw.items():
            if isinstance(v, dict):
                for k2, v2 in v.items():
                    if isinstance(v2, dict):
                        raise ConfigError(f"{k}.{k2}: config nests too deep")
                    flat[f"{k}.{k2}"] = v2
            else:
                flat[k] = v
        return flat
    return _parse_kv(text)


# -- coercion helpers ------------------------------------------------------------


def _as_int(x, name, lo=None, hi=None) -> int:
    if isinstance(x, bool) or not isinstance(x, (int, float)) or x != int(x):
        raise ConfigError(f"{name} must be an integer, got {x!r}")
    v = int(x)
    if lo is not None and v < lo:
        raise ConfigError(f"{name} must be >= {lo}, got {v}")
    if hi is not None and v >= hi:
        raise ConfigError(f"{name} must be < {hi}, got {v}")
    return v


def _as_float(x, name, lo=None) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise ConfigError(f"{name} must be a number, got {x!r}")
    v = float(x)
    if not math.isfinite(v):
        raise ConfigError(f"{name} must be finite, got {v}")
    if lo is not None and v < lo:
        raise ConfigError(f"{name} must be >= {lo}, got {v}")
    return v


def _as_floats(x, name, length=None) -> list:
    if not isinstance(x, (list, tuple)):
        raise ConfigError(f"{name} must be a list, got {x!r}")
    if length is not None and len(x) != length:
        raise ConfigError(f"{name} must have {length} entries, got {len(x)}")
    return [_as_float(v, f"{name}[{i}]") for i, v in enumerate(x)]


def _as_choice(x, name, choices) -> str:
    if x not in choices:
        raise ConfigError(f"{name} must be one of {sorted(choices)}, got {x!r}")
    return x


def normalize_config(flat: dict, *, seed_flag=None, out_flag=None) -> dict:
    """Validate the flat config and fill defaults into one canonical dict.

    The result contains every section with defaults made explicit, so a JSON
    config and a key=value config describing the same experiment produce the
    same mapping (and the same hash in the manifest).
    """
    if not isinstance(flat, dict):
        raise ConfigError("config must be a table/object")
    unknown = sorted(set(flat) - _KNOWN_KEYS)
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
    if "schema" not in flat:
        raise ConfigError('missing "schema" (expected schema = 1)')
    if flat["schema"] != 1 or isinstance(flat["schema"], bool):
        raise ConfigError(
            f"unsupported schema {flat['schema']!r} (this build reads schema 1)")

    cfg: dict = {"schema": 1}

    seed = seed_flag if seed_flag is not None else flat.get("seed")
    if seed is None:
        raise ConfigError(
            "no seed given (config key or --seed); seeds are never "
            "auto-randomized")
    cfg["seed"] = _as_int(seed, "seed", lo=0, hi=2 ** 64)

    out = out_flag if out_flag is not None else flat.get("out")
    cfg["out"] = None if out is None else str(out)

    if any(k.startswith("params.") for k in flat):
        lam21 = flat.get("params.lambda21", 0.0)
        if isinstance(lam21, str):
            if lam21.lower() not in ("inf", "infinite", "infinity"):
                raise ConfigError(f'params.lambda21 must be a rate or "inf", '
                                  f"got {lam21!r}")
            lam21 = "inf"
        else:
            lam21 = _as_float(lam21, "params.lambda21", lo=0.0)
        if "params.lambda10" not in flat or "params.lambda20" not in flat:
            raise ConfigError("params.lambda10 and params.lambda20 are "
                              "required")
        cfg["params"] = {
            "lambda10": _as_float(flat["params.lambda10"], "params.lambda10",
                                  lo=0.0),
            "lambda20": _as_float(flat["params.lambda20"], "params.lambda20",
                                  lo=0.0),
            "lambda21": lam21,
            "delta": _as_float(flat.get("params.delta", 0.0), "params.delta",
                               lo=0.0),
            "dim": _as_int(flat.get("params.dim", 1), "params.dim", lo=1),
            "side": _as_int(flat.get("params.side", 3), "params.side", lo=2),
        }
    else:
        cfg["params"] = None

    cfg["engine"] = _as_choice(flat.get("engine", "gillespie"), "engine",
                               ("gillespie", "harris"))
    if (cfg["engine"] == "harris" and cfg["params"]
            and cfg["params"]["lambda21"] == "inf"):
        raise ConfigError("the harris engine cannot realize lambda21 = inf; "
                          "use engine = gillespie")

    t_end = flat.get("t_end")
    cfg["t_end"] = None if t_end is None else _as_float(t_end, "t_end", lo=0.0)
    cfg["replicas"] = _as_int(flat.get("replicas", 1), "replicas", lo=1)
    cfg["series_dt"] = _as_float(flat.get("series_dt", 1.0), "series_dt")
    if cfg["series_dt"] <= 0:
        raise ConfigError(f"series_dt must be > 0, got {cfg['series_dt']}")

    snap = flat.get("snap_times")
    if snap is None:
        cfg["snap_times"] = None
    else:
        cfg["snap_times"] = sorted(_as_floats(snap, "snap_times"))
        if not cfg["snap_times"]:
            raise ConfigError("snap_times must be non-empty when given")

    obs = flat.get("observers", ["density"])
    if not isinstance(obs, (list, tuple)):
        raise ConfigError(f"observers must be a list, got {obs!r}")
    for o in obs:
        _as_choice(o, "observers entry", _OBSERVERS)
    cfg["observers"] = sorted(set(obs))

    kind = _as_choice(flat.get("init.kind", "random"), "init.kind",
                      ("random", "filled", "blocks", "pattern"))
    init: dict = {"kind": kind}
    if kind == "random":
        probs = _as_floats(flat.get("init.probs", [1 / 3, 1 / 3, 1 / 3]),
                           "init.probs", length=3)
        if min(probs) < 0 or abs(sum(probs) - 1.0) > 1e-9:
            raise ConfigError("init.probs must be 3 nonnegative numbers "
                              "summing to 1")
        init["probs"] = probs
    elif kind == "filled":
        init["state"] = _as_int(flat.get("init.state", 1), "init.state",
                                lo=0, hi=3)
    elif kind == "blocks":
        blocks = flat.get("init.blocks")
        if not isinstance(blocks, (list, tuple)) or not blocks:
            raise ConfigError("init.blocks must be a non-empty list of "
                              "[start, stop, state] triples")
        parsed_blocks = []
        for i, b in enumerate(blocks):
            if not isinstance(b, (list, tuple)) or len(b) != 3:
                raise ConfigError(f"init.blocks[{i}] must be a "
                                  f"[start, stop, state] triple, got {b!r}")
            a = _as_int(b[0], f"init.blocks[{i}].start", lo=0)
            z = _as_int(b[1], f"init.blocks[{i}].stop", lo=1)
            if z <= a:
                raise ConfigError(f"init.blocks[{i}]: stop must exceed start")
            parsed_blocks.append(
                [a, z, _as_int(b[2], f"init.blocks[{i}].state", lo=0, hi=3)])
        init["blocks"] = parsed_blocks
    else:  # pattern
        pattern = flat.get("init.pattern")
        if not isinstance(pattern, (list, tuple)) or not pattern:
            raise ConfigError("init.pattern must be a non-empty list of "
                              "states 0/1/2")
        init["pattern"] = [_as_int(v, f"init.pattern[{i}]", lo=0, hi=3)
                           for i, v in enumerate(pattern)]
    cfg["init"] = init

    axes = flat.get("sweep.axes")
    if axes is not None:
        if not isinstance(axes, (list, tuple)) or not axes:
            raise ConfigError("sweep.axes must be a non-empty list of "
                              "[param, start, stop, steps]")
        parsed = []
        for i, ax in enumerate(axes):
            if not isinstance(ax, (list, tuple)) or len(ax) != 4:
                raise ConfigError(f"sweep.axes[{i}] must be "
                                  "[param, start, stop, steps]")
            name = _as_choice(ax[0], f"sweep.axes[{i}].param", _SWEEPABLE)
            parsed.append([name,
                           _as_float(ax[1], f"sweep.axes[{i}].start", lo=0.0),
                           _as_float(ax[2], f"sweep.axes[{i}].stop", lo=0.0),
                           _as_int(ax[3], f"sweep.axes[{i}].steps", lo=1)])
        if len(parsed) > 2:
            raise ConfigError(f"sweep supports 1 or 2 axes, got {len(parsed)}")
        if len(parsed) == 2 and parsed[0][0] == parsed[1][0]:
            raise ConfigError("sweep axes must name distinct parameters")
        cfg["sweep"] = {"axes": parsed}
    else:
        cfg["sweep"] = {"axes": None}

    cfg["oracle"] = {
        "t": _as_float(flat.get("oracle.t", 1.0), "oracle.t"),
        "replicas": _as_int(flat.get("oracle.replicas", 10000),
                            "oracle.replicas", lo=1),
        "engines": flat.get("oracle.engines", ["gillespie", "harris"]),
        "tv_tol": _as_float(flat.get("oracle.tv_tol", 0.05), "oracle.tv_tol"),
        "z_tol": _as_float(flat.get("oracle.z_tol", 4.0), "oracle.z_tol"),
        "min_expected": _as_float(flat.get("oracle.min_expected", 10.0),
                                  "oracle.min_expected"),
    }
    if not isinstance(cfg["oracle"]["engines"], (list, tuple)):
        raise ConfigError("oracle.engines must be a list")
    for e in cfg["oracle"]["engines"]:
        _as_choice(e, "oracle.engines entry", ("gillespie", "harris"))
    cfg["oracle"]["engines"] = list(cfg["oracle"]["engines"])

    # symbionts must be sparse for the K1 <= N hypothesis to bind on iid draws
    gn = _as_int(flat.get("geometry.n", 8), "geometry.n", lo=1)
    gprobs = _as_floats(flat.get("geometry.probs", [0.95, 0.03, 0.02]),
                        "geometry.probs", length=3)
    cfg["geometry"] = {
        "n": gn,
        "draws": _as_int(flat.get("geometry.draws", 500), "geometry.draws",
                         lo=1),
        "side": _as_int(flat.get("geometry.side", 6 * gn), "geometry.side",
                        lo=2),
        "probs": gprobs,
    }

    # default straddles the fraction-convention 1d threshold (~3.3) so long
    # horizons don't leave both endpoints on the subcritical side
    bracket = _as_floats(flat.get("lambdac.bracket", [1.0, 5.0]),
                         "lambdac.bracket", length=2)
    if not (0 < bracket[0] < bracket[1]):
        raise ConfigError("lambdac.bracket must satisfy 0 < lo < hi")
    cfg["lambdac"] = {
        "dim": _as_int(flat.get("lambdac.dim", 1), "lambdac.dim", lo=1),
        "side": _as_int(flat.get("lambdac.side", 100), "lambdac.side", lo=2),
        "horizon": _as_float(flat.get("lambdac.horizon", 50.0),
                             "lambdac.horizon"),
        "replicas": _as_int(flat.get("lambdac.replicas", 200),
                            "lambdac.replicas", lo=1),
        "bracket": bracket,
        "tol": _as_float(flat.get("lambdac.tol", 0.05), "lambdac.tol"),
    }

    window = flat.get("window")
    if window is not None:
        w = _as_floats(window, "window", length=2)
        if not (0 <= w[0] < w[1]):
            raise ConfigError("window must satisfy 0 <= t0 < t1")
        cfg["window"] = w
    else:
        cfg["window"] = None

    starts = flat.get("mf.starts", [[0.3, 0.3], [0.1, 0.7], [0.7, 0.1],
                                    [0.45, 0.45], [0.05, 0.05], [0.2, 0.5]])
    if not isinstance(starts, (list, tuple)) or not starts:
        raise ConfigError("mf.starts must be a non-empty list of [u1, u2]")
    cfg["mf"] = {
        "t_end": _as_float(flat.get("mf.t_end", 50.0), "mf.t_end"),
        "starts": [_as_floats(s, f"mf.starts[{i}]", length=2)
                   for i, s in enumerate(starts)],
    }
    if cfg["mf"]["t_end"] <= 0:
        raise ConfigError("mf.t_end must be > 0")
    return cfg


# -- building runs ---------------------------------------------------------------


def params_from(cfg: dict) -> Params:
    q = cfg["params"]
    if q is None:
        raise ConfigError("this command needs a [params] block with "
                          "lambda10 and lambda20")
    lam21 = INFINITE if q["lambda21"] == "inf" else q["lambda21"]
    try:
        return Params(q["lambda10"], q["lambda20"], lam21, q["delta"],
                      q["dim"], q["side"], cfg["seed"])
    except ValueError as e:
        raise ConfigError(str(e))


def build_initial(cfg: dict, replica: int) -> Configuration:
    """Start configuration for one replica; random draws are seeded from
    (seed, replica) so the whole run is derivable from the config alone."""
    q, init = cfg["params"], cfg["init"]
    dim, side = q["dim"], q["side"]
    n = side ** dim
    try:
        if init["kind"] == "random":
            rng = np.random.default_rng(
                np.random.SeedSequence((cfg["seed"], replica, _INIT_TAG)))
            return Configuration.random(dim, side, init["probs"], rng)
        if init["kind"] == "filled":
            return Configuration.filled(dim, side, init["state"])
        if init["kind"] == "blocks":
            states = np.zeros(n, dtype=np.int8)
            for a, b, s in init["blocks"]:
                if b > n:
                    raise ConfigError(
                        f"init block [{a}, {b}) exceeds the {n} sites")
                states[a:b] = s
            return Configuration(states, dim, side)
        pattern = np.asarray(init["pattern"], dtype=np.int8)
        if pattern.size != n:
            raise ConfigError(f"init.pattern has {pattern.size} entries; "
                              f"the lattice has {n} sites")
        return Configuration(pattern, dim, side)
    except ValueError as e:
        raise ConfigError(str(e))


def _run(p: Params, cfg0: Configuration, engine: str, t_end: float,
         snap_times, replica: int, record: bool = True):
    if engine == "gillespie":
        return run_gillespie(p, cfg0, t_end, snap_times=snap_times,
                             record=record, replica=replica)
    return apply_harris(build_harris(p, t_end, replica=replica), cfg0,
                        snap_times=snap_times, record=record)


# -- artifacts -------------------------------------------------------------------


def _json_safe(obj):
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        obj = float(obj)
    if isinstance(obj, float) and not math.isfinite(obj):
        if math.isnan(obj):
            return "nan"
        return "inf" if obj > 0 else "-inf"
    return obj


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(_json_safe(obj), sort_keys=True, indent=2)
                    + "\n")


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _versions() -> dict:
    v = {"python": platform.python_version(), "stackedcp": __version__}
    for pkg in ("numpy", "scipy", "numba"):
        try:
            v[pkg] = metadata.version(pkg)
        except metadata.PackageNotFoundError:  # pragma: no cover
            v[pkg] = "unknown"
    return v


def _require_out(cfg: dict) -> Path:
    if not cfg["out"]:
        raise ConfigError("an output directory is required (--out or out =)")
    out = Path(cfg["out"])
    if not out.is_dir():
        raise ConfigError(f"output directory does not exist: {out}")
    return out


def _write_manifest(out: Path, command: str, cfg: dict, files) -> None:
    conf = {k: v for k, v in cfg.items() if k != "out"}
    blob = json.dumps(conf, sort_keys=True, separators=(",", ":"))
    manifest = {
        "artifact": "stackedcp-manifest",
        "schema": 1,
        "command": command,
        "config": conf,
        "config_sha256": hashlib.sha256(blob.encode()).hexdigest(),
        "seed": cfg["seed"],
        "versions": _versions(),
        "files": {name: _sha256(out / name) for name in sorted(files)},
    }
    _write_json(out / "manifest.json", manifest)


def _pool_map(fn, payloads, workers: int):
    if workers <= 1 or len(payloads) <= 1:
        return [fn(q) for q in payloads]
    pool = concurrent.futures.ProcessPoolExecutor(
        max_workers=min(workers, len(payloads)))
    with pool:
        return list(pool.map(fn, payloads))


def _states_str(states: np.ndarray) -> str:
    return "".join(map(str, states.tolist()))


# -- simulate --------------------------------------------------------------------


def _simulate_replica(payload) -> list:
    """Worker: run one replica and write its artifacts; returns filenames."""
    cfg, k, outdir = payload
    out = Path(outdir)
    p = params_from(cfg)
    cfg0 = build_initial(cfg, k)
    t_end, engine = cfg["t_end"], cfg["engine"]
    names = []

    traj = None
    if t_end > 0:
        traj = _run(p, cfg0, engine, t_end, cfg["snap_times"], k)
        final = traj.final
    else:
        final = cfg0

    series_name = f"series_{k:03d}.csv"
    if traj is None:
        (out / series_name).write_text("t,u0,u1,u2\n")
    else:
        density_series(traj, cfg["series_dt"]).to_csv(out / series_name)
    names.append(series_name)

    snap = {
        "artifact": "stackedcp-snapshot",
        "schema": 1,
        "replica": k,
        "engine": engine,
        "t_end": t_end,
        "shape": [p.side] * p.dim,
        "initial": {"states": _states_str(cfg0.states),
                    "counts": [int(c) for c in cfg0.counts]},
        "final": {"t": t_end, "states": _states_str(final.states),
                  "counts": [int(c) for c in final.counts]},
        "survival": {"host": bool(final.counts[1] > 0),
                     "symbiont": bool(final.counts[2] > 0)},
        "n_events": 0 if traj is None else traj.n_events,
    }
    if cfg["snap_times"] is not None and traj is not None:
        snap["snapshots"] = [
            {"t": float(t), "states": _states_str(traj.snapshots[i])}
            for i, t in enumerate(traj.snap_times)]

    if "edges" in cfg["observers"]:
        edges_name = f"edges_{k:03d}.csv"
        if traj is None:
            (out / edges_name).write_text("t,r,l,d\n")
            snap["edges"] = None
        else:
            es = track_edges(traj)
            es.to_csv(out / edges_name)
            snap["edges"] = es.summary()
        names.append(edges_name)

    if "segregation" in cfg["observers"]:
        if traj is None:
            snap["segregation"] = {"initial_segregated": is_segregated(cfg0),
                                   "violations": 0, "first_bad_time": None,
                                   "ok": is_segregated(cfg0),
                                   "cut_touched": False}
        else:
            rep = check_segregation(traj)
            snap["segregation"] = {
                "initial_segregated": rep.initial_segregated,
                "violations": rep.violations,
                "first_bad_time": rep.first_bad_time,
                "ok": rep.ok,
                "cut_touched": rep.cut_touched,
            }

    snap_name = f"snapshot_{k:03d}.json"
    _write_json(out / snap_name, snap)
    names.append(snap_name)
    return names


def cmd_simulate(cfg: dict, workers: int) -> int:
    out = _require_out(cfg)
    if cfg["t_end"] is None:
        raise ConfigError("t_end is required for simulate")
    if cfg["snap_times"] is not None:
        if cfg["snap_times"][0] < 0 or cfg["snap_times"][-1] > cfg["t_end"]:
            raise ConfigError("snap_times must lie within [0, t_end]")
    params_from(cfg)  # fail early on bad rates
    if "edges" in cfg["observers"] or "segregation" in cfg["observers"]:
        if cfg["params"]["dim"] != 1:
            raise ConfigError("edges/segregation observers need dim = 1")
    if "edges" in cfg["observers"]:
        if cfg["init"]["kind"] == "random":
            raise ConfigError("the edges observer needs a deterministic "
                              "segregated start (blocks/pattern/filled init)")
        if not is_segregated(build_initial(cfg, 0)):
            raise ConfigError("the edges observer needs a segregated start")

    payloads = [(cfg, k, str(out)) for k in range(cfg["replicas"])]
    written = [n for names in _pool_map(_simulate_replica, payloads, workers)
               for n in names]
    _write_manifest(out, "simulate", cfg, written)
    print(f"simulate: {cfg['replicas']} replica(s), engine={cfg['engine']}, "
          f"t_end={cfg['t_end']:g}; wrote {len(written) + 1} files to {out}")
    return 0


# -- sweep -----------------------------------------------------------------------


def _sweep_cell(payload):
    """Worker: one grid point -> summary row (replicas run inside)."""
    cfg, idx, overrides = payload
    cell = dict(cfg)
    cell["params"] = {**cfg["params"], **overrides}
    p = params_from(cell)
    n = p.n_sites
    counts = np.zeros((cfg["replicas"], 3), dtype=np.int64)
    for k in range(cfg["replicas"]):
        cfg0 = build_initial(cell, k)
        traj = _run(p, cfg0, cfg["engine"], cfg["t_end"], None, k,
                    record=False)
        counts[k] = traj.final.counts
    u = counts / float(n)
    mean = u.mean(axis=0)
    if cfg["replicas"] > 1:
        se = u.std(axis=0, ddof=1) / math.sqrt(cfg["replicas"])
    else:
        se = np.full(3, np.nan)
    row = {
        **overrides,
        "u0_mean": mean[0], "u0_se": se[0],
        "u1_mean": mean[1], "u1_se": se[1],
        "u2_mean": mean[2], "u2_se": se[2],
        "host_survival": float((counts[:, 1] > 0).mean()),
        "symbiont_survival": float((counts[:, 2] > 0).mean()),
        "replicas": cfg["replicas"],
        "mf_outcome": classify(p).outcome.value,
    }
    return idx, row


def cmd_sweep(cfg: dict, workers: int) -> int:
    out = _require_out(cfg)
    axes = cfg["sweep"]["axes"]
    if not axes:
        raise ConfigError("sweep requires sweep.axes (1 or 2 axes)")
    if cfg["t_end"] is None or cfg["t_end"] <= 0:
        raise ConfigError("sweep requires t_end > 0")
    params_from(cfg)

    grids = [np.linspace(a[1], a[2], a[3]) for a in axes]
    names = [a[0] for a in axes]
    payloads = []
    if len(axes) == 1:
        for i, v in enumerate(grids[0]):
            payloads.append((cfg, i, {names[0]: float(v)}))
    else:
        for i, v in enumerate(grids[0]):
            for j, w in enumerate(grids[1]):
                payloads.append((cfg, i * len(grids[1]) + j,
                                 {names[0]: float(v), names[1]: float(w)}))

    results = _pool_map(_sweep_cell, payloads, workers)
    rows = [row for _, row in sorted(results, key=lambda r: r[0])]
    rows.sort(key=lambda r: tuple(r[a] for a in names))

    cols = names + ["u0_mean", "u0_se", "u1_mean", "u1_se", "u2_mean",
                    "u2_se", "host_survival", "symbiont_survival",
                    "replicas", "mf_outcome"]
    with open(out / "sweep.csv", "w") as fh:
        fh.write("# stackedcp sweep schema=1\n")
        fh.write(",".join(cols) + "\n")
        for row in rows:
            cells = []
            for c in cols:
                v = row[c]
                cells.append(v if isinstance(v, str) else
                             str(v) if isinstance(v, int) else f"{v:.10g}")
            fh.write(",".join(cells) + "\n")
    _write_manifest(out, "sweep", cfg, ["sweep.csv"])
    print(f"sweep: {len(rows)} grid point(s) x {cfg['replicas']} replica(s) "
          f"along {', '.join(names)}; wrote sweep.csv to {out}")
    return 0


# -- mean-field wrappers -----------------------------------------------------------


_OUTCOME_LABEL = {
    Outcome.EXTINCTION: "Extinction",
    Outcome.COEXISTENCE: "Coexistence",
    Outcome.HOSTS_WIN: "Hosts win",
    Outcome.SYMBIONTS_WIN: "Symbionts win",
    Outcome.UNCLASSIFIED: "Unclassified",
}


def _display(c) -> str:
    label = _OUTCOME_LABEL[c.outcome]
    if c.point is None:
        return label
    return f"{label} ({c.point[0]:g},{c.point[1]:g})"


def cmd_classify(cfg: dict, workers: int) -> int:
    p = params_from(cfg)
    c = classify(p)
    print(_display(c))
    print(f"clause: {c.clause}")
    print(f"lhs_2in1: {c.conditions.lhs_2in1}  lhs_1in2: {c.conditions.lhs_1in2}")
    if cfg["out"]:
        out = _require_out(cfg)
        _write_json(out / "classification.json", {
            "artifact": "stackedcp-classification", "schema": 1,
            "params": cfg["params"], "display": _display(c),
            "classification": c.to_dict(),
        })
        _write_manifest(out, "classify", cfg, ["classification.json"])
    return 0


def cmd_meanfield(cfg: dict, workers: int) -> int:
    out = _require_out(cfg)
    if cfg["params"]["lambda21"] == "inf":
        raise ConfigError("mean-field artifacts need finite lambda21")
    p = params_from(cfg)
    c = classify(p)
    eqs = equilibria(p)

    for i, s0 in enumerate(cfg["mf"]["starts"]):
        if s0[0] < 0 or s0[1] < 0 or s0[0] + s0[1] > 1:
            raise ConfigError(f"mf.starts[{i}] lies outside the density "
                              "triangle")
    traj_names = []
    for i, s0 in enumerate(cfg["mf"]["starts"]):
        tr = integrate(tuple(s0), p, cfg["mf"]["t_end"])
        name = f"mf_traj_{i:02d}.csv"
        with open(out / name, "w") as fh:
            fh.write("t,u1,u2\n")
            for j in range(tr.t.size):
                fh.write(f"{tr.t[j]:.10g},{tr.u1[j]:.10g},{tr.u2[j]:.10g}\n")
        traj_names.append(name)

    lam_sum = p.lambda10 + p.lambda21
    _write_json(out / "meanfield.json", {
        "artifact": "stackedcp-meanfield",
        "schema": 1,
        "params": cfg["params"],
        "display": _display(c),
        "classification": c.to_dict(),
        "equilibria": [{"kind": e.kind, "u1": e.u1, "u2": e.u2} for e in eqs],
        "nullclines": {
            "u1_asymptote": (p.delta / lam_sum
                             if p.delta > 0 and lam_sum > 0 else None),
            "ell2_present": bool(p.lambda20 > 0 or p.lambda21 > 0),
        },
        "trajectories": traj_names,
    })
    _write_manifest(out, "meanfield", cfg, ["meanfield.json"] + traj_names)
    print(_display(c))
    print(f"meanfield: {len(eqs)} equilibria, {len(traj_names)} "
          f"trajectories; wrote meanfield.json to {out}")
    return 0


# -- check commands ----------------------------------------------------------------


def cmd_oracle_check(cfg: dict, workers: int) -> int:
    o = cfg["oracle"]
    p = params_from(cfg)
    cfg0 = build_initial(cfg, 0)
    reports = []
    for eng in o["engines"]:
        try:
            reports.append(oracle_vs_simulation(
                p, cfg0, o["t"], o["replicas"], engine=eng,
                min_expected=o["min_expected"]))
        except ValueError as e:
            raise ConfigError(str(e))
    ok = True
    for rep in reports:
        good = rep.tv <= o["tv_tol"] and rep.max_abs_z <= o["z_tol"]
        ok = ok and good
        # expected TV of a perfect engine at this sample size (finite-sample
        # bias of the plug-in estimator), for judging the tolerance choice
        floor = 0.5 * float(np.sum(np.sqrt(
            2.0 * rep.probs * (1.0 - rep.probs) / (math.pi * rep.n_replicas))))
        print(f"{rep.engine}: tv={rep.tv:.5f} (tol {o['tv_tol']:g}, "
              f"noise floor ~{floor:.4f}), "
              f"max|z|={rep.max_abs_z:.2f} (tol {o['z_tol']:g}), "
              f"states_scored={rep.z_states.size}, "
              f"replicas={rep.n_replicas} -> {'ok' if good else 'FAIL'}")
    print(f"oracle check: {'PASS' if ok else 'FAIL'}")
    if cfg["out"]:
        out = _require_out(cfg)
        _write_json(out / "oracle.json", {
            "artifact": "stackedcp-oracle", "schema": 1,
            "params": cfg["params"], "t": o["t"],
            "tolerances": {"tv": o["tv_tol"], "z": o["z_tol"]},
            "reports": [rep.summary() for rep in reports],
            "passed": ok,
        })
        _write_manifest(out, "oracle-check", cfg, ["oracle.json"])
    return 0 if ok else 3


def cmd_geometry_check(cfg: dict, workers: int) -> int:
    g = cfg["geometry"]
    rng = np.random.default_rng(
        np.random.SeedSequence((cfg["seed"], _GEOM_TAG)))
    passed = vacuous = failed = 0
    first_failure = None
    for _ in range(g["draws"]):
        draw = Configuration.random(2, g["side"], g["probs"], rng)
        try:
            res = check_lemma_geometry(draw, g["n"])
        except ValueError as e:
            raise ConfigError(str(e))
        if not res.passed:
            failed += 1
            if first_failure is None:
                first_failure = res.summary()
        elif res.vacuous:
            vacuous += 1
        else:
            passed += 1
    print(f"geometry check: N={g['n']}, side={g['side']}, "
          f"{g['draws']} draws -> {passed} passed, {vacuous} vacuous, "
          f"{failed} failed")
    if first_failure:
        print(f"first failure: {first_failure}")
    if cfg["out"]:
        out = _require_out(cfg)
        _write_json(out / "geometry.json", {
            "artifact": "stackedcp-geometry", "schema": 1,
            "n": g["n"], "side": g["side"], "draws": g["draws"],
            "passed": passed, "vacuous": vacuous, "failed": failed,
            "first_failure": first_failure,
        })
        _write_manifest(out, "geometry-check", cfg, ["geometry.json"])
    return 0 if failed == 0 else 3


def cmd_estimate_lambda_c(cfg: dict, workers: int) -> int:
    lc = cfg["lambdac"]
    est = estimate_lambda_c(lc["dim"], lc["side"], lc["horizon"],
                            lc["replicas"], tuple(lc["bracket"]),
                            tol=lc["tol"], seed=cfg["seed"])
    print(f"lambda_c in [{est.lo:.4f}, {est.hi:.4f}], estimate "
          f"{est.estimate:.4f} (dim={est.dim}, side={est.side}, "
          f"horizon={est.horizon:g}, replicas={est.replicas})")
    for pt in sorted(est.scan, key=lambda q: q.lam):
        print(f"  lambda={pt.lam:.4f}: p_hat={pt.p_hat:.3f} "
              f"ci=[{pt.ci_lo:.3f}, {pt.ci_hi:.3f}]")
    if cfg["out"]:
        out = _require_out(cfg)
        est.to_json(out / "lambdac.json")
        _write_manifest(out, "estimate-lambda-c", cfg, ["lambdac.json"])
    return 0


def cmd_edge_speed(cfg: dict, workers: int) -> int:
    out = _require_out(cfg)
    if cfg["t_end"] is None or cfg["t_end"] <= 0:
        raise ConfigError("edge-speed requires t_end > 0")
    if cfg["window"] is None:
        raise ConfigError("edge-speed requires window = [t0, t1]")
    if cfg["window"][1] > cfg["t_end"]:
        raise ConfigError("window must lie within [0, t_end]")
    p = params_from(cfg)
    if p.dim != 1:
        raise ConfigError("edge-speed needs dim = 1")
    if p.lambda20 > 0:
        raise ConfigError("edge-speed needs a host-only system "
                          "(lambda20 = 0)")
    if cfg["init"]["kind"] == "random":
        if cfg["init"]["probs"][2] > 0:
            raise ConfigError("edge-speed needs a host-only start "
                              "(init.probs[2] = 0)")
    elif build_initial(cfg, 0).counts[2] > 0:
        raise ConfigError("edge-speed needs a host-only start (no 2s)")

    window = tuple(cfg["window"])
    names, fits = [], []
    for k in range(cfg["replicas"]):
        cfg0 = build_initial(cfg, k)
        traj = _run(p, cfg0, cfg["engine"], cfg["t_end"], None, k)
        name = f"edges_{k:03d}.csv"
        occupied_edges(traj).to_csv(out / name)
        names.append(name)
        est = edge_speed(traj, window)
        fits.append({"replica": k, "intercept": est.intercept,
                     **est.summary()})
        print(f"replica {k}: alpha={est.alpha:.4f}, r2={est.r2:.5f}, "
              f"n_points={est.n_points}")
    _write_json(out / "fit.json", {
        "artifact": "stackedcp-edge-speed", "schema": 1,
        "params": cfg["params"], "window": list(window),
        "fits": fits,
        "alpha_mean": float(np.mean([f["alpha"] for f in fits])),
    })
    _write_manifest(out, "edge-speed", cfg, names + ["fit.json"])
    return 0


# -- entry point -------------------------------------------------------------------


_HANDLERS = {
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "meanfield": cmd_meanfield,
    "classify": cmd_classify,
    "oracle-check": cmd_oracle_check,
    "geometry-check": cmd_geometry_check,
    "estimate-lambda-c": cmd_estimate_lambda_c,
    "edge-speed": cmd_edge_speed,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # config errors exit 1, not argparse's 2
        raise ConfigError(message)


def _build_parser() -> _Parser:
    common = _Parser(add_help=False)
    common.add_argument("--config", required=True, metavar="PATH",
                        help="experiment config (JSON or key=value text)")
    common.add_argument("--seed", type=int, default=None, metavar="U64",
                        help="overrides the config seed")
    common.add_argument("--workers", type=int, default=1, metavar="N",
                        help="bounded worker pool for replicas/grid cells")
    common.add_argument("--out", default=None, metavar="DIR",
                        help="output directory (must exist)")
    ap = _Parser(prog="stackedcp",
                 description="stacked contact process experiments")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, help_ in (
        ("simulate", "run replicas and write series/snapshot artifacts"),
        ("sweep", "parameter grid -> summary table (sweep.csv)"),
        ("meanfield", "mean-field classification, equilibria, trajectories"),
        ("classify", "print the mean-field outcome for the params block"),
        ("oracle-check", "compare engines against the exact law (small n)"),
        ("geometry-check", "random-configuration comparison-geometry tallies"),
        ("estimate-lambda-c", "bisect the single-type critical rate"),
        ("edge-speed", "front-speed fit for a host-only run"),
    ):
        sub.add_parser(name, parents=[common], help=help_)
    return ap


def main(argv=None) -> int:
    try:
        ns = _build_parser().parse_args(argv)
        if ns.workers < 1:
            raise ConfigError("--workers must be >= 1")
        cfg = normalize_config(load_config(ns.config), seed_flag=ns.seed,
                               out_flag=ns.out)
        handler = _HANDLERS[ns.command]
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 1
    try:
        return handler(cfg, ns.workers)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 1
    except Exception as e:
        print(f"runtime error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
