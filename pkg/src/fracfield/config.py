"""Run configuration: schema, validation, defaults, and canonical hashing.

Configs are plain JSON documents. Validation errors always raise
ConfigInvalid with the dotted path of the offending field in the message, so
a missing "alpha" is reported as exactly that. The canonical form (defaults
filled, keys sorted) is what gets hashed and echoed into every output file;
two configs with the same canonical form produce the same config_hash.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigInvalid

SCHEMA_VERSION = 1

TASKS = ("solve", "sweep-lambda", "multiplicity", "verify-extension", "morse", "report")

_SHAPE_PARAMS = {"rectangle": ("a", "b"), "disk": ("R",), "annulus": ("R", "r")}


def default_config(task: str = "solve") -> dict:
    """Built-in disk configuration; annulus tasks swap in an annulus domain."""
    domain = {"shape": "disk", "params": {"R": 1.0}, "lambda": 1.0, "h": 0.1}
    if task in ("multiplicity", "sweep-lambda"):
        domain = {"shape": "annulus", "params": {"R": 1.0, "r": 0.4}, "lambda": 4.0, "h": 0.25}
    cfg = {
        "task": task,
        "domain": domain,
        "model": {"alpha": 0.5, "p": 2.0, "theta": 3.0, "q": 3.5},
        "solver": {"K": None, "tol": 1e-8, "max_iter": 20000, "n_starts": 4, "rng_seed": 0},
        "output": {"dump_fields": False},
    }
    if task == "sweep-lambda":
        cfg["sweep"] = {"lambdas": [2.0, 4.0], "radii": [1.0, 2.0, 4.0]}
    return cfg


@dataclass(frozen=True)
class RunConfig:
    """Validated, canonicalized run description.

    canonical holds the JSON-ready dict with every default filled in; the
    typed accessors below read from it. config_hash is the sha256 of the
    canonical serialization, stamped into all outputs.
    """

    canonical: dict
    config_hash: str

    @property
    def task(self) -> str:
        return self.canonical["task"]

    @property
    def shape(self) -> str:
        return self.canonical["domain"]["shape"]

    @property
    def params(self) -> dict:
        return dict(self.canonical["domain"]["params"])

    @property
    def lam(self) -> float:
        return self.canonical["domain"]["lambda"]

    @property
    def h(self) -> float:
        return self.canonical["domain"]["h"]

    @property
    def alpha(self) -> float:
        return self.canonical["model"]["alpha"]

    @property
    def model_pqtheta(self) -> tuple[float, float, float]:
        m = self.canonical["model"]
        return m["p"], m["theta"], m["q"]

    @property
    def K(self) -> int | None:
        return self.canonical["solver"]["K"]

    @property
    def tol(self) -> float:
        return self.canonical["solver"]["tol"]

    @property
    def max_iter(self) -> int:
        return self.canonical["solver"]["max_iter"]

    @property
    def n_starts(self) -> int:
        return self.canonical["solver"]["n_starts"]

    @property
    def rng_seed(self) -> int:
        return self.canonical["solver"]["rng_seed"]

    @property
    def lambdas(self) -> list[float]:
        return list(self.canonical.get("sweep", {}).get("lambdas", []))

    @property
    def radii(self) -> list[float]:
        return list(self.canonical.get("sweep", {}).get("radii", []))

    @property
    def dump_fields(self) -> bool:
        return self.canonical["output"]["dump_fields"]


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=False) + "\n"


def _require(mapping: dict, key: str, path: str):
    if key not in mapping:
        raise ConfigInvalid(f"missing required field {path}{key!r}" if not path
                            else f"missing required field \"{path}.{key}\"")
    return mapping[key]


def _number(mapping: dict, key: str, path: str, lo=None, hi=None, strict_lo=True):
    v = _require(mapping, key, path)
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigInvalid(f"field \"{path}.{key}\" must be a finite number, got {v!r}")
    v = float(v)
    if lo is not None and (v <= lo if strict_lo else v < lo):
        raise ConfigInvalid(f"field \"{path}.{key}\" must be > {lo}, got {v}")
    if hi is not None and v >= hi:
        raise ConfigInvalid(f"field \"{path}.{key}\" must be < {hi}, got {v}")
    return v


def _integer(mapping: dict, key: str, path: str, lo: int) -> int:
    v = _require(mapping, key, path)
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigInvalid(f"field \"{path}.{key}\" must be an integer, got {v!r}")
    if v < lo:
        raise ConfigInvalid(f"field \"{path}.{key}\" must be >= {lo}, got {v}")
    return v


def validate_config(raw: dict, task: str | None = None) -> RunConfig:
    """Validate a raw config dict, fill defaults, and freeze the canonical form.

    task, when given, is the subcommand the user invoked; a conflicting task
    inside the document is a validation error rather than a silent override.
    """
    if not isinstance(raw, dict):
        raise ConfigInvalid(f"config root must be a JSON object, got {type(raw).__name__}")

    doc_task = raw.get("task")
    if doc_task is not None and doc_task not in TASKS:
        raise ConfigInvalid(f"field \"task\" must be one of {list(TASKS)}, got {doc_task!r}")
    if task is not None and doc_task is not None and task != doc_task:
        raise ConfigInvalid(
            f"field \"task\" is {doc_task!r} but the {task!r} subcommand was invoked"
        )
    eff_task = task or doc_task
    if eff_task is None:
        raise ConfigInvalid("missing required field \"task\"")

    known = {"task", "domain", "model", "solver", "sweep", "output"}
    for key in raw:
        if key not in known:
            raise ConfigInvalid(f"unknown field {key!r} (known: {sorted(known)})")

    dom_raw = _require(raw, "domain", "")
    if not isinstance(dom_raw, dict):
        raise ConfigInvalid("field \"domain\" must be an object")
    shape = _require(dom_raw, "shape", "domain")
    if shape not in _SHAPE_PARAMS:
        raise ConfigInvalid(
            f"field \"domain.shape\" must be one of {sorted(_SHAPE_PARAMS)}, got {shape!r}"
        )
    params_raw = _require(dom_raw, "params", "domain")
    if not isinstance(params_raw, dict):
        raise ConfigInvalid("field \"domain.params\" must be an object")
    expected = _SHAPE_PARAMS[shape]
    if set(params_raw) != set(expected):
        raise ConfigInvalid(
            f"field \"domain.params\" for {shape!r} must have keys {list(expected)}, "
            f"got {sorted(params_raw)}"
        )
    params = {k: _number(params_raw, k, "domain.params", lo=0.0) for k in expected}
    if shape == "annulus" and params["r"] >= params["R"]:
        raise ConfigInvalid(
            f"field \"domain.params.r\" must be < R, got r={params['r']} R={params['R']}"
        )
    lam = _number(dom_raw, "lambda", "domain", lo=0.0)
    h = _number(dom_raw, "h", "domain", lo=0.0)

    model_raw = _require(raw, "model", "")
    if not isinstance(model_raw, dict):
        raise ConfigInvalid("field \"model\" must be an object")
    alpha = _number(model_raw, "alpha", "model", lo=0.0, hi=1.0)
    p = _number(model_raw, "p", "model", lo=1.0)
    theta = _number(model_raw, "theta", "model", lo=2.0)
    q = _number(model_raw, "q", "model", lo=2.0)

    solver_raw = raw.get("solver", {})
    if not isinstance(solver_raw, dict):
        raise ConfigInvalid("field \"solver\" must be an object")
    solver_defaults = default_config()["solver"]
    solver = {**solver_defaults, **solver_raw}
    for key in solver:
        if key not in solver_defaults:
            raise ConfigInvalid(f"unknown field \"solver.{key}\"")
    K = solver["K"]
    if K is not None:
        K = _integer(solver, "K", "solver", lo=1)
    tol = _number(solver, "tol", "solver", lo=0.0)
    max_iter = _integer(solver, "max_iter", "solver", lo=1)
    n_starts = _integer(solver, "n_starts", "solver", lo=1)
    rng_seed = _integer(solver, "rng_seed", "solver", lo=0)

    canonical: dict = {
        "task": eff_task,
        "domain": {"shape": shape, "params": params, "lambda": lam, "h": h},
        "model": {"alpha": alpha, "p": p, "theta": theta, "q": q},
        "solver": {"K": K, "tol": tol, "max_iter": max_iter,
                   "n_starts": n_starts, "rng_seed": rng_seed},
        "output": {"dump_fields": bool(raw.get("output", {}).get("dump_fields", False))},
    }

    if eff_task == "sweep-lambda":
        sweep_raw = raw.get("sweep")
        if sweep_raw is None:
            raise ConfigInvalid("missing required field \"sweep\" for task sweep-lambda")
        lambdas = sweep_raw.get("lambdas")
        if not isinstance(lambdas, list) or len(lambdas) < 2:
            raise ConfigInvalid("field \"sweep.lambdas\" must be a list of at least 2 values")
        lambdas = [_number({"v": x}, "v", "sweep.lambdas", lo=0.0) for x in lambdas]
        radii = sweep_raw.get("radii", default_config("sweep-lambda")["sweep"]["radii"])
        if not isinstance(radii, list) or len(radii) < 3:
            raise ConfigInvalid("field \"sweep.radii\" must be a list of at least 3 radii")
        radii = [_number({"v": x}, "v", "sweep.radii", lo=0.0) for x in radii]
        canonical["sweep"] = {"lambdas": lambdas, "radii": radii}
    elif "sweep" in raw:
        raise ConfigInvalid(f"field \"sweep\" is only valid for task sweep-lambda, not {eff_task!r}")

    if eff_task == "multiplicity" and shape != "annulus":
        raise ConfigInvalid(
            f"field \"domain.shape\" must be \"annulus\" for task multiplicity, got {shape!r}"
        )

    blob = canonical_json(canonical)
    return RunConfig(canonical=canonical, config_hash=hashlib.sha256(blob.encode()).hexdigest())


def load_config(path: str | Path | None, task: str | None = None,
                seed: int | None = None) -> RunConfig:
    """Read and validate a config file; None falls back to the built-in default.

    seed, when given, overrides solver.rng_seed before canonicalization so the
    hash reflects what actually ran.
    """
    if path is None:
        raw = default_config(task or "solve")
    else:
        p = Path(path)
        if not p.exists():
            raise ConfigInvalid(f"config file {p} does not exist")
        try:
            raw = json.loads(p.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigInvalid(f"config file {p} is not valid JSON: {exc}") from exc
    if seed is not None:
        raw.setdefault("solver", {})
        raw["solver"]["rng_seed"] = seed
    return validate_config(raw, task=task)
