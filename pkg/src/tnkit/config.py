"""Run configuration: JSON schema, validation, and scan expansion.

A config is one JSON object. Common keys: ``run`` (optional, must match the
subcommand when present), ``seed`` (required integer, even for
deterministic runs), ``scan`` (optional mapping from dotted setting paths
to lists of values), plus the settings of the subcommand. Scans expand to
the cross product of the listed values, ordered by sorted path name then
list position, which fixes the run indexing.

Validation errors carry the dotted path of the offending field.
"""

from __future__ import annotations

import copy
import itertools
import json
from dataclasses import dataclass

import numpy as np

from .dmrg import DmrgConfig
from .models import (
    ClassicalModelSpec,
    HamiltonianSpec,
    PAULI,
)
from .tebd import TebdConfig

SUBCOMMANDS = ("dmrg", "tebd", "thermal", "trg", "oracle")


class ConfigError(Exception):
    """Invalid configuration; ``field`` is the dotted path when known."""

    def __init__(self, message: str, field: str | None = None):
        super().__init__(message)
        self.field = field


def load_config(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    return raw


def _get(settings: dict, field: str, kind, default=..., prefix: str = ""):
    path = f"{prefix}{field}"
    if field not in settings:
        if default is ...:
            raise ConfigError(f"missing required field '{path}'", field=path)
        return default
    value = settings[field]
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if kind is not None and not isinstance(value, kind):
        raise ConfigError(
            f"field '{path}' must be {getattr(kind, '__name__', kind)}, "
            f"got {type(value).__name__}",
            field=path,
        )
    if kind is int and isinstance(value, bool):
        raise ConfigError(f"field '{path}' must be int, got bool", field=path)
    return value


def _reject_unknown(settings: dict, allowed: set, prefix: str = ""):
    for key in settings:
        if key not in allowed:
            raise ConfigError(f"unknown field '{prefix}{key}'", field=f"{prefix}{key}")


def chain_spec(settings: dict) -> HamiltonianSpec:
    model = _get(settings, "model", dict)
    name = _get(model, "name", str, prefix="model.")
    n_sites = _get(model, "n_sites", int, prefix="model.")
    try:
        if name == "transverse_field_ising":
            _reject_unknown(model, {"name", "n_sites", "J", "h"}, "model.")
            return HamiltonianSpec(
                model=name,
                n_sites=n_sites,
                J=_get(model, "J", float, 1.0, "model."),
                h=_get(model, "h", float, 0.0, "model."),
            )
        if name == "heisenberg_xxz":
            _reject_unknown(model, {"name", "n_sites", "J", "delta", "field"}, "model.")
            return HamiltonianSpec(
                model=name,
                n_sites=n_sites,
                J=_get(model, "J", float, 1.0, "model."),
                delta=_get(model, "delta", float, 1.0, "model."),
                field=_get(model, "field", float, 0.0, "model."),
            )
        if name == "custom_nn":
            _reject_unknown(model, {"name", "n_sites", "two_site", "one_site"}, "model.")
            two = np.array(_get(model, "two_site", list, prefix="model."), dtype=float)
            one = model.get("one_site")
            if one is not None:
                one = np.array(one, dtype=float)
            return HamiltonianSpec(model=name, n_sites=n_sites, two_site=two, one_site=one)
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"invalid model: {exc}", field="model") from None
    raise ConfigError(f"unknown model name {name!r}", field="model.name")


def classical_spec(settings: dict) -> ClassicalModelSpec:
    model = _get(settings, "model", dict)
    _reject_unknown(model, {"name", "beta", "J"}, "model.")
    name = _get(model, "name", str, "ising_2d", "model.")
    beta = _get(model, "beta", float, prefix="model.")
    try:
        return ClassicalModelSpec(
            model=name, beta=beta, J=_get(model, "J", float, 1.0, "model.")
        )
    except ValueError as exc:
        raise ConfigError(f"invalid model: {exc}", field="model") from None


def pauli_by_name(name: str, field: str) -> np.ndarray:
    if not isinstance(name, str) or name not in PAULI:
        raise ConfigError(
            f"field '{field}' must be one of {sorted(PAULI)}, got {name!r}", field=field
        )
    return PAULI[name]


_COMMON_KEYS = {"run", "seed", "scan"}

_ALLOWED = {
    "dmrg": _COMMON_KEYS
    | {
        "model",
        "max_bond",
        "n_sweeps",
        "tol",
        "lanczos_max_iter",
        "lanczos_tol",
        "noise",
        "n_excited",
        "penalty_weight",
        "observables",
    },
    "tebd": _COMMON_KEYS
    | {
        "model",
        "dt",
        "n_steps",
        "max_bond",
        "order",
        "imag",
        "rel_cutoff",
        "abort_threshold",
        "state",
        "observables",
    },
    "thermal": _COMMON_KEYS
    | {"model", "beta", "dt", "max_bond", "order", "rel_cutoff", "observables"},
    "trg": _COMMON_KEYS | {"model", "method", "max_bond", "n_iters", "rel_cutoff"},
    "oracle": _COMMON_KEYS
    | {"task", "model", "beta", "J", "k", "length", "width", "site_op"},
}


def validate_settings(subcommand: str, settings: dict) -> None:
    """Full schema check for one resolved run; raises ConfigError."""
    if subcommand not in SUBCOMMANDS:
        raise ConfigError(f"unknown subcommand {subcommand!r}")
    _reject_unknown(settings, _ALLOWED[subcommand])
    _get(settings, "seed", int)

    if subcommand == "dmrg":
        chain_spec(settings)
        try:
            DmrgConfig(
                max_bond=_get(settings, "max_bond", int),
                n_sweeps=_get(settings, "n_sweeps", int, 30),
                tol=_get(settings, "tol", float, 1e-12),
                lanczos_max_iter=_get(settings, "lanczos_max_iter", int, 100),
                lanczos_tol=_get(settings, "lanczos_tol", float, 1e-12),
                noise=_get(settings, "noise", float, 0.0),
                seed=settings["seed"],
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if _get(settings, "n_excited", int, 0) < 0:
            raise ConfigError("field 'n_excited' must be >= 0", field="n_excited")
        if _get(settings, "penalty_weight", float, 10.0) <= 0:
            raise ConfigError("field 'penalty_weight' must be positive", field="penalty_weight")
        for i, name in enumerate(_get(settings, "observables", list, [])):
            pauli_by_name(name, f"observables[{i}]")
    elif subcommand == "tebd":
        spec = chain_spec(settings)
        try:
            TebdConfig(
                dt=_get(settings, "dt", float),
                n_steps=_get(settings, "n_steps", int),
                max_bond=_get(settings, "max_bond", int),
                order=_get(settings, "order", int, 2),
                imag=_get(settings, "imag", bool, False),
                rel_cutoff=_get(settings, "rel_cutoff", float, 0.0),
                abort_threshold=_get(settings, "abort_threshold", float, 1e-3),
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        state = _get(settings, "state", str, "neel")
        if state not in ("neel", "all_up", "uniform", "random"):
            raise ConfigError(
                f"field 'state' must be neel|all_up|uniform|random, got {state!r}",
                field="state",
            )
        for i, obs in enumerate(_get(settings, "observables", list, [])):
            if not isinstance(obs, dict):
                raise ConfigError(
                    f"field 'observables[{i}]' must be an object", field=f"observables[{i}]"
                )
            pauli_by_name(obs.get("op"), f"observables[{i}].op")
            site = _get(obs, "site", int, prefix=f"observables[{i}].")
            if not 0 <= site < spec.n_sites:
                raise ConfigError(
                    f"field 'observables[{i}].site' is outside the chain",
                    field=f"observables[{i}].site",
                )
    elif subcommand == "thermal":
        chain_spec(settings)
        if _get(settings, "beta", float) < 0:
            raise ConfigError("field 'beta' must be nonnegative", field="beta")
        if _get(settings, "dt", float) <= 0:
            raise ConfigError("field 'dt' must be positive", field="dt")
        if _get(settings, "max_bond", int) < 1:
            raise ConfigError("field 'max_bond' must be >= 1", field="max_bond")
        if _get(settings, "order", int, 2) not in (1, 2):
            raise ConfigError("field 'order' must be 1 or 2", field="order")
        if _get(settings, "rel_cutoff", float, 0.0) < 0:
            raise ConfigError("field 'rel_cutoff' must be >= 0", field="rel_cutoff")
        for i, name in enumerate(_get(settings, "observables", list, [])):
            pauli_by_name(name, f"observables[{i}]")
    elif subcommand == "trg":
        classical_spec(settings)
        method = _get(settings, "method", str, "trg")
        if method not in ("trg", "hotrg"):
            raise ConfigError(
                f"field 'method' must be trg|hotrg, got {method!r}", field="method"
            )
        if _get(settings, "max_bond", int) < 1:
            raise ConfigError("field 'max_bond' must be >= 1", field="max_bond")
        if _get(settings, "n_iters", int) < 1:
            raise ConfigError("field 'n_iters' must be >= 1", field="n_iters")
        if _get(settings, "rel_cutoff", float, 0.0) < 0:
            raise ConfigError("field 'rel_cutoff' must be >= 0", field="rel_cutoff")
    else:
        task = _get(settings, "task", str)
        if task == "ed_ground":
            chain_spec(settings)
        elif task == "ed_spectrum":
            chain_spec(settings)
            if _get(settings, "k", int) < 1:
                raise ConfigError("field 'k' must be >= 1", field="k")
        elif task == "gibbs":
            chain_spec(settings)
            if _get(settings, "beta", float) < 0:
                raise ConfigError("field 'beta' must be nonnegative", field="beta")
            if "site_op" in settings:
                pauli_by_name(settings["site_op"], "site_op")
        elif task == "onsager":
            _get(settings, "beta", float)
            _get(settings, "J", float, 1.0)
        elif task == "brute_force":
            if _get(settings, "length", int) < 1:
                raise ConfigError("field 'length' must be >= 1", field="length")
            _get(settings, "beta", float)
            _get(settings, "J", float, 1.0)
        elif task == "transfer_matrix":
            if _get(settings, "width", int) < 1:
                raise ConfigError("field 'width' must be >= 1", field="width")
            _get(settings, "beta", float)
            _get(settings, "J", float, 1.0)
        else:
            raise ConfigError(f"unknown oracle task {task!r}", field="task")


@dataclass(frozen=True)
class RunSpec:
    """One fully resolved run of a (possibly scanned) config."""

    index: int
    subcommand: str
    settings: dict
    scan_values: dict


@dataclass(frozen=True)
class RunConfig:
    """A validated configuration: the subcommand, the raw mapping as loaded
    (the source of the config hash), and the scan-expanded runs, each
    schema-checked."""

    subcommand: str
    raw: dict
    runs: tuple[RunSpec, ...]


def parse_run_config(subcommand: str, path: str) -> RunConfig:
    raw = load_config(path)
    return RunConfig(
        subcommand=subcommand, raw=raw, runs=tuple(resolve_runs(subcommand, raw))
    )


def _assign_dotted(settings: dict, path: str, value) -> None:
    parts = path.split(".")
    node = settings
    for part in parts[:-1]:
        if not isinstance(node.get(part), dict):
            raise ConfigError(f"scan path '{path}' does not exist", field=f"scan.{path}")
        node = node[part]
    if parts[-1] not in node:
        raise ConfigError(f"scan path '{path}' does not exist", field=f"scan.{path}")
    node[parts[-1]] = value


def resolve_runs(subcommand: str, cfg: dict) -> list[RunSpec]:
    """Expand scans and validate every resolved run."""
    declared = cfg.get("run")
    if declared is not None and declared != subcommand:
        raise ConfigError(
            f"config is for '{declared}' but the '{subcommand}' subcommand was invoked",
            field="run",
        )
    scan = cfg.get("scan", {})
    if not isinstance(scan, dict):
        raise ConfigError("field 'scan' must be an object", field="scan")
    base = {k: v for k, v in cfg.items() if k not in ("run", "scan")}

    paths = sorted(scan)
    for path in paths:
        if not isinstance(scan[path], list) or not scan[path]:
            raise ConfigError(
                f"scan values for '{path}' must be a nonempty list", field=f"scan.{path}"
            )
    combos = itertools.product(*(scan[p] for p in paths)) if paths else [()]

    runs = []
    for index, combo in enumerate(combos):
        settings = copy.deepcopy(base)
        values = {}
        for path, value in zip(paths, combo):
            _assign_dotted(settings, path, value)
            values[path] = value
        validate_settings(subcommand, settings)
        runs.append(
            RunSpec(index=index, subcommand=subcommand, settings=settings, scan_values=values)
        )
    return runs
