"""Flat key-value run configuration files.

The format is line based: ``[section]`` headers, ``key = value`` pairs,
blank lines, and ``#`` comments.  Sections and keys are a closed set;
anything unknown is rejected with its line number so typos surface
immediately instead of silently falling back to defaults.  The command line
merges its flag overrides into the parsed document before building, with
line number 0 standing for "command line".
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Callable, TypeVar

from .adversary import (
    AdversaryConfig,
    AdversaryModel,
    AlternatingExtremes,
    AttackStrategy,
    Constant,
    MovePolicy,
    PeriodicCycle,
    Stationary,
    UniformRandom,
    UniformRange,
)
from .engine import SimulationConfig
from .graph import GeometricSpec, Graph, generate_complete, generate_geometric, read_graph
from .protocol import Protocol


class ConfigError(ValueError):
    """A configuration file or override could not be interpreted."""


@dataclass
class RawValue:
    text: str
    line: int  # 0 for command-line overrides

    def where(self) -> str:
        return "command line" if self.line == 0 else f"line {self.line}"


ConfigDoc = dict[str, dict[str, RawValue]]

ALLOWED_KEYS: dict[str, frozenset[str]] = {
    "graph": frozenset({"source", "n", "side", "radius", "seed", "path"}),
    "protocol": frozenset({"name"}),
    "adversary": frozenset(
        {
            "model",
            "f",
            "f_real",
            "policy",
            "cycle_hosts",
            "cycle_period",
            "strategy",
            "value",
            "low",
            "high",
            "magnitude",
            "seed",
            "omit_final_broadcast",
        }
    ),
    "engine": frozenset(
        {
            "gamma",
            "max_rounds",
            "consensus_tol",
            "stall_rounds",
            "master_seed",
            "initial_values",
            "initial_theta",
        }
    ),
}


def parse_config(path: str | Path) -> ConfigDoc:
    """Parse one file, rejecting unknown sections and keys by line number."""
    doc: ConfigDoc = {section: {} for section in ALLOWED_KEYS}
    section: str | None = None
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            name = line[1:-1].strip().lower()
            if name not in ALLOWED_KEYS:
                known = ", ".join(sorted(ALLOWED_KEYS))
                raise ConfigError(f"line {lineno}: unknown section [{name}] (known: {known})")
            section = name
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        if section is None:
            raise ConfigError(f"line {lineno}: key outside any [section]")
        key, _, value = line.partition("=")
        key = key.strip().lower()
        value = value.strip()
        if key not in ALLOWED_KEYS[section]:
            known = ", ".join(sorted(ALLOWED_KEYS[section]))
            raise ConfigError(
                f"line {lineno}: unknown key '{key}' in section [{section}] (known: {known})"
            )
        if key in doc[section]:
            raise ConfigError(f"line {lineno}: duplicate key '{key}' in section [{section}]")
        doc[section][key] = RawValue(value, lineno)
    return doc


def empty_doc() -> ConfigDoc:
    return {section: {} for section in ALLOWED_KEYS}


def merge_overrides(doc: ConfigDoc, section: str, **values: object) -> None:
    """Write non-None override values into the document as command-line text."""
    for key, value in values.items():
        if value is None:
            continue
        if key not in ALLOWED_KEYS[section]:
            raise ConfigError(f"internal: '{key}' is not a [{section}] key")
        doc[section][key] = RawValue(str(value), 0)


T = TypeVar("T")


def _convert(raw: RawValue, kind: Callable[[str], T], what: str) -> T:
    try:
        return kind(raw.text)
    except (TypeError, ValueError):
        raise ConfigError(f"{raw.where()}: {what} (got {raw.text!r})") from None


def _as_int(raw: RawValue, name: str) -> int:
    return _convert(raw, int, f"{name} must be an integer")


def _as_float(raw: RawValue, name: str) -> float:
    return _convert(raw, float, f"{name} must be a number")


def _as_bool(raw: RawValue, name: str) -> bool:
    text = raw.text.strip().lower()
    if text in ("true", "yes", "on", "1"):
        return True
    if text in ("false", "no", "off", "0"):
        return False
    raise ConfigError(f"{raw.where()}: {name} must be true or false (got {raw.text!r})")


def _as_int_list(raw: RawValue, name: str) -> tuple[int, ...]:
    try:
        return tuple(int(part.strip()) for part in raw.text.split(",") if part.strip())
    except ValueError:
        raise ConfigError(f"{raw.where()}: {name} must be comma-separated integers") from None


def _as_float_list(raw: RawValue, name: str) -> tuple[float, ...]:
    try:
        return tuple(float(part.strip()) for part in raw.text.split(",") if part.strip())
    except ValueError:
        raise ConfigError(f"{raw.where()}: {name} must be comma-separated numbers") from None


def _as_theta_map(raw: RawValue, name: str) -> dict[int, int]:
    out: dict[int, int] = {}
    for part in raw.text.split(","):
        part = part.strip()
        if not part:
            continue
        if ":" not in part:
            raise ConfigError(f"{raw.where()}: {name} entries must look like id:theta")
        left, _, right = part.partition(":")
        try:
            out[int(left.strip())] = int(right.strip())
        except ValueError:
            raise ConfigError(f"{raw.where()}: {name} entries must be integer id:theta") from None
    return out


_PROTOCOLS = {p.value: p for p in Protocol}
_MODELS = {m.value: m for m in AdversaryModel}


def parse_protocol(text: str) -> Protocol:
    key = text.strip().lower()
    if key not in _PROTOCOLS:
        raise ConfigError(f"unknown protocol {text!r} (known: {', '.join(sorted(_PROTOCOLS))})")
    return _PROTOCOLS[key]


def parse_model(text: str) -> AdversaryModel:
    key = text.strip().lower()
    if key not in _MODELS:
        raise ConfigError(f"unknown adversary model {text!r} (known: {', '.join(sorted(_MODELS))})")
    return _MODELS[key]


def build_graph(doc: ConfigDoc) -> Graph:
    section = doc["graph"]
    if "source" not in section:
        raise ConfigError("missing [graph] source (complete, geometric, or file)")
    source = section["source"].text.strip().lower()
    where = section["source"].where()
    if source == "complete":
        if "n" not in section:
            raise ConfigError("a complete graph needs [graph] n")
        return generate_complete(_as_int(section["n"], "n"))
    if source == "geometric":
        for key in ("n", "side", "radius"):
            if key not in section:
                raise ConfigError(f"a geometric graph needs [graph] {key}")
        seed = _as_int(section["seed"], "seed") if "seed" in section else None
        spec = GeometricSpec(
            n=_as_int(section["n"], "n"),
            side=_as_float(section["side"], "side"),
            radius=_as_float(section["radius"], "radius"),
            seed=seed,
        )
        return generate_geometric(spec)
    if source == "file":
        if "path" not in section:
            raise ConfigError("a file graph needs [graph] path")
        return read_graph(section["path"].text)
    raise ConfigError(f"{where}: source must be complete, geometric, or file (got {source!r})")


def _build_policy(section: dict[str, RawValue]) -> MovePolicy:
    name = section["policy"].text.strip().lower() if "policy" in section else "stationary"
    if name == "stationary":
        return Stationary()
    if name == "random":
        return UniformRandom()
    if name == "cycle":
        if "cycle_hosts" not in section:
            raise ConfigError("policy cycle needs [adversary] cycle_hosts")
        hosts = _as_int_list(section["cycle_hosts"], "cycle_hosts")
        period = (
            _as_int(section["cycle_period"], "cycle_period") if "cycle_period" in section else 1
        )
        try:
            return PeriodicCycle(hosts=hosts, period=period)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    raise ConfigError(
        f"{section['policy'].where()}: policy must be stationary, random, or cycle (got {name!r})"
    )


def _build_strategy(section: dict[str, RawValue]) -> AttackStrategy:
    name = section["strategy"].text.strip().lower() if "strategy" in section else "constant"
    if name == "constant":
        value = _as_float(section["value"], "value") if "value" in section else 0.0
        return Constant(value)
    if name == "uniform":
        for key in ("low", "high"):
            if key not in section:
                raise ConfigError(f"strategy uniform needs [adversary] {key}")
        try:
            return UniformRange(
                _as_float(section["low"], "low"), _as_float(section["high"], "high")
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    if name == "alternating":
        if "magnitude" not in section:
            raise ConfigError("strategy alternating needs [adversary] magnitude")
        return AlternatingExtremes(_as_float(section["magnitude"], "magnitude"))
    raise ConfigError(
        f"{section['strategy'].where()}: strategy must be constant, uniform, or alternating"
        f" (got {name!r})"
    )


def build_adversary_config(doc: ConfigDoc) -> AdversaryConfig:
    section = doc["adversary"]
    if "model" not in section:
        raise ConfigError("missing [adversary] model")
    model = parse_model(section["model"].text)
    f = _as_int(section["f"], "f") if "f" in section else 0
    f_real = _as_int(section["f_real"], "f_real") if "f_real" in section else 0
    seed = _as_int(section["seed"], "seed") if "seed" in section else None
    omit = (
        _as_bool(section["omit_final_broadcast"], "omit_final_broadcast")
        if "omit_final_broadcast" in section
        else False
    )
    try:
        return AdversaryConfig(
            model=model,
            f=f,
            f_real=f_real,
            policy=_build_policy(section),
            strategy=_build_strategy(section),
            seed=seed,
            omit_final_broadcast=omit,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def build_simulation_config(doc: ConfigDoc) -> SimulationConfig:
    """Assemble a runnable configuration from a parsed document."""
    proto_section = doc["protocol"]
    if "name" not in proto_section:
        raise ConfigError("missing [protocol] name")
    protocol = parse_protocol(proto_section["name"].text)
    graph = build_graph(doc)
    adversary = build_adversary_config(doc)
    eng = doc["engine"]
    kwargs: dict[str, object] = {}
    if "gamma" in eng:
        kwargs["gamma"] = _as_float(eng["gamma"], "gamma")
    if "max_rounds" in eng:
        kwargs["max_rounds"] = _as_int(eng["max_rounds"], "max_rounds")
    if "consensus_tol" in eng:
        kwargs["consensus_tol"] = _as_float(eng["consensus_tol"], "consensus_tol")
    if "stall_rounds" in eng:
        kwargs["stall_rounds"] = _as_int(eng["stall_rounds"], "stall_rounds")
    if "master_seed" in eng:
        kwargs["master_seed"] = _as_int(eng["master_seed"], "master_seed")
    if "initial_values" in eng:
        kwargs["initial_values"] = list(_as_float_list(eng["initial_values"], "initial_values"))
    if "initial_theta" in eng:
        kwargs["initial_theta"] = _as_theta_map(eng["initial_theta"], "initial_theta")
    try:
        return SimulationConfig(graph=graph, protocol=protocol, adversary=adversary, **kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
