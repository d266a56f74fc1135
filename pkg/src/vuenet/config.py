"""Config files, overrides and experiment presets.

A config is a YAML mapping mirroring SimConfig, with `radio`, `grid` and
`control` as nested mappings.  Every field is optional; omitted fields take
the library defaults, so an empty file is the default profile.  Overrides
are dotted `key=value` pairs applied on top of the file before validation.
"""

from __future__ import annotations

import dataclasses
import typing
from dataclasses import dataclass

import yaml

from .control import ControlError, ControlParams, Policy
from .mobility import GridError, GridSpec
from .radio import RadioConfig, RadioConfigError
from .simulator import SimConfig, SimulationError


class ConfigError(ValueError):
    """Anything wrong with a config file, override or preset."""


# shorthand spellings accepted at the top level of files and overrides
ALIASES = {
    "U": "u_pairs",
    "V": "control.V",
    "policy": "control.policy",
}

_VALIDATION_ERRORS = (
    SimulationError,
    RadioConfigError,
    GridError,
    ControlError,
    TypeError,
    ValueError,
)


def _coerce(hint, value, where: str, base=None):
    origin = typing.get_origin(hint)
    if origin is tuple:
        args = typing.get_args(hint)
        if not isinstance(value, (list, tuple)):
            raise ConfigError(f"{where}: expected a list of {len(args)} numbers")
        if len(value) != len(args):
            raise ConfigError(f"{where}: expected exactly {len(args)} entries")
        return tuple(_coerce(a, v, where) for a, v in zip(args, value))
    if dataclasses.is_dataclass(hint):
        if not isinstance(value, dict):
            raise ConfigError(f"{where}: expected a mapping")
        return _build(hint, value, where, base=base)
    if hint is Policy:
        try:
            return Policy(value)
        except ValueError:
            names = sorted(p.value for p in Policy)
            raise ConfigError(f"{where}: unknown policy {value!r} (valid: {names})")
    if hint is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{where}: expected true/false")
        return value
    if hint is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where}: expected an integer, got {value!r}")
        return value
    if hint is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where}: expected a number, got {value!r}")
        return float(value)
    if hint is str:
        if not isinstance(value, str):
            raise ConfigError(f"{where}: expected a string, got {value!r}")
        return value
    raise ConfigError(f"{where}: unsupported field type {hint!r}")


def _field_default(f: dataclasses.Field):
    if f.default is not dataclasses.MISSING:
        return f.default
    if f.default_factory is not dataclasses.MISSING:
        return f.default_factory()
    return None


def _build(cls, data: dict, where: str, base=None):
    """Construct `cls`, folding `data` over the parent's default instance.

    Partial nested sections keep the PARENT's defaults for omitted keys (a
    config naming only control.policy must not silently reset control.V to
    its own class default), so the merge base is the enclosing field's
    default instance, or `base` when an outer level passed one down.
    """
    hints = typing.get_type_hints(cls)
    by_name = {f.name: f for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in data.items():
        if key not in by_name:
            raise ConfigError(
                f"{where}: unknown field '{key}' "
                f"(valid: {', '.join(sorted(by_name))})"
            )
        sub_base = None
        if dataclasses.is_dataclass(hints[key]):
            sub_base = getattr(base, key, None) or _field_default(by_name[key])
        kwargs[key] = _coerce(hints[key], value, f"{where}.{key}", base=sub_base)
    try:
        if base is not None:
            return dataclasses.replace(base, **kwargs)
        return cls(**kwargs)
    except _VALIDATION_ERRORS as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{where}: {exc}") from exc


def parse_scalar(text: str):
    """Read one override value: int, then float, then YAML (bool/list/str)."""
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        pass
    try:
        return yaml.safe_load(text)
    except yaml.YAMLError:
        return text


def _set_path(data: dict, dotted: str, value, where: str) -> None:
    parts = dotted.split(".")
    node = data
    for p in parts[:-1]:
        nxt = node.setdefault(p, {})
        if not isinstance(nxt, dict):
            raise ConfigError(f"{where}: '{p}' is not a section")
        node = nxt
    node[parts[-1]] = value


def expand_aliases(dotted: str) -> str:
    return ALIASES.get(dotted, dotted)


def normalize_aliases(data: dict) -> dict:
    """Rewrite alias keys to their dotted form; ambiguous doubles are errors."""
    out = {k: (dict(v) if isinstance(v, dict) else v) for k, v in data.items()}
    for key in list(out):
        dotted = expand_aliases(key)
        if dotted == key:
            continue
        value = out.pop(key)
        node = out
        parts = dotted.split(".")
        for p in parts[:-1]:
            node = node.get(p, {})
            if not isinstance(node, dict):
                node = {}
                break
        if isinstance(node, dict) and parts[-1] in node:
            raise ConfigError(f"'{key}' and '{dotted}' are the same field; give one")
        _set_path(out, dotted, value, f"field '{key}'")
    return out


def apply_overrides(data: dict, pairs) -> dict:
    """Fold `key=value` pairs into a config mapping (later pairs win)."""
    data = normalize_aliases(data)
    for pair in pairs:
        key, sep, raw = pair.partition("=")
        if not sep or not key:
            raise ConfigError(f"override '{pair}' is not of the form key=value")
        _set_path(data, expand_aliases(key.strip()), parse_scalar(raw.strip()),
                  f"override '{pair}'")
    return data


def config_from_dict(data: dict) -> SimConfig:
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("config root must be a mapping")
    return _build(SimConfig, normalize_aliases(data), "config")


def read_config_file(path: str) -> dict:
    """The raw mapping from a YAML file; errors name the path."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file '{path}': {exc}") from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"config file '{path}' is not valid YAML: {exc}") from exc
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"config file '{path}' must hold a mapping")
    return data


def load_config(path: str, overrides=()) -> SimConfig:
    return config_from_dict(apply_overrides(read_config_file(path), overrides))


def default_config(overrides=()) -> SimConfig:
    return config_from_dict(apply_overrides({}, overrides))


def config_to_dict(cfg: SimConfig) -> dict:
    """Fully materialized mapping: every field present, enums as strings."""
    data = dataclasses.asdict(cfg)
    data["control"]["policy"] = cfg.control.policy.value
    data["fl_step"] = list(cfg.fl_step)
    data["fl_init_grad"] = list(cfg.fl_init_grad)
    return data


def dump_config(cfg: SimConfig) -> str:
    return yaml.safe_dump(config_to_dict(cfg), sort_keys=True)


@dataclass(frozen=True)
class ExperimentPreset:
    """A named bundle of overrides with the policies and seeds to expand."""

    name: str
    overrides: tuple = ()
    policies: tuple = (Policy.PROPOSED.value,)
    seeds: tuple = (0,)

    def __post_init__(self):
        if not self.policies or not self.seeds:
            raise ConfigError("a preset needs at least one policy and one seed")
        for p in self.policies:
            Policy(p)


PRESETS = {
    "table2-u20": ExperimentPreset(
        name="table2-u20",
        overrides=("U=20", "horizon_slots=50000"),
        policies=(
            Policy.FIXED_POWER.value,
            Policy.BASELINE1.value,
            Policy.BASELINE2.value,
            Policy.PROPOSED.value,
        ),
    ),
    "quick": ExperimentPreset(
        name="quick",
        overrides=("U=4", "horizon_slots=2000"),
    ),
}


def get_preset(name: str) -> ExperimentPreset:
    try:
        return PRESETS[name]
    except KeyError:
        raise ConfigError(
            f"unknown preset '{name}' (valid: {', '.join(sorted(PRESETS))})"
        )


def sweep_path(param: str) -> str:
    """Resolve a sweep parameter name to a dotted config path, or raise."""
    dotted = expand_aliases(param)
    parts = dotted.split(".")
    cls = SimConfig
    for i, p in enumerate(parts):
        names = {f.name: f for f in dataclasses.fields(cls)}
        if p not in names:
            valid = sorted(list(names) + (list(ALIASES) if cls is SimConfig else []))
            raise ConfigError(
                f"unknown sweep parameter '{param}' (valid at this level: "
                f"{', '.join(valid)})"
            )
        hint = typing.get_type_hints(cls)[p]
        if dataclasses.is_dataclass(hint):
            if i == len(parts) - 1:
                raise ConfigError(f"sweep parameter '{param}' is a section, not a field")
            cls = hint
        elif i != len(parts) - 1:
            raise ConfigError(f"sweep parameter '{param}' has no subfields")
    return dotted
