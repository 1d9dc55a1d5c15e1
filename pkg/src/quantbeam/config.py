"""INI-style run configuration.

Sections map onto the dataclasses of the simulation modules::

    [channel]   -> geometry.ChannelConfig
    [system]    -> system.SimConfig (scalar fields)
    [link]      -> ofdm.OfdmNumerology

Values are parsed according to the type of the field default.  Arrays are
written ``ROWSxCOLS`` and resolution lists as comma separated integers or
``inf``.  Unknown sections or keys are collected and reported together.
"""
from __future__ import annotations

import configparser
import dataclasses
import math
import os
from pathlib import Path

from .errors import ConfigError, InvalidArgumentError
from .geometry import ArrayGeometry, ChannelConfig
from .ofdm import OfdmNumerology
from .system import SimConfig

SEED_ENV = "QUANTBEAM_SEED"

_SYSTEM_SKIP = {"channel", "layout_offset_m"}
_LINK_SKIP = {"symbol_duration"}


def parse_bits(text: str) -> tuple:
    """``"2,3,inf"`` -> ``(2, 3, inf)``."""
    out = []
    for tok in str(text).replace(" ", "").split(","):
        if not tok:
            continue
        if tok.lower() in ("inf", "infinity"):
            out.append(math.inf)
            continue
        try:
            out.append(int(tok))
        except ValueError:
            raise InvalidArgumentError(f"bad resolution {tok!r}") from None
    if not out:
        raise InvalidArgumentError("empty resolution list")
    return tuple(out)


def format_bits(bits) -> str:
    return ",".join("inf" if math.isinf(b) else str(int(b)) for b in bits)


def _parse_array(text: str) -> ArrayGeometry:
    try:
        r, c = text.lower().split("x")
        return ArrayGeometry(int(r), int(c))
    except ValueError:
        raise InvalidArgumentError(f"array must look like 8x8, got {text!r}") from None


def _parse_fitted(text: str) -> tuple:
    # "2:0.125, 3:0.035"
    pairs = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        b, a = item.split(":")
        pairs.append((int(b), float(a)))
    return tuple(pairs)


def _convert(name, default, text):
    if isinstance(default, ArrayGeometry):
        return _parse_array(text)
    if isinstance(default, bool):
        return text.strip().lower() in ("1", "true", "yes", "on")
    if isinstance(default, int):
        return int(text)
    if isinstance(default, float):
        return float(text)
    if name == "bits_list":
        return parse_bits(text)
    if name == "fitted_alpha":
        return _parse_fitted(text)
    return text.strip()


def _apply(cls, base, values: dict, skip: set, section: str, problems: list):
    fields = {f.name: f for f in dataclasses.fields(cls) if f.name not in skip}
    updates = {}
    for key, text in values.items():
        if key not in fields:
            problems.append(f"unknown key '{key}' in [{section}]")
            continue
        try:
            updates[key] = _convert(key, getattr(base, key), text)
        except (ValueError, InvalidArgumentError) as exc:
            problems.append(f"bad value for '{key}' in [{section}]: {exc}")
    return updates


def load_config(path=None, overrides: dict | None = None, env=None):
    """Read an INI file into ``(SimConfig, OfdmNumerology)``.

    ``overrides`` maps ``"section.key"`` to already-typed values (CLI flags)
    and wins over the file.  ``QUANTBEAM_SEED`` in ``env`` (default
    ``os.environ``) overrides ``system.base_seed`` from the file, but not an
    explicit override.
    """
    env = os.environ if env is None else env
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";",))
    parser.optionxform = str
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError([f"config file not found: {path}"])
        try:
            parser.read(path)
        except configparser.Error as exc:
            raise ConfigError([f"cannot parse {path}: {exc}"]) from None
    problems = []
    for sec in parser.sections():
        if sec not in ("channel", "system", "link"):
            problems.append(f"unknown section [{sec}]")

    def section(name):
        return dict(parser[name]) if parser.has_section(name) else {}

    base_sim = SimConfig()
    ch_up = _apply(ChannelConfig, base_sim.channel, section("channel"), set(), "channel", problems)
    sys_up = _apply(SimConfig, base_sim, section("system"), _SYSTEM_SKIP, "system", problems)
    link_up = _apply(OfdmNumerology, OfdmNumerology(), section("link"), _LINK_SKIP, "link", problems)

    if env.get(SEED_ENV):
        try:
            sys_up["base_seed"] = int(env[SEED_ENV])
        except ValueError:
            problems.append(f"{SEED_ENV} must be an integer")

    for dotted, value in (overrides or {}).items():
        sec, _, key = dotted.partition(".")
        target = {"channel": ch_up, "system": sys_up, "link": link_up}.get(sec)
        if target is None:
            problems.append(f"unknown override '{dotted}'")
        else:
            target[key] = value
    if problems:
        raise ConfigError(problems)
    try:
        channel = dataclasses.replace(base_sim.channel, **ch_up)
        sim = dataclasses.replace(base_sim, channel=channel, **sys_up)
        numerology = dataclasses.replace(OfdmNumerology(), **link_up)
    except (InvalidArgumentError, TypeError) as exc:
        raise ConfigError([str(exc)]) from None
    sim.validate()
    return sim, numerology


def _plain(value):
    if isinstance(value, ArrayGeometry):
        return f"{value.rows}x{value.cols}"
    if isinstance(value, float) and math.isinf(value):
        return "inf"
    if isinstance(value, (tuple, list)):
        return [_plain(v) for v in value]
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    return value


def snapshot(sim: SimConfig | None = None, numerology: OfdmNumerology | None = None) -> dict:
    """JSON-ready dict of every resolved setting."""
    out = {}
    if sim is not None:
        out["channel"] = {f.name: _plain(getattr(sim.channel, f.name))
                          for f in dataclasses.fields(ChannelConfig)}
        out["system"] = {f.name: _plain(getattr(sim, f.name))
                         for f in dataclasses.fields(SimConfig) if f.name not in _SYSTEM_SKIP}
    if numerology is not None:
        out["link"] = {f.name: _plain(getattr(numerology, f.name))
                       for f in dataclasses.fields(OfdmNumerology) if f.name not in _LINK_SKIP}
    return out


def _to_ini_value(name, value):
    if name == "bits_list":
        return ",".join(str(v) for v in value)
    if name == "fitted_alpha":
        return ",".join(f"{b}:{a!r}" for b, a in value)
    return str(value)


def write_ini(snap: dict, path) -> None:
    """Inverse of :func:`load_config` for a :func:`snapshot` dict."""
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    for sec, values in snap.items():
        parser[sec] = {k: _to_ini_value(k, v) for k, v in values.items()}
    with open(path, "w") as fh:
        parser.write(fh)


def from_snapshot(snap: dict):
    """Rebuild ``(SimConfig, OfdmNumerology)`` from a snapshot dict."""
    overrides = {}
    for sec, values in snap.items():
        for key, value in values.items():
            overrides[f"{sec}.{key}"] = _convert(key, _default_for(sec, key),
                                                 _to_ini_value(key, value))
    return load_config(None, overrides, env={})


def _default_for(sec, key):
    base = {"channel": ChannelConfig(), "system": SimConfig(), "link": OfdmNumerology()}.get(sec)
    if base is None or not hasattr(base, key):
        raise ConfigError([f"unknown key '{key}' in [{sec}]"])
    return getattr(base, key)
