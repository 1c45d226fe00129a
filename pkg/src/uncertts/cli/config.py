"""INI experiment configuration.

One ``[experiment]`` section plus an optional section per technique::

    [experiment]
    datasets = GunPoint, ArrowHead
    sigmas = 0.2, 0.4
    techniques = euclid, proud, dust

    [proud]
    tau_grid = 0.1, 0.5, 0.9
"""
from __future__ import annotations

import configparser
import dataclasses
import io
from pathlib import Path

from ..core import ErrorKind
from ..evaluation.experiment import ExperimentConfig, TechniqueParams
from ..perturbation import MixedSchedule
from ..queries import Technique
from .io import DataError

_MAIN = "experiment"
_MIXED_KEYS = ("mixed_fraction_high", "mixed_std_high", "mixed_std_low")


def _bool(text):
    v = text.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _list(conv):
    return lambda text: tuple(conv(x.strip()) for x in text.split(",") if x.strip())


def _opt(conv):
    return lambda text: None if text.strip().lower() in ("", "none") else conv(text)


_EXPERIMENT_FIELDS = {
    "datasets": _list(str),
    "data_dir": str,
    "error_kind": ErrorKind.parse,
    "mix_kinds": _opt(_list(ErrorKind.parse)),
    "sigmas": _list(float),
    "shared_schedule": _bool,
    "seed": int,
    "max_series": _opt(int),
    "max_queries": _opt(int),
    "truncate": _opt(int),
    "length": _opt(int),
    "samples": int,
    "neighbors": int,
    "time_limit": float,
    "threads": _opt(int),
    "techniques": _list(Technique.parse),
    "output": _opt(str),
}

_PARAM_FIELDS = {
    "p": int,
    "bins": int,
    "exact_cap": int,
    "tau_grid": _list(float),
    "w": int,
    "lambda": float,
    "normalized_filters": _bool,
    "assumed_sigma": _opt(float),
    "grid_step": _opt(float),
    "max_delta": _opt(float),
    "phi_min": float,
}


def _parse_section(section, fields, where):
    out = {}
    for key, raw in section.items():
        if key not in fields:
            raise DataError(f"{where}: unknown key {key!r}")
        try:
            out[key] = fields[key](raw)
        except ValueError as exc:
            raise DataError(f"{where}: bad value for {key!r}: {exc}") from None
    return out


def parse_config(text: str, source="<config>") -> ExperimentConfig:
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string(text, source=str(source))
    except configparser.Error as exc:
        raise DataError(f"{source}: {exc}") from None
    if not cp.has_section(_MAIN):
        raise DataError(f"{source}: missing [{_MAIN}] section")
    main = dict(cp[_MAIN])
    mixed = {k: main.pop(k) for k in _MIXED_KEYS if k in main}
    kw = _parse_section(main, _EXPERIMENT_FIELDS, f"{source} [{_MAIN}]")
    if mixed:
        if len(mixed) != len(_MIXED_KEYS):
            raise DataError(f"{source}: mixed schedules need all of {', '.join(_MIXED_KEYS)}")
        try:
            kw["mixed"] = MixedSchedule(*(float(mixed[k]) for k in _MIXED_KEYS))
        except ValueError as exc:
            raise DataError(f"{source}: {exc}") from None
    params = {}
    for name in cp.sections():
        if name == _MAIN:
            continue
        try:
            tech = Technique.parse(name)
        except ValueError:
            raise DataError(f"{source}: unknown section [{name}]") from None
        fields = _parse_section(cp[name], _PARAM_FIELDS, f"{source} [{name}]")
        if "lambda" in fields:
            fields["lam"] = fields.pop("lambda")
        params[tech] = TechniqueParams(**fields)
    kw["params"] = params
    if "datasets" not in kw:
        raise DataError(f"{source}: [{_MAIN}] needs a datasets key")
    try:
        return ExperimentConfig(**kw)
    except ValueError as exc:
        raise DataError(f"{source}: {exc}") from None


def load_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise DataError(f"cannot read config {path}: {exc.strerror or exc}") from None
    return parse_config(text, path)


def _fmt(value):
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (ErrorKind, Technique)):
        return value.value
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (tuple, list)):
        return ", ".join(_fmt(v) for v in value)
    return str(value)


def format_config(config: ExperimentConfig) -> str:
    cp = configparser.ConfigParser(interpolation=None)
    main = {}
    for f in dataclasses.fields(config):
        if f.name in ("params", "mixed"):
            continue
        main[f.name] = _fmt(getattr(config, f.name))
    if config.mixed is not None:
        m = config.mixed
        for key, value in zip(_MIXED_KEYS, (m.fraction_high, m.std_high, m.std_low)):
            main[key] = _fmt(float(value))
    cp[_MAIN] = main
    for tech in sorted(config.params, key=lambda t: t.value):
        p = config.params[tech]
        cp[tech.value] = {("lambda" if f.name == "lam" else f.name): _fmt(getattr(p, f.name))
                          for f in dataclasses.fields(p)}
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


def write_config(config: ExperimentConfig, path):
    try:
        Path(path).write_text(format_config(config))
    except OSError as exc:
        raise DataError(f"cannot write {path}: {exc.strerror or exc}") from None
