"""Experiment configuration: an INI file checked against a fixed schema.

Every key has a default, so an empty file (or no file) yields the reference
parameter set.  Unknown sections or keys are rejected.

Sections
--------
[run]         experiment, output_dir, threads
[dopo]        kappa, gamma_s, gamma_p, f_p, delta, n_s, n_p
              (composite ordering: signal, pump)
[discharge]   omega_s, omega_a, g, gamma_s2, gamma_a, n_s, frame,
              t0 (charging time before the load is connected), t_end, sample_dt
              (composite ordering: signal, atom)
[integrator]  rtol, atol, sample_dt, t_end
[fit]         window, tolerance, t_off, t_off_end, decay_start, decay_end
[custom]      f_p_values (comma-separated drive amplitudes; empty = use [dopo] f_p)
"""
from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, fields, replace

from .dopo import DopoParams
from .dynamics import IntegratorOptions
from .errors import ConfigError, InvalidArgumentError
from .load import FRAMES, DischargeParams

EXPERIMENTS = ("fig2a", "fig2b", "fig3", "fig4", "fig5", "fig6", "fig7", "fig8", "custom")
OUTPUT_ENV = "DOPO_QB_OUTPUT_DIR"


def _float_list(text):
    text = text.strip()
    if not text:
        return ()
    return tuple(float(v) for v in text.split(","))


def _frame(text):
    if text not in FRAMES:
        raise ValueError(f"expected one of {FRAMES}")
    return text


def _experiment(text):
    if text not in EXPERIMENTS:
        raise ValueError(f"expected one of {EXPERIMENTS}")
    return text


_DOPO = DopoParams()
_DIS = DischargeParams()
_INT = IntegratorOptions()

# section -> key -> (parser, default)
SCHEMA = {
    "run": {
        "experiment": (_experiment, "custom"),
        "output_dir": (str, "dopo_qb_out"),
        "threads": (int, 1),
    },
    "dopo": {
        "kappa": (float, _DOPO.kappa),
        "gamma_s": (float, _DOPO.gamma_s),
        "gamma_p": (float, _DOPO.gamma_p),
        "f_p": (float, _DOPO.f_p),
        "delta": (float, _DOPO.delta),
        "n_s": (int, _DOPO.n_s),
        "n_p": (int, _DOPO.n_p),
    },
    "discharge": {
        "omega_s": (float, _DIS.omega_s),
        "omega_a": (float, _DIS.omega_a),
        "g": (float, _DIS.g),
        "gamma_s2": (float, _DIS.gamma_s2),
        "gamma_a": (float, _DIS.gamma_a),
        "n_s": (int, _DIS.n_s),
        "frame": (_frame, "interaction"),
        "t0": (float, 10.0),
        "t_end": (float, 1.0),
        "sample_dt": (float, 0.001),
    },
    "integrator": {
        "rtol": (float, _INT.rtol),
        "atol": (float, _INT.atol),
        "sample_dt": (float, 0.1),
        "t_end": (float, 40.0),
    },
    "fit": {
        "window": (float, 10.0),
        "tolerance": (float, 0.02),
        "t_off": (float, 40.0),
        "t_off_end": (float, 50.0),
        "decay_start": (float, 41.0),
        "decay_end": (float, 45.0),
    },
    "custom": {
        "f_p_values": (_float_list, ()),
    },
}


@dataclass(frozen=True)
class FitSettings:
    window: float = 10.0
    tolerance: float = 0.02
    t_off: float = 40.0
    t_off_end: float = 50.0
    decay_start: float = 41.0
    decay_end: float = 45.0


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str = "custom"
    dopo: DopoParams = DopoParams()
    discharge: DischargeParams = DischargeParams(frame="interaction")
    integrator: IntegratorOptions = IntegratorOptions()
    sample_dt: float = 0.1
    t_end: float = 40.0
    discharge_t0: float = 10.0
    discharge_t_end: float = 1.0
    discharge_dt: float = 0.001
    fit: FitSettings = FitSettings()
    f_p_values: tuple = ()
    output_dir: str = "dopo_qb_out"
    threads: int = 1


def _raw_values(parser):
    values = {}
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        for key, text in parser.items(section):
            if key not in SCHEMA[section]:
                raise ConfigError(f"unknown key '{key}' in [{section}]")
            conv = SCHEMA[section][key][0]
            try:
                values[section, key] = conv(text.strip())
            except ValueError as exc:
                raise ConfigError(f"[{section}] {key} = {text!r}: {exc}") from None
    return values


def parse(text):
    """Parse INI text into raw ``{(section, key): value}`` with schema checks."""
    parser = configparser.ConfigParser(interpolation=None, default_section="\x00")
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    return _raw_values(parser)


def resolve(raw=None, experiment=None, output_dir=None, threads=None, env=None):
    """Build an ExperimentConfig from raw values plus command-line overrides.

    Output directory precedence: ``output_dir`` argument, then the
    DOPO_QB_OUTPUT_DIR environment variable, then the config file.
    """
    raw = dict(raw or {})
    env = os.environ if env is None else env

    def get(section, key):
        return raw.get((section, key), SCHEMA[section][key][1])

    def section(name, cls, skip=()):
        return {k: get(name, k) for k in SCHEMA[name] if k not in skip and k in {f.name for f in fields(cls)}}

    try:
        dopo = DopoParams(**section("dopo", DopoParams))
        discharge = DischargeParams(**section("discharge", DischargeParams))
        integrator = replace(IntegratorOptions(), rtol=get("integrator", "rtol"),
                             atol=get("integrator", "atol"))
        fit = FitSettings(**{k: get("fit", k) for k in SCHEMA["fit"]})
    except (InvalidArgumentError, TypeError) as exc:
        raise ConfigError(str(exc)) from None

    cfg = ExperimentConfig(
        experiment=experiment or get("run", "experiment"),
        dopo=dopo,
        discharge=discharge,
        integrator=integrator,
        sample_dt=get("integrator", "sample_dt"),
        t_end=get("integrator", "t_end"),
        discharge_t0=get("discharge", "t0"),
        discharge_t_end=get("discharge", "t_end"),
        discharge_dt=get("discharge", "sample_dt"),
        fit=fit,
        f_p_values=get("custom", "f_p_values"),
        output_dir=output_dir or env.get(OUTPUT_ENV) or get("run", "output_dir"),
        threads=threads if threads is not None else get("run", "threads"),
    )
    _check(cfg)
    return cfg


def _check(cfg):
    if cfg.experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment '{cfg.experiment}'")
    if cfg.threads < 1:
        raise ConfigError("threads must be >= 1")
    positive = {
        "integrator rtol": cfg.integrator.rtol, "integrator atol": cfg.integrator.atol,
        "integrator sample_dt": cfg.sample_dt, "integrator t_end": cfg.t_end,
        "discharge t0": cfg.discharge_t0, "discharge t_end": cfg.discharge_t_end,
        "discharge sample_dt": cfg.discharge_dt, "fit window": cfg.fit.window,
        "fit tolerance": cfg.fit.tolerance,
    }
    for name, value in positive.items():
        if not value > 0:
            raise ConfigError(f"{name} must be positive")
    f = cfg.fit
    if not 0 < f.t_off < f.decay_start < f.decay_end <= f.t_off_end:
        raise ConfigError("need 0 < t_off < decay_start < decay_end <= t_off_end")
    if any(v < 0 for v in cfg.f_p_values):
        raise ConfigError("f_p_values must be nonnegative")


def load(path=None, **overrides):
    raw = {}
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                raw = parse(fh.read())
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
    return resolve(raw, **overrides)


def _fmt(value):
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ", ".join(repr(v) for v in value)
    return str(value)


def to_ini(cfg):
    """Fully resolved config as INI text (loadable by ``load``)."""
    values = {
        "run": {"experiment": cfg.experiment, "output_dir": cfg.output_dir, "threads": cfg.threads},
        "dopo": {k: getattr(cfg.dopo, k) for k in SCHEMA["dopo"]},
        "discharge": {
            **{k: getattr(cfg.discharge, k) for k in SCHEMA["discharge"] if hasattr(cfg.discharge, k)},
            "t0": cfg.discharge_t0, "t_end": cfg.discharge_t_end, "sample_dt": cfg.discharge_dt,
        },
        "integrator": {"rtol": cfg.integrator.rtol, "atol": cfg.integrator.atol,
                       "sample_dt": cfg.sample_dt, "t_end": cfg.t_end},
        "fit": {k: getattr(cfg.fit, k) for k in SCHEMA["fit"]},
        "custom": {"f_p_values": cfg.f_p_values},
    }
    lines = []
    for name in SCHEMA:
        lines.append(f"[{name}]")
        lines.extend(f"{k} = {_fmt(values[name][k])}" for k in SCHEMA[name])
        lines.append("")
    return "\n".join(lines)


def lint(cfg):
    """Physics warnings for a resolved config (never raises)."""
    warnings = []
    d = cfg.dopo
    drives = (d.f_p,) + tuple(cfg.f_p_values)
    top = max(drives)
    if top > 3.0 * d.gamma_s ** 0.5 + 1e-12:
        warnings.append(f"regime: F_p/sqrt(gamma_s) = {top / d.gamma_s ** 0.5:g} exceeds 3, "
                        "outside the regime the default truncation was converged for")
    if d.n_s < _DOPO.n_s:
        warnings.append(f"truncation: dopo n_s = {d.n_s} is below the converged value {_DOPO.n_s}")
    if d.n_p < _DOPO.n_p:
        warnings.append(f"truncation: dopo n_p = {d.n_p} is below the converged value {_DOPO.n_p}")
    if cfg.discharge.n_s < _DIS.n_s:
        warnings.append(f"truncation: discharge n_s = {cfg.discharge.n_s} is below the converged "
                        f"value {_DIS.n_s}")
    return warnings
