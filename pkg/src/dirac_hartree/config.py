"""Run configuration: INI file, environment overrides, command-line overrides.

Precedence is file < environment < flags.  Environment variables are named
``DIRAC_HARTREE_<SECTION>_<KEY>``, e.g. ``DIRAC_HARTREE_TRUNCATION_N_R=96``.

Example file::

    [domain]
    radius = 1.0

    [lattice]
    lambda = 1.0, 0.0

    [truncation]
    m = 8
    n = 12
    n_d = 24
    n_r = 128
    n_theta = 48

    [problem]
    omega = 0.0
    kappa = -1.0

    [solver]
    max_iter = 50
    flow = false

    [run]
    seed = 0
    count = 5
    branch = 1
    out = results
"""

from __future__ import annotations

import configparser
import hashlib
import json
import math
import os
from dataclasses import asdict, dataclass, field, fields, replace

from . import basis as _basis
from .solver import SolverOptions

ENV_PREFIX = "DIRAC_HARTREE_"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class VerifySettings:
    samples: int = 100  # positivity
    gradient_states: int = 10
    hartree_states: int = 20
    count: int = 5  # ladder length for the solution check
    kappa_plus: bool = True  # also solve one kappa = +1 branch
    eigen_points: int = 300  # radial points of the eigenmode residual grid

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if f.type == "int" and v < 1:
                raise ConfigError(f"verify.{f.name} must be >= 1")


@dataclass(frozen=True)
class Config:
    radius: float = 1.0
    lam: complex = 1.0 + 0.0j
    M: int = _basis.DEFAULT_M
    N: int = _basis.DEFAULT_N
    N_d: int = _basis.DEFAULT_N_D
    N_r: int = _basis.DEFAULT_N_R
    N_theta: int = _basis.DEFAULT_N_THETA
    omega: float = 0.0
    kappa: float = -1.0
    solver: SolverOptions = field(default_factory=SolverOptions)
    verify: VerifySettings = field(default_factory=VerifySettings)
    seed: int = 0
    count: int = 5
    branch: int = 1
    out: str = "."

    def validate(self) -> "Config":
        if not (math.isfinite(self.radius) and self.radius > 0):
            raise ConfigError("domain.radius must be a positive number")
        if not (math.isfinite(self.lam.real) and math.isfinite(self.lam.imag)) or self.lam == 0:
            raise ConfigError("lattice.lambda must be a finite nonzero complex number")
        for name, low in (("M", 0), ("N", 1), ("N_d", 1), ("N_r", 1), ("N_theta", 1)):
            if getattr(self, name) < low:
                raise ConfigError(f"truncation.{name.lower()} must be >= {low}")
        if self.N_theta < 4 * self.M + 8:
            raise ConfigError(f"truncation.n_theta must be >= 4M+8 = {4 * self.M + 8}")
        if not (math.isfinite(self.omega) and math.isfinite(self.kappa)):
            raise ConfigError("problem.omega and problem.kappa must be finite")
        if self.count < 1:
            raise ConfigError("run.count must be >= 1")
        if self.branch < 1:
            raise ConfigError("run.branch must be >= 1")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError("run.seed must be a 64-bit unsigned integer")
        return self

    def domain(self) -> _basis.Domain:
        return _basis.Domain(self.radius)

    def lattice(self) -> _basis.LatticeParameter:
        return _basis.LatticeParameter(self.lam)

    def build_basis(self) -> _basis.BasisSet:
        return _basis.build_basis(self.domain(), self.lattice(), M=self.M, N=self.N, N_d=self.N_d,
                                  N_r=self.N_r, N_theta=self.N_theta)

    def spectrum(self) -> _basis.DiracSpectrum:
        return _basis.dirac_spectrum(self.domain(), self.lattice(), M=self.M, N=self.N)

    def problem(self):
        from .operators import ProblemParams
        return ProblemParams(omega=self.omega, kappa=self.kappa)

    def options(self) -> SolverOptions:
        return replace(self.solver, seed=self.seed)

    def canonical(self) -> dict:
        """Every setting that affects results (the output directory does not)."""
        d = asdict(self)
        d["lam"] = [self.lam.real, self.lam.imag]
        d.pop("out")
        return d

    def hash(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


# key tables: section -> key -> (attribute, parser)

def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _int(text: str) -> int:
    return int(text.strip())


def _float(text: str) -> float:
    return float(text.strip())


def _optional_float(text: str):
    t = text.strip().lower()
    return None if t in ("", "none", "off") else float(t)


def _complex(text: str) -> complex:
    parts = [p for p in text.replace("[", " ").replace("]", " ").replace(",", " ").split()]
    if len(parts) == 1:
        return complex(float(parts[0]), 0.0)
    if len(parts) == 2:
        return complex(float(parts[0]), float(parts[1]))
    raise ValueError(f"expected 're, im', got {text!r}")


_TOP = {
    "domain": {"radius": ("radius", _float)},
    "lattice": {"lambda": ("lam", _complex)},
    "truncation": {"m": ("M", _int), "n": ("N", _int), "n_d": ("N_d", _int),
                   "n_r": ("N_r", _int), "n_theta": ("N_theta", _int)},
    "problem": {"omega": ("omega", _float), "kappa": ("kappa", _float)},
    "run": {"seed": ("seed", _int), "count": ("count", _int), "branch": ("branch", _int),
            "out": ("out", str)},
}

_SOLVER = {
    "max_iter": _int, "tol": _float, "backtrack": _float, "min_step": _float,
    "flow": _bool, "flow_step": _float, "flow_max_steps": _int,
    "deflation_shift": _optional_float, "deflation_power": _float,
    "pivot_ratio": _float, "max_retries": _int, "perturb": _float,
}

_VERIFY = {
    "samples": _int, "gradient_states": _int, "hartree_states": _int,
    "count": _int, "kappa_plus": _bool, "eigen_points": _int,
}

SECTIONS = tuple(_TOP) + ("solver", "verify")


def _apply(values: dict, section: str, key: str, text: str, origin: str) -> None:
    try:
        if section in _TOP:
            if key not in _TOP[section]:
                raise ConfigError(f"{origin}: unknown key {section}.{key}")
            attr, parse = _TOP[section][key]
            values[attr] = parse(text)
        elif section in ("solver", "verify"):
            table = _SOLVER if section == "solver" else _VERIFY
            if key not in table:
                raise ConfigError(f"{origin}: unknown key {section}.{key}")
            values.setdefault(section, {})[key] = table[key](text)
        else:
            raise ConfigError(f"{origin}: unknown section [{section}]")
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{origin}: bad value for {section}.{key}: {exc}") from exc


def read_file(path: str) -> dict:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc
    values: dict = {}
    for section in parser.sections():
        for key, text in parser.items(section):
            _apply(values, section, key, text, path)
    return values


def read_env(environ=None) -> dict:
    environ = os.environ if environ is None else environ
    values: dict = {}
    for name in sorted(environ):
        if not name.startswith(ENV_PREFIX):
            continue
        rest = name[len(ENV_PREFIX):].lower()
        section, _, key = rest.partition("_")
        if section not in SECTIONS or not key:
            raise ConfigError(f"environment: unknown variable {name}")
        _apply(values, section, key, environ[name], "environment")
    return values


def _merge(base: dict, extra: dict) -> dict:
    out = dict(base)
    for k, v in extra.items():
        if k in ("solver", "verify"):
            out[k] = {**out.get(k, {}), **v}
        else:
            out[k] = v
    return out


def make_config(values: dict) -> Config:
    values = dict(values)
    try:
        solver = SolverOptions(**values.pop("solver", {}))
        verify = VerifySettings(**values.pop("verify", {}))
        cfg = Config(solver=solver, verify=verify, **values)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc
    return cfg.validate()


def load_config(path: str | None = None, overrides: dict | None = None, environ=None) -> Config:
    values: dict = {}
    if path:
        values = read_file(path)
    values = _merge(values, read_env(environ))
    values = _merge(values, overrides or {})
    return make_config(values)


def to_ini(cfg: Config) -> str:
    """Render a Config back to the file format (round-trips through load_config)."""
    lines = []
    for section, keys in _TOP.items():
        lines.append(f"[{section}]")
        for key, (attr, _) in keys.items():
            v = getattr(cfg, attr)
            if attr == "lam":
                v = f"{v.real!r}, {v.imag!r}"
            lines.append(f"{key} = {v}")
        lines.append("")
    for section, obj in (("solver", cfg.solver), ("verify", cfg.verify)):
        lines.append(f"[{section}]")
        table = _SOLVER if section == "solver" else _VERIFY
        for key in table:
            v = getattr(obj, key)
            lines.append(f"{key} = {'none' if v is None else v}")
        lines.append("")
    return "\n".join(lines)
