"""Run configuration: flat UTF-8 key=value lines with section dots.

Unknown keys are rejected; values keep the defaults below unless set.  The
data entries are field-expression strings evaluated on R^3.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .fieldexpr import as_callable
from .params import Params, StressForce
from .spaces import SobolevIndex

__all__ = ["RunConfig", "ConfigError", "load_config", "parse_config"]


class ConfigError(ValueError):
    pass


_DEFAULTS = {
    "grid.L": 16.0, "grid.Nx": 64, "grid.Ny": 32, "grid.b": 1.0,
    "params.gravity": 1.0, "params.viscosity": 1.0,
    "params.surface_tension": 1.0, "params.gamma": 0.0,
    "params.s": 4, "params.r": 1.5,
    "newton.tol": 1e-10, "newton.max_iter": 25, "newton.damping": 1.0,
    "scan.radii_min": 1e-2, "scan.radii_max": 1e2, "scan.n_radii": 12,
    "scan.n_angles": 4, "scan.alpha_max": 1, "scan.s": 0, "scan.Ny": 24,
    "sweep.gammas": "1,0.5,0.25,0.125,0.0625,0.03125,0.015625,0.0078125,0.00390625,0",
    "pgamma.gammas": "0.1,1,10,100",
    "output_dir": ".",
}
_DATA_KEYS = (["data.F1", "data.F2", "data.F3"]
              + [f"data.T{i}{j}" for i in (1, 2, 3) for j in (1, 2, 3)]
              + ["data.f1", "data.f2", "data.f3",
                 "data.k1", "data.k2", "data.k3", "data.h"])
_INT_KEYS = {"grid.Nx", "grid.Ny", "params.s", "newton.max_iter",
             "scan.n_radii", "scan.n_angles", "scan.alpha_max", "scan.s",
             "scan.Ny"}
_STR_KEYS = {"output_dir", "sweep.gammas", "pgamma.gammas"} | set(_DATA_KEYS)


@dataclass
class RunConfig:
    values: dict = field(default_factory=dict)

    def __getitem__(self, key):
        return self.values[key]

    def grid_args(self):
        v = self.values
        return dict(L=v["grid.L"], Nx=v["grid.Nx"], Ny=v["grid.Ny"], b=v["grid.b"])

    def params(self) -> Params:
        v = self.values
        return Params(gravity=v["params.gravity"], viscosity=v["params.viscosity"],
                      surface_tension=v["params.surface_tension"], depth=v["grid.b"],
                      wave_speed=v["params.gamma"],
                      sobolev=SobolevIndex(v["params.s"], v["params.r"]))

    def stress_force(self) -> StressForce:
        v = self.values
        F = tuple(as_callable(v[f"data.F{i}"]) for i in (1, 2, 3))
        T = tuple(tuple(as_callable(v[f"data.T{i}{j}"]) for j in (1, 2, 3))
                  for i in (1, 2, 3))
        return StressForce(T=T, F=F)

    def gammas(self, key="sweep.gammas"):
        return [float(t) for t in self.values[key].split(",") if t.strip() != ""]


def parse_config(text: str) -> RunConfig:
    values = dict(_DEFAULTS)
    for k in _DATA_KEYS:
        values[k] = "0"
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {raw!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        val = val.strip()
        if key not in values:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in _STR_KEYS:
            values[key] = val
        elif key in _INT_KEYS:
            try:
                values[key] = int(val)
            except ValueError:
                raise ConfigError(f"line {lineno}: key {key!r} needs an integer, "
                                  f"got {val!r}")
        else:
            try:
                values[key] = float(val)
            except ValueError:
                raise ConfigError(f"line {lineno}: key {key!r} needs a number, "
                                  f"got {val!r}")
    cfg = RunConfig(values)
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig):
    v = cfg.values
    if v["grid.Nx"] % 2 != 0 or v["grid.Nx"] < 8:
        raise ConfigError("grid.Nx must be even and >= 8")
    if v["grid.Ny"] < 8:
        raise ConfigError("grid.Ny must be >= 8")
    for key in ("grid.L", "grid.b", "params.gravity", "params.viscosity",
                "params.surface_tension", "newton.tol"):
        if v[key] <= 0:
            raise ConfigError(f"{key} must be positive")
    if not (1.0 < v["params.r"] < 2.0):
        raise ConfigError("params.r must lie in (1, 2)")
    if not (0.0 < v["newton.damping"] <= 1.0):
        raise ConfigError("newton.damping must lie in (0, 1]")
    if v["scan.alpha_max"] > 2:
        raise ConfigError("scan.alpha_max must be <= 2")


def load_config(path) -> RunConfig:
    if path is None:
        return parse_config("")
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return parse_config(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}")
