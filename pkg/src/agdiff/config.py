"""Run configuration: flat dotted-key text files (or JSON) -> RunConfig.

Text format: one ``key = value`` per line, '#' comments.  JSON files may be
flat ("domain.L": 8) or nested ({"domain": {"L": 8}}); nesting is flattened
on load.  Unknown keys are hard errors, as are missing required keys; both
name the offending key.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .domain import TorusDomain
from .dynamics import IntegratorConfig
from .initial import build_initial
from .kernels import KernelSpec, build_kernel
from .nonlinearity import NonlinearitySpec, build_nonlinearity
from .state import init_from_density


class ConfigError(ValueError):
    pass


def _to_float(key, raw):
    try:
        return float(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: expected a number, got {raw!r}")


def _to_int(key, raw):
    v = _to_float(key, raw)
    if v != int(v):
        raise ConfigError(f"{key}: expected an integer, got {raw!r}")
    return int(v)


def _to_str(key, raw):
    return str(raw)


# key -> (converter, default); _REQUIRED means the key must be present
_REQUIRED = object()
_SCHEMA = {
    "domain.L": (_to_float, _REQUIRED),
    "domain.c_L": (_to_float, 1.0),
    "kernel.kind": (_to_str, _REQUIRED),
    "kernel.beta": (_to_float, None),
    "kernel.attr_amp": (_to_float, None),
    "kernel.attr_range": (_to_float, None),
    "kernel.rep_amp": (_to_float, None),
    "kernel.rep_range": (_to_float, None),
    "phi.kind": (_to_str, "power_law"),
    "phi.m": (_to_float, 2.0),
    "initial.kind": (_to_str, "uniform"),
    "initial.center": (_to_float, 0.0),
    "initial.width": (_to_float, 2.0),
    "initial.height": (_to_float, 1.0),
    "initial.sigma": (_to_float, 1.0),
    "initial.m": (_to_float, 2.0),
    "initial.t0": (_to_float, 0.1),
    "initial.path": (_to_str, None),
    "initial.vacuum_floor": (_to_float, 0.0),
    "n_particles": (_to_int, _REQUIRED),
    "integrator.method": (_to_str, "rk4"),
    "integrator.dt_init": (_to_float, None),
    "integrator.safety": (_to_float, 0.2),
    "integrator.t_end": (_to_float, _REQUIRED),
    "integrator.sample_every": (_to_float, None),
    "integrator.rho_cap": (_to_float, 1e4),
    "integrator.min_time": (_to_float, 0.0),
    "outputs.dir": (_to_str, "out"),
    "outputs.grid_m": (_to_int, 1024),
}

_KERNEL_PARAM_KEYS = {
    "double_yukawa": ("kernel.beta",),
    "morse": ("kernel.attr_amp", "kernel.attr_range",
              "kernel.rep_amp", "kernel.rep_range"),
    "zero": (),
}

_INITIAL_PARAM_KEYS = {
    "uniform": (),
    "hat": ("initial.center", "initial.width", "initial.height"),
    "gaussian_like": ("initial.center", "initial.sigma"),
    "barenblatt": ("initial.m", "initial.t0"),
    "from_file": ("initial.path",),
}


@dataclass(frozen=True)
class RunConfig:
    domain: TorusDomain
    kernel_spec: KernelSpec
    phi_spec: NonlinearitySpec
    initial_kind: str
    initial_params: dict
    vacuum_floor: float
    n_particles: int
    integrator: IntegratorConfig
    outputs_dir: str
    grid_m: int

    def kernel(self):
        return build_kernel(self.kernel_spec)

    def nonlinearity(self):
        return build_nonlinearity(self.phi_spec)

    def initial_datum(self, domain: TorusDomain = None, vacuum_floor=None):
        d = domain or self.domain
        eps = self.vacuum_floor if vacuum_floor is None else vacuum_floor
        return build_initial(self.initial_kind, d, self.initial_params, eps)

    def initial_particles(self, n: int = None, domain: TorusDomain = None,
                          vacuum_floor=None):
        datum = self.initial_datum(domain, vacuum_floor)
        return init_from_density(datum, n or self.n_particles, datum.domain)


def _flatten(prefix, obj, out):
    for key, val in obj.items():
        name = f"{prefix}.{key}" if prefix else str(key)
        if isinstance(val, dict):
            _flatten(name, val, out)
        else:
            out[name] = val
    return out


def load_key_values(path) -> dict:
    text = open(path, "r", encoding="utf-8").read()
    stripped = text.lstrip()
    if str(path).endswith(".json") or stripped.startswith("{"):
        return _flatten("", json.loads(text), {})
    kv = {}
    for ln, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{ln}: expected 'key = value', got {line!r}")
        key, val = (tok.strip() for tok in line.split("=", 1))
        if key in kv:
            raise ConfigError(f"{path}:{ln}: duplicate key {key}")
        kv[key] = val
    return kv


def parse_config(path) -> RunConfig:
    kv = load_key_values(path)
    unknown = sorted(set(kv) - set(_SCHEMA))
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")

    values = {}
    for key, (conv, default) in _SCHEMA.items():
        if key in kv:
            values[key] = conv(key, kv[key])
        elif default is _REQUIRED:
            raise ConfigError(f"missing required config key: {key}")
        else:
            values[key] = default

    L = values["domain.L"]
    cL = values["domain.c_L"]
    if L <= 0.0:
        raise ConfigError("domain.L must be positive")
    if not (0.0 < cL <= 1.0):
        raise ConfigError("domain.c_L must lie in (0, 1]")
    domain = TorusDomain(L, cL)

    kkind = values["kernel.kind"]
    if kkind not in _KERNEL_PARAM_KEYS:
        raise ConfigError(f"kernel.kind: unknown kind {kkind!r}; expected one of "
                          f"{sorted(_KERNEL_PARAM_KEYS)}")
    kparams = {}
    for key in _KERNEL_PARAM_KEYS[kkind]:
        if values[key] is None:
            raise ConfigError(f"kernel.kind={kkind} requires {key}")
        kparams[key.split(".", 1)[1]] = values[key]
    kernel_spec = KernelSpec(kkind, kparams)
    build_kernel(kernel_spec)   # fail fast on bad parameters

    if values["phi.kind"] != "power_law":
        raise ConfigError("phi.kind: only 'power_law' is configurable")
    if values["phi.m"] < 1.0:
        raise ConfigError(f"phi.m: power-law exponent must satisfy m >= 1, "
                          f"got {values['phi.m']}")
    phi_spec = NonlinearitySpec("power_law", {"m": values["phi.m"]})

    ikind = values["initial.kind"]
    if ikind not in _INITIAL_PARAM_KEYS:
        raise ConfigError(f"initial.kind: unknown kind {ikind!r}; expected one of "
                          f"{sorted(_INITIAL_PARAM_KEYS)}")
    iparams = {}
    for key in _INITIAL_PARAM_KEYS[ikind]:
        if values[key] is None:
            raise ConfigError(f"initial.kind={ikind} requires {key}")
        iparams[key.split(".", 1)[1]] = values[key]
    if values["initial.vacuum_floor"] < 0.0:
        raise ConfigError("initial.vacuum_floor must be nonnegative")

    n = values["n_particles"]
    if n < 2:
        raise ConfigError("n_particles must be at least 2")

    t_end = values["integrator.t_end"]
    integ = IntegratorConfig(
        method=values["integrator.method"],
        dt_init=values["integrator.dt_init"] or t_end / 100.0,
        safety=values["integrator.safety"],
        t_end=t_end,
        sample_every=values["integrator.sample_every"] or t_end / 100.0,
        rho_cap=values["integrator.rho_cap"],
        min_time=values["integrator.min_time"],
    )

    return RunConfig(
        domain=domain,
        kernel_spec=kernel_spec,
        phi_spec=phi_spec,
        initial_kind=ikind,
        initial_params=iparams,
        vacuum_floor=values["initial.vacuum_floor"],
        n_particles=n,
        integrator=integ,
        outputs_dir=values["outputs.dir"],
        grid_m=values["outputs.grid_m"],
    )
