"""Scenario documents: parsing, validation, normalisation and model construction.

A scenario is a YAML mapping::

    name: fig2a_T095
    model: jch                # jch | driven_jc | kerr
    params: {J: 0.01, omega_c: 10000.0, gamma_c: [0, 0], gamma_a: [0, 0], n_max: 2}
    drive: {kind: gaussian, xi_i: 10.0, xi_f: 1000.0, T: 0.95tau, sigma_w: T/4}
    initial: mott             # or a mapping, see ``parse_initial``
    duration: null            # default 2T, 2 t_s, or count * period
    integrator: {rtol: 1.0e-8, atol: 1.0e-10, output_samples: 2000}
    observables: {populations: true, circuit: false}
    output: {prefix: fig2a_T095}

Times may be written as multiples of the critical time (``0.95tau``), and
``sigma_w`` as a fraction of the peak time (``T/4``).  Energies are in units
of g (of gamma for the Kerr model); other couplings are rescaled on load.
"""
from __future__ import annotations

import copy
import math
import re
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import yaml

from ..dynamics.evolve import IntegratorConfig
from ..dynamics.states import (DensityInput, Fock, NAMED_STATES, PolaritonProduct,
                               Superposition)
from ..errors import InvalidArgument
from ..model import (Constant, DrivenJCParams, Gaussian, GaussianAmplitude, JCHParams,
                     KerrParams, ModelInstance, PulseTrain, TriangularRamp, build_driven_jc,
                     build_jch, build_kerr)

MODELS = ("jch", "driven_jc", "kerr")
DRIVE_KINDS = ("gaussian", "pulse_train", "constant", "triangular_ramp", "gaussian_amplitude")

_PARAM_KEYS = {
    "jch": {"omega_c", "omega_a", "g", "J", "gamma_c", "gamma_a", "frame", "n_max"},
    "driven_jc": {"delta_a", "delta_c", "delta_1", "Omega", "g", "gamma_c", "gamma_a", "n_max"},
    "kerr": {"delta", "U", "gamma", "n_max"},
}
_DRIVE_KEYS = {
    "gaussian": {"xi_i", "xi_f", "T", "sigma_w"},
    "pulse_train": {"xi_i", "xi_f", "T", "sigma_w", "period", "count"},
    "constant": {"xi"},
    "triangular_ramp": {"F0", "dF", "t_s"},
    "gaussian_amplitude": {"I0", "T", "sigma_w"},
}
# which entries carry energy (scale 1/u) or time (scale u) dimensions
_ENERGY = {"omega_c", "omega_a", "J", "gamma_c", "gamma_a", "delta_a", "delta_c", "delta_1",
           "Omega", "delta", "U", "xi_i", "xi_f", "xi", "F0", "dF", "I0"}
_TIME = {"T", "sigma_w", "period", "t_s"}
_INTEGRATOR_KEYS = {"rtol", "atol", "max_step", "output_samples", "frame",
                    "cutoff_tail_threshold", "max_steps", "check_invariants", "reduce_support",
                    "error_norm"}
_OBSERVABLE_KEYS = {"populations", "circuit", "store_states"}

_TAU_RE = re.compile(r"^\s*([-+0-9.eE]*)\s*\*?\s*tau\s*$")
_FRAC_RE = re.compile(r"^\s*([-+0-9.eE]*)\s*\*?\s*T\s*(?:/\s*([0-9.eE+-]+))?\s*$")


def _number(value, what: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise InvalidArgument(f"{what} must be a number, got {value!r}")
    return float(value)


def resolve_time(value, tau: float | None, what: str) -> float:
    """Number, or a string ``<k>tau`` meaning k times the critical time."""
    if isinstance(value, str):
        m = _TAU_RE.match(value)
        if not m:
            raise InvalidArgument(f"{what}: cannot read {value!r} (expected a number or '<k>tau')")
        if tau is None:
            raise InvalidArgument(f"{what}: 'tau' is only defined for the jch model")
        k = float(m.group(1)) if m.group(1) not in ("", "+", "-") else float(m.group(1) + "1")
        return k * tau
    return _number(value, what)


def resolve_width(value, T: float, tau: float | None, what: str = "sigma_w") -> float:
    """Number, ``<k>tau``, or a fraction of the peak time such as ``T/4``."""
    if isinstance(value, str):
        m = _FRAC_RE.match(value)
        if m:
            k = float(m.group(1)) if m.group(1) not in ("", "+", "-") else float(m.group(1) + "1")
            div = float(m.group(2)) if m.group(2) else 1.0
            return k * T / div
    return resolve_time(value, tau, what)


def _check_keys(d: dict, allowed: set, where: str):
    extra = set(d) - allowed
    if extra:
        raise InvalidArgument(f"unknown {where} key(s): {', '.join(sorted(extra))}")


def _as_mapping(value, where: str) -> dict:
    if value is None:
        return {}
    if not isinstance(value, dict):
        raise InvalidArgument(f"{where} must be a mapping")
    return dict(value)


@dataclass
class ScenarioConfig:
    name: str
    model: str
    params: dict = field(default_factory=dict)
    drive: dict = field(default_factory=dict)
    initial: object = "mott"
    duration: object = None
    integrator: dict = field(default_factory=dict)
    observables: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)
    description: str = ""

    @classmethod
    def from_dict(cls, doc: dict) -> "ScenarioConfig":
        if not isinstance(doc, dict):
            raise InvalidArgument("scenario document must be a mapping")
        _check_keys(doc, {f for f in cls.__dataclass_fields__}, "scenario")
        if "model" not in doc:
            raise InvalidArgument("scenario needs a 'model'")
        cfg = cls(
            name=str(doc.get("name", doc["model"])),
            model=doc["model"],
            params=_as_mapping(doc.get("params"), "params"),
            drive=_as_mapping(doc.get("drive"), "drive"),
            initial=copy.deepcopy(doc.get("initial", "mott")),
            duration=doc.get("duration"),
            integrator=_as_mapping(doc.get("integrator"), "integrator"),
            observables=_as_mapping(doc.get("observables"), "observables"),
            output=_as_mapping(doc.get("output"), "output"),
            description=str(doc.get("description", "")),
        )
        cfg.check()
        return cfg

    def to_dict(self) -> dict:
        out = {"name": self.name, "model": self.model}
        if self.description:
            out["description"] = self.description
        out.update(params=dict(self.params), drive=dict(self.drive),
                   initial=copy.deepcopy(self.initial), duration=self.duration,
                   integrator=dict(self.integrator), observables=dict(self.observables),
                   output=dict(self.output))
        return out

    def check(self):
        """Structural validation; numeric validation happens in ``build``."""
        if self.model not in MODELS:
            raise InvalidArgument(f"model must be one of {MODELS}, got {self.model!r}")
        _check_keys(self.params, _PARAM_KEYS[self.model], "params")
        kind = self.drive.get("kind")
        if kind not in DRIVE_KINDS:
            raise InvalidArgument(f"drive.kind must be one of {DRIVE_KINDS}, got {kind!r}")
        _check_keys(self.drive, _DRIVE_KEYS[kind] | {"kind"}, f"{kind} drive")
        allowed = {"jch": ("gaussian", "pulse_train", "constant"),
                   "driven_jc": ("gaussian_amplitude", "constant"),
                   "kerr": ("triangular_ramp", "constant")}[self.model]
        if kind not in allowed:
            raise InvalidArgument(f"{kind} drive does not apply to the {self.model} model")
        _check_keys(self.integrator, _INTEGRATOR_KEYS, "integrator")
        _check_keys(self.observables, _OBSERVABLE_KEYS, "observables")
        _check_keys(self.output, {"prefix"}, "output")
        return self

    # -- physical objects ------------------------------------------------

    @property
    def unit(self) -> float:
        """Coupling that sets the energy unit (g, or gamma for Kerr)."""
        key = "gamma" if self.model == "kerr" else "g"
        u = _number(self.params.get(key, 1.0), key)
        if not u > 0:
            raise InvalidArgument(f"{key} must be positive")
        return u

    def normalized(self) -> "ScenarioConfig":
        """Copy rescaled so that the unit coupling equals 1."""
        u = self.unit
        if u == 1.0:
            return self

        def scale(d: dict) -> dict:
            out = {}
            for k, v in d.items():
                if isinstance(v, str) or k == "kind":
                    out[k] = v
                elif k in _ENERGY:
                    out[k] = [x / u for x in v] if isinstance(v, (list, tuple)) else v / u
                elif k in _TIME:
                    out[k] = v * u
                else:
                    out[k] = v
            return out

        params = scale(self.params)
        params["gamma" if self.model == "kerr" else "g"] = 1.0
        duration = self.duration
        if duration is not None and not isinstance(duration, str):
            duration = duration * u
        integ = dict(self.integrator)
        if isinstance(integ.get("max_step"), (int, float)):
            integ["max_step"] = integ["max_step"] * u
        return replace(self, params=params, drive=scale(self.drive), duration=duration,
                       integrator=integ)

    @property
    def tau(self) -> float | None:
        if self.model != "jch":
            return None
        J = _number(self.params.get("J", JCHParams.J), "J") / self.unit
        return math.pi / (4.0 * J) if J > 0 else None

    def build_drive(self):
        n = self.normalized()
        d, tau = n.drive, n.tau
        kind = d["kind"]
        try:
            if kind in ("gaussian", "pulse_train"):
                T = resolve_time(d["T"], tau, "T")
                pulse = Gaussian(_number(d["xi_i"], "xi_i"), _number(d["xi_f"], "xi_f"), T,
                                 resolve_width(d.get("sigma_w", "T/4"), T, tau))
                if kind == "gaussian":
                    return pulse
                period = d.get("period")
                return PulseTrain(pulse, None if period is None else resolve_time(period, tau, "period"),
                                  int(d.get("count", 5)))
            if kind == "constant":
                return Constant(_number(d["xi"], "xi"))
            if kind == "triangular_ramp":
                return TriangularRamp(_number(d["F0"], "F0"), _number(d["dF"], "dF"),
                                      _number(d["t_s"], "t_s"))
            T = resolve_time(d["T"], tau, "T")
            return GaussianAmplitude(_number(d["I0"], "I0"), T,
                                     resolve_width(d.get("sigma_w", "T/4"), T, tau))
        except KeyError as exc:
            raise InvalidArgument(f"{kind} drive is missing {exc.args[0]!r}") from None

    def build_model(self) -> ModelInstance:
        n = self.normalized()
        drive = self.build_drive()
        p = {k: v for k, v in n.params.items()}
        for k in ("gamma_c", "gamma_a"):
            if n.model == "jch" and isinstance(p.get(k), (int, float)):
                p[k] = (p[k], p[k])
            elif n.model == "jch" and k in p:
                p[k] = tuple(p[k])
        if n.model == "jch":
            return build_jch(JCHParams(**p), drive)
        if n.model == "driven_jc":
            return build_driven_jc(DrivenJCParams(drive=drive, **p))
        return build_kerr(KerrParams(drive=drive, **p))

    def resolved_duration(self, drive=None) -> float:
        n = self.normalized()
        drive = drive or self.build_drive()
        if n.duration is not None:
            return resolve_time(n.duration, n.tau, "duration")
        if isinstance(drive, (Gaussian, GaussianAmplitude)):
            return 2.0 * drive.T
        if isinstance(drive, TriangularRamp):
            return 2.0 * drive.t_s
        if isinstance(drive, PulseTrain):
            return drive.count * drive.period
        raise InvalidArgument("constant drives need an explicit duration")

    def integrator_config(self, **overrides) -> IntegratorConfig:
        kw = dict(self.normalized().integrator)
        kw.update({k: v for k, v in overrides.items() if v is not None})
        for k in ("rtol", "atol", "max_step", "cutoff_tail_threshold"):
            if k in kw:
                kw[k] = _number(kw[k], k)
        return IntegratorConfig(**kw)

    def initial_state(self):
        return parse_initial(self.initial)

    @property
    def prefix(self) -> str:
        return str(self.output.get("prefix", self.name))


def parse_initial(spec):
    """Named state, or a mapping with ``kind`` polariton | superposition | fock | density."""
    if isinstance(spec, str):
        if spec not in NAMED_STATES:
            raise InvalidArgument(f"unknown named state {spec!r}; known: {sorted(NAMED_STATES)}")
        return NAMED_STATES[spec]
    if not isinstance(spec, dict) or "kind" not in spec:
        raise InvalidArgument("initial state must be a name or a mapping with 'kind'")
    kind = spec["kind"]
    if kind == "polariton":
        return PolaritonProduct(tuple(spec["labels"]))
    if kind == "superposition":
        terms = []
        for term in spec["terms"]:
            coef = term["coef"]
            if isinstance(coef, (list, tuple)):
                coef = complex(coef[0], coef[1])
            terms.append((coef, tuple(term["labels"])))
        return Superposition(tuple(terms))
    if kind == "fock":
        return Fock(tuple(spec["photons"]), spec.get("atoms"))
    if kind == "density":
        m = np.asarray(spec["real"], dtype=float) + 1j * np.asarray(spec.get("imag", 0.0))
        return DensityInput(m)
    raise InvalidArgument(f"unknown initial state kind {kind!r}")


def dump(cfg: ScenarioConfig) -> str:
    return yaml.safe_dump(cfg.to_dict(), sort_keys=False, default_flow_style=None)


def loads(text: str) -> ScenarioConfig:
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise InvalidArgument(f"malformed config: {exc}") from None
    return ScenarioConfig.from_dict(doc)


def load(path) -> ScenarioConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InvalidArgument(f"cannot read config {path}: {exc.strerror}") from None
    return loads(text)


def set_path(cfg: ScenarioConfig, dotted: str, value) -> ScenarioConfig:
    """Copy of ``cfg`` with ``section.key`` replaced, e.g. ``drive.T``."""
    doc = cfg.to_dict()
    parts = dotted.split(".")
    node = doc
    for p in parts[:-1]:
        if not isinstance(node.get(p), dict):
            raise InvalidArgument(f"no config section {p!r} in {dotted!r}")
        node = node[p]
    node[parts[-1]] = value
    return ScenarioConfig.from_dict(doc)
