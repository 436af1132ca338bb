"""Named built-in scenarios and alternative initial states for plasticity checks."""
from __future__ import annotations

import copy

from ..errors import InvalidArgument
from .config import ScenarioConfig

_JCH = {"omega_c": 1.0e4, "g": 1.0, "J": 1.0e-2, "gamma_c": [0.0, 0.0], "gamma_a": [0.0, 0.0],
        "n_max": 2}
_OPEN = dict(_JCH, gamma_c=[1.0e-2, 1.0e-2], gamma_a=[1.0e-2, 1.0e-2])
_SWEEP = {"xi_i": 10.0, "xi_f": 1000.0, "sigma_w": "T/4"}
_SUPERFLUID = {"kind": "superposition",
               "terms": [{"coef": 0.7071067811865476, "labels": ["2-", "0g"]},
                         {"coef": 0.7071067811865476, "labels": ["0g", "2-"]}]}


def _gauss(T):
    return dict(_SWEEP, kind="gaussian", T=T)


_PRESETS = {
    "fig2a_T095": dict(
        description="closed Mott loop, T = 0.95 tau (anticlockwise)",
        model="jch", params=_JCH, drive=_gauss("0.95tau"), initial="mott"),
    "fig2a_T100": dict(
        description="closed Mott loop at T = tau (area collapses)",
        model="jch", params=_JCH, drive=_gauss("1tau"), initial="mott"),
    "fig2a_T105": dict(
        description="closed Mott loop, T = 1.05 tau (clockwise)",
        model="jch", params=_JCH, drive=_gauss("1.05tau"), initial="mott"),
    "fig2b": dict(
        description="populations under a constant large detuning xi = xi_f",
        model="jch", params=_JCH, drive={"kind": "constant", "xi": 1000.0}, initial="mott",
        duration="1.5tau", integrator={"output_samples": 4000}),
    "fig3a": dict(
        description="closed Mott loop, T = 0.95 tau",
        model="jch", params=_JCH, drive=_gauss("0.95tau"), initial="mott"),
    "fig3b": dict(
        description="open Mott loop, all loss rates 0.01 g",
        model="jch", params=_OPEN, drive=_gauss("0.95tau"), initial="mott"),
    "fig3c": dict(
        description="closed superfluid loop, T = 0.95 tau (clockwise)",
        model="jch", params=_JCH, drive=_gauss("0.95tau"), initial=_SUPERFLUID),
    "fig3d": dict(
        description="open superfluid curve, all loss rates 0.01 g (loop breaks)",
        model="jch", params=_OPEN, drive=_gauss("0.95tau"), initial=_SUPERFLUID),
    "fig4a": dict(
        description="driven Jaynes-Cummings with a Gaussian laser amplitude",
        model="driven_jc",
        params={"delta_a": 0.0, "delta_c": 0.0, "delta_1": 0.0, "Omega": 1.0e-6, "g": 1.0,
                "gamma_c": 0.1, "gamma_a": 0.1, "n_max": 260},
        drive={"kind": "gaussian_amplitude", "I0": 1.0, "T": 74.61282552275759, "sigma_w": "T/4"},
        initial={"kind": "polariton", "labels": ["1-"]},
        integrator={"output_samples": 400, "max_step": 0.06}),
    "fig4b": dict(
        description="driven Kerr resonator under a triangular amplitude ramp",
        model="kerr", params={"delta": 2.0, "U": 0.1, "gamma": 1.0, "n_max": 60},
        drive={"kind": "triangular_ramp", "F0": 1.0, "dF": 3.0, "t_s": 30.0},
        initial={"kind": "fock", "photons": [0]},
        integrator={"max_step": 0.02}),
    "fig4c": dict(
        description="five-pulse train, closed Mott start (spiral)",
        model="jch", params=_JCH,
        drive=dict(_SWEEP, kind="pulse_train", T="0.95tau", count=5),
        initial="mott", integrator={"output_samples": 5000}),
    "fig4d": dict(
        description="circuit quantities y, V_R and R along the closed Mott loop",
        model="jch", params=_JCH, drive=_gauss("0.95tau"), initial="mott",
        observables={"circuit": True}),
}

# alternative initial states used when checking plasticity
PLASTICITY_STATES = {
    "fig3a": ["mott", _SUPERFLUID],
    "fig4a": [{"kind": "polariton", "labels": ["1-"]}, {"kind": "polariton", "labels": ["1+"]},
              {"kind": "polariton", "labels": ["0g"]}],
    "fig4b": [{"kind": "fock", "photons": [0]}, {"kind": "fock", "photons": [2]}],
}


def names() -> list[str]:
    return list(_PRESETS)


def describe(name: str) -> str:
    return get(name).description


def get(name: str) -> ScenarioConfig:
    try:
        doc = copy.deepcopy(_PRESETS[name])
    except KeyError:
        raise InvalidArgument(f"unknown preset {name!r}; see 'presets list'") from None
    doc["name"] = name
    return ScenarioConfig.from_dict(doc)
