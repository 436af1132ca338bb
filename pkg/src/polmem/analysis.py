"""Hysteresis loops, the analytic area law, critical time and circuit series."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics.evolve import Trajectory, population_name
from .dynamics.states import InitialStateSpec, initial_density
from .errors import InvalidArgument, NoCrossing
from .model import JCHParams, ModelInstance, PulseTrain
from .ops import number_operator, photon_number

DEGENERATE_REL = 1e-3
# loop counts as broken when the response ends this far below where it started
BROKEN_DROP = 0.05
R_THRESHOLD_REL = 1e-3


def loop_area_numeric(x, y) -> float:
    """Signed area -closed_integral(y dx) of the polyline, closed last -> first.

    Positive for anticlockwise traversal.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise InvalidArgument(f"x and y must be 1-d of equal length, got {x.shape}, {y.shape}")
    if len(x) < 3:
        raise InvalidArgument("need at least 3 samples")
    xc = np.append(x, x[0])
    yc = np.append(y, y[0])
    return float(-np.sum(0.5 * (yc[1:] + yc[:-1]) * np.diff(xc)))


def degeneracy_threshold(x, y, rel: float = DEGENERATE_REL) -> float:
    return rel * float(np.ptp(x)) * float(np.ptp(y))


def circulation(area: float, eps: float) -> str:
    if area > eps:
        return "anticlockwise"
    if area < -eps:
        return "clockwise"
    return "degenerate"


@dataclass(frozen=True, eq=False)
class HysteresisLoop:
    x: np.ndarray
    y: np.ndarray
    signed_area: float
    circulation: str
    eps_area: float

    @classmethod
    def from_series(cls, x, y, eps: float | None = None) -> "HysteresisLoop":
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        area = loop_area_numeric(x, y)
        eps = degeneracy_threshold(x, y) if eps is None else eps
        return cls(x, y, area, circulation(area, eps), eps)

    @property
    def closure_area(self) -> float:
        """Area contributed by the chord that closes the sampled curve."""
        return float(0.5 * (self.y[0] + self.y[-1]) * (self.x[-1] - self.x[0])) + 0.0

    @property
    def response_drop(self) -> float:
        return float(self.y[0] - self.y[-1])

    @property
    def closed(self) -> bool:
        """Chord closure below eps_area and no terminal drop beneath the start."""
        return abs(self.closure_area) < self.eps_area and self.response_drop <= BROKEN_DROP


def loop_from_trajectory(traj: Trajectory, response: str | None = None, site: int = 0,
                         eps: float | None = None) -> HysteresisLoop:
    if response is None:
        response = "var_N" if traj.model_kind == "jch" else "photons"
    return HysteresisLoop.from_series(traj.drive, traj.response(response, site), eps)


@dataclass(frozen=True)
class AreaPrediction:
    xi_i: float
    xi_f: float
    sigma_w: float
    T: float
    tau: float
    eta: float

    @property
    def predicted_area(self) -> float:
        return loop_area_analytic(self)


def loop_area_analytic(pred: AreaPrediction) -> float:
    """Closed-system loop area of a Gaussian sweep, linear in eta."""
    if not pred.tau > 0:
        raise InvalidArgument("tau must be positive")
    ratio = pred.sigma_w / pred.tau
    return (pred.eta / math.sqrt(2) * (pred.xi_f - pred.xi_i) * math.pi ** 1.5 * ratio
            * math.sin(math.pi * pred.T / pred.tau)
            * math.exp(-(math.pi * ratio / math.sqrt(2)) ** 2))


def estimate_tau(params) -> float:
    """pi / (4 J) from a JCHParams or a bare hopping strength."""
    J = params.J if isinstance(params, JCHParams) else float(params)
    if not J > 0:
        raise InvalidArgument("hopping J must be positive")
    return math.pi / (4.0 * J)


def estimate_tau_empirical(traj: Trajectory, labels=("1-", "1-")) -> float:
    """Time of the first minimum of p(1-,1-), refined on the sampled derivative."""
    name = population_name(labels)
    if name not in traj.populations:
        raise InvalidArgument(f"trajectory has no population record for ({name})")
    p = traj.populations[name]
    t = traj.times
    below = np.flatnonzero(p < 0.5)
    if below.size == 0:
        raise NoCrossing(f"p({name}) never drops below 0.5")
    start = below[0]
    after = np.flatnonzero(p[start:] >= 0.5)
    stop = start + after[0] if after.size else len(p)
    k = start + int(np.argmin(p[start:stop]))
    dp = np.gradient(p, t)
    for j in (k - 1, k):
        if 0 <= j < len(p) - 1 and dp[j] <= 0 < dp[j + 1]:
            return float(t[j] - dp[j] * (t[j + 1] - t[j]) / (dp[j + 1] - dp[j]))
    return float(t[k])


def eta_from_state(init: InitialStateSpec, model: ModelInstance, site: int = 0) -> float:
    rho = initial_density(init, model)
    site_spec = model.layout.sites[site]
    N = (number_operator(site, model.layout) if site_spec.has_atom
         else photon_number(site, model.layout)).entries
    mean = np.real(np.trace(N @ rho))
    var = np.real(np.trace(N @ N @ rho)) - mean ** 2
    return float(1.0 - 2.0 * var)


@dataclass(frozen=True, eq=False)
class CircuitSeries:
    t: np.ndarray
    y: np.ndarray
    xi: np.ndarray
    xi_dot: np.ndarray
    a: np.ndarray
    b: np.ndarray
    y_dot: np.ndarray
    R: np.ndarray  # NaN where |xi_dot| is below threshold

    @property
    def V_R(self) -> np.ndarray:
        return self.y_dot

    @property
    def ehrenfest_residual(self) -> np.ndarray:
        return self.y_dot - (self.a - self.b * self.xi)

    def columns(self) -> dict:
        return {"xi_dot": self.xi_dot, "y_dot": self.y_dot, "V_R": self.V_R, "R": self.R,
                "a": self.a, "b": self.b}


def circuit_series(traj: Trajectory, model: ModelInstance | None = None, site: int = 0,
                   threshold: float = R_THRESHOLD_REL) -> CircuitSeries:
    """Memristive quantities y, dy/dt = V_R and R = dy/dxi along a recorded run."""
    if traj.circuit_a is None or traj.circuit_b is None:
        raise InvalidArgument("trajectory was recorded without circuit inputs (record_circuit)")
    if model is not None and model.kind != traj.model_kind:
        raise InvalidArgument("model does not match trajectory")
    t = traj.times
    y = traj.var_N[:, site]
    y_dot = np.gradient(y, t, edge_order=2)
    xi_dot = traj.drive_rate
    R = np.full_like(y, np.nan)
    ok = np.abs(xi_dot) > threshold * np.max(np.abs(xi_dot))
    R[ok] = y_dot[ok] / xi_dot[ok]
    return CircuitSeries(t, y, traj.drive, xi_dot, traj.circuit_a[:, site],
                         traj.circuit_b[:, site], y_dot, R)


@dataclass(frozen=True)
class SpiralSegment:
    index: int
    t_start: float
    t_end: float
    y_start: float
    y_end: float
    signed_area: float
    eps_area: float
    circulation: str


@dataclass(frozen=True)
class SpiralReport:
    segments: tuple
    endpoint_tolerance: float

    @property
    def endpoint_gaps(self) -> np.ndarray:
        ends = np.array([s.y_end for s in self.segments])
        return np.abs(np.diff(ends))

    @property
    def is_spiral(self) -> bool:
        gaps = self.endpoint_gaps
        return bool(gaps.size) and bool(np.all(gaps > self.endpoint_tolerance))


def spiral_report(traj: Trajectory, drive: PulseTrain, response: str | None = None,
                  site: int = 0) -> SpiralReport:
    """Split a pulse-train run at period boundaries and measure each pulse's loop."""
    if not isinstance(drive, PulseTrain):
        raise InvalidArgument("spiral_report needs a PulseTrain drive")
    if response is None:
        response = "var_N" if traj.model_kind == "jch" else "photons"
    y = traj.response(response, site)
    t = traj.times
    bounds = [int(np.argmin(np.abs(t - k * drive.period))) for k in range(drive.count + 1)]
    segments = []
    for k in range(drive.count):
        lo, hi = bounds[k], bounds[k + 1]
        if hi - lo < 2:
            raise InvalidArgument("pulse period shorter than the sampling grid")
        loop = HysteresisLoop.from_series(traj.drive[lo:hi + 1], y[lo:hi + 1])
        segments.append(SpiralSegment(k, float(t[lo]), float(t[hi]), float(y[lo]), float(y[hi]),
                                      loop.signed_area, loop.eps_area, loop.circulation))
    return SpiralReport(tuple(segments), DEGENERATE_REL * float(np.ptp(y)))


def relative_difference(a: float, b: float) -> float:
    scale = max(abs(a), abs(b))
    return 0.0 if scale == 0 else abs(a - b) / scale
