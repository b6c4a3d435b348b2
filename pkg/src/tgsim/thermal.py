"""First-order thermal models of houses with switched HVAC.

Each house is a single lumped thermal mass behind a single thermal
resistance to ambient:

    dT_in/dt = (T_out - T_in) / (R * C) + q_hvac / C

with R in degC/kW, C in kWh/degC and q_hvac in thermal kW (negative for
cooling, positive for heating). Over a tick of h hours with q held
constant the update has the exact closed form

    T_eq  = T_out + q * R
    T_in' = T_eq + (T_in - T_eq) * exp(-h / (R * C))

so the integration is step-size independent: two half ticks compose to
one full tick exactly. All population-level stepping funnels through
:mod:`tgsim.backend` so the compiled kernel and the pure-Python fallback
stay interchangeable.

Two thermostat kinds are modelled. The conventional hysteresis
thermostat switches whenever temperature leaves its deadband. The
zero-deadband thermostat has no hysteresis band at all and holds its
relay state between market boundaries, so an entire population of them
changes state only when a clearing price arrives. That synchronisation
is deliberate: it is the failure mode some of the scarcity scenarios
exist to reproduce.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np

from . import backend

MODE_COOLING = "cooling"
MODE_HEATING = "heating"

KIND_HYSTERESIS = "hysteresis"
KIND_ZERO_DEADBAND = "zero_deadband"

_KIND_CODES = {KIND_HYSTERESIS: 0, KIND_ZERO_DEADBAND: 1}
_MODE_SIGNS = {MODE_COOLING: 1, MODE_HEATING: -1}


@dataclass(frozen=True)
class ThermalParams:
    """Envelope and equipment constants for one house.

    r_thermal : degC per kW of continuous heat flux
    c_thermal : kWh per degC of storage in the lumped mass
    q_hvac    : thermal output of the unit when on, kW (cooling < 0)
    p_rated   : electrical draw of the unit when on, kW (> 0)
    """

    r_thermal: float
    c_thermal: float
    q_hvac: float
    p_rated: float

    def __post_init__(self) -> None:
        if not (self.r_thermal > 0 and self.c_thermal > 0):
            raise ValueError("r_thermal and c_thermal must be positive")
        if not self.p_rated > 0:
            raise ValueError("p_rated must be positive")


@dataclass(frozen=True)
class ThermostatConfig:
    """Switching rule for one house.

    kind is "hysteresis" or "zero_deadband". Setpoint is the market-
    adjusted target; comfort limits t_min/t_max bound how far price
    response may push it. deadband only applies to the hysteresis kind.
    """

    kind: str
    mode: str
    setpoint: float
    deadband: float
    t_min: float
    t_max: float
    t_desired: float

    def __post_init__(self) -> None:
        if self.kind not in _KIND_CODES:
            raise ValueError(f"unknown thermostat kind {self.kind!r}")
        if self.mode not in _MODE_SIGNS:
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.kind == KIND_HYSTERESIS and not self.deadband > 0:
            raise ValueError("hysteresis thermostat needs deadband > 0")
        if not (self.t_min < self.t_desired < self.t_max):
            raise ValueError("need t_min < t_desired < t_max")


@dataclass(frozen=True)
class HouseState:
    """Instantaneous state: indoor temperature and relay position."""

    t_in: float
    hvac_on: bool


def step_house(state: HouseState, params: ThermalParams, t_out: float, h: float) -> HouseState:
    """Advance one house h hours with its relay state held fixed.

    Uses the exact exponential solution of the first-order model, so
    composing two half steps equals one full step to rounding error.
    """
    if not h > 0:
        raise ValueError("tick length must be positive")
    if not (math.isfinite(state.t_in) and math.isfinite(t_out)):
        raise ValueError("non-finite temperature")
    q = params.q_hvac if state.hvac_on else 0.0
    t_eq = t_out + q * params.r_thermal
    decay = math.exp(-h / (params.r_thermal * params.c_thermal))
    return replace(state, t_in=t_eq + (state.t_in - t_eq) * decay)


def hysteresis_decide(t_in: float, cfg: ThermostatConfig, prior_on: bool) -> bool:
    """Relay decision for a conventional deadband thermostat.

    Cooling: on at or above setpoint + deadband/2, off at or below
    setpoint - deadband/2, otherwise hold. Heating is the mirror image.
    """
    half = cfg.deadband / 2.0
    if cfg.mode == MODE_COOLING:
        if t_in >= cfg.setpoint + half:
            return True
        if t_in <= cfg.setpoint - half:
            return False
    else:
        if t_in <= cfg.setpoint - half:
            return True
        if t_in >= cfg.setpoint + half:
            return False
    return prior_on


def boundary_decide(
    t_in: float, cfg: ThermostatConfig, prior_on: bool, at_market_boundary: bool
) -> bool:
    """Relay decision for the zero-deadband, market-synchronised kind.

    Between market boundaries the relay holds whatever it last was.
    At a boundary it switches purely on which side of the setpoint the
    temperature sits, with no hysteresis band.
    """
    if not at_market_boundary:
        return prior_on
    if cfg.mode == MODE_COOLING:
        return t_in > cfg.setpoint
    return t_in < cfg.setpoint


def decide(
    t_in: float, cfg: ThermostatConfig, prior_on: bool, at_market_boundary: bool
) -> bool:
    if cfg.kind == KIND_HYSTERESIS:
        return hysteresis_decide(t_in, cfg, prior_on)
    return boundary_decide(t_in, cfg, prior_on, at_market_boundary)


# ----------------------------------------------------------------------
# Population container
# ----------------------------------------------------------------------


class Population:
    """Struct-of-arrays container for a fleet of houses.

    Per-house scalars live in aligned numpy arrays so the tick kernel
    can run over them without boxing. The scalar functions above remain
    the reference semantics; tests pin the kernel to them bit for bit.
    """

    def __init__(
        self,
        ids: Sequence[str],
        params: Sequence[ThermalParams],
        configs: Sequence[ThermostatConfig],
        states: Sequence[HouseState],
        comfort_k: Sequence[float],
    ) -> None:
        n = len(ids)
        if not (len(params) == len(configs) == len(states) == len(comfort_k) == n):
            raise ValueError("population arrays must align")
        self.ids = list(ids)
        self.r_thermal = np.array([p.r_thermal for p in params], dtype=np.float64)
        self.c_thermal = np.array([p.c_thermal for p in params], dtype=np.float64)
        self.q_hvac = np.array([p.q_hvac for p in params], dtype=np.float64)
        self.p_rated = np.array([p.p_rated for p in params], dtype=np.float64)
        self.kind = np.array([_KIND_CODES[c.kind] for c in configs], dtype=np.uint8)
        self.mode_sign = np.array([_MODE_SIGNS[c.mode] for c in configs], dtype=np.int8)
        self.setpoint = np.array([c.setpoint for c in configs], dtype=np.float64)
        self.deadband = np.array([c.deadband for c in configs], dtype=np.float64)
        self.t_min = np.array([c.t_min for c in configs], dtype=np.float64)
        self.t_max = np.array([c.t_max for c in configs], dtype=np.float64)
        self.t_desired = np.array([c.t_desired for c in configs], dtype=np.float64)
        self.comfort_k = np.array(comfort_k, dtype=np.float64)
        self.t_in = np.array([s.t_in for s in states], dtype=np.float64)
        self.hvac_on = np.array([1 if s.hvac_on else 0 for s in states], dtype=np.uint8)
        # forced-off latch used by underfrequency shedding
        self.latched = np.zeros(n, dtype=np.uint8)

    def __len__(self) -> int:
        return len(self.ids)

    def config_of(self, i: int) -> ThermostatConfig:
        return ThermostatConfig(
            kind=KIND_HYSTERESIS if self.kind[i] == 0 else KIND_ZERO_DEADBAND,
            mode=MODE_COOLING if self.mode_sign[i] > 0 else MODE_HEATING,
            setpoint=float(self.setpoint[i]),
            deadband=float(self.deadband[i]),
            t_min=float(self.t_min[i]),
            t_max=float(self.t_max[i]),
            t_desired=float(self.t_desired[i]),
        )

    def params_of(self, i: int) -> ThermalParams:
        return ThermalParams(
            r_thermal=float(self.r_thermal[i]),
            c_thermal=float(self.c_thermal[i]),
            q_hvac=float(self.q_hvac[i]),
            p_rated=float(self.p_rated[i]),
        )

    def state_of(self, i: int) -> HouseState:
        return HouseState(t_in=float(self.t_in[i]), hvac_on=bool(self.hvac_on[i]))

    def tick(self, t_out: float, h: float, at_market_boundary: bool) -> float:
        """Decide every relay, then advance physics h hours.

        Returns the aggregate electrical draw (kW) that applied during
        the tick, i.e. after the decisions.
        """
        if not h > 0:
            raise ValueError("tick length must be positive")
        if not math.isfinite(t_out):
            raise ValueError("non-finite outdoor temperature")
        return backend.population_tick(
            self.t_in,
            self.hvac_on,
            self.latched,
            self.kind,
            self.mode_sign,
            self.setpoint,
            self.deadband,
            self.r_thermal,
            self.c_thermal,
            self.q_hvac,
            self.p_rated,
            float(t_out),
            float(h),
            bool(at_market_boundary),
        )

    def aggregate_power(self) -> float:
        """Current electrical draw of the fleet in kW (sequential sum)."""
        total = 0.0
        for i in range(len(self.ids)):
            if self.hvac_on[i]:
                total += float(self.p_rated[i])
        return total


def aggregate_power(states: Iterable[HouseState], params: Iterable[ThermalParams]) -> float:
    """Electrical draw of a fleet given parallel state/param sequences."""
    total = 0.0
    for s, p in zip(states, params):
        if s.hvac_on:
            total += p.p_rated
    return total


# ----------------------------------------------------------------------
# Duty-cycle phase and load diversity
# ----------------------------------------------------------------------
#
# In steady cycling between the deadband edges the indoor temperature
# trajectory is a deterministic function of where the house sits in its
# on/off cycle, so the phase can be read directly off (t_in, hvac_on)
# without any history. Phase 0 is the start of the on run (cooling: top
# of the band), increasing through the on run then the off run.


def _cycle_band(cfg: ThermostatConfig) -> tuple[float, float]:
    if cfg.kind == KIND_HYSTERESIS:
        half = cfg.deadband / 2.0
        return cfg.setpoint - half, cfg.setpoint + half
    # the zero-deadband kind has no fixed band; use the comfort range
    # around the desired temperature as the nominal excursion
    return cfg.t_desired - 0.5, cfg.t_desired + 0.5


def cycle_phase(
    state: HouseState, params: ThermalParams, cfg: ThermostatConfig, t_out: float
) -> float:
    """Position of one house within its on/off cycle, in [0, 1).

    Exact for steady cycling at constant t_out; clamped when the state
    sits outside the band (for example right after a forced-off spell).
    Returns 0.0 when the operating point cannot cycle at all, e.g. the
    equipment cannot reach the band at this ambient temperature.
    """
    lo, hi = _cycle_band(cfg)
    rc = params.r_thermal * params.c_thermal
    if cfg.mode == MODE_COOLING:
        t_eq_on = t_out + params.q_hvac * params.r_thermal
        t_eq_off = t_out
        if not (t_eq_on < lo and t_eq_off > hi):
            return 0.0
        tau_on = rc * math.log((hi - t_eq_on) / (lo - t_eq_on))
        tau_off = rc * math.log((t_eq_off - lo) / (t_eq_off - hi))
        t = min(max(state.t_in, lo), hi)
        if state.hvac_on:
            prog = rc * math.log((hi - t_eq_on) / (t - t_eq_on)) / tau_on
        else:
            prog = rc * math.log((t_eq_off - lo) / (t_eq_off - t)) / tau_off
    else:
        t_eq_on = t_out + params.q_hvac * params.r_thermal
        t_eq_off = t_out
        if not (t_eq_on > hi and t_eq_off < lo):
            return 0.0
        tau_on = rc * math.log((t_eq_on - lo) / (t_eq_on - hi))
        tau_off = rc * math.log((hi - t_eq_off) / (lo - t_eq_off))
        t = min(max(state.t_in, lo), hi)
        if state.hvac_on:
            prog = rc * math.log((t_eq_on - lo) / (t_eq_on - t)) / tau_on
        else:
            prog = rc * math.log((hi - t_eq_off) / (t - t_eq_off)) / tau_off
    prog = min(max(prog, 0.0), 1.0)
    duty = tau_on / (tau_on + tau_off)
    phase = prog * duty if state.hvac_on else duty + prog * (1.0 - duty)
    return phase % 1.0


def state_from_phase(
    phase: float, params: ThermalParams, cfg: ThermostatConfig, t_out: float
) -> HouseState:
    """Inverse of cycle_phase: synthesize the state at a given phase."""
    if not 0.0 <= phase < 1.0:
        phase = phase % 1.0
    lo, hi = _cycle_band(cfg)
    rc = params.r_thermal * params.c_thermal
    if cfg.mode == MODE_COOLING:
        t_eq_on = t_out + params.q_hvac * params.r_thermal
        t_eq_off = t_out
        if not (t_eq_on < lo and t_eq_off > hi):
            return HouseState(t_in=(lo + hi) / 2.0, hvac_on=False)
        tau_on = rc * math.log((hi - t_eq_on) / (lo - t_eq_on))
        tau_off = rc * math.log((t_eq_off - lo) / (t_eq_off - hi))
        duty = tau_on / (tau_on + tau_off)
        if phase < duty:
            elapsed = (phase / duty) * tau_on
            t = t_eq_on + (hi - t_eq_on) * math.exp(-elapsed / rc)
            return HouseState(t_in=t, hvac_on=True)
        elapsed = ((phase - duty) / (1.0 - duty)) * tau_off
        t = t_eq_off + (lo - t_eq_off) * math.exp(-elapsed / rc)
        return HouseState(t_in=t, hvac_on=False)
    t_eq_on = t_out + params.q_hvac * params.r_thermal
    t_eq_off = t_out
    if not (t_eq_on > hi and t_eq_off < lo):
        return HouseState(t_in=(lo + hi) / 2.0, hvac_on=False)
    tau_on = rc * math.log((t_eq_on - lo) / (t_eq_on - hi))
    tau_off = rc * math.log((hi - t_eq_off) / (lo - t_eq_off))
    duty = tau_on / (tau_on + tau_off)
    if phase < duty:
        elapsed = (phase / duty) * tau_on
        t = t_eq_on + (lo - t_eq_on) * math.exp(-elapsed / rc)
        return HouseState(t_in=t, hvac_on=True)
    elapsed = ((phase - duty) / (1.0 - duty)) * tau_off
    t = t_eq_off + (hi - t_eq_off) * math.exp(-elapsed / rc)
    return HouseState(t_in=t, hvac_on=False)


def diversity_from_phases(phases: Iterable[float]) -> float:
    """Load diversity of a set of cycle phases.

    1 minus the magnitude of the mean unit phasor: 0.0 when every house
    sits at the same phase, approaching 1.0 for a uniform spread.
    """
    phases = list(phases)
    if not phases:
        raise ValueError("no phases given")
    zs = np.exp(2j * np.pi * np.asarray(phases, dtype=np.float64))
    return float(1.0 - abs(zs.mean()))


def diversity_metric(pop: Population, t_out: float) -> float:
    """Diversity of a population, phases read from current states."""
    phases = [
        cycle_phase(pop.state_of(i), pop.params_of(i), pop.config_of(i), t_out)
        for i in range(len(pop))
    ]
    return diversity_from_phases(phases)


def curtailment_experiment(
    pop: Population,
    t_out: float,
    span_h: float,
    tick_h: float,
    off_start_h: float | None = None,
    off_end_h: float | None = None,
) -> dict[str, np.ndarray]:
    """Run a population open loop, optionally forcing HVAC off for a spell.

    Mutates pop in place and returns per-tick traces of aggregate power,
    diversity and mean indoor temperature. The forced-off window
    [off_start_h, off_end_h) models a curtailment or outage; relays are
    released afterwards and the fleet recovers on its own.
    """
    n_ticks = int(round(span_h / tick_h))
    power = np.zeros(n_ticks)
    diversity = np.zeros(n_ticks)
    mean_t = np.zeros(n_ticks)
    for k in range(n_ticks):
        t_h = k * tick_h
        forced = (
            off_start_h is not None
            and off_end_h is not None
            and off_start_h <= t_h < off_end_h
        )
        pop.latched[:] = 1 if forced else 0
        power[k] = pop.tick(t_out, tick_h, at_market_boundary=True)
        diversity[k] = diversity_metric(pop, t_out)
        mean_t[k] = float(pop.t_in.mean())
    pop.latched[:] = 0
    return {"power_kw": power, "diversity": diversity, "mean_t_in": mean_t}
