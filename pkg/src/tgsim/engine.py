"""Scenario execution: the nested-cadence simulation loop and artifacts.

One run advances four nested clocks. Every balancing tick (4 s) the
swing dynamics, control error, regulation split and shedding logic
update. Every device tick (60 s) the thermostat fleet decides and the
thermal states advance. Every market interval (300 s) bids are
collected, each feeder's double auction clears against supply anchored
at the scheduled hourly price, setpoints respond to the clearing price
and deviations settle. Every schedule interval (3600 s) the active
hourly position changes; whole-day schedules are fixed at day
boundaries from availability feedback (bootstrap estimates on day one).

All randomness flows from two named streams spawned off the scenario
seed: one for population synthesis, one for shedding draws. Identical
(config, seed) pairs produce byte-identical artifacts; float columns
are serialised with repr so the round trip is lossless.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .auction import (
    SIDE_BUY,
    FeederSupplySpec,
    Order,
    Segment,
    StepCurve,
    build_demand_curve,
    build_feeder_supply,
    clear_and_allocate,
    clear_area,
)
from .bidding import (
    PriceStats,
    StorageState,
    apply_clearing_to_storage,
    setpoint_from_price,
    storage_bids,
    thermostat_bid,
)
from .config import ScenarioConfig
from .frequency import (
    nerc_ace,
    regulation_command,
    smooth_ace,
    split_regulation,
    swing_step,
    time_correction_offset,
    time_error_step,
    ufls_check,
)
from .hierarchy import (
    Schedule,
    availability_feedback,
    feeder_reference,
    reference_mode,
    scarcity_rent,
    schedule_hourly,
    settle,
)
from .spectral import ingest_series
from .thermal import (
    MODE_COOLING,
    Population,
    ThermalParams,
    ThermostatConfig,
    diversity_metric,
    state_from_phase,
)


def _fmt(x: float) -> str:
    v = float(x)
    if v == 0.0:
        v = 0.0  # fold -0.0 so ledgers never show a signed zero
    return repr(v)


@dataclass
class RunArtifacts:
    out_dir: Path
    manifest: dict
    summary: dict

    @property
    def manifest_path(self) -> Path:
        return self.out_dir / "manifest.json"


@dataclass
class _FeederState:
    spec: object
    pop: Population
    stats: PriceStats
    market_setpoint: np.ndarray
    reg_offset: np.ndarray
    house_power_kw: float = 0.0
    cleared_kw: float = 0.0
    import_kw: float = 0.0
    storage_net_kw: float = 0.0
    sched_kw: float = 0.0
    armed_ids: list = field(default_factory=list)
    id_to_idx: dict = field(default_factory=dict)


def _steady_duty(t_out: float, r: float, c: float, q: float, lo: float, hi: float, mode: str) -> float:
    """Fraction of time the equipment runs in steady cycling, clamped."""
    if mode == MODE_COOLING:
        t_eq_on = t_out + q * r
        if not (t_eq_on < lo and t_out > hi):
            return 0.0 if t_out <= hi else 1.0
        tau_on = math.log((hi - t_eq_on) / (lo - t_eq_on))
        tau_off = math.log((t_out - lo) / (t_out - hi))
    else:
        t_eq_on = t_out + q * r
        if not (t_eq_on > hi and t_out < lo):
            return 0.0 if t_out >= lo else 1.0
        tau_on = math.log((t_eq_on - lo) / (t_eq_on - hi))
        tau_off = math.log((hi - t_out) / (lo - t_out))
    return tau_on / (tau_on + tau_off)


class SimulationRun:
    """One scenario execution; call run() once."""

    def __init__(self, cfg: ScenarioConfig, base_dir: Path | None = None):
        self.cfg = cfg
        self.base_dir = Path(base_dir) if base_dir else Path.cwd()
        ss = np.random.SeedSequence(cfg.seed)
        pop_seq, ufls_seq = ss.spawn(2)
        self.rng_pop = np.random.default_rng(pop_seq)
        self.rng_ufls = np.random.default_rng(ufls_seq)
        self._build_outdoor()
        self._build_feeders()
        self._build_storage()
        sim = cfg.simulation
        self.hours_per_day = max(1, 86400 // sim.schedule_interval_s)
        self.curve_history: dict[tuple[int, int], dict[str, list[StepCurve]]] = {}
        self.schedule_by_day: dict[int, Schedule] = {}
        # balancing state
        self.delta_f = 0.0
        self.ace_filtered = 0.0
        self.reg_gen_mw = 0.0
        self.reg_agg_mw = 0.0
        self.time_error_s = 0.0
        self.last_shed_t: float | None = None
        self.above_threshold_since: float | None = None
        self._buyer_paid = 0.0
        self._seller_received = 0.0
        self._rent_total = 0.0
        self._last_shed_kw = 0.0

    # ------------------------------------------------------------------
    # construction
    # ------------------------------------------------------------------

    def _build_outdoor(self) -> None:
        src = self.cfg.outdoor_temp_c
        if isinstance(src, (int, float)):
            self._t_out_const = float(src)
            self._t_out_series = None
            return
        series = ingest_series(self.base_dir / src, units="degC")
        offsets = np.arange(len(series)) * series.period_s
        start_lag = (self.cfg.simulation.start - series.start).total_seconds()
        self._t_out_series = (offsets - start_lag, series.values)
        self._t_out_const = None

    def t_out(self, t_s: float) -> float:
        if self._t_out_series is None:
            return self._t_out_const
        xs, ys = self._t_out_series
        return float(np.interp(t_s, xs, ys))

    def da_price_for_hour(self, hour_abs: int) -> float:
        da = self.cfg.da_price
        return da[hour_abs % len(da)]

    def _house_cfg(self, i_setpoint: float) -> ThermostatConfig:
        pop = self.cfg.population
        return ThermostatConfig(
            kind=pop.thermostat,
            mode=pop.mode,
            setpoint=i_setpoint,
            deadband=pop.deadband,
            t_min=pop.t_min,
            t_max=pop.t_max,
            t_desired=pop.t_desired,
        )

    def _build_feeders(self) -> None:
        cfgp = self.cfg.population
        sigma_rc = math.log1p(cfgp.spread)
        sigma_k = math.log1p(cfgp.comfort_k_spread)
        t0 = self.t_out(0.0)
        self.feeders: dict[str, _FeederState] = {}
        for fspec in self.cfg.feeders:
            ids, params, configs, states, ks = [], [], [], [], []
            for j in range(fspec.houses):
                z = self.rng_pop.standard_normal(3)
                u = self.rng_pop.random()
                r = cfgp.r_median * math.exp(sigma_rc * z[0])
                c = cfgp.c_median * math.exp(sigma_rc * z[1])
                k = cfgp.comfort_k * math.exp(sigma_k * z[2]) if cfgp.comfort_k > 0 else 0.0
                par = ThermalParams(r_thermal=r, c_thermal=c, q_hvac=cfgp.q_hvac, p_rated=cfgp.p_rated)
                tcfg = self._house_cfg(cfgp.t_desired)
                phase = u if cfgp.initial == "steady" else 0.0
                st = state_from_phase(phase, par, tcfg, t0)
                ids.append(f"{fspec.feeder_id}_h{j:04d}")
                params.append(par)
                configs.append(tcfg)
                states.append(st)
                ks.append(k)
            pop = Population(ids, params, configs, states, ks)
            n_armed = math.ceil(self.cfg.area.ufls.armed_fraction * fspec.houses)
            fs = _FeederState(
                spec=fspec,
                pop=pop,
                stats=PriceStats(
                    window=self.cfg.market.stats_window,
                    prior_mean=self.cfg.market.prior_mean,
                    prior_sigma=self.cfg.market.prior_sigma,
                ),
                market_setpoint=pop.setpoint.copy(),
                reg_offset=np.zeros(len(pop)),
                armed_ids=ids[:n_armed],
                id_to_idx={hid: i for i, hid in enumerate(ids)},
            )
            fs.house_power_kw = pop.aggregate_power()
            self.feeders[fspec.feeder_id] = fs

    def _build_storage(self) -> None:
        self.storage_states: dict[str, StorageState] = {}
        self.storage_power: dict[str, tuple[float, float]] = {}
        for placement in self.cfg.storage:
            self.storage_states[placement.spec.device_id] = StorageState(placement.soc0_kwh)
            self.storage_power[placement.spec.device_id] = (0.0, 0.0)

    # ------------------------------------------------------------------
    # scheduling
    # ------------------------------------------------------------------

    def _bootstrap_forecast(self, hour_abs: int) -> dict[str, StepCurve]:
        cfgp = self.cfg.population
        mkt = self.cfg.market
        t_out = self.t_out(hour_abs * 3600.0)
        if cfgp.thermostat == "hysteresis":
            lo = cfgp.t_desired - cfgp.deadband / 2.0
            hi = cfgp.t_desired + cfgp.deadband / 2.0
        else:
            lo, hi = cfgp.t_desired - 0.5, cfgp.t_desired + 0.5
        duty = _steady_duty(t_out, cfgp.r_median, cfgp.c_median, cfgp.q_hvac, lo, hi, cfgp.mode)
        curves = {}
        for fspec in self.cfg.feeders:
            segs = []
            if fspec.base_load_kw > 0:
                segs.append(Segment(mkt.price_cap, fspec.base_load_kw, f"{fspec.feeder_id}_base"))
            resp = fspec.houses * cfgp.p_rated * duty
            if resp > 0:
                segs.append(Segment(mkt.prior_mean, resp, f"{fspec.feeder_id}_resp"))
            curves[fspec.feeder_id] = StepCurve(SIDE_BUY, segs)
        return curves

    def _forecast_for(self, day: int, hour_of_day: int) -> dict[str, StepCurve]:
        hour_abs = day * self.hours_per_day + hour_of_day
        if day == 0:
            return self._bootstrap_forecast(hour_abs)
        prior = self.curve_history.get((day - 1, hour_of_day))
        if not prior:
            return self._bootstrap_forecast(hour_abs)
        return {
            fid: availability_feedback(curves) if curves else StepCurve(SIDE_BUY, [])
            for fid, curves in sorted(prior.items())
        }

    def _schedule_for_day(self, day: int) -> Schedule:
        if day in self.schedule_by_day:
            return self.schedule_by_day[day]
        area = self.cfg.area
        mkt = self.cfg.market
        forecasts = [self._forecast_for(day, h) for h in range(self.hours_per_day)]
        da_prices = [
            self.da_price_for_hour(day * self.hours_per_day + h) for h in range(self.hours_per_day)
        ]
        sched = schedule_hourly(
            forecasts,
            da_prices,
            area.renewables_price,
            area.renewables_capacity_mw * 1000.0,
            area.bulk_capacity_mw * 1000.0,
            mkt.price_floor,
            mkt.price_cap,
        )
        self.schedule_by_day[day] = sched
        return sched

    # ------------------------------------------------------------------
    # main loop
    # ------------------------------------------------------------------

    def run(self, out_dir: Path) -> RunArtifacts:
        cfg = self.cfg
        sim = cfg.simulation
        area = cfg.area
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)

        h_agc = sim.agc_tick_s
        n_ticks = sim.span_s // h_agc
        agc_rows: list[str] = []
        market_rows: list[str] = []
        load_rows: list[str] = []
        settle_rows: list[str] = []
        house_rows: list[str] = []
        prices_seen: list[float] = []
        peak_load = 0.0
        energy_kwh = 0.0
        ufls_events = 0
        ufls_total_kw = 0.0
        feeder_prices: dict[str, list[float]] = {fid: [] for fid in self.feeders}

        events_path = out_dir / "events.jsonl"
        with open(events_path, "w") as events:

            def emit(record: dict) -> None:
                events.write(json.dumps(record, separators=(",", ":")) + "\n")

            for k in range(n_ticks):
                t = k * h_agc
                day = t // 86400
                hour_of_day = (t % 86400) // sim.schedule_interval_s
                interval_index = t // sim.market_interval_s

                if t % sim.schedule_interval_s == 0:
                    sched = self._schedule_for_day(day)
                    entry = sched.entry_for(hour_of_day)
                    if t % 86400 == 0:
                        emit({"t": t, "type": "schedule", "day": day,
                              "prices": [e.price for e in sched.entries]})
                    for fid, fs in self.feeders.items():
                        fs.sched_kw = entry.feeder_kw.get(fid, 0.0)
                    self._hour_entry = entry

                if t % sim.market_interval_s == 0:
                    self._market_phase(
                        t, interval_index, day, hour_of_day, emit,
                        market_rows, settle_rows, prices_seen, feeder_prices,
                    )

                if t % sim.device_tick_s == 0:
                    at_boundary = t % sim.market_interval_s == 0
                    total_kw = self._device_phase(t, at_boundary, load_rows, house_rows)
                    peak_load = max(peak_load, total_kw)
                    energy_kwh += total_kw * (sim.device_tick_s / 3600.0)

                self._agc_phase(t, agc_rows, emit)
                shed_now = self._last_shed_kw
                if shed_now > 0:
                    ufls_events += 1
                    ufls_total_kw += shed_now

        freq_nom = area.freq_nominal_hz
        final_div = {
            fid: (diversity_metric(fs.pop, self.t_out(sim.span_s)) if len(fs.pop) else None)
            for fid, fs in self.feeders.items()
        }
        price_mean = (sum(prices_seen) / len(prices_seen)) if prices_seen else None
        price_sigma = None
        if prices_seen:
            var = sum((p - price_mean) ** 2 for p in prices_seen) / len(prices_seen)
            price_sigma = math.sqrt(var)
        summary = {
            "span_s": sim.span_s,
            "peak_load_kw": peak_load,
            "energy_kwh": energy_kwh,
            "price_mean": price_mean,
            "price_sigma": price_sigma,
            "price_max": max(prices_seen) if prices_seen else None,
            "price_min": min(prices_seen) if prices_seen else None,
            "price_floor": cfg.market.price_floor,
            "price_cap": cfg.market.price_cap,
            "price_alternations": {
                fid: self._alternations(series) for fid, series in feeder_prices.items()
            },
            "ufls_events": ufls_events,
            "ufls_total_kw": ufls_total_kw,
            "final_diversity": final_div,
            "final_freq_hz": freq_nom + self.delta_f,
            "time_error_s": self.time_error_s,
            "settlement": {
                "buyer_payments": self._buyer_paid,
                "seller_receipts": self._seller_received,
                "scarcity_rent": self._rent_total,
                "residual": self._buyer_paid - self._seller_received - self._rent_total,
            },
        }

        self._write(out_dir / "frequency.csv",
                    "t_s,freq_hz,delta_f_hz,ace_raw_mw,ace_filtered_mw,"
                    "reg_to_aggregators_mw,reg_to_generators_mw,ufls_shed_kw,time_error_s",
                    agc_rows)
        self._write(out_dir / "markets.csv",
                    "t_s,market_id,price,quantity_kw,n_buy_orders,n_sell_orders,"
                    "mode,reference_kw,scarcity_rent",
                    market_rows)
        self._write(out_dir / "load.csv",
                    "t_s,load_kw,responsive_kw,base_kw,storage_kw,diversity,mean_t_in_c",
                    load_rows)
        self._write(out_dir / "settlement.csv",
                    "interval,t_s,participant,role,da_energy_kwh,da_price,"
                    "rt_deviation_kwh,rt_price,payment,scarcity_rent",
                    settle_rows)
        if cfg.house_trace:
            self._write(out_dir / "houses.csv", "t_s,house_id,t_in_c,hvac_on,setpoint_c", house_rows)

        (out_dir / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
        manifest = {
            "config_sha256": cfg.config_hash(),
            "seed": cfg.seed,
            "span_s": sim.span_s,
            "start": sim.start.isoformat(),
            "version": __version__,
            "files": sorted(
                p.name for p in out_dir.iterdir() if p.name not in ("manifest.json",)
            ),
        }
        (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
        return RunArtifacts(out_dir=out_dir, manifest=manifest, summary=summary)

    @staticmethod
    def _write(path: Path, header: str, rows: list[str]) -> None:
        with open(path, "w") as fh:
            fh.write(header + "\n")
            for row in rows:
                fh.write(row + "\n")

    def _alternations(self, prices: list[float]) -> int:
        from .report import price_alternations

        mkt = self.cfg.market
        return price_alternations(prices, mkt.price_floor, mkt.price_cap)

    # ------------------------------------------------------------------
    # phases
    # ------------------------------------------------------------------

    def _market_phase(
        self, t, interval_index, day, hour_of_day, emit,
        market_rows, settle_rows, prices_seen, feeder_prices,
    ) -> None:
        cfg = self.cfg
        mkt = cfg.market
        area = cfg.area
        entry = self._hour_entry
        interval_h = cfg.simulation.market_interval_s / 3600.0
        anchor = entry.price if entry.area_quantity_kw > 0 else self.da_price_for_hour(
            day * self.hours_per_day + hour_of_day
        )
        demand_curves: dict[str, StepCurve] = {}
        placements = {p.spec.device_id: p for p in cfg.storage}

        for fid, fs in sorted(self.feeders.items()):
            fspec = fs.spec
            bids: list[Order] = []
            for i, hid in enumerate(fs.pop.ids):
                if fs.pop.latched[i]:
                    continue
                order = thermostat_bid(
                    hid,
                    float(fs.pop.t_in[i]),
                    fs.pop.config_of(i),
                    float(fs.pop.comfort_k[i]),
                    fs.stats,
                    float(fs.pop.p_rated[i]),
                    mkt.price_floor,
                    mkt.price_cap,
                )
                if order is not None:
                    bids.append(order)
            if fspec.base_load_kw > 0:
                bids.append(Order(f"{fid}_base", SIDE_BUY, mkt.price_cap, fspec.base_load_kw, flexible=False))
            sells: list[Order] = []
            for sid in sorted(self.storage_states):
                placement = placements[sid]
                if placement.feeder_id != fid:
                    continue
                for order in storage_bids(placement.spec, self.storage_states[sid]):
                    (bids if order.side == SIDE_BUY else sells).append(order)

            for order in bids + sells:
                emit({"t": t, "type": "bid", "market": fid, "order": order.order_id,
                      "side": order.side, "price": order.price, "quantity": order.quantity})

            demand = build_demand_curve(bids, mkt.price_cap)
            supply_spec = FeederSupplySpec(
                wholesale_price=anchor,
                capacity_normal=fspec.capacity_kw,
                scarcity_steps=fspec.scarcity_steps,
                price_cap=mkt.price_cap,
            )
            supply = build_feeder_supply(supply_spec, sells)
            result = clear_and_allocate(demand, supply, mkt.price_floor, mkt.price_cap)
            rent = scarcity_rent(result, supply)
            demand_curves[fid] = demand
            self.curve_history.setdefault((day, hour_of_day), {}).setdefault(fid, []).append(demand)

            fs.cleared_kw = result.quantity
            fs.import_kw = sum(
                fill for oid, fill in result.accepted_sells.items() if oid.startswith("__import")
            )
            emit({"t": t, "type": "clearing", "market": fid, "price": result.price,
                  "quantity": result.quantity, "buys": len(result.accepted_buys),
                  "sells": len(result.accepted_sells), "rent": rent,
                  "marginal": result.marginal_order})
            prices_seen.append(result.price)
            feeder_prices[fid].append(result.price)

            # price response: setpoints move along the inverted bid line
            for i in range(len(fs.pop)):
                fs.market_setpoint[i] = setpoint_from_price(
                    result.price, fs.pop.config_of(i), float(fs.pop.comfort_k[i]), fs.stats
                )

            # storage dispatch from fills
            fs.storage_net_kw = 0.0
            for sid in sorted(self.storage_states):
                placement = placements[sid]
                if placement.feeder_id != fid:
                    continue
                charge = result.accepted_buys.get(f"{sid}_chg", 0.0)
                discharge = result.accepted_sells.get(f"{sid}_dis", 0.0)
                self.storage_power[sid] = (charge, discharge)
                self.storage_states[sid] = apply_clearing_to_storage(
                    placement.spec, self.storage_states[sid], charge, discharge, interval_h
                )
                fs.storage_net_kw += charge - discharge
                if discharge > 0:
                    rec = settle(sid, interval_index, 0.0, entry.price, -discharge * interval_h, result.price)
                    self._seller_received += -rec.payment
                    settle_rows.append(
                        f"{interval_index},{t},{sid},seller,{_fmt(rec.da_energy_kwh)},"
                        f"{_fmt(rec.da_price)},{_fmt(rec.rt_deviation_kwh)},{_fmt(rec.rt_price)},"
                        f"{_fmt(rec.payment)},{_fmt(0.0)}"
                    )

            # two-settlement rows: feeder buys, market maker sells
            pos_kwh = fs.sched_kw * interval_h
            actual_kwh = result.quantity * interval_h
            buyer = settle(fid, interval_index, pos_kwh, entry.price, actual_kwh, result.price)
            settle_rows.append(
                f"{interval_index},{t},{fid},buyer,{_fmt(buyer.da_energy_kwh)},"
                f"{_fmt(buyer.da_price)},{_fmt(buyer.rt_deviation_kwh)},{_fmt(buyer.rt_price)},"
                f"{_fmt(buyer.payment)},{_fmt(0.0)}"
            )
            self._buyer_paid += buyer.payment
            mm_kwh = fs.import_kw * interval_h
            mm = settle(f"{fid}__import", interval_index, pos_kwh, entry.price,
                        mm_kwh, result.price)
            rent_kwh = rent * interval_h
            mm_payment = -(mm.payment - rent_kwh)
            settle_rows.append(
                f"{interval_index},{t},{fid}__import,seller,{_fmt(-mm.da_energy_kwh)},"
                f"{_fmt(mm.da_price)},{_fmt(-(mm_kwh - pos_kwh))},{_fmt(mm.rt_price)},"
                f"{_fmt(mm_payment)},{_fmt(rent_kwh)}"
            )
            self._seller_received += -mm_payment
            self._rent_total += rent_kwh

            # operating reference blends retail with the balancing request
            shed_age = None if self.last_shed_t is None else t - self.last_shed_t
            mode = reference_mode(self.ace_filtered, fspec.ace_threshold_mw, shed_age, fspec.ufls_recency_s)
            balance_kw = fs.sched_kw + self._feeder_share(fid) * self.reg_agg_mw * 1000.0
            ref = feeder_reference(result.quantity, balance_kw, fspec.weight_normal,
                                   fspec.weight_contingency, mode)
            market_rows.append(
                f"{t},{fid},{_fmt(result.price)},{_fmt(result.quantity)},"
                f"{len(result.accepted_buys)},{len(result.accepted_sells)},"
                f"{mode},{_fmt(ref)},{_fmt(rent)}"
            )
            fs.stats.observe(result.price)

        # area-level aggregation, recorded for reporting
        merged = StepCurve(SIDE_BUY, [s for c in demand_curves.values() for s in c.segments])
        bulk_price = self.da_price_for_hour(day * self.hours_per_day + hour_of_day)
        area_result = clear_area(
            merged,
            area.renewables_price,
            area.renewables_capacity_mw * 1000.0,
            bulk_price,
            area.bulk_capacity_mw * 1000.0,
            mkt.price_floor,
            mkt.price_cap,
        )
        emit({"t": t, "type": "area_clearing", "price": area_result.price,
              "quantity": area_result.quantity})
        market_rows.append(
            f"{t},__area,{_fmt(area_result.price)},{_fmt(area_result.quantity)},"
            f"{len(merged.segments)},2,normal,{_fmt(area_result.quantity)},{_fmt(0.0)}"
        )

    def _feeder_share(self, fid: str) -> float:
        total = sum(
            float(np.sum(fs.pop.p_rated)) for fs in self.feeders.values() if len(fs.pop)
        )
        if total <= 0:
            return 0.0
        return float(np.sum(self.feeders[fid].pop.p_rated)) / total

    def _device_phase(self, t, at_boundary: bool, load_rows, house_rows) -> float:
        sim = self.cfg.simulation
        h_hours = sim.device_tick_s / 3600.0
        t_out_now = self.t_out(t)
        total = base = storage_net = resp = 0.0
        for fid, fs in sorted(self.feeders.items()):
            if len(fs.pop):
                np.clip(
                    fs.market_setpoint + fs.reg_offset,
                    fs.pop.t_min,
                    fs.pop.t_max,
                    out=fs.pop.setpoint,
                )
                fs.house_power_kw = fs.pop.tick(t_out_now, h_hours, at_boundary)
            resp += fs.house_power_kw
            base += fs.spec.base_load_kw
            storage_net += fs.storage_net_kw
            if self.cfg.house_trace and len(fs.pop):
                for i, hid in enumerate(fs.pop.ids):
                    house_rows.append(
                        f"{t},{hid},{_fmt(fs.pop.t_in[i])},{int(fs.pop.hvac_on[i])},"
                        f"{_fmt(fs.pop.setpoint[i])}"
                    )
        total = resp + base + storage_net
        divs = [
            diversity_metric(fs.pop, t_out_now) for fs in self.feeders.values() if len(fs.pop)
        ]
        div = sum(divs) / len(divs) if divs else 0.0
        temps = np.concatenate([fs.pop.t_in for fs in self.feeders.values() if len(fs.pop)]) if divs else None
        mean_t = float(temps.mean()) if temps is not None else 0.0
        load_rows.append(
            f"{t},{_fmt(total)},{_fmt(resp)},{_fmt(base)},{_fmt(storage_net)},"
            f"{_fmt(div)},{_fmt(mean_t)}"
        )
        return total

    def _agc_phase(self, t, agc_rows, emit) -> None:
        cfg = self.cfg
        area = cfg.area
        h = cfg.simulation.agc_tick_s
        self._last_shed_kw = 0.0

        load_kw = 0.0
        import_kw = 0.0
        for fs in self.feeders.values():
            load_kw += fs.house_power_kw + fs.spec.base_load_kw + fs.storage_net_kw
            import_kw += fs.import_kw
        load_mw = load_kw / 1000.0
        gen_mw = import_kw / 1000.0

        droop_mw = -area.droop_mw_per_hz * self.delta_f
        droop_gen = (1.0 - area.split.alpha) * droop_mw
        droop_load = area.split.alpha * droop_mw  # positive reduces load
        event_mw = 0.0
        for ev in area.events:
            if ev.at_s <= t and (ev.duration_s is None or t < ev.at_s + ev.duration_s):
                event_mw += ev.delta_p_mw

        delta_p = gen_mw + self.reg_gen_mw + droop_gen + event_mw - (load_mw - droop_load)
        self.delta_f = swing_step(self.delta_f, delta_p, area.swing, h)
        freq = area.freq_nominal_hz + self.delta_f

        self.time_error_s = time_error_step(self.time_error_s, freq, area.freq_nominal_hz, h)
        f_sched = area.freq_nominal_hz + time_correction_offset(
            self.time_error_s, area.time_error_threshold_s, area.time_correction_offset_hz
        )

        ace_raw = nerc_ace(0.0, area.scheduled_interchange_mw, area.bias_mw_per_01hz, freq, f_sched)
        self.ace_filtered = smooth_ace(self.ace_filtered, ace_raw, area.smoothing_tau_s, h)
        cmd = regulation_command(self.ace_filtered, area.regulation_gain, area.regulation_capacity_mw)
        to_agg, to_gen = split_regulation(cmd, area.split)
        self.reg_agg_mw = to_agg
        self.reg_gen_mw = to_gen
        self._apply_aggregator_command(to_agg)

        shed_kw = 0.0
        ufls = area.ufls
        if freq < ufls.threshold_hz:
            self.above_threshold_since = None
            shed_ids_all = []
            for fid, fs in sorted(self.feeders.items()):
                candidates = [hid for hid in fs.armed_ids if not fs.pop.latched[fs.id_to_idx[hid]]]
                shed = ufls_check(freq, ufls.threshold_hz, ufls.probability, candidates, self.rng_ufls)
                for hid in shed:
                    i = fs.id_to_idx[hid]
                    fs.pop.latched[i] = 1
                    if fs.pop.hvac_on[i]:
                        fs.pop.hvac_on[i] = 0
                        fs.house_power_kw -= float(fs.pop.p_rated[i])
                        shed_kw += float(fs.pop.p_rated[i])
                shed_ids_all.extend(shed)
            if shed_ids_all:
                self.last_shed_t = t
                self._last_shed_kw = shed_kw
                emit({"t": t, "type": "ufls", "freq_hz": freq, "count": len(shed_ids_all),
                      "shed_kw": shed_kw})
        else:
            if self.above_threshold_since is None:
                self.above_threshold_since = t
            held = any(fs.pop.latched.any() for fs in self.feeders.values())
            if held and t - self.above_threshold_since >= ufls.hold_s:
                for fs in self.feeders.values():
                    fs.pop.latched[:] = 0
                emit({"t": t, "type": "ufls_release"})

        agc_rows.append(
            f"{t},{_fmt(freq)},{_fmt(self.delta_f)},{_fmt(ace_raw)},{_fmt(self.ace_filtered)},"
            f"{_fmt(to_agg)},{_fmt(to_gen)},{_fmt(shed_kw)},{_fmt(self.time_error_s)}"
        )

    def _apply_aggregator_command(self, to_agg_mw: float) -> None:
        area = self.cfg.area
        cap = area.regulation_capacity_mw
        if cap <= 0 or to_agg_mw == 0.0:
            for fs in self.feeders.values():
                if fs.reg_offset.any():
                    fs.reg_offset[:] = 0.0
            return
        frac = min(max(to_agg_mw / cap, -1.0), 1.0)
        for fs in self.feeders.values():
            if not len(fs.pop):
                continue
            pop = fs.pop
            cooling = pop.mode_sign > 0
            if frac > 0:
                # shed load: cooling raises setpoints, heating lowers them
                room_up = pop.t_max - fs.market_setpoint
                room_dn = fs.market_setpoint - pop.t_min
                fs.reg_offset[:] = np.where(cooling, frac * room_up, -frac * room_dn)
            else:
                room_dn = fs.market_setpoint - pop.t_min
                room_up = pop.t_max - fs.market_setpoint
                fs.reg_offset[:] = np.where(cooling, frac * room_dn, -frac * room_up)


def run_scenario(cfg: ScenarioConfig, out_dir, base_dir=None) -> RunArtifacts:
    return SimulationRun(cfg, base_dir=base_dir).run(Path(out_dir))
