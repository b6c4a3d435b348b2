"""Multi-level coordination: hourly schedule, dispatch blending, settlement.

Three tiers run at nested cadences. The hourly schedule clears forecast
demand against the day-ahead merit order (cheap limited renewables,
then bulk generation at the day-ahead price) and fixes financially
binding positions. Five-minute retail dispatch re-clears live bids
against feeder supply anchored at the scheduled hourly price. The
real-time tier settles only deviations from the scheduled position, the
classic two-settlement arrangement: the day-ahead leg pays the
day-ahead price, deviations pay the real-time price, and forcing real
time equal to schedule zeroes the second leg exactly.

Feeder operating targets blend the retail clearing with the balancing
request. In normal conditions the market dominates; once the control
error or a recent shed event flags a contingency the weights flip and
balancing dominates.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .auction import (
    ClearingResult,
    MARKET_MAKER_PREFIX,
    Segment,
    SIDE_BUY,
    StepCurve,
    clear_area,
    participation,
)

MODE_NORMAL = "normal"
MODE_CONTINGENCY = "contingency"


@dataclass(frozen=True)
class HourEntry:
    """Cleared day-ahead position for one hour."""

    hour_index: int
    price: float
    area_quantity_kw: float
    feeder_kw: dict[str, float]


@dataclass
class Schedule:
    entries: list[HourEntry] = field(default_factory=list)

    def entry_for(self, hour_index: int) -> HourEntry:
        return self.entries[hour_index]


def schedule_hourly(
    forecasts: Sequence[dict[str, StepCurve]],
    da_prices: Sequence[float],
    renewables_price: float,
    renewables_capacity_kw: float,
    bulk_capacity_kw: float,
    price_floor: float,
    price_cap: float,
) -> Schedule:
    """Clear each hour's forecast against the day-ahead merit order.

    forecasts holds one {feeder: demand curve} map per hour; da_prices
    gives the bulk offer price for each hour. Per-feeder positions are
    read back by evaluating each feeder's forecast curve at the cleared
    hourly price. Pure function of its inputs: scheduling twice from
    the same forecasts yields the same schedule.
    """
    if len(forecasts) != len(da_prices):
        raise ValueError("need one day-ahead price per forecast hour")
    entries = []
    for hour, (curves, bulk_price) in enumerate(zip(forecasts, da_prices)):
        merged = StepCurve(SIDE_BUY, [s for c in curves.values() for s in c.segments])
        result = clear_area(
            merged,
            renewables_price,
            renewables_capacity_kw,
            bulk_price,
            bulk_capacity_kw,
            price_floor,
            price_cap,
        )
        if result.quantity > 0:
            positions = participation(curves, result.price)
        else:
            positions = {fid: 0.0 for fid in curves}
        entries.append(
            HourEntry(
                hour_index=hour,
                price=result.price,
                area_quantity_kw=result.quantity,
                feeder_kw=positions,
            )
        )
    return Schedule(entries)


def availability_feedback(curves: Sequence[StepCurve]) -> StepCurve:
    """Mean demand curve over a lookback window of cleared intervals.

    Pointwise (quantity) average over the union of step prices: each
    interval contributes its willingness at every price, divided by the
    window length. Feeds the next day's forecast.
    """
    curves = list(curves)
    if not curves:
        raise ValueError("no curves to aggregate")
    for c in curves:
        if c.side != SIDE_BUY:
            raise ValueError("availability feedback expects demand curves")
    prices = sorted({s.price for c in curves for s in c.segments}, reverse=True)
    n = len(curves)
    segs = []
    prev_q = 0.0
    for k, p in enumerate(prices):
        q_here = sum(c.quantity_at(p) for c in curves) / n
        if q_here > prev_q:
            segs.append(Segment(p, q_here - prev_q, f"__forecast{k}"))
            prev_q = q_here
    return StepCurve(SIDE_BUY, segs)


def reference_mode(
    filtered_ace_mw: float,
    ace_threshold_mw: float,
    last_shed_age_s: float | None,
    shed_recency_s: float,
) -> str:
    """Normal unless the control error is large or a shed was recent."""
    if abs(filtered_ace_mw) > ace_threshold_mw:
        return MODE_CONTINGENCY
    if last_shed_age_s is not None and last_shed_age_s < shed_recency_s:
        return MODE_CONTINGENCY
    return MODE_NORMAL


def feeder_reference(
    retail_kw: float,
    balance_kw: float,
    weight_normal: float,
    weight_contingency: float,
    mode: str,
) -> float:
    """Blend the retail clearing with the balancing target.

    The weight applies to the retail side; its complement to balancing.
    Contingency mode swaps in the (small) contingency weight so the
    balancing target dominates.
    """
    for wgt in (weight_normal, weight_contingency):
        if not 0.0 <= wgt <= 1.0:
            raise ValueError("weights must lie in [0, 1]")
    if mode == MODE_NORMAL:
        w = weight_normal
    elif mode == MODE_CONTINGENCY:
        w = weight_contingency
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return w * retail_kw + (1.0 - w) * balance_kw


@dataclass(frozen=True)
class SettlementRecord:
    """One participant's cash flow for one interval."""

    participant: str
    interval_index: int
    da_energy_kwh: float
    da_price: float
    rt_deviation_kwh: float
    rt_price: float

    @property
    def da_payment(self) -> float:
        return self.da_energy_kwh * self.da_price

    @property
    def rt_payment(self) -> float:
        return self.rt_deviation_kwh * self.rt_price

    @property
    def payment(self) -> float:
        return self.da_payment + self.rt_payment


def settle(
    participant: str,
    interval_index: int,
    position_kwh: float,
    da_price: float,
    actual_kwh: float,
    rt_price: float,
) -> SettlementRecord:
    """Two-settlement cash flow: position at da price, deviation at rt.

    actual == position makes the real-time leg exactly zero; the
    day-ahead leg is financially binding either way.
    """
    return SettlementRecord(
        participant=participant,
        interval_index=interval_index,
        da_energy_kwh=position_kwh,
        da_price=da_price,
        rt_deviation_kwh=actual_kwh - position_kwh,
        rt_price=rt_price,
    )


def scarcity_rent(result: ClearingResult, supply: StepCurve) -> float:
    """Margin the market maker keeps on its own supply segments.

    Local sellers are paid the clearing price in full; the wholesale and
    scarcity blocks belong to the market maker, which buys at the block
    price and sells at the clearing price. The sum of those margins is
    the scarcity rent. Zero whenever the wholesale block is marginal.
    """
    price_of = {s.order_id: s.price for s in supply.segments}
    rent = 0.0
    for oid, fill in sorted(result.accepted_sells.items()):
        if oid.startswith(MARKET_MAKER_PREFIX):
            rent += (result.price - price_of[oid]) * fill
    return rent
