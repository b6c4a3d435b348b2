"""Pure-Python population tick kernel.

Fallback for when the compiled extension is unavailable. The compiled
kernel in _core.pyx mirrors this function expression for expression;
both must produce bit-identical doubles, which a test enforces. Keep
the arithmetic order in the two files in lockstep when editing either.
"""

from __future__ import annotations

import math


def population_tick(
    t_in,
    hvac_on,
    latched,
    kind,
    mode_sign,
    setpoint,
    deadband,
    r_thermal,
    c_thermal,
    q_hvac,
    p_rated,
    t_out: float,
    h: float,
    at_boundary: bool,
) -> float:
    """Decide every relay then advance physics; returns aggregate kW."""
    n = len(t_in)
    total = 0.0
    for i in range(n):
        t = float(t_in[i])
        on = hvac_on[i] != 0
        if latched[i]:
            on = False
        elif kind[i] == 0:  # hysteresis
            sp = float(setpoint[i])
            half = float(deadband[i]) / 2.0
            if mode_sign[i] > 0:  # cooling
                if t >= sp + half:
                    on = True
                elif t <= sp - half:
                    on = False
            else:  # heating
                if t <= sp - half:
                    on = True
                elif t >= sp + half:
                    on = False
        elif at_boundary:  # zero-deadband kind, market boundary only
            sp = float(setpoint[i])
            if mode_sign[i] > 0:
                on = t > sp
            else:
                on = t < sp
        r = float(r_thermal[i])
        q = float(q_hvac[i]) if on else 0.0
        t_eq = t_out + q * r
        t_new = t_eq + (t - t_eq) * math.exp(-h / (r * float(c_thermal[i])))
        t_in[i] = t_new
        hvac_on[i] = 1 if on else 0
        if on:
            total += float(p_rated[i])
    return total
