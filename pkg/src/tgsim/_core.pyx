# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled population tick kernel.

Mirrors _core_py.population_tick expression for expression. The build
disables floating point contraction so multiply-add sequences round
exactly like the interpreter's, keeping the two backends bit-identical.
"""

from libc.math cimport exp


def population_tick(
    double[::1] t_in,
    unsigned char[::1] hvac_on,
    unsigned char[::1] latched,
    unsigned char[::1] kind,
    signed char[::1] mode_sign,
    double[::1] setpoint,
    double[::1] deadband,
    double[::1] r_thermal,
    double[::1] c_thermal,
    double[::1] q_hvac,
    double[::1] p_rated,
    double t_out,
    double h,
    bint at_boundary,
):
    """Decide every relay then advance physics; returns aggregate kW."""
    cdef Py_ssize_t n = t_in.shape[0]
    cdef Py_ssize_t i
    cdef double total = 0.0
    cdef double t, sp, half, r, q, t_eq, t_new
    cdef bint on
    for i in range(n):
        t = t_in[i]
        on = hvac_on[i] != 0
        if latched[i]:
            on = False
        elif kind[i] == 0:  # hysteresis
            sp = setpoint[i]
            half = deadband[i] / 2.0
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
            sp = setpoint[i]
            if mode_sign[i] > 0:
                on = t > sp
            else:
                on = t < sp
        r = r_thermal[i]
        q = q_hvac[i] if on else 0.0
        t_eq = t_out + q * r
        t_new = t_eq + (t - t_eq) * exp(-h / (r * c_thermal[i]))
        t_in[i] = t_new
        hvac_on[i] = 1 if on else 0
        if on:
            total += p_rated[i]
    return total
