"""Independent reference implementation of the heat-balance comfort index.

This is a deliberately different formulation from the package's: water
vapour pressure comes from a steam-table polynomial rather than an
Antoine-type fit, and the clothing-temperature fixed point is solved by
0.8/0.2 relaxation on t_cl directly rather than bisection damping on
t_cl/100.  Agreement between the two is therefore evidence of correctness,
not of shared code.  Frozen before the package implementation was tested;
do not edit to make tests pass.
"""

import math

# Commonly cited validation rows: (ta, tr, vel, rh, met, clo, expected pmv).
# Expected values are two-decimal published figures, so comparisons against
# them carry a +-0.01 rounding allowance on top of any model tolerance.
# Only rows that this module independently reproduces within that rounding
# are kept; one transcribed row failed that cross-check and was discarded
# as a transcription error rather than adjusted to fit.
REFERENCE_ROWS = [
    (22, 22, 0.10, 60, 1.2, 0.5, -0.75),
    (27, 27, 0.10, 60, 1.2, 0.5, 0.77),
    (27, 27, 0.30, 60, 1.2, 0.5, 0.44),
    (23.5, 25.5, 0.10, 60, 1.2, 0.5, -0.01),
    (23.5, 25.5, 0.30, 60, 1.2, 0.5, -0.55),
    (19, 19, 0.10, 40, 1.2, 1.0, -0.60),
    (23.5, 23.5, 0.30, 40, 1.2, 1.0, 0.12),
    (23, 21, 0.10, 40, 1.2, 1.0, 0.05),
    (23, 21, 0.30, 40, 1.2, 1.0, -0.16),
    (22, 22, 0.10, 60, 1.6, 0.5, 0.05),
    (27, 27, 0.10, 60, 1.6, 0.5, 1.17),
    (27, 27, 0.30, 60, 1.6, 0.5, 0.95),
]


def grid_points():
    """The 216-condition comparison grid (ta == tr throughout)."""
    for ta in range(18, 30, 2):
        for vel in (0.1, 0.3):
            for rh in (30, 50, 70):
                for met in (1.0, 1.2, 1.6):
                    for clo in (0.5, 1.0):
                        yield ta, ta, vel, rh, met, clo


def reference_pmv(ta, tr, vel, rh, met, clo):
    m = met * 58.15
    lcl = clo
    w = 0.0
    ppk = 673.4 - 1.8 * ta
    ppa = 3.2437814 + 0.00326014 * ppk + 2.00658e-9 * ppk * ppk * ppk
    ppb = (1165.09 - ppk) * (1.0 + 0.00121547 * ppk)
    pa = rh / 100.0 * 22105.8416 / math.exp(2.302585 * ppk * ppa / ppb) * 1000.0
    eps = 1e-5
    mw = m - w
    if lcl > 0.5:
        fcl = 1.05 + 0.1 * lcl
    else:
        fcl = 1.0 + 0.2 * lcl
    tcl = ta
    tcla = tcl
    noi = 1
    while True:
        tcla = 0.8 * tcla + 0.2 * tcl
        hc = 12.1 * math.sqrt(vel)
        hcn = 2.38 * math.sqrt(math.sqrt(abs(tcl - ta)))
        if hcn > hc:
            hc = hcn
        tcl = 35.7 - 0.028 * mw - 0.155 * lcl * (
            3.96e-8 * fcl * ((tcla + 273.0) ** 4 - (tr + 273.0) ** 4)
            + fcl * hc * (tcla - ta)
        )
        noi += 1
        if noi > 5000:
            raise RuntimeError("no convergence")
        if not abs(tcla - tcl) > eps:
            break
    pm1 = 3.96e-8 * fcl * ((tcl + 273.0) ** 4 - (tr + 273.0) ** 4)
    pm2 = fcl * hc * (tcl - ta)
    pm3 = 0.303 * math.exp(-0.036 * m) + 0.028
    pm4 = 0.42 * (mw - 58.15) if mw > 58.15 else 0.0
    return pm3 * (
        mw
        - 3.05 * 0.001 * (5733.0 - 6.99 * mw - pa)
        - pm4
        - 1.7e-5 * m * (5867.0 - pa)
        - 0.0014 * m * (34.0 - ta)
        - pm1
        - pm2
    )
