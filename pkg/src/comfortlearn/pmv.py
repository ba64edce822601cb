"""Steady-state heat-balance comfort index (PMV) and its class mapping.

Implements the classic seven-variable comfort model for seated/standing
indoor conditions with zero external work: water vapour pressure from an
Antoine-type fit, clothing surface temperature from a damped fixed-point
iteration, then the six heat-loss terms weighted by the metabolic
sensitivity coefficient.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dataset import ComfortRecord, SensationClass

__all__ = [
    "PmvInput",
    "ConvergenceError",
    "compute_pmv",
    "pmv_class",
    "pmv_baseline_predict",
]

#: Iteration cap for the clothing-temperature fixed point.
MAX_ITERATIONS = 150
#: Convergence threshold on the t_cl iterate, in units of (K/100);
#: corresponds to a clothing-temperature change below 1e-4 degC.
TOLERANCE = 1.0e-6

_LIMITS = {
    "ta": (0.0, 50.0),
    "tr": (0.0, 60.0),
    "vel": (0.0, 5.0),
    "rh": (0.0, 100.0),
    "met": (0.5, 10.0),
    "clo": (0.0, 4.0),
}


class ConvergenceError(ArithmeticError):
    """Clothing-temperature iteration failed to settle within the cap."""


@dataclass(frozen=True)
class PmvInput:
    """The six environmental/personal factors the index depends on.

    ta: air temperature [degC]; tr: mean radiant temperature [degC];
    vel: relative air velocity [m/s]; rh: relative humidity [%];
    met: metabolic rate [met]; clo: clothing insulation [clo].
    """

    ta: float
    tr: float
    vel: float
    rh: float
    met: float
    clo: float

    def __post_init__(self):
        for name, (lo, hi) in _LIMITS.items():
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value)):
                raise ValueError(f"{name}={value!r} is not a finite number")
            if not lo <= value <= hi:
                raise ValueError(f"{name}={value!r} outside [{lo}, {hi}]")


def compute_pmv(inp: PmvInput) -> float:
    """Predicted mean vote for one set of conditions.

    Raises :class:`ConvergenceError` if the clothing-surface-temperature
    fixed point does not converge within :data:`MAX_ITERATIONS` steps, and
    ``ArithmeticError`` if a non-finite value appears.
    """
    ta, tr, vel, rh, met, clo = inp.ta, inp.tr, inp.vel, inp.rh, inp.met, inp.clo

    pa = rh * 10.0 * math.exp(16.6536 - 4030.183 / (ta + 235.0))  # vapour pressure [Pa]
    icl = 0.155 * clo  # clothing thermal resistance [m2K/W]
    m = met * 58.15  # metabolic rate [W/m2]
    mw = m  # metabolic rate minus external work; work term is zero here

    if icl <= 0.078:
        fcl = 1.0 + 1.29 * icl
    else:
        fcl = 1.05 + 0.645 * icl

    hcf = 12.1 * math.sqrt(vel)  # forced-convection coefficient
    taa = ta + 273.0
    tra = tr + 273.0

    # fixed point for clothing surface temperature, iterate on x = t_cl/100
    tcla = taa + (35.5 - ta) / (3.5 * icl + 0.1)
    p1 = icl * fcl
    p2 = p1 * 3.96
    p3 = p1 * 100.0
    p4 = p1 * taa
    p5 = 308.7 - 0.028 * mw + p2 * (tra / 100.0) ** 4
    xn = tcla / 100.0
    xf = tcla / 50.0
    hc = hcf
    iterations = 0
    while abs(xn - xf) > TOLERANCE:
        xf = (xf + xn) / 2.0  # bisection damping keeps the iteration stable
        hcn = 2.38 * abs(100.0 * xf - taa) ** 0.25
        hc = max(hcf, hcn)
        xn = (p5 + p4 * hc - p2 * xf**4) / (100.0 + p3 * hc)
        iterations += 1
        if iterations > MAX_ITERATIONS:
            raise ConvergenceError(
                f"clothing temperature did not converge in {MAX_ITERATIONS} "
                f"iterations for {inp}"
            )
    tcl = 100.0 * xn - 273.0

    hl1 = 3.05e-3 * (5733.0 - 6.99 * mw - pa)  # skin diffusion
    hl2 = 0.42 * (mw - 58.15) if mw > 58.15 else 0.0  # sweat evaporation
    hl3 = 1.7e-5 * m * (5867.0 - pa)  # latent respiration
    hl4 = 0.0014 * m * (34.0 - ta)  # dry respiration
    hl5 = 3.96 * fcl * (xn**4 - (tra / 100.0) ** 4)  # radiation
    hl6 = fcl * hc * (tcl - ta)  # convection

    ts = 0.303 * math.exp(-0.036 * m) + 0.028  # sensitivity coefficient
    pmv = ts * (mw - hl1 - hl2 - hl3 - hl4 - hl5 - hl6)
    if not math.isfinite(pmv):
        raise ArithmeticError(f"non-finite index value for {inp}")
    return pmv


def pmv_class(score: float) -> SensationClass:
    """Map an index value to the merged five-point sensation scale.

    Thresholds are checked coldest first; the first matching band wins, so
    a score exactly on a boundary belongs to the colder band.
    """
    if not math.isfinite(score):
        raise ValueError(f"non-finite score {score!r}")
    if score <= -1.5:
        return SensationClass(-2)
    if score <= -0.5:
        return SensationClass(-1)
    if score <= 0.5:
        return SensationClass(0)
    if score <= 1.5:
        return SensationClass(1)
    return SensationClass(2)


#: Record fields feeding the index, in :class:`PmvInput` argument order.
_RECORD_FIELDS = ("indoor_at", "indoor_mrt", "indoor_av", "indoor_rh", "met", "clo")


def pmv_baseline_predict(records: Sequence[ComfortRecord]) -> np.ndarray:
    """Class predictions for records from the heat-balance index alone.

    Needs no training data. Every record must carry the six factors
    (air/radiant temperature, air speed, humidity, met, clo).
    """
    out = np.empty(len(records), dtype=np.int64)
    for i, r in enumerate(records):
        values = [r.feature_value(name) for name in _RECORD_FIELDS]
        missing = [n for n, v in zip(_RECORD_FIELDS, values) if v is None]
        if missing:
            raise ValueError(f"record {i} lacks {missing}; the index needs all "
                             "six heat-balance factors")
        ta, tr, vel, rh, met, clo = values
        out[i] = int(pmv_class(compute_pmv(PmvInput(ta, tr, vel, rh, met, clo))))
    return out
