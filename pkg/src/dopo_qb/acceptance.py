"""Reference targets for the reproduced charging and discharging results.

Each ``check_*`` function takes already computed quantities and returns a
Verdict; the experiment runner and the test-suite share them so the pass/fail
lines in a run summary and in the tests use identical thresholds.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

THRESHOLD = 2.0
THRESHOLD_TOL = 1e-12

SIGNAL_CUTOFFS = (24, 28, 32, 36)
SIGNAL_CUTOFF_RANGE = (13.5, 15.5)
PUMP_CUTOFFS = (3, 5, 7, 9)
PUMP_CUTOFF_RANGE = (13.0, 15.0)

STEADY_DRIVES = (1.0, 1.5, 2.0, 2.5, 3.0)
STEADY_SLOPE, STEADY_SLOPE_REL = 2.742, 0.10
MIN_R = 0.99

EARLY_TIME = 8.0
EARLY_INCOHERENT_FRACTION = 0.05
COHERENT_PEAK_WINDOW = (8.0, 12.0)

COHERENT_DECAY, INCOHERENT_DECAY, DECAY_REL = -1.127, -2.082, 0.15
DECAY_RATIO_RANGE = (1.6, 2.1)

POWER_DRIVES = (2.2, 2.4, 2.6, 2.8, 3.0)
POWER_SLOPE, POWER_SLOPE_REL = 2.049, 0.10

LOGISTIC_DRIVES = tuple(round(2.0 + 0.1 * k, 10) for k in range(16))
LOGISTIC_A, LOGISTIC_A_REL = 8.2016, 0.10
LOGISTIC_K, LOGISTIC_K_REL = 5.4097, 0.15
LOGISTIC_X0, LOGISTIC_X0_REL = 2.3605, 0.05
DERIVATIVE_PEAK_RANGE = (2.3, 2.5)

COUPLINGS = (3.0, 6.5, 10.0, 13.5, 17.0)
STRONG_COUPLING = 10.0
SATURATED_KAPPA, SATURATED_KAPPA_TOL = 0.43, 0.05


@dataclass(frozen=True)
class Verdict:
    criterion: str
    passed: bool
    detail: str

    def line(self):
        return f"criterion {self.criterion}: {'PASS' if self.passed else 'FAIL'}  {self.detail}"


def _within(value, target, rel):
    return abs(value - target) <= rel * abs(target)


def _in(value, bounds):
    return bounds[0] <= value <= bounds[1]


def check_threshold(value):
    ok = abs(value - THRESHOLD) <= THRESHOLD_TOL
    return Verdict("1", ok, f"threshold={value!r} (target {THRESHOLD} +/- {THRESHOLD_TOL:g})")


def _check_cutoffs(label, cutoffs, steady, bounds):
    steady = [float(v) for v in steady]
    increasing = all(b > a for a, b in zip(steady, steady[1:]))
    last_ok = _in(steady[-1], bounds)
    pairs = ", ".join(f"{c}:{w:.4f}" for c, w in zip(cutoffs, steady))
    return Verdict(label, increasing and last_ok,
                   f"W_ss {pairs}; increasing={increasing}; last in {list(bounds)}={last_ok}")


def check_signal_cutoff(steady):
    return _check_cutoffs("2a", SIGNAL_CUTOFFS, steady, SIGNAL_CUTOFF_RANGE)


def check_pump_cutoff(steady):
    return _check_cutoffs("2b", PUMP_CUTOFFS, steady, PUMP_CUTOFF_RANGE)


def check_steady_law(fit):
    slope = fit.params[0]
    ok = _within(slope, STEADY_SLOPE, STEADY_SLOPE_REL) and fit.r >= MIN_R
    return Verdict("3", ok, f"slope={slope:.4f} (target {STEADY_SLOPE} +/- 10%), |r|={fit.r:.4f}")


def check_components(times, w_c, w_i, first_peak):
    """``first_peak`` is ``(t, value, is_boundary)`` of the coherent part."""
    times, w_c, w_i = map(np.asarray, (times, w_c, w_i))
    early = times < EARLY_TIME
    limit = EARLY_INCOHERENT_FRACTION * float(w_c.max())
    w_i_early = float(w_i[early].max())
    t_pk, _, boundary = first_peak
    ok_early = w_i_early < limit
    ok_peak = (not boundary) and _in(t_pk, COHERENT_PEAK_WINDOW)
    return Verdict("4", ok_early and ok_peak,
                   f"max W_i(t<8)={w_i_early:.4f} vs limit {limit:.4f}; "
                   f"first W_c max at t={t_pk:.2f} (window {list(COHERENT_PEAK_WINDOW)})")


def check_decay(fit_c, fit_i):
    sc, si = fit_c.params[0], fit_i.params[0]
    ratio = abs(si / sc) if sc else float("inf")
    ok = (_within(sc, COHERENT_DECAY, DECAY_REL) and _within(si, INCOHERENT_DECAY, DECAY_REL)
          and _in(ratio, DECAY_RATIO_RANGE))
    return Verdict("5", ok, f"coherent slope={sc:.4f} (target {COHERENT_DECAY}), incoherent "
                            f"slope={si:.4f} (target {INCOHERENT_DECAY}), ratio={ratio:.3f}")


def check_power_law(fit):
    slope = fit.params[0]
    ok = _within(slope, POWER_SLOPE, POWER_SLOPE_REL) and fit.r >= MIN_R
    return Verdict("6", ok, f"slope={slope:.4f} (target {POWER_SLOPE} +/- 10%), |r|={fit.r:.4f}")


def check_logistic(fit, derivative_peak):
    a, k, x0 = fit.params
    ok = (_within(a, LOGISTIC_A, LOGISTIC_A_REL) and _within(k, LOGISTIC_K, LOGISTIC_K_REL)
          and _within(x0, LOGISTIC_X0, LOGISTIC_X0_REL) and _in(derivative_peak, DERIVATIVE_PEAK_RANGE))
    return Verdict("7", ok, f"A={a:.4f} k={k:.4f} x0={x0:.4f}; derivative peak at "
                            f"{derivative_peak:.2f}")


def check_discharge(couplings, peaks):
    peaks = [float(v) for v in peaks]
    monotone = all(b >= a for a, b in zip(peaks, peaks[1:]))
    strong = [v for g, v in zip(couplings, peaks) if g >= STRONG_COUPLING]
    saturated = bool(strong) and all(abs(v - SATURATED_KAPPA) <= SATURATED_KAPPA_TOL for v in strong)
    pairs = ", ".join(f"{g:g}:{v:.4f}" for g, v in zip(couplings, peaks))
    return Verdict("8", monotone and saturated,
                   f"peak kappa_a {pairs}; monotone={monotone}; strong-coupling within "
                   f"{SATURATED_KAPPA}+/-{SATURATED_KAPPA_TOL}={saturated}")
