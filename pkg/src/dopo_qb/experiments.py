"""Experiment catalog: charging sweeps, switch-off decay and discharge runs.

An experiment turns an ExperimentConfig into an Outcome holding CSV tables,
summary entries and acceptance verdicts.  Writing files is left to the CLI.
Charging runs are memoized per Runner, so experiments executed on the same
Runner share identical runs.
"""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import acceptance as acc
from . import fock
from .dopo import TOP_LEVEL_MAX, charge, continue_charge, threshold
from .errors import NotConvergedError, TruncationWarning
from .fit import LOG_FLOOR, derivative, log_linear_fit, logistic_fit, peak, steady_value
from .load import discharge

CHARGE_COLUMNS = ("t", "W", "W_c", "W_i", "P", "n_s", "n_p", "re_alpha_s", "im_alpha_s")
DISCHARGE_COLUMNS = ("t", "kappa_s", "kappa_a")
FIT_COLUMNS = ("name", "value")

CATALOG = {
    "fig2a": "Fig. 2(a): steady ergotropy vs signal cutoff N_s in {24, 28, 32, 36}, N_p = 9",
    "fig2b": "Fig. 2(b): steady ergotropy vs pump cutoff N_p in {3, 5, 7, 9}, N_s = 32",
    "fig3": "Fig. 3: steady ergotropy vs drive, log-linear fit over F_p in {1.0 .. 3.0}",
    "fig4": "Fig. 4: coherent and incoherent ergotropy during charging at F_p = 3",
    "fig5": "Fig. 5: decay of both components after the drive is switched off",
    "fig6": "Fig. 6: average charging power and its peak vs drive, F_p in {2.2 .. 3.0}",
    "fig7": "Fig. 7: steady coherent ergotropy vs drive with logistic fit, F_p in [2.0, 3.5]",
    "fig8": "Fig. 8: discharge into a two-level load for g in {3, 6.5, 10, 13.5, 17}",
    "custom": "single charging run, or a drive sweep from [custom] f_p_values",
}

# Runs that have not settled by t_end are extended one fit window at a time,
# up to this multiple of t_end, before steady-state extraction gives up.
SETTLE_LIMIT = 4.0

# Coherent-ergotropy maxima below this are roundoff on a vanishing series.
COMPONENT_PEAK_FLOOR = 1e-9


@dataclass(frozen=True)
class ChargeSpec:
    """A charging run; with ``t_off`` set the drive is switched off at ``t_off``."""

    params: object
    t_end: float
    sample_dt: float
    opts: object
    t_off: float | None = None


@dataclass
class Outcome:
    experiment: str
    tables: dict = field(default_factory=dict)
    summary: list = field(default_factory=list)
    verdicts: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    def add_table(self, name, columns, rows):
        self.tables[name] = (tuple(columns), [tuple(r) for r in rows])


def _quiet(fn, *args):
    # Truncation quality is reported from top_population by the caller, the
    # same way for serial and pooled runs.
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruncationWarning)
        return fn(*args)


def _charge_task(spec):
    return _quiet(charge, spec.params, spec.t_end, spec.sample_dt, spec.opts)


def _discharge_task(args):
    rho_s, dp, t_end, dt, opts = args
    return discharge(rho_s, dp, t_end, dt, opts)


class Runner:
    """Memoizing executor for charging and discharge runs.

    With ``threads > 1`` independent runs are dispatched to a process pool;
    results always come back in request order.
    """

    def __init__(self, threads=1):
        self.threads = max(1, int(threads))
        self._cache = {}

    def _map(self, fn, items):
        if self.threads > 1 and len(items) > 1:
            with ProcessPoolExecutor(max_workers=min(self.threads, len(items))) as pool:
                return list(pool.map(fn, items))
        return [fn(item) for item in items]

    def charge_many(self, specs):
        plain = [replace(s, t_end=s.t_off, t_off=None) if s.t_off is not None else s for s in specs]
        todo = list(dict.fromkeys(s for s in plain if s not in self._cache))
        for spec, traj in zip(todo, self._map(_charge_task, todo)):
            self._cache[spec] = traj
        out = []
        for spec, base in zip(specs, plain):
            if spec.t_off is not None and spec not in self._cache:
                self._cache[spec] = _quiet(continue_charge, self._cache[base],
                                           replace(spec.params, f_p=0.0), spec.t_end,
                                           spec.sample_dt, spec.opts)
            out.append(self._cache[spec])
        return out

    def charge(self, spec):
        return self.charge_many([spec])[0]

    def settle(self, spec, series, window, tol):
        """Steady value of ``series`` ("W", "W_c", ...) and the trajectory it came from.

        The run is continued from its final state in steps of ``window`` until
        the trailing window settles or SETTLE_LIMIT * t_end is reached.
        """
        traj = self.charge(spec)
        t_max = SETTLE_LIMIT * spec.t_end
        while True:
            try:
                return traj, steady_value(traj.times, getattr(traj, series), window, tol)
            except NotConvergedError:
                t_end = float(traj.times[-1]) + window
                if t_end > t_max + 1e-9:
                    raise
            longer = replace(spec, t_end=t_end)
            if longer not in self._cache:
                self._cache[longer] = _quiet(continue_charge, traj, spec.params, t_end,
                                             spec.sample_dt, spec.opts)
            traj = self._cache[longer]

    def settle_many(self, specs, series, window, tol):
        self.charge_many(specs)
        pairs = [self.settle(s, series, window, tol) for s in specs]
        return [p[0] for p in pairs], [p[1] for p in pairs]

    def discharge_many(self, rho_s, dps, t_end, dt, opts=None):
        return self._map(_discharge_task, [(rho_s, dp, t_end, dt, opts) for dp in dps])


def _label(value):
    return f"{value:g}"


def charge_spec(cfg, **changes):
    return ChargeSpec(replace(cfg.dopo, **changes), cfg.t_end, cfg.sample_dt, cfg.integrator)


def _series_rows(traj):
    return list(traj.rows())


def _diagnostics(outcome, label, traj):
    top_s, top_p = traj.top_population
    outcome.summary += [(f"{label}.top_population_signal", top_s),
                        (f"{label}.top_population_pump", top_p),
                        (f"{label}.trace_drift", traj.trace_drift),
                        (f"{label}.min_eigenvalue", traj.min_eigenvalue)]
    if max(top_s, top_p) > TOP_LEVEL_MAX:
        outcome.notes.append(f"{label}: top Fock populations {top_s:.2e} (signal), "
                             f"{top_p:.2e} (pump) exceed {TOP_LEVEL_MAX:g}; "
                             "truncation may be inadequate")


def _fit_rows(prefix, fit):
    rows = [(f"{prefix}.slope", fit.params[0]), (f"{prefix}.intercept", fit.params[1]),
            (f"{prefix}.r", fit.r), (f"{prefix}.residual_rms", fit.residual_rms)]
    if fit.dropped:
        rows.append((f"{prefix}.dropped", fit.dropped))
    return rows


def _drive(cfg, x):
    """Drive amplitude for a sweep value given in units of sqrt(gamma_s)."""
    return x * math.sqrt(cfg.dopo.gamma_s)


def _cutoff_sweep(cfg, runner, name, key, values, check):
    out = Outcome(name)
    trajs, steady = runner.settle_many([charge_spec(cfg, **{key: v}) for v in values], "W",
                                       cfg.fit.window, cfg.fit.tolerance)
    for v, traj in zip(values, trajs):
        out.add_table(f"{name}_{key}{v}", CHARGE_COLUMNS, _series_rows(traj))
        _diagnostics(out, f"{key}{v}", traj)
    out.add_table(name, (key, "W_ss"), zip(values, steady))
    increments = np.diff(steady)
    fit_rows = [("W_ss_last", steady[-1]), ("min_increment", float(increments.min())),
                ("monotone_increasing", bool(np.all(increments > 0)))]
    out.add_table(f"{name}_fit", FIT_COLUMNS, fit_rows)
    out.summary += [(f"W_ss.{key}{v}", w) for v, w in zip(values, steady)] + fit_rows
    out.verdicts.append(check(steady))
    return out


def run_fig2a(cfg, runner):
    return _cutoff_sweep(cfg, runner, "fig2a", "n_s", acc.SIGNAL_CUTOFFS, acc.check_signal_cutoff)


def run_fig2b(cfg, runner):
    return _cutoff_sweep(cfg, runner, "fig2b", "n_p", acc.PUMP_CUTOFFS, acc.check_pump_cutoff)


def _drive_sweep(cfg, runner, name, xs, settle=None):
    """Charge at each drive; with ``settle`` naming a series, also return its steady values."""
    specs = [charge_spec(cfg, f_p=_drive(cfg, x)) for x in xs]
    if settle is None:
        trajs, steady = runner.charge_many(specs), None
    else:
        trajs, steady = runner.settle_many(specs, settle, cfg.fit.window, cfg.fit.tolerance)
    out = Outcome(name)
    for x, traj in zip(xs, trajs):
        out.add_table(f"{name}_f_p{_label(x)}", CHARGE_COLUMNS, _series_rows(traj))
        _diagnostics(out, f"f_p{_label(x)}", traj)
    return out, trajs, steady


def run_fig3(cfg, runner):
    xs = acc.STEADY_DRIVES
    out, _, w_ss = _drive_sweep(cfg, runner, "fig3", xs, settle="W")
    out.add_table("fig3", ("f_p", "W_ss", "ln_W_ss"),
                  [(x, w, math.log(w) if w > 0 else float("nan")) for x, w in zip(xs, w_ss)])
    fit = log_linear_fit(xs, w_ss)
    rows = _fit_rows("ln_W_ss", fit)
    out.add_table("fig3_fit", FIT_COLUMNS, rows)
    out.summary += [(f"W_ss.f_p{_label(x)}", w) for x, w in zip(xs, w_ss)] + rows
    out.verdicts.append(acc.check_steady_law(fit))
    return out


def coherent_first_peak(traj):
    return peak(traj.times, traj.W_c, floor=COMPONENT_PEAK_FLOOR)


def run_fig4(cfg, runner):
    traj = runner.charge(charge_spec(cfg))
    out = Outcome("fig4")
    out.add_table("fig4", CHARGE_COLUMNS, _series_rows(traj))
    _diagnostics(out, "run", traj)
    first = coherent_first_peak(traj)
    early = traj.times < acc.EARLY_TIME
    out.summary += [("W_c.first_peak_time", first[0]), ("W_c.first_peak_value", first[1]),
                    ("W_c.first_peak_at_boundary", first[2]), ("W_c.max", float(traj.W_c.max())),
                    ("W_i.max_before_t8", float(traj.W_i[early].max())),
                    ("W.final", float(traj.W[-1]))]
    out.verdicts.append(acc.check_components(traj.times, traj.W_c, traj.W_i, first))
    return out


def decay_fits(traj, start, end):
    window = (traj.times >= start - 1e-9) & (traj.times <= end + 1e-9)
    t = traj.times[window]
    return log_linear_fit(t, traj.W_c[window]), log_linear_fit(t, traj.W_i[window])


def run_fig5(cfg, runner):
    f = cfg.fit
    spec = ChargeSpec(cfg.dopo, f.t_off_end, cfg.sample_dt, cfg.integrator, t_off=f.t_off)
    traj = runner.charge(spec)
    out = Outcome("fig5")
    out.add_table("fig5", CHARGE_COLUMNS, _series_rows(traj))
    _diagnostics(out, "run", traj)
    fit_c, fit_i = decay_fits(traj, f.decay_start, f.decay_end)
    ratio = abs(fit_i.params[0] / fit_c.params[0]) if fit_c.params[0] else float("inf")
    rows = _fit_rows("ln_W_c", fit_c) + _fit_rows("ln_W_i", fit_i) + [("slope_ratio", ratio)]
    out.add_table("fig5_fit", FIT_COLUMNS, rows)
    out.summary += rows
    out.verdicts.append(acc.check_decay(fit_c, fit_i))
    return out


def run_fig6(cfg, runner):
    xs = acc.POWER_DRIVES
    out, trajs, _ = _drive_sweep(cfg, runner, "fig6", xs)
    p_max, t_max = [], []
    for traj in trajs:
        i = int(np.argmax(traj.P))
        p_max.append(float(traj.P[i]))
        t_max.append(float(traj.times[i]))
    out.add_table("fig6", ("f_p", "P_max", "t_P_max"), zip(xs, p_max, t_max))
    fit = log_linear_fit(xs, p_max)
    rows = _fit_rows("ln_P_max", fit)
    out.add_table("fig6_fit", FIT_COLUMNS, rows)
    out.summary += [(f"P_max.f_p{_label(x)}", p) for x, p in zip(xs, p_max)] + rows
    out.verdicts.append(acc.check_power_law(fit))
    return out


def run_fig7(cfg, runner):
    xs = acc.LOGISTIC_DRIVES
    out, _, wc_ss = _drive_sweep(cfg, runner, "fig7", xs, settle="W_c")
    slope = derivative(xs, wc_ss)
    out.add_table("fig7", ("f_p", "W_c_ss", "dW_c_ss"), zip(xs, wc_ss, slope))
    fit = logistic_fit(xs, wc_ss)
    d_peak = xs[int(np.argmax(slope))]
    rows = [("A", fit.params[0]), ("k", fit.params[1]), ("x0", fit.params[2]), ("r", fit.r),
            ("residual_rms", fit.residual_rms), ("derivative_peak_f_p", d_peak)]
    out.add_table("fig7_fit", FIT_COLUMNS, rows)
    out.summary += [(f"W_c_ss.f_p{_label(x)}", w) for x, w in zip(xs, wc_ss)] + rows
    out.verdicts.append(acc.check_logistic(fit, d_peak))
    return out


def run_fig8(cfg, runner):
    t0 = cfg.discharge_t0
    pre = runner.charge(ChargeSpec(cfg.dopo, t0, min(cfg.sample_dt, t0), cfg.integrator))
    rho_s = fock.partial_trace(pre.final_state, [0])
    out = Outcome("fig8")
    _diagnostics(out, "charge", pre)
    gs = acc.COUPLINGS
    dps = [replace(cfg.discharge, g=g) for g in gs]
    results = runner.discharge_many(rho_s, dps, cfg.discharge_t_end, cfg.discharge_dt)
    for g, res in zip(gs, results):
        out.add_table(f"fig8_g{_label(g)}", DISCHARGE_COLUMNS, res.rows())
    peaks = [res.peak_kappa_a for res in results]
    out.add_table("fig8", ("g", "t_peak", "kappa_a_peak"), [(g, t, v) for g, (t, v) in zip(gs, peaks)])
    values = [v for _, v in peaks]
    rows = [("monotone_non_decreasing", all(b >= a for a, b in zip(values, values[1:]))),
            ("kappa_a_peak_max", max(values))]
    out.add_table("fig8_fit", FIT_COLUMNS, rows)
    out.summary += [(f"kappa_a_peak.g{_label(g)}", v) for g, v in zip(gs, values)]
    out.summary += [(f"t_peak.g{_label(g)}", t) for g, (t, _) in zip(gs, peaks)] + rows
    out.summary.append(("frame", cfg.discharge.frame))
    out.verdicts.append(acc.check_discharge(gs, values))
    return out


def run_custom(cfg, runner):
    drives = cfg.f_p_values or (cfg.dopo.f_p,)
    trajs = runner.charge_many([charge_spec(cfg, f_p=v) for v in drives])
    out = Outcome("custom")
    single = len(drives) == 1
    finals = []
    for v, traj in zip(drives, trajs):
        label = "custom" if single else f"custom_f_p{_label(v)}"
        out.add_table(label, CHARGE_COLUMNS, _series_rows(traj))
        _diagnostics(out, f"f_p{_label(v)}", traj)
        row = (v, float(traj.W[-1]), float(traj.W_c[-1]), float(traj.W_i[-1]), float(traj.P.max()))
        finals.append(row)
        out.summary += [(f"{k}.f_p{_label(v)}", x)
                        for k, x in zip(("W_final", "W_c_final", "W_i_final", "P_max"), row[1:])]
    if not single:
        out.add_table("custom", ("f_p", "W_final", "W_c_final", "W_i_final", "P_max"), finals)
        ws = [r[1] for r in finals]
        if len(drives) >= 3 and min(ws) > LOG_FLOOR and np.ptp(drives) > 0:
            rows = [("status", "fitted")] + _fit_rows("ln_W_final", log_linear_fit(drives, ws))
        else:
            rows = [("status", "skipped: needs >= 3 distinct drives with W_final > 1e-12")]
        out.add_table("custom_fit", FIT_COLUMNS, rows)
        out.summary += rows
    return out


RUNNERS = {
    "fig2a": run_fig2a, "fig2b": run_fig2b, "fig3": run_fig3, "fig4": run_fig4,
    "fig5": run_fig5, "fig6": run_fig6, "fig7": run_fig7, "fig8": run_fig8,
    "custom": run_custom,
}


def run(cfg, runner=None):
    """Run ``cfg.experiment``; the threshold verdict is attached to every outcome."""
    runner = runner or Runner(cfg.threads)
    out = RUNNERS[cfg.experiment](cfg, runner)
    th = threshold(cfg.dopo)
    out.summary.insert(0, ("threshold", th))
    out.verdicts.insert(0, acc.check_threshold(th))
    return out
