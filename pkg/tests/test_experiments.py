from dataclasses import replace

import numpy as np
import pytest

from dopo_qb import config, experiments
from dopo_qb.errors import NotConvergedError


@pytest.fixture
def small_cfg():
    cfg = config.resolve()
    return replace(cfg, dopo=replace(cfg.dopo, n_s=6, n_p=3, f_p=1.0), t_end=4.0, sample_dt=0.1)


def test_settle_extends_unsettled_run(small_cfg):
    runner = experiments.Runner()
    spec = experiments.charge_spec(small_cfg)
    traj, value = runner.settle(spec, "W", window=2.0, tol=1e-3)
    base = runner.charge(spec)
    assert traj.times[-1] > base.times[-1]
    np.testing.assert_allclose(traj.W[: len(base.W)], base.W, rtol=0, atol=0)
    tail = traj.W[traj.times >= traj.times[-1] - 2.0]
    assert np.ptp(tail) / tail.mean() < 1e-3
    assert value == pytest.approx(tail.mean())


def test_settle_gives_up_at_limit(small_cfg):
    spec = experiments.charge_spec(small_cfg)
    with pytest.raises(NotConvergedError):
        experiments.Runner().settle(spec, "W", window=2.0, tol=1e-14)


def test_settle_returns_base_run_when_already_steady(small_cfg):
    runner = experiments.Runner()
    spec = experiments.charge_spec(replace(small_cfg, t_end=30.0))
    traj, _ = runner.settle(spec, "W", window=5.0, tol=0.02)
    assert traj is runner.charge(spec)


def test_switch_off_run_reuses_base(small_cfg):
    runner = experiments.Runner()
    base = experiments.charge_spec(small_cfg)
    off = replace(base, t_end=6.0, t_off=4.0)
    traj = runner.charge(off)
    ref = runner.charge(base)
    np.testing.assert_array_equal(traj.W[: len(ref.W)], ref.W)
    assert traj.times[-1] == pytest.approx(6.0)


def test_parallel_runner_matches_serial(small_cfg):
    specs = [experiments.charge_spec(small_cfg, f_p=f) for f in (0.5, 1.0, 1.5)]
    serial = experiments.Runner(1).charge_many(specs)
    pooled = experiments.Runner(2).charge_many(specs)
    for a, b in zip(serial, pooled):
        np.testing.assert_array_equal(a.W, b.W)
