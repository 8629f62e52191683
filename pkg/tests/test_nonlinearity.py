"""Reaction admissibility, the truncated bridge h, and the two shift choices."""
import dataclasses

import numpy as np
import pytest

from pqsing import (
    NonlinearitySpec,
    Params,
    build_fhat,
    build_h,
    choose_Theta_lambda,
    choose_khat,
    lpq_scalar,
    validate,
)
from pqsing.errors import BridgeNotMonotone, ConfigurationError

PARAMS = Params(p=2.0, q=3.0, gamma=0.5, dim=2, radius=1.0, lam=0.3)


def exp_spec(**kw):
    base = dict(kind="exp_saturating", theta1=1.0, theta2=176.0, k=100.0)
    base.update(kw)
    return NonlinearitySpec(**base)


# ---------------------------------------------------------------- spec families

def test_spec_validation():
    with pytest.raises(ConfigurationError):
        NonlinearitySpec(kind="nope", theta1=1.0, theta2=2.0)
    with pytest.raises(ConfigurationError):
        exp_spec(theta1=3.0, theta2=2.0)
    with pytest.raises(ConfigurationError):
        exp_spec(k=None)
    with pytest.raises(ConfigurationError):
        exp_spec(khat=-1.0)
    with pytest.raises(ConfigurationError):
        NonlinearitySpec(kind="power", theta1=1.0, theta2=2.0)   # missing m
    with pytest.raises(ConfigurationError):
        NonlinearitySpec(kind="table", theta1=1.0, theta2=2.0,
                         table_t=(0.0, 1.0), table_f=(1.0,))
    with pytest.raises(ConfigurationError):
        NonlinearitySpec(kind="table", theta1=1.0, theta2=2.0,
                         table_t=(0.0, 0.0, 1.0), table_f=(1.0, 1.0, 2.0))


def test_families_evaluate():
    s = exp_spec()
    assert s.f0 == 1.0
    assert s.f(100.0) == pytest.approx(np.exp(50.0))
    assert s.f(-3.0) == s.f0                      # clamped below zero
    p = NonlinearitySpec(kind="power", theta1=0.5, theta2=2.0, m=2.0)
    assert p.f(3.0) == 9.0
    assert p.f_prime(3.0) == pytest.approx(6.0)
    t = NonlinearitySpec(kind="table", theta1=0.5, theta2=2.0,
                         table_t=(0.0, 1.0, 2.0), table_f=(1.0, 3.0, 4.0))
    assert t.f(0.5) == pytest.approx(2.0)
    assert t.f(10.0) == 4.0                       # constant beyond the table
    # derivative consistency on the smooth families
    for sp, t0 in ((s, 7.0), (p, 1.3)):
        fd = (sp.f(t0 + 1e-6) - sp.f(t0 - 1e-6)) / 2e-6
        assert sp.f_prime(t0) == pytest.approx(fd, rel=1e-5)


# ---------------------------------------------------------------- validate

def test_validate_reference_spec_ok():
    rep = validate(exp_spec(), PARAMS)
    assert rep.ok
    assert {c.name for c in rep.checks} == {"f0", "f1", "f2", "f2prime", "f3", "f4"}
    assert rep.passed("f3")
    assert rep.check("f3").witness["F_theta2"] == pytest.approx(33.0)


def test_validate_rejects_decreasing_table():
    bad = NonlinearitySpec(kind="table", theta1=0.5, theta2=2.0,
                           table_t=(0.0, 1.0, 2.0), table_f=(2.0, 1.0, 1.0))
    rep = validate(bad, PARAMS)
    assert not rep.ok
    assert not rep.passed("f1")


def test_validate_rejects_supercritical_power():
    # t^3 grows faster than t^{q-1+gamma} = t^{2.5}
    sup = NonlinearitySpec(kind="power", theta1=0.5, theta2=2.0, m=3.0)
    rep = validate(sup, PARAMS)
    assert not rep.passed("f2prime")


def test_validate_f4_needs_khat_for_early_saturation():
    # with k=25 the reaction saturates before 2*theta2, so fhat eventually
    # decreases; a sufficiently large explicit shift restores monotonicity
    lam_hi = 0.2809752558439424
    pr = dataclasses.replace(PARAMS, lam=lam_hi)
    bare = NonlinearitySpec(kind="exp_saturating", theta1=1.0, theta2=890.67, k=25.0)
    rep = validate(bare, pr)
    assert not rep.passed("f4")
    shifted = NonlinearitySpec(kind="exp_saturating", theta1=1.0, theta2=890.67,
                               k=25.0, khat=60000.0)
    assert validate(shifted, pr).ok


def test_validate_f3_window_failure():
    # theta1 above min(theta2, F(theta2)) = 33 breaks the threshold window
    rep = validate(exp_spec(theta1=40.0), PARAMS)
    assert not rep.passed("f3")


# ---------------------------------------------------------------- fhat

def test_fhat_carries_lam_and_vanishes_at_zero():
    spec = exp_spec()
    fhat = build_fhat(spec, PARAMS)
    assert fhat(0.0) == 0.0
    assert fhat(-1.0) == 0.0
    t = 2.7
    expect = PARAMS.lam * (spec.f(t) - 1.0) / np.sqrt(t)
    assert fhat(t) == pytest.approx(expect, rel=1e-14)
    # continuity at 0+: bounded by lam*sup|f'|*t^{1-gamma}
    small = fhat(1e-12)
    assert 0.0 < small < PARAMS.lam * 2.0 * 1e-6


# ---------------------------------------------------------------- build_h

def test_bridge_running_minimum():
    spec = exp_spec()
    rx = build_h(spec, PARAMS)
    curve = lambda t: spec.f(t) / (2.0 * np.sqrt(t))

    # interior minimum of f(t)/(2 t^gamma) on (0, theta1]
    assert 0.0 < rx.theta_star < spec.theta1
    assert rx.fbar == pytest.approx(1.1628964172611573, rel=1e-9)
    assert rx.theta_star == pytest.approx(0.5050633878166173, rel=1e-6)

    ts = np.linspace(0.0, 2.0 * spec.theta2, 4001)
    hv = rx.h(ts)
    # nondecreasing, below the curve, equal to it past theta1
    assert np.all(np.diff(hv) >= -1e-12 * np.max(hv))
    pos = ts > 1e-9
    assert np.all(hv[pos] <= curve(ts[pos]) * (1.0 + 1e-12))
    tail = ts >= spec.theta1
    assert np.allclose(hv[tail], curve(ts[tail]), rtol=1e-12)
    # flat at fbar up to the argmin
    flat = ts <= rx.theta_star
    assert np.allclose(hv[flat], rx.fbar, rtol=1e-12)


def test_bridge_rejects_impossible_thresholds():
    # f/t^gamma keeps dropping on (theta1, theta2) when f is constant,
    # so no monotone bridge can sit below the curve and match it there
    flat = NonlinearitySpec(kind="table", theta1=1.0, theta2=100.0,
                            table_t=(0.0, 0.5), table_f=(1.0, 1.0))
    with pytest.raises(BridgeNotMonotone):
        build_h(flat, PARAMS)


# ---------------------------------------------------------------- shifts

def test_choose_theta_lambda_zero_when_monotone():
    rx = build_h(exp_spec(), PARAMS)
    assert rx.Theta_lambda == 0.0


def test_choose_theta_lambda_compensates():
    spec = NonlinearitySpec(kind="exp_saturating", theta1=1.0, theta2=890.67,
                            k=25.0, khat=60000.0)
    pr = dataclasses.replace(PARAMS, lam=0.15825952111377303)
    Theta = choose_Theta_lambda(spec, pr)
    assert Theta == pytest.approx(2.389892543619752, rel=1e-9)
    rx = build_h(spec, pr)
    grid = np.linspace(0.0, 2.0 * spec.theta2, 20001)
    g = pr.lam * np.asarray(rx.h(grid)) + Theta * lpq_scalar(grid, pr)
    assert np.all(np.diff(g) >= -1e-9 * np.max(np.abs(g)))


def test_choose_khat():
    assert choose_khat(exp_spec(), PARAMS) == 0.0
    spec = NonlinearitySpec(kind="exp_saturating", theta1=1.0, theta2=890.67, k=25.0)
    pr = dataclasses.replace(PARAMS, lam=0.2809752558439424)
    k = choose_khat(spec, pr)
    assert k == pytest.approx(30230.29834012007, rel=1e-6)
    # the shifted reaction is actually nondecreasing on the probed range
    fhat = build_fhat(spec, pr)
    grid = np.linspace(0.0, 2.0 * spec.theta2, 20001)
    g = fhat(grid) + k * grid
    assert np.all(np.diff(g) >= -1e-9 * np.max(np.abs(g)))
    # t_max widens the range the shift must cover
    assert choose_khat(spec, pr, t_max=4.0 * spec.theta2) >= k
