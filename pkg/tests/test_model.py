from __future__ import annotations

import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from plaquebif.errors import InvalidParamsError
from plaquebif.model import (
    PARAM_KEYS,
    REF_A,
    REF_B,
    ModelParams,
    asymptotic_coefficients,
    mu_asymptotic,
    mu_c,
    require_valid,
    validate,
)

pos = st.floats(0.05, 20.0)


def test_presets_are_valid():
    assert validate(REF_A) == []
    assert validate(REF_B) == []


def test_L0_is_derived_from_mu():
    p = REF_A
    assert p.L0 == pytest.approx((p.rho3 * (p.gamma + p.H0) + p.eps * p.mu) / p.lambda_)
    assert p.with_(mu=-(p.rho3 * (p.gamma + p.H0)) / p.eps).L0 == pytest.approx(0.0, abs=1e-12)


def test_validate_lists_every_violation():
    bad = REF_A.with_(k1=0.0, D=-1.0, eps=0.5)
    msgs = {v.message for v in validate(bad)}
    assert "k1 must be strictly positive" in msgs
    assert "D must be strictly positive" in msgs
    assert "eps out of range" in msgs


def test_nonpositive_L0_flagged():
    bad = REF_A.with_(mu=-1e4)
    assert any(v.message == "derived L0 nonpositive" for v in validate(bad))
    with pytest.raises(InvalidParamsError):
        require_valid(bad)
    require_valid(bad, override=True)


def test_lambda_key_round_trip():
    cfg = REF_B.as_config()
    assert "lambda" in cfg and "lambda_" not in cfg
    assert tuple(cfg) == PARAM_KEYS
    assert ModelParams.from_config(cfg) == REF_B


def test_from_config_names_missing_key():
    cfg = REF_A.as_config()
    del cfg["beta2"]
    with pytest.raises(KeyError, match="beta2"):
        ModelParams.from_config(cfg)


def test_digest_stable_and_sensitive():
    assert REF_A.digest() == REF_A.with_().digest()
    assert REF_A.digest() != REF_A.with_(mu=3.0000001).digest()


def test_reference_values_ref_a():
    ac = asymptotic_coefficients(REF_A)
    # hand evaluation: q = 1/3, gamma + H0 = 2
    assert ac.mu_c == pytest.approx(7.0 / 6.0)
    assert ac.Fstar1 == pytest.approx(2.0 / 3.0)
    assert ac.Hstar1 == pytest.approx(-0.5)
    assert ac.rho4_leading == pytest.approx(1.375)


def test_ref_b_admits_n2_n3():
    mc = mu_c(REF_B)
    assert mu_asymptotic(REF_B, 3) > mc
    assert mu_asymptotic(REF_B, 2) > mc
    assert mu_asymptotic(REF_B, 2) == pytest.approx(-12 * 1.1)
    assert mu_asymptotic(REF_B, 3) == pytest.approx(-72 * 1.1)


@given(pos, pos, pos, pos, pos, pos, pos, pos, pos, pos, pos, st.floats(-50, 50))
def test_rho4_leading_identity(k1, K1, rho1, rho2, rho3, lam, gamma, M0, beta1, beta2, H0, mu):
    # M0 (lambda L1* - rho3 H1*)/(gamma+H0) = M0 (mu - mu_c)/(gamma+H0)
    p = REF_A.with_(k1=k1, K1=K1, rho1=rho1, rho2=rho2, rho3=rho3, **{"lambda": lam}, gamma=gamma, M0=M0)
    p = p.with_(beta1=beta1, beta2=beta2, H0=H0, mu=mu)
    ac = asymptotic_coefficients(p)
    gH = p.gamma + p.H0
    lhs = p.M0 * (p.lambda_ * ac.Lstar1 - p.rho3 * ac.Hstar1) / gH
    rhs = p.M0 * (p.mu - ac.mu_c) / gH
    assert math.isclose(lhs, rhs, rel_tol=1e-9, abs_tol=1e-9 * (abs(lhs) + abs(p.mu) + 1))
    assert ac.rho4_leading * ac.Fstar1 == pytest.approx(rhs, rel=1e-9, abs=1e-9)


def test_mu_c_hand_value():
    p = REF_A.with_(k1=1, K1=1, M0=1, gamma=1, H0=1, beta1=1, rho1=0.1, rho2=0.1, rho3=0.1, **{"lambda": 1})
    assert mu_c(p) == pytest.approx(0.1 * (2 * (1 / 1.2 + 0.1) - 0.1), rel=1e-15)


def test_mu_c_vanishes_without_rho3():
    assert mu_c(REF_A.with_(rho3=0.0)) == 0.0


def test_mu_c_scales_with_inverse_beta1():
    assert mu_c(REF_B.with_(beta1=2 * REF_B.beta1)) == pytest.approx(0.5 * mu_c(REF_B), rel=1e-15)


def test_L0_sign_example():
    p = REF_A
    bad = p.with_(mu=-2 * p.rho3 * (p.gamma + p.H0) / p.eps)
    assert bad.L0 < 0
    assert "derived L0 nonpositive" in {v.message for v in validate(bad)}
    assert "eps out of range" in {v.message for v in validate(p.with_(eps=0.0))}


def test_rho4_leading_vanishes_at_mu_c():
    assert asymptotic_coefficients(REF_B.with_(mu=mu_c(REF_B))).rho4_leading == pytest.approx(0.0, abs=1e-12)


@given(st.floats(0.1, 10), st.floats(-20, 20), st.floats(0.1, 10))
def test_rho4_ratio_and_invariances(c, mu, scale):
    p = REF_B.with_(mu=mu)
    ac = asymptotic_coefficients(p)
    assert ac.rho4_leading / ac.drho4_dmu_leading == pytest.approx(mu - ac.mu_c, rel=1e-12, abs=1e-12)
    q = p.with_(k1=p.k1 * c, M0=p.M0 / c)
    assert mu_c(q) == pytest.approx(mu_c(p), rel=1e-12)
    r = p.with_(beta2=p.beta2 * scale, D=p.D / scale)
    f1 = asymptotic_coefficients(p).Fstar1 * p.beta2 * p.D
    f2 = asymptotic_coefficients(r).Fstar1 * r.beta2 * r.D
    assert f1 == pytest.approx(f2, rel=1e-12)


@pytest.mark.parametrize(
    "key, field, partial",
    [
        ("mu", "Lstar1", lambda p: 1 / p.lambda_),
        ("rho2", "Hstar1", lambda p: -p.H0 / p.beta1),
        ("beta1", "mu_c", lambda p: -mu_c(p) / p.beta1),
        ("D", "Fstar1", lambda p: -asymptotic_coefficients(p).Fstar1 / p.D),
        ("rho1", "mu_c", lambda p: p.rho3 * (p.gamma + p.H0) / p.beta1),
    ],
)
def test_sensitivities_match_analytic_partials(key, field, partial):
    p = REF_B
    x = p.as_config()[key]
    h = 1e-5 * max(1.0, abs(x))
    up = getattr(asymptotic_coefficients(p.with_(**{key: x + h})), field)
    dn = getattr(asymptotic_coefficients(p.with_(**{key: x - h})), field)
    assert (up - dn) / (2 * h) == pytest.approx(partial(p), rel=1e-6)
