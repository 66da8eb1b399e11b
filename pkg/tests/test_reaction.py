import math

import numpy as np
import pytest

from frontlab.errors import DomainError, RangeError, ReactionError
from frontlab.reaction import (
    ReactionKind,
    bistable,
    check_sign_pattern,
    classify,
    combustion,
    eval_h,
    eval_h_prime,
    from_table,
    fujita,
    hosono_integral,
    linear_growth_bound,
    logistic,
    no_reaction,
    parse_reaction,
    phase_force,
    power,
    read_table,
    sigma_bound,
    sign_change_point,
    stability_width,
)


def test_eval_h_examples():
    assert eval_h(logistic(), 0.0) == 0.0
    assert eval_h(logistic(), 0.5) == pytest.approx(0.25)
    assert eval_h(bistable(0.3), 0.3) == 0.0
    assert eval_h_prime(logistic(), 1.0) == -1.0


def test_eval_h_rejects_negative_density():
    with pytest.raises(DomainError):
        eval_h(logistic(), -0.1)
    with pytest.raises(DomainError):
        eval_h_prime(logistic(), -1e-12)


def test_phase_force_examples():
    assert phase_force(logistic(), 2.0, 0.5) == pytest.approx(0.25)
    for spec in (logistic(), bistable(0.3), combustion(0.2), power(4)):
        assert phase_force(spec, 2.0, 0.0) == 0.0
        assert phase_force(spec, 2.0, 1.0) == 0.0
    assert phase_force(bistable(0.3), 2.0, 0.3) == 0.0
    with pytest.raises(DomainError):
        phase_force(logistic(), 2.0, -0.1)


def test_classify_logistic():
    c = classify(logistic(), 2.0)
    assert c.hosono == pytest.approx(1.0 / 12.0, rel=1e-8)
    assert c.sigma == pytest.approx(0.5, abs=1e-9)
    assert c.a == 0.0
    assert c.hair_trigger
    assert c.fujita_exponent == 4.0
    assert c.h_prime_at_1 == -1.0
    assert c.delta_stable == pytest.approx(0.5)


def test_classify_bistable():
    c = classify(bistable(0.3), 2.0)
    assert c.hosono == pytest.approx(0.025, rel=1e-8)
    assert c.a == 0.3
    assert not c.hair_trigger
    assert 0.0 < c.delta_stable <= 0.5
    # h'(1-d) = 0 at the local maximum of h
    u_max = (2 * 1.3 + math.sqrt(4 * 1.3**2 - 12 * 0.3)) / 6
    assert c.delta_stable == pytest.approx(1 - u_max, abs=1e-9)


def test_hair_trigger_by_power():
    assert classify(power(4), 2.0, 1).hair_trigger
    assert not classify(power(6), 2.0, 1).hair_trigger
    # p_F = m + 2/N shrinks with N
    assert not classify(power(4), 2.0, 2).hair_trigger
    assert classify(power(3), 2.0, 2).hair_trigger
    assert classify(fujita(2.0, 0.5, 2.0, 3), 2.0, 3).hair_trigger


def test_fujita_exponent_exact():
    for m, N in [(2.0, 1), (1.5, 2), (3.0, 3)]:
        assert classify(logistic(), m, N).fujita_exponent == m + 2.0 / N


def test_classify_deterministic():
    a = classify(combustion(0.3), 2.5, 2)
    b = classify(combustion(0.3), 2.5, 2)
    assert a == b


def test_sign_change_points():
    assert sign_change_point(logistic()) == 0.0
    assert sign_change_point(bistable(0.4)) == 0.4
    assert sign_change_point(combustion(0.25)) == 0.25


def test_bad_catalog_parameters():
    with pytest.raises(ReactionError):
        bistable(1.2)
    with pytest.raises(ReactionError):
        combustion(0.0)
    with pytest.raises(ReactionError):
        power(0.5)
    with pytest.raises(ReactionError):
        fujita(-1.0, 0.5, 2.0)


def test_parse_reaction_grammar(tmp_path):
    assert parse_reaction("logistic").kind is ReactionKind.LOGISTIC
    assert parse_reaction("power:4").param["p"] == 4.0
    assert parse_reaction("bistable:0.3").param["a"] == 0.3
    assert parse_reaction("combustion:0.2").param["a"] == 0.2
    f = parse_reaction("fujita:2,0.5", m=2.0, N=1)
    assert f.param["p"] == 4.0 and f.param["k"] == 2.0
    assert parse_reaction("none").kind is ReactionKind.NONE
    for bad in ("logistc", "power:x", "bistable:", "fujita:1"):
        with pytest.raises(ReactionError):
            parse_reaction(bad, m=2.0)
    with pytest.raises(ReactionError):
        parse_reaction("fujita:1,0.5")  # exponent needs m


def _write_table(path, u, h):
    with open(path, "w") as fh:
        fh.write("u,h\n")
        for a, b in zip(u, h):
            fh.write(f"{float(a)!r},{float(b)!r}\n")


def test_table_reaction_matches_logistic(tmp_path):
    u = np.linspace(0.0, 2.0, 401)
    path = tmp_path / "h.csv"
    _write_table(path, u, u * (1 - u))
    spec = parse_reaction(f"table:{path}")
    assert spec.kind is ReactionKind.TABLE
    assert eval_h(spec, 0.5) == pytest.approx(0.25, abs=1e-10)
    assert sign_change_point(spec) == pytest.approx(0.0, abs=1e-9)
    c = classify(spec, 2.0)
    assert c.hosono == pytest.approx(1 / 12, rel=1e-6)
    assert c.heuristic and c.hair_trigger
    with pytest.raises(RangeError):
        eval_h(spec, 2.5)


def test_table_bistable_locates_a(tmp_path):
    u = np.linspace(0.0, 1.5, 1501)
    spec = from_table(u, u * (1 - u) * (u - 0.35))
    assert sign_change_point(spec) == pytest.approx(0.35, abs=1e-6)


def test_table_validation(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("x,y\n0,0\n")
    with pytest.raises(ReactionError):
        read_table(path)
    u = np.linspace(0, 2, 50)
    with pytest.raises(ReactionError):
        from_table(u, u * (u - 1))  # wrong sign pattern
    with pytest.raises(ReactionError):
        from_table(u[:3], u[:3])


def test_no_reaction_is_not_classifiable():
    with pytest.raises(ReactionError):
        classify(no_reaction(), 2.0)
    assert np.all(no_reaction().h(np.linspace(0, 2, 5)) == 0.0)


def test_sigma_bound_power():
    # f(q)/q = 2 q^3 (1 - q) for power 3, m = 2: max at q = 3/4
    assert sigma_bound(power(3), 2.0) == pytest.approx(2 * (27 / 64) * (1 / 4), rel=1e-9)


def test_stability_width_and_growth_bound():
    assert stability_width(logistic()) == pytest.approx(0.5)
    assert stability_width(power(4)) == pytest.approx(1 - 4 / 5, abs=1e-9)
    assert linear_growth_bound(logistic(), 1.5) == pytest.approx(1.0)


def test_check_sign_pattern_passes_catalog():
    for spec in (logistic(), power(2), bistable(0.1), combustion(0.7), fujita(1, 0.5, 1.5, 2)):
        check_sign_pattern(spec)


def test_hosono_exact_values():
    assert hosono_integral(logistic(), 3.0) == pytest.approx(1 / 4 - 1 / 5, rel=1e-9)
    # bistable(0.6) with m = 2: 1/20 - 0.6/12 = 0
    assert abs(hosono_integral(bistable(0.6), 2.0)) < 1e-10
    assert hosono_integral(bistable(0.7), 2.0) < 0


# -- properties ---------------------------------------------------------------

from hypothesis import given, settings, strategies as st  # noqa: E402

ms = st.floats(1.05, 6.0)


def _catalog(draw_a, draw_p):
    return [logistic(), power(draw_p), bistable(draw_a), combustion(draw_a)]


@given(ms)
def test_logistic_hosono_closed_form(m):
    assert hosono_integral(logistic(), m) == pytest.approx(1 / (m + 1) - 1 / (m + 2), rel=1e-7)


@given(st.floats(0.01, 0.99))
def test_bistable_hosono_closed_form(a):
    # ∫ u^2 (1-u)(u-a) du = 1/20 - a/12
    assert hosono_integral(bistable(a), 2.0) == pytest.approx(1 / 20 - a / 12, abs=1e-10)


@given(st.floats(0.01, 0.99), st.floats(1.0, 8.0))
def test_catalog_sign_pattern(a, p):
    for spec in _catalog(a, p):
        assert eval_h(spec, 0.0) == 0.0
        assert eval_h(spec, 1.0) == 0.0
        assert eval_h_prime(spec, 1.0) < 0
        assert eval_h(spec, 1.2) < 0
        u = np.linspace(a + 1e-3, 1 - 1e-3, 50)
        assert np.all(spec.h(u) > 0)


@settings(max_examples=30)
@given(st.floats(0.1, 5.0), st.floats(0.05, 1.0), st.floats(1.1, 4.0), st.integers(1, 3))
def test_fujita_hosono_positive(k, b, m, N):
    spec = fujita(k, b, m, N)
    assert hosono_integral(spec, m) > 0
    assert classify(spec, m, N).hair_trigger


@given(st.floats(0.01, 0.99), ms, st.integers(1, 3))
def test_classification_is_deterministic(a, m, N):
    assert classify(bistable(a), m, N) == classify(bistable(a), m, N)


@given(st.floats(0.01, 0.99), ms)
def test_phase_force_matches_reaction(a, m):
    spec = bistable(a)
    for q in np.linspace(0.0, 1.0, 11):
        assert phase_force(spec, m, q) == pytest.approx(m * q ** (m - 1) * eval_h(spec, q), abs=1e-15)
