import numpy as np
import pytest
from hypothesis import given, settings

from swallowtail_qbd.stochastic import (Recurrence, Region, build_P, check_tilde_combination,
                                        classify_recurrence, classify_region,
                                        continuous_time_feasibility, divergence_probe,
                                        invariance_residual, invariant_measure, minimal_margin,
                                        probe_trend, validate_stochastic)
from swallowtail_qbd.special import DomainError, ModelParameters

from conftest import params


@pytest.mark.parametrize("a,b,region", [(0, 1, Region.A), (1, 0, Region.B), (0.2, -0.5, Region.B),
                                        (-0.9, -0.7, Region.C), (0.5, 0.5, Region.BOUNDARY),
                                        (0.5, -0.5, Region.BOUNDARY)])
def test_regions(a, b, region):
    assert classify_region(ModelParameters(a, b, 0.6)).region == region


def test_region_b_bound_exact():
    r = classify_region(ModelParameters(1, 0, 0))
    assert r.tau_max == 3 / 5
    assert r.gamma_constraint == "gamma > -1" and r.gamma_constraint_holds


def test_gamma_constraint_text():
    r = classify_region(ModelParameters(-0.8, -0.9, 0.5))
    assert r.region == Region.B and r.gamma_constraint == "gamma + beta + 3/2 > 0"
    r = classify_region(ModelParameters(-0.9, -0.7, 0.6))
    assert r.region == Region.C and r.gamma_constraint == "gamma + alpha + 3/2 > 0"


def test_level_zero_row():
    P = build_P(ModelParameters(0, 0, 0, 0.5), 2)
    L = P.levels[0]
    assert L.B[0, 0] == pytest.approx(9 / 20)
    assert np.allclose(L.A, [[1 / 4, 3 / 10]])


def test_violation_above_region_b_bound():
    v = validate_stochastic(build_P(ModelParameters(1, 0, 0, 0.7), 12))
    assert v
    assert any(x.inequality == "(1-tau)*a + tau*a2 > 0" and x.row == 0 for x in v)


def test_bound_is_admitted_with_zero_margin():
    # the k = 0 entry is exactly zero at every level, not only in the limit
    P = build_P(ModelParameters(1, 0, 0, 0.6), 12)
    assert validate_stochastic(P) == []
    margin, where = minimal_margin(P)
    assert abs(margin) < 1e-15
    assert where["row"] == 0 and where["block"] == "A"


@settings(max_examples=30, deadline=None)
@given(params())
def test_stochastic_up_to_tau_max(p):
    tau_max = classify_region(p).tau_max
    for tau in (0.0, 0.5 * tau_max, tau_max):
        assert validate_stochastic(build_P(p.with_tau(tau), 10)) == []


@pytest.mark.parametrize("p", [ModelParameters(1, 0, 0), ModelParameters(2.0, 0.5, -0.3),
                               ModelParameters(-0.9, -0.7, 0.6), ModelParameters(0.3, -0.8, 1.2)])
def test_violations_just_above_bound(p):
    r = classify_region(p)
    assert r.region in (Region.B, Region.C)
    assert validate_stochastic(build_P(p.with_tau(1.05 * r.tau_max), 20))


def test_validate_needs_tau():
    P = build_P(ModelParameters(0, 0, 0, 0.5), 3)
    P.params = ModelParameters(0, 0, 0)
    with pytest.raises(DomainError):
        validate_stochastic(P)


def test_tilde_combination():
    p = ModelParameters(0, 0, 0)
    assert check_tilde_combination(p, 0.0, 10) == []
    big = check_tilde_combination(p, 5.0, 10)
    assert any(v.inequality == "tau*(b-1) + b2 >= 0" for v in big)
    for v in big:
        assert v.inequality not in ("a1 > 0", "a3 > 0", "c1 > 0", "c3 > 0")


@pytest.mark.parametrize("p", [ModelParameters(0, 0, 0), ModelParameters(1, 0.5, 0.5),
                               ModelParameters(0.2, 2, -0.5)])
def test_continuous_time_infeasible(p):
    res = continuous_time_feasibility(p, 8)
    assert not res
    assert res.witness["value"] < 0 and res.witness["kind"] == "off-diagonal"


def test_continuous_time_witness_zero():
    w = continuous_time_feasibility(ModelParameters(0, 0, 0), 8).witness
    assert w["from"] == [0, 0] and w["to"] == [1, 0] and w["value"] == pytest.approx(-0.5)


def test_invariant_measure_examples():
    pi = invariant_measure(ModelParameters(0, 0, 0), 1)
    assert np.allclose(pi, [1, 10, 14])


@pytest.mark.parametrize("p", [ModelParameters(0, 0, 0, 0.5), ModelParameters(1, 0, 0.3, 0.6),
                               ModelParameters(-0.9, -0.7, 0.6, 0.4), ModelParameters(0.4, 2.0, -0.5, 1.0)])
def test_invariance(p):
    assert invariance_residual(p, 15) < 1e-10


@pytest.mark.parametrize("a,g,expected", [(-0.7, -0.5, Recurrence.NULL_RECURRENT),
                                          (-0.5, -0.5, Recurrence.NULL_RECURRENT),
                                          (-0.5, -0.45, Recurrence.TRANSIENT),
                                          (0, 0, Recurrence.TRANSIENT)])
def test_classify_recurrence(a, g, expected):
    assert classify_recurrence(ModelParameters(a, 0.8, g)) == expected


def test_probe_examples():
    seq = divergence_probe(ModelParameters(0, 0, 0, 0.5))
    assert np.all(np.diff(seq) >= 0)
    assert probe_trend(seq).verdict == "cauchy"
    seq = divergence_probe(ModelParameters(-0.7, 0.8, -0.5, 0.5))
    assert probe_trend(seq).verdict == "growing"
    assert seq[-1] > 10 * seq[0]
    seq = divergence_probe(ModelParameters(0, 0, 0, 0.0))
    assert np.isfinite(seq[-1]) and probe_trend(seq).verdict == "cauchy"


def test_probe_errors():
    with pytest.raises(DomainError):
        divergence_probe(ModelParameters(0, 0, 0))
    with pytest.raises(DomainError):
        divergence_probe(ModelParameters(0, 0, 0, 0.5), refinements=0)
    with pytest.raises(DomainError):
        probe_trend([1.0, 2.0])


def test_probe_trend_rule():
    assert probe_trend([1, 2, 3, 4]).verdict == "growing"
    assert probe_trend([1, 1.1, 1.101, 1.10101]).verdict == "cauchy"
    assert probe_trend([1, 1, 1]).verdict == "cauchy"


def test_region_b_bound_near_anti_diagonal():
    # alpha + beta -> 0 is a removable singularity of C_-1/2
    r = classify_region(ModelParameters(0.0, -1e-200, 0.0))
    assert r.region == Region.B and r.tau_max == pytest.approx(1.0)
    assert classify_region(ModelParameters(0.3, -0.2, 0.0)).tau_max == pytest.approx(2.1 / 3.1)
