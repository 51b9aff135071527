import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from sigma2.curvature import curvature_data
from sigma2.errors import ConfigError, InvalidArgument, PreconditionError
from sigma2.expr import catalog_metric
from sigma2.identities import (
    SuiteConfig,
    check_contraction,
    check_decomposition,
    check_kato,
    check_lemma31,
    check_lemma32_on_critical,
    check_lemma33,
    contracted_bianchi_residual,
    first_bianchi_residual,
    riemann_symmetry_residual,
    run_suite,
    sectional_curvatures,
)
from sigma2.sampling import random_general_chart, random_warped_chart


@pytest.mark.parametrize("seed", range(8))
def test_curvature_identities_on_general_charts(seed):
    chart, point = random_general_chart(np.random.default_rng(seed))
    cd = curvature_data(chart, point)
    scale = 1 + np.abs(cd.riemann).max()
    assert riemann_symmetry_residual(cd) < 1e-12 * scale
    assert first_bianchi_residual(cd) < 1e-12 * scale
    assert check_decomposition(cd) < 1e-11 * scale
    assert check_contraction(cd) < 1e-11 * scale**2
    assert contracted_bianchi_residual(cd) < 1e-10


def test_sectional_curvature_of_sphere():
    cd = curvature_data(catalog_metric("round_sphere"), (1.0, 1.2, 0.0))
    np.testing.assert_allclose(sectional_curvatures(cd), 1.0, atol=1e-12)


def test_lemma33_equality_case():
    assert abs(check_lemma33(np.diag([1.0, 1.0, -2.0]))) < 1e-12
    assert check_lemma33(np.diag([-1.0, -1.0, 2.0])) == pytest.approx(2 * 6**1.5 / math.sqrt(6), rel=1e-12)


def test_lemma33_requires_traceless():
    with pytest.raises(InvalidArgument):
        check_lemma33(np.eye(3))


sym = arrays(np.float64, (3, 3), elements=st.floats(-10, 10)).map(lambda a: a + a.T)


@settings(max_examples=300, deadline=None)
@given(sym)
def test_lemma33_random(S):
    E = S - np.trace(S) / 3 * np.eye(3)
    norm = math.sqrt(float(np.sum(E * E)))
    if np.abs(np.trace(E)) > 1e-12 * norm:
        return
    assert check_lemma33(E) >= -1e-12 * (1 + norm**3)


@settings(max_examples=300, deadline=None)
@given(sym)
def test_lemma31_random(A):
    res = check_lemma31(A)
    if res.hypotheses_hold:
        assert res.conclusion_slack >= -1e-12 * (1 + np.abs(A).max())


def test_lemma31_examples():
    assert check_lemma31(np.diag([1.0, 0.0, 0.0])) .hypotheses_hold
    assert not check_lemma31(np.diag([1.0, 1.0, -1.0])).hypotheses_hold
    assert check_lemma31(np.diag([1.0, 1.0, 1.0])).conclusion_slack == pytest.approx(2.0)


def test_kato_skip_marker_on_flat():
    assert check_kato(curvature_data(catalog_metric("flat"), (0, 0, 0))) is None


@pytest.mark.parametrize("seed", range(5))
def test_kato_on_warped_charts(seed):
    chart, point = random_warped_chart(np.random.default_rng(seed))
    slack = check_kato(curvature_data(chart, point), threshold=1e-6)
    assert slack is None or slack >= -1e-10


def test_lemma32_on_critical_example():
    cd = curvature_data(catalog_metric("gv_example"), (0.7, -0.3, 0.0))
    assert abs(check_lemma32_on_critical(cd)) < 1e-10


def test_lemma32_rejects_nonconstant_sigma2():
    chart, point = random_warped_chart(np.random.default_rng(3))
    with pytest.raises(PreconditionError) as info:
        check_lemma32_on_critical(curvature_data(chart, point))
    assert info.value.drift > 1e-8


def test_config_validation():
    with pytest.raises(ConfigError):
        SuiteConfig(tolerances={"lemma33": -1.0}).validate()
    with pytest.raises(ConfigError):
        SuiteConfig(n_matrix_trials=0).validate()
    with pytest.raises(ConfigError):
        SuiteConfig(tolerances={"nonsense": 1.0}).validate()


def test_suite_small_run_is_deterministic_and_passes():
    cfg = SuiteConfig(seed=3, n_matrix_trials=2000, n_chart_trials=15)
    a, b = run_suite(cfg), run_suite(cfg)
    assert a.overall
    assert a.as_dict() == b.as_dict()
    assert [c.name for c in a.checks][-2:] == ["lemma33", "lemma31"]
    assert a.check("lemma31").passed == 2000
    with pytest.raises(KeyError):
        a.check("missing")


def test_suite_reports_failures_with_input():
    # a zero tolerance turns rounding noise into failures
    cfg = SuiteConfig(seed=1, n_matrix_trials=100, n_chart_trials=10, tolerances={"trace_identity": 0.0})
    report = run_suite(cfg)
    check = report.check("trace_identity")
    assert not report.overall
    assert check.failed > 0
    assert set(check.failing_input) >= {"g33", "point", "t"}
    assert report.as_dict()["overall"] == "fail"


def test_documented_matrix_examples():
    zero = check_lemma31(np.zeros((3, 3)))
    assert zero.hypotheses_hold and zero.conclusion_slack == 0.0
    res = check_lemma31(np.diag([0.0, 1.0, 1.0]))
    assert res.hypotheses_hold and res.conclusion_slack == pytest.approx(1.0)
    res = check_lemma31(np.diag([-1.0, -1.0, 3.0]))
    assert not res.hypotheses_hold and res.conclusion_slack == pytest.approx(-2.0)
    assert check_lemma33(np.zeros((3, 3))) == 0.0
    assert check_lemma33(np.diag([2.0, -1.0, -1.0])) == pytest.approx(12.0, rel=1e-14)


def test_constant_curvature_and_example_identities():
    sphere = curvature_data(catalog_metric("round_sphere"), (1.0, 1.3, 0.2))
    assert check_decomposition(sphere) < 1e-10
    assert check_contraction(sphere) < 1e-10
    gv = curvature_data(catalog_metric("gv_example"), (0.0, 0.0, 0.0))
    assert check_contraction(gv) < 1e-10
    rhs = -2 * np.diag([4 / 9, 4 / 9, 16 / 9]) + 8 / 6 * np.diag([2 / 3, 2 / 3, -4 / 3]) + 8 / 3 * np.eye(3)
    from sigma2.functionals import riemann_contract

    np.testing.assert_allclose(riemann_contract(gv, gv.E), rhs, atol=1e-12)
    flat = curvature_data(catalog_metric("flat"), (0.0, 0.0, 0.0))
    assert check_decomposition(flat) == 0.0 and check_contraction(flat) == 0.0
    assert check_lemma32_on_critical(flat) == 0.0


def test_kato_at_example_origin():
    assert check_kato(curvature_data(catalog_metric("gv_example"), (0.0, 0.0, 0.0))) >= 0.0


def test_default_suite_seed_42_passes_and_is_byte_identical():
    from sigma2.report import write_report

    a, b = run_suite(SuiteConfig(seed=42)), run_suite(SuiteConfig(seed=42))
    assert a.overall
    assert write_report(a) == write_report(b)
