# SPDX-FileCopyrightText: Copyright 2026 BellaKeri@github.com & balparda@github.com
# SPDX-License-Identifier: Apache-2.0
"""audit.py unittest."""

from __future__ import annotations

import math

import numpy as np
import pytest

from mrfaudit import audit, functionals, glauber, lattice, model
from mrfaudit import mrf_base as base


def _Measure(d: int, n: int, beta: float, h: float = 0.0) -> model.ExactMeasure:
  return model.BuildExactMeasure(
    model.ModelParams(d=d, beta=beta, h=h), lattice.EnumerateBox(d, n), model.BoundaryCondition.FREE
  )


@pytest.mark.parametrize(('beta', 'h'), [(0.0, 0.0), (0.2, 0.1), (0.4, 0.3)])
def test_MartingaleDecomposition(beta: float, h: float) -> None:
  """Test."""
  m: model.ExactMeasure = _Measure(2, 6, beta, h)
  f: functionals.Functional = functionals.RandomPolynomial(3, 2, m.enumeration)
  report: audit.VarianceReport = audit.MartingaleDecomposition(m, f)
  assert report.identity_defect < 1e-10
  assert len(report.martingale_terms) == 6
  assert all(t >= 0.0 for t in report.martingale_terms)
  assert report.dirichlet > 0.0 and report.ratio > 0.0
  dumped = audit.VarianceReportModel.from_domain(report)
  assert dumped.ratio == pytest.approx(report.ratio)


def test_MartingaleDecomposition_spin_at_first_rank() -> None:
  """Test."""
  m: model.ExactMeasure = _Measure(1, 3, 0.0)
  report: audit.VarianceReport = audit.MartingaleDecomposition(
    m, functionals.Spin(m.enumeration, (0,))
  )
  assert report.variance == pytest.approx(1.0)
  assert report.martingale_terms == pytest.approx((1.0, 0.0, 0.0))
  assert report.dirichlet == pytest.approx(4.0)
  assert report.delta_norm_sq == pytest.approx(4.0)
  assert report.ratio == pytest.approx(0.25)


def test_VarianceReport_ratio_edges() -> None:
  """Test."""
  flat = audit.VarianceReport(
    name='f', variance=0.0, martingale_terms=(), dirichlet=0.0, delta_norm_sq=0.0
  )
  assert flat.ratio == 0.0
  broken = audit.VarianceReport(
    name='f', variance=1.0, martingale_terms=(1.0,), dirichlet=0.0, delta_norm_sq=0.0
  )
  assert broken.ratio == math.inf


def test_ConditionalExpectations_conditioned() -> None:
  """Test."""
  m: model.ExactMeasure = _Measure(1, 3, 0.1)
  with pytest.raises(base.InputError):
    audit.ConditionalExpectations(model.ConditionalMeasure(m, (1,)), np.zeros(4))


def test_UniformVarianceAudit() -> None:
  """Test."""
  m: model.ExactMeasure = _Measure(1, 3, 0.0)
  result: audit.UniformVarianceResult = audit.UniformVarianceAudit(
    m, [functionals.Spin(m.enumeration, (1,)), functionals.Constant(1.0)]
  )
  assert result.worst_ratio == pytest.approx(0.25)
  assert result.skipped == ('const(1.0)',)
  assert [name for name, _ in result.ratios] == ['spin(3)']


@pytest.mark.parametrize(('samples', 'cap'), [(0, 10), (10, 0)])
def test_PercolationBudget_invalid(samples: int, cap: int) -> None:
  """Test."""
  with pytest.raises(base.InputError):
    audit.PercolationBudget(samples=samples, cap=cap)


def test_PoincareCertificateFor_product() -> None:
  """Test."""
  cert: audit.PoincareCertificate = audit.PoincareCertificateFor(
    model.ModelParams(d=2, beta=0.0), audit.PercolationBudget(samples=200, cap=8)
  )
  assert cert.regime is audit.CertificateRegime.THEOREM1
  assert cert.c_p == pytest.approx(1.0)
  assert cert.delta == pytest.approx(0.5)
  assert cert.gap_lower_bound == pytest.approx(1.0)
  dumped = audit.PoincareCertificateModel.from_domain(cert)
  assert dumped.regime == 'theorem1' and dumped.moment is not None


def test_PoincareCertificateFor_none() -> None:
  """Test."""
  cert: audit.PoincareCertificate = audit.PoincareCertificateFor(
    model.ModelParams(d=2, beta=0.5), audit.PercolationBudget(samples=10, cap=4)
  )
  assert cert.regime is audit.CertificateRegime.NONE
  assert cert.c_p == math.inf and cert.gap_lower_bound == 0.0
  assert cert.moment is None
  assert audit.PoincareCertificateModel.from_domain(cert).model_dump_json().count('Infinity') == 1


def test_PoincareCertificateFor_weak() -> None:
  """Test."""
  params = model.ModelParams(d=2, beta=model.BetaForP(0.3, 2))
  assert not model.SqrtTailSufficient(params)
  cert: audit.PoincareCertificate = audit.PoincareCertificateFor(
    params, audit.PercolationBudget(samples=10, cap=4)
  )
  assert cert.regime is audit.CertificateRegime.WEAK
  assert cert.p == pytest.approx(0.3)


def test_PoincareCertificate_invalid() -> None:
  """Test."""
  with pytest.raises(base.Error):
    audit.PoincareCertificate(
      regime=audit.CertificateRegime.THEOREM1,
      c=0.0,
      c_prime=0.0,
      p=0.0,
      saw_ratio=0.0,
      sqrt_tail_condition=True,
      delta=0.5,
      moment=None,
      c_p=1.0,
      gap_lower_bound=1.0,
    )


def test_PoincareAudit_product() -> None:
  """Test."""
  params = model.ModelParams(d=2, beta=0.0)
  m: model.ExactMeasure = _Measure(2, 4, 0.0)
  cert: audit.PoincareCertificate = audit.PoincareCertificateFor(
    params, audit.PercolationBudget(samples=200, cap=8)
  )
  battery: list[functionals.Functional] = [
    functionals.Spin(m.enumeration, (0, 0)),
    functionals.Corr(m.enumeration, (0, 0), (-1, 0)),
    functionals.RandomPolynomial(1, 3, m.enumeration),
  ]
  result: audit.PoincareAuditResult = audit.PoincareAudit(
    m, glauber.RateFunction(params=params), battery, cert
  )
  assert result.gap == pytest.approx(1.0)
  assert result.sharp_constant == pytest.approx(0.25)
  assert len(result.reports) == 3
  names: list[str] = [a.name for a in result.assertions]
  assert 'sharp_constant_vs_gap' in names and 'gap_vs_certificate' in names
  assert 'poincare(spin(1))' in names
  assert base.AllPassed(result.assertions)


@pytest.mark.parametrize(('beta', 'h'), [(0.01, 0.0), (0.015, 0.5)])
def test_PoincareAudit_certified(beta: float, h: float) -> None:
  """Test."""
  params = model.ModelParams(d=2, beta=beta, h=h)
  m: model.ExactMeasure = _Measure(2, 6, beta, h)
  cert: audit.PoincareCertificate = audit.PoincareCertificateFor(
    params, audit.PercolationBudget(samples=2000, cap=16)
  )
  assert cert.regime is audit.CertificateRegime.THEOREM1
  battery: list[functionals.Functional] = [
    functionals.RandomPolynomial(seed, 3, m.enumeration) for seed in range(5)
  ]
  result: audit.PoincareAuditResult = audit.PoincareAudit(
    m, glauber.RateFunction(params=params), battery, cert
  )
  assert base.AllPassed(result.assertions)


def test_WeakPoincareCurve() -> None:
  """Test."""
  curve = audit.WeakPoincareCurve(points=((1, 0.5, 1.0), (2, 0.1, 3.0)))
  assert curve.Alpha(1.0) == 0.0
  assert curve.Alpha(0.7) == 1.0
  assert curve.Alpha(0.2) == 1.0
  assert curve.Alpha(0.1) == 1.0
  assert curve.Alpha(0.05) == math.inf
  with pytest.raises(base.Error):
    audit.WeakPoincareCurve(points=((1, -0.5, 1.0),))
  dumped = audit.WeakPoincareCurveModel.from_domain(curve)
  assert dumped.points[1] == {'N': 2, 'r': 0.1, 'alpha': 3.0}
  assert dumped.kappa is None


def test_WeakPoincareCurve_Assertions() -> None:
  """Test."""
  fitted: audit.WeakPoincareCurve = audit.FitWeakCurve(
    [(1, 0.25, 4.0), (2, 0.0625, 8.0), (3, 0.015625, 16.0)]
  )
  checks: dict[str, bool] = {a.name: a.passed for a in fitted.Assertions()}
  assert checks == {
    'tail_nonincreasing': True,
    'kn_nondecreasing': True,
    'alpha_nonincreasing_in_r': True,
    'kappa_positive': True,
  }
  quality: base.Assertion | None = fitted.FitQuality()
  assert quality is not None and quality.passed
  inverted = audit.WeakPoincareCurve(points=((1, 0.5, 1.0), (2, 0.6, 2.0)))
  checks = {a.name: a.passed for a in inverted.Assertions()}
  assert checks == {
    'tail_nonincreasing': False,
    'kn_nondecreasing': True,
    'alpha_nonincreasing_in_r': False,
  }
  assert inverted.FitQuality() is None
  flat = audit.WeakPoincareCurve(
    points=((1, 0.5, 1.0), (2, 0.25, 1.0)), kappa=0.0, c=1.0, r_squared=0.5
  )
  by_name: dict[str, base.Assertion] = {a.name: a for a in flat.Assertions()}
  assert not by_name['kappa_positive'].passed
  assert by_name['kn_nondecreasing'].passed
  low: base.Assertion | None = flat.FitQuality()
  assert low is not None and not low.passed


def test_FitWeakCurve() -> None:
  """Test."""
  curve: audit.WeakPoincareCurve = audit.FitWeakCurve(
    [(1, 0.25, 4.0), (2, 0.0625, 8.0), (3, 0.015625, 16.0)]
  )
  assert curve.kappa == pytest.approx(0.5)
  assert curve.c == pytest.approx(2.0)
  assert curve.r_squared == pytest.approx(1.0)
  single: audit.WeakPoincareCurve = audit.FitWeakCurve([(1, 0.25, 4.0), (2, 0.0, 8.0)])
  assert single.kappa is None and single.c is None


def test_WeakPoincareCurveFor() -> None:
  """Test."""
  params = model.ModelParams(d=2, beta=model.BetaForP(0.3, 2))
  curve: audit.WeakPoincareCurve = audit.WeakPoincareCurveFor(
    params, [8, 1, 4, 2], audit.PercolationBudget(samples=2000, cap=32, seed=3)
  )
  assert [n for n, _, _ in curve.points] == [1, 2, 4, 8]
  rs: list[float] = [r for _, r, _ in curve.points]
  alphas: list[float] = [a for _, _, a in curve.points]
  assert rs == sorted(rs, reverse=True)
  assert alphas == sorted(alphas)
  assert alphas[0] == pytest.approx(2.0 * math.exp(3.0 * params.c))
  assert curve.kappa is not None and curve.kappa > 0.0
  assert base.AllPassed(curve.Assertions())


def test_WeakPoincareCurveFor_invalid() -> None:
  """Test."""
  budget = audit.PercolationBudget(samples=10, cap=4)
  with pytest.raises(base.InputError):
    audit.WeakPoincareCurveFor(model.ModelParams(d=2, beta=0.5), [1, 2], budget)
  with pytest.raises(base.InputError):
    audit.WeakPoincareCurveFor(model.ModelParams(d=2, beta=0.01), [], budget)
  with pytest.raises(base.InputError):
    audit.WeakPoincareCurveFor(model.ModelParams(d=2, beta=0.01), [0, 2], budget)


def test_PowerLawXiBound() -> None:
  """Test."""
  assert audit.PowerLawXiBound(1.0, 1.0, 1.0, 2.0) == pytest.approx(1.0)
  assert audit.PowerLawXiBound(1.0, 1.0, 1.0, 8.0) == pytest.approx(0.25)
  with pytest.raises(base.InputError):
    audit.PowerLawXiBound(0.0, 1.0, 1.0, 1.0)


def test_XiOfT() -> None:
  """Test."""
  curve = audit.WeakPoincareCurve(points=((1, 0.5, 1.0),))
  assert audit.XiOfT(curve, 1.0, 0.0).value == pytest.approx(1.0)
  assert audit.XiOfT(curve, 1.0, 0.1).value == pytest.approx(math.exp(-0.2), rel=1e-9)
  assert audit.XiOfT(curve, 1.0, 10.0).value == pytest.approx(0.5, rel=1e-9)
  assert audit.XiOfT(curve, 1.0, 10.0).power_law_bound is None
  fitted = audit.WeakPoincareCurve(
    points=((1, 0.5, 2.0), (2, 0.125, 4.0)), kappa=0.5, c=math.sqrt(2.0), r_squared=1.0
  )
  xi: audit.XiValue = audit.XiOfT(fitted, 0.5, 3.0)
  assert xi.power_law_bound == pytest.approx(
    audit.PowerLawXiBound(0.5, math.sqrt(2.0), 0.5, 3.0)
  )
  with pytest.raises(base.InputError):
    audit.XiOfT(curve, 1.0, -1.0)
  with pytest.raises(base.InputError):
    audit.XiOfT(curve, 0.0, 1.0)


def test_WeakRelaxationAudit_product() -> None:
  """Test."""
  params = model.ModelParams(d=1, beta=0.0)
  m: model.ExactMeasure = _Measure(1, 4, 0.0)
  curve = audit.WeakPoincareCurve(points=((1, 0.5, 1.0),))
  relaxation, checks = audit.WeakRelaxationAudit(
    m,
    glauber.RateFunction(params=params),
    functionals.Spin(m.enumeration, (0,)).Vector(m.enumeration),
    curve,
    [0.0, 0.5, 2.0],
  )
  assert relaxation.variances == pytest.approx([1.0, math.exp(-1.0), math.exp(-4.0)], rel=1e-6)
  assert len(checks) == 3
  assert base.AllPassed(checks)
  assert checks[0].rhs == pytest.approx(5.0)


def test_RunCountSeparation_product() -> None:
  """Test."""
  rows, checks, stated = audit.RunCountSeparation(model.ModelParams(d=1, beta=0.0), 5, [1, 2])
  assert [r.k for r in rows] == [1, 2]
  first: audit.RunCountRow = rows[0]
  assert first.theta == pytest.approx(0.5)
  assert first.cylinder_theta == pytest.approx(0.5)
  assert first.coverage == (1, 2, 2, 2, 1)
  assert first.site_terms == pytest.approx((0.5, 1.5, 1.5, 1.5, 0.5))
  assert first.dirichlet == pytest.approx(5.5)
  assert first.variance == pytest.approx(functionals.RunCountVarianceProduct(5, 1, 0.5))
  assert first.var_over_dirichlet == pytest.approx(first.variance / 5.5)
  assert rows[1].theta == pytest.approx(0.5)
  assert len(checks) == 4 and len(stated) == 4
  assert base.AllPassed(checks)


def test_RunCountSeparation_correlated() -> None:
  """Test."""
  rows, checks, _ = audit.RunCountSeparation(model.ModelParams(d=1, beta=0.3, h=0.2), 7, [1, 2, 3])
  assert len(rows) == 3
  assert base.AllPassed(checks)
  for row in rows:
    assert 0.5 < row.theta < 1.0
    assert row.variance > 0.0


def test_RunCountSeparation_invalid() -> None:
  """Test."""
  with pytest.raises(base.InputError):
    audit.RunCountSeparation(model.ModelParams(d=2, beta=0.0), 5, [1])
  with pytest.raises(base.InputError):
    audit.RunCountSeparation(model.ModelParams(d=1, beta=0.0), 5, [5])
