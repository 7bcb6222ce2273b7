# SPDX-FileCopyrightText: Copyright 2026 BellaKeri@github.com & balparda@github.com
# SPDX-License-Identifier: Apache-2.0
"""Variance inequalities assembled from the percolation, coupling and dynamics modules.

Martingale decomposition of the variance along the enumeration filtration, the uniform variance
and Poincaré audits, the Poincaré certificate (strong and square-root-tail percolation regimes),
the weak Poincaré curve with its relaxation profile ξ(t), and the run-counter separation example.
"""

from __future__ import annotations

import dataclasses
import enum
import itertools
import logging
import math
from collections import abc

import numpy as np
import pydantic
from scipy import stats

from . import functionals, glauber, lattice, model, percolation
from . import mrf_base as base

_IDENTITY_TOLERANCE = 1e-10
_POINCARE_TOLERANCE = 1e-10
_GAP_TOLERANCE = 1e-8
_XI_BISECTION_STEPS = 200
_XI_LOG_FLOOR = -700.0  # smallest log r searched
_MONOTONE_TOLERANCE = 1e-12  # relative, for curves from one shared batch
_FIT_R_SQUARED = 0.9


####################################################################################################
# MARTINGALE DECOMPOSITION AND UNIFORM VARIANCE
####################################################################################################


@dataclasses.dataclass(kw_only=True, slots=True, frozen=True)
class VarianceReport:
  """Var(f), its martingale terms E(Δ_i²), the plain Dirichlet form and ‖δf‖₂²."""

  name: str
  variance: float
  martingale_terms: tuple[float, ...]
  dirichlet: float
  delta_norm_sq: float

  @property
  def ratio(self) -> float:
    """Var/E (0 for 0/0, inf when only E vanishes)."""
    if self.dirichlet > 0.0:
      return self.variance / self.dirichlet
    return 0.0 if self.variance <= _IDENTITY_TOLERANCE else math.inf

  @property
  def identity_defect(self) -> float:
    """|Var - Σ E(Δ_i²)|."""
    return abs(self.variance - math.fsum(self.martingale_terms))


def ConditionalExpectations(m: model.ExactMeasure, values: np.ndarray, /) -> list[np.ndarray]:
  """E(f | first i spins) for i = 0..N, each as a vector over the 2^i prefixes."""
  if m.prefix:
    raise base.InputError('martingale decomposition needs an unconditioned measure')
  weighted: np.ndarray = m.probs * values
  out: list[np.ndarray] = []
  for i in range(m.n_free + 1):
    mass: np.ndarray = m.probs.reshape(-1, 1 << i).sum(axis=0)
    total: np.ndarray = weighted.reshape(-1, 1 << i).sum(axis=0)
    out.append(np.divide(total, mass, out=np.zeros_like(total), where=mass > 0.0))
  return out


def MartingaleDecomposition(m: model.ExactMeasure, f: functionals.Functional, /) -> VarianceReport:
  """Var(f) = Σ_i E(Δ_i²) with Δ_i = E(f | F_i) - E(f | F_{i-1}) along the enumeration.

  Raises:
    InputError: conditioned measure
    CapacityError: box too large for exact variations

  """
  values: np.ndarray = f.Vector(m.enumeration)
  levels: list[np.ndarray] = ConditionalExpectations(m, values)
  terms: list[float] = []
  for i in range(1, m.n_free + 1):
    mass: np.ndarray = m.probs.reshape(-1, 1 << i).sum(axis=0)
    previous: np.ndarray = np.tile(levels[i - 1], 2)  # low i-1 bits of each i-bit prefix
    terms.append(float(np.dot(mass, (levels[i] - previous) ** 2)))
  report = VarianceReport(
    name=f.name,
    variance=functionals.Variance(m, values),
    martingale_terms=tuple(terms),
    dirichlet=functionals.DirichletPlain(m, values),
    delta_norm_sq=functionals.DeltaNormSq(f, m.enumeration).value,
  )
  logging.debug('martingale decomposition of %s: defect %r', f.name, report.identity_defect)
  return report


class VarianceReportModel(base.ReportBaseModel):
  """Variance decomposition of one functional."""

  name: str = pydantic.Field(description='Functional')
  variance: float = pydantic.Field(description='Var(f)')
  martingale_terms: list[float] = pydantic.Field(description='E(Δ_i²) along the enumeration')
  dirichlet: float = pydantic.Field(description='Plain Dirichlet form E(f,f)')
  ratio: float = pydantic.Field(description='Var(f)/E(f,f)')
  delta_norm_sq: float = pydantic.Field(description='Σ_x (δ_x f)²')

  @classmethod
  def from_domain(cls, r: VarianceReport) -> VarianceReportModel:
    """Convert domain ``VarianceReport`` to Pydantic model.

    Returns:
      VarianceReportModel: converted model

    """
    return cls(
      name=r.name,
      variance=r.variance,
      martingale_terms=list(r.martingale_terms),
      dirichlet=r.dirichlet,
      ratio=r.ratio,
      delta_norm_sq=r.delta_norm_sq,
    )


@dataclasses.dataclass(kw_only=True, slots=True, frozen=True)
class UniformVarianceResult:
  """Empirical constant of Var(f) <= C·‖δf‖₂² over a battery."""

  worst_ratio: float
  ratios: tuple[tuple[str, float], ...]
  skipped: tuple[str, ...]  # ‖δf‖₂² = 0


def UniformVarianceAudit(
  m: model.ExactMeasure, battery: abc.Sequence[functionals.Functional], /
) -> UniformVarianceResult:
  """max_f Var(f)/‖δf‖₂², skipping functionals without variation."""
  ratios: list[tuple[str, float]] = []
  skipped: list[str] = []
  for f in battery:
    values: np.ndarray = f.Vector(m.enumeration)
    norm: float = functionals.DeltaNormSq(f, m.enumeration).value
    if norm <= 0.0:
      skipped.append(f.name)
      continue
    ratios.append((f.name, functionals.Variance(m, values) / norm))
  return UniformVarianceResult(
    worst_ratio=max((r for _, r in ratios), default=0.0),
    ratios=tuple(ratios),
    skipped=tuple(skipped),
  )


####################################################################################################
# POINCARÉ CERTIFICATE
####################################################################################################


@dataclasses.dataclass(kw_only=True, slots=True, frozen=True)
class PercolationBudget:
  """Monte Carlo workload for the percolation constants."""

  samples: int = 100_000
  cap: int = 64
  seed: int = 0
  threads: int = 1

  def __post_init__(self) -> None:
    """Check construction.

    Raises:
      InputError: samples or cap < 1

    """
    if self.samples < 1 or self.cap < 1:
      raise base.InputError(f'invalid budget: samples={self.samples}, cap={self.cap}')

  def Streams(self) -> base.Streams:
    """Stream family of the percolation workload."""
    return base.Streams(seed=self.seed, tag='audit/percolation')


class CertificateRegime(enum.Enum):
  """Which inequality the parameters certify."""

  THEOREM1 = 'theorem1'  # moment of |C|e^{c|C|} finite
  THEOREM2 = 'theorem2'  # square-root tail series finite
  WEAK = 'weak'  # subcritical percolation only
  NONE = 'none'


@dataclasses.dataclass(kw_only=True, slots=True, frozen=True)
class PoincareCertificate:
  """Regime, constants and Poincaré constant C_P (inf when not certified)."""

  regime: CertificateRegime
  c: float
  c_prime: float
  p: float
  saw_ratio: float
  sqrt_tail_condition: bool
  delta: float
  moment: percolation.MomentEstimate | None
  c_p: float
  gap_lower_bound: float

  def __post_init__(self) -> None:
    """Check construction.

    Raises:
      Error: a strong regime without a finite constant

    """
    strong: bool = self.regime in {CertificateRegime.THEOREM1, CertificateRegime.THEOREM2}
    if strong and (self.moment is None or not self.moment.finite or not math.isfinite(self.c_p)):
      raise base.Error(f'{self.regime.value} certificate needs a finite moment envelope')


class PoincareCertificateModel(base.ReportBaseModel):
  """Poincaré certificate."""

  regime: str = pydantic.Field(description='theorem1 | theorem2 | weak | none')
  c: float = pydantic.Field(description='2βh + 4βd')
  c_prime: float = pydantic.Field(description='4βd')
  p: float = pydantic.Field(description='Per-site disagreement bound')
  saw_ratio: float = pydantic.Field(description='p(2d-1)e^c')
  sqrt_tail_condition: bool = pydantic.Field(description='Closed-form square-root tail test')
  delta: float = pydantic.Field(description='Lower bound of the heat-bath rates')
  moment: percolation.MomentEstimateModel | None = pydantic.Field(
    description='K (theorem1) or K-prime (theorem2) envelope'
  )
  c_p: float = pydantic.Field(description='Poincaré constant e^{2c}·(moment upper)²')
  gap_lower_bound: float = pydantic.Field(description='2δ/C_P')

  @classmethod
  def from_domain(cls, cert: PoincareCertificate) -> PoincareCertificateModel:
    """Convert domain ``PoincareCertificate`` to Pydantic model.

    Returns:
      PoincareCertificateModel: converted model

    """
    return cls(
      regime=cert.regime.value,
      c=cert.c,
      c_prime=cert.c_prime,
      p=cert.p,
      saw_ratio=cert.saw_ratio,
      sqrt_tail_condition=cert.sqrt_tail_condition,
      delta=cert.delta,
      moment=percolation.MomentEstimateModel.from_domain(cert.moment),
      c_p=cert.c_p,
      gap_lower_bound=cert.gap_lower_bound,
    )


def PoincareCertificateFor(
  params: model.ModelParams, budget: PercolationBudget, /
) -> PoincareCertificate:
  """Try the strong moment condition, then the square-root tail condition, then subcriticality.

  Args:
    params: model
    budget: percolation workload

  Returns:
    PoincareCertificate: the first regime that applies (regime NONE is a valid outcome)

  """
  p: float = params.p
  delta: float = glauber.RateFunction(params=params).delta
  saw_ratio: float = percolation.SAWRatio(p, params.d, params.c)
  sqrt_tail: bool = model.SqrtTailSufficient(params)

  def _Certificate(
    regime: CertificateRegime, moment: percolation.MomentEstimate | None, c_p: float, /
  ) -> PoincareCertificate:
    return PoincareCertificate(
      regime=regime,
      c=params.c,
      c_prime=params.c_prime,
      p=p,
      saw_ratio=saw_ratio,
      sqrt_tail_condition=sqrt_tail,
      delta=delta,
      moment=moment,
      c_p=c_p,
      gap_lower_bound=2.0 * delta / c_p if math.isfinite(c_p) else 0.0,
    )

  candidates: list[tuple[CertificateRegime, percolation.MomentEstimate]] = []
  if p < 1.0 and (saw_ratio < 1.0 or sqrt_tail):
    batch: percolation.ClusterSizes = percolation.SampleClusterSizes(
      p, params.d, budget.cap, budget.samples, budget.Streams(), threads=budget.threads
    )
    if saw_ratio < 1.0:
      candidates.append((CertificateRegime.THEOREM1, batch.MomentK(params.c)))
    if sqrt_tail:
      candidates.append((CertificateRegime.THEOREM2, batch.KPrime(params.c_prime)))
  for regime, moment in candidates:
    if moment.finite:
      c_p: float = math.exp(2.0 * params.c) * moment.upper**2
      logging.info('Certificate %s: C_P=%r', regime.value, c_p)
      return _Certificate(regime, moment, c_p)
    logging.warning('%s envelope is not finite at %r', regime.value, params)
  fallback: CertificateRegime = (
    CertificateRegime.WEAK if p < model.PercolationThreshold(params.d) else CertificateRegime.NONE
  )
  logging.info('Certificate %s (no finite Poincaré constant)', fallback.value)
  return _Certificate(fallback, None, math.inf)


@dataclasses.dataclass(kw_only=True, slots=True, frozen=True)
class PoincareAuditResult:
  """Per-functional reports, the exact gap (when computable) and every assertion made."""

  reports: tuple[VarianceReport, ...]
  sharp_constant: float  # max_f Var/E over the battery
  gap: float | None
  assertions: tuple[base.Assertion, ...]


def PoincareAudit(
  m: model.ExactMeasure,
  rates: glauber.RateFunction,
  battery: abc.Sequence[functionals.Functional],
  cert: PoincareCertificate,
  /,
) -> PoincareAuditResult:
  """Check Var(f) <= C_P·E(f,f) (and the implied uniform bound) over a battery.

  Also checks the battery's sharp constant against M/(2·gap) and the gap against 2δ/C_P when
  the box fits the exact generator.
  """
  reports: list[VarianceReport] = [MartingaleDecomposition(m, f) for f in battery]
  checks: list[base.Assertion] = []
  if math.isfinite(cert.c_p):
    for r in reports:
      checks.append(
        base.Assertion(
          name=f'poincare({r.name})',
          lhs=r.variance,
          rhs=cert.c_p * r.dirichlet,
          tolerance=_POINCARE_TOLERANCE,
        )
      )
      checks.append(
        base.Assertion(
          name=f'uniform_from_poincare({r.name})',
          lhs=r.variance,
          rhs=cert.c_p * r.delta_norm_sq,
          tolerance=_POINCARE_TOLERANCE,
        )
      )
  sharp: float = max(
    (r.variance / r.dirichlet for r in reports if r.dirichlet > 0.0), default=0.0
  )
  gap: float | None = None
  if m.n_free <= glauber.MAX_GENERATOR_SITES:
    gap = glauber.SpectralGapExact(m, rates)
    checks.append(
      base.Assertion(
        name='sharp_constant_vs_gap',
        lhs=sharp,
        rhs=rates.upper / (2.0 * gap),
        tolerance=_POINCARE_TOLERANCE,
      )
    )
    if math.isfinite(cert.c_p):
      checks.append(
        base.Assertion(
          name='gap_vs_certificate', lhs=cert.gap_lower_bound, rhs=gap, tolerance=_GAP_TOLERANCE
        )
      )
  return PoincareAuditResult(
    reports=tuple(reports), sharp_constant=sharp, gap=gap, assertions=tuple(checks)
  )


####################################################################################################
# WEAK POINCARÉ
####################################################################################################


@dataclasses.dataclass(kw_only=True, slots=True, frozen=True)
class WeakPoincareCurve:
  """Points (N, r, α) with the power-law fit α ≈ C·r^{-κ}; κ is None without a fit."""

  points: tuple[tuple[int, float, float], ...]
  kappa: float | None = None
  c: float | None = None
  r_squared: float | None = None

  def __post_init__(self) -> None:
    """Check construction.

    Raises:
      Error: negative r or α

    """
    if any(r < 0.0 or a < 0.0 for _, r, a in self.points):
      raise base.Error('weak Poincaré points must be nonnegative')

  def Alpha(self, r: float, /) -> float:
    """Best α for a given r: min α(N) over r(N) <= r; 0 for r >= 1; inf when nothing applies."""
    if r >= 1.0:
      return 0.0
    return min((a for _, rn, a in self.points if rn <= r), default=math.inf)

  def Assertions(self) -> list[base.Assertion]:
    """Shape checks of the curve: r nonincreasing and α (so K_N) nondecreasing in N, and κ > 0.

    Points from one cluster batch are monotone in N pathwise, so the tolerance only absorbs
    rounding. `alpha_nonincreasing_in_r` covers points given in any order.
    """
    ordered: list[tuple[int, float, float]] = sorted(self.points)
    tail_rise: float = max((b[1] - a[1] for a, b in itertools.pairwise(ordered)), default=0.0)
    alpha_drop: float = max((a[2] - b[2] for a, b in itertools.pairwise(ordered)), default=0.0)
    inversion: float = max(
      (b[2] - a[2] for a, b in itertools.permutations(self.points, 2) if b[1] > a[1]),
      default=0.0,
    )
    scale: float = max((max(r, a) for _, r, a in self.points), default=0.0)
    tolerance: float = _MONOTONE_TOLERANCE * max(1.0, scale)
    checks: list[base.Assertion] = [
      base.Assertion(name='tail_nonincreasing', lhs=tail_rise, rhs=0.0, tolerance=tolerance),
      base.Assertion(name='kn_nondecreasing', lhs=alpha_drop, rhs=0.0, tolerance=tolerance),
      base.Assertion(name='alpha_nonincreasing_in_r', lhs=inversion, rhs=0.0, tolerance=tolerance),
    ]
    if self.kappa is not None:
      checks.append(base.Assertion(name='kappa_positive', lhs=0.0, rhs=self.kappa, strict=True))
    return checks

  def FitQuality(self) -> base.Assertion | None:
    """R² of the log-log fit against 0.9 (informational; None without a fit)."""
    if self.r_squared is None:
      return None
    return base.Assertion(name='fit_r_squared', lhs=_FIT_R_SQUARED, rhs=self.r_squared)


class WeakPoincareCurveModel(base.ReportBaseModel):
  """Weak Poincaré curve."""

  points: list[dict[str, float]] = pydantic.Field(
    description=(
      '{N, r, alpha} per truncation level; Monte Carlo point estimates (no standard error or'
      ' analytic remainder), unlike the envelope used by the Poincaré certificate'
    )
  )
  kappa: float | None = pydantic.Field(description='Fitted exponent (α ≈ C r^-κ)')
  c: float | None = pydantic.Field(description='Smallest C with α <= C r^-κ on the points')
  r_squared: float | None = pydantic.Field(description='Log-log fit R²')

  @classmethod
  def from_domain(cls, curve: WeakPoincareCurve) -> WeakPoincareCurveModel:
    """Convert domain ``WeakPoincareCurve`` to Pydantic model.

    Returns:
      WeakPoincareCurveModel: converted model

    """
    return cls(
      points=[{'N': n, 'r': r, 'alpha': a} for n, r, a in curve.points],
      kappa=curve.kappa,
      c=curve.c,
      r_squared=curve.r_squared,
    )


def FitWeakCurve(points: abc.Sequence[tuple[int, float, float]], /) -> WeakPoincareCurve:
  """Fit log α against log r over the points with r > 0 (at least two distinct r needed)."""
  usable: list[tuple[int, float, float]] = [pt for pt in points if pt[1] > 0.0 and pt[2] > 0.0]
  if len({r for _, r, _ in usable}) < 2:  # noqa: PLR2004
    return WeakPoincareCurve(points=tuple(points))
  line = stats.linregress(
    np.log([r for _, r, _ in usable]), np.log([a for _, _, a in usable])
  )
  kappa: float = float(-line.slope)
  c: float = max(a * r**kappa for _, r, a in usable)
  r_squared: float = float(line.rvalue**2)
  if kappa <= 0.0:
    logging.warning('weak Poincaré fit has non-positive exponent %r', kappa)
  return WeakPoincareCurve(points=tuple(points), kappa=kappa, c=c, r_squared=r_squared)


def WeakPoincareCurveFor(
  params: model.ModelParams, n_range: abc.Sequence[int], budget: PercolationBudget, /
) -> WeakPoincareCurve:
  """r(N) = 8·E_p(|C|²1{|C|>N})² and α(N) = 2e^c·K_N² from one cluster batch.

  Both are point estimates (`value`, not `upper`). The analytic remainder of the tail moment is
  the self-avoiding-walk bound, which grows quickly as (2d-1)p nears 1 and can push r(N) above 1
  for every N.

  Raises:
    InputError: supercritical p, or an empty/invalid N range

  """
  p: float = params.p
  if p >= model.PercolationThreshold(params.d) or p >= 1.0:
    raise base.InputError(f'weak Poincaré curve needs subcritical p, got p={p!r}')
  if not n_range or min(n_range) < 1:
    raise base.InputError(f'invalid N range {list(n_range)}')
  batch: percolation.ClusterSizes = percolation.SampleClusterSizes(
    p,
    params.d,
    max(budget.cap, max(n_range)),
    budget.samples,
    budget.Streams(),
    threads=budget.threads,
  )
  points: list[tuple[int, float, float]] = [
    (
      n,
      8.0 * batch.TailSecondMoment(n).value ** 2,
      2.0 * math.exp(params.c) * batch.KN(params.c, n).value ** 2,
    )
    for n in sorted(n_range)
  ]
  return FitWeakCurve(points)


def PowerLawXiBound(kappa: float, c: float, delta: float, t: float, /) -> float:
  """(1+1/κ)^{1+1/κ}·(2tδ/C)^{-1/κ}, the ξ(t) bound for α(r) <= C r^{-κ}."""
  if kappa <= 0.0 or c <= 0.0 or delta <= 0.0 or t <= 0.0:
    raise base.InputError(f'power-law bound needs positive inputs, got {(kappa, c, delta, t)}')
  return (1.0 + 1.0 / kappa) ** (1.0 + 1.0 / kappa) * (2.0 * t * delta / c) ** (-1.0 / kappa)


@dataclasses.dataclass(kw_only=True, slots=True, frozen=True)
class XiValue:
  """ξ(t) by bisection, with the power-law bound when the curve has a positive fit."""

  t: float
  value: float
  power_law_bound: float | None


def XiOfT(curve: WeakPoincareCurve, delta: float, t: float, /) -> XiValue:
  """ξ(t) = inf{r > 0 : -(1/δ)·α(r)·log r <= 2t}.

  The feasible set is an up-interval containing [1, ∞), so bisection in log r converges to its
  left end; ξ(t) <= 1 always.

  Raises:
    InputError: t < 0 or δ <= 0

  """
  if t < 0.0 or delta <= 0.0:
    raise base.InputError(f'need t >= 0 and delta > 0, got t={t}, delta={delta}')
  target: float = 2.0 * t * delta

  def _Feasible(log_r: float, /) -> bool:
    alpha: float = curve.Alpha(math.exp(log_r))
    return alpha == 0.0 or alpha * -log_r <= target

  lo, hi = _XI_LOG_FLOOR, 0.0
  if _Feasible(lo):
    hi = lo
  else:
    for _ in range(_XI_BISECTION_STEPS):
      mid: float = 0.5 * (lo + hi)
      if _Feasible(mid):
        hi = mid
      else:
        lo = mid
  bound: float | None = None
  if curve.kappa is not None and curve.c is not None and curve.kappa > 0.0 and t > 0.0:
    bound = PowerLawXiBound(curve.kappa, curve.c, delta, t)
  return XiValue(t=t, value=math.exp(hi), power_law_bound=bound)


def WeakRelaxationAudit(
  m: model.ExactMeasure,
  rates: glauber.RateFunction,
  values: np.ndarray,
  curve: WeakPoincareCurve,
  times: abc.Sequence[float],
  /,
) -> tuple[glauber.RelaxationCurve, list[base.Assertion]]:
  """Var(S_t f) <= ξ(t)·(‖f‖₂² + 4‖f‖∞²) for the centered f at every grid time."""
  centered: np.ndarray = values - float(np.dot(m.probs, values))
  norm: float = float(np.dot(m.probs, centered**2)) + 4.0 * float(np.abs(centered).max()) ** 2
  relaxation: glauber.RelaxationCurve = glauber.RelaxationCurveExact(m, rates, centered, times)
  checks: list[base.Assertion] = []
  for t, variance in zip(relaxation.times, relaxation.variances, strict=True):
    xi: XiValue = XiOfT(curve, rates.delta, t)
    checks.append(
      base.Assertion(
        name=f'weak_relaxation(t={t!r})',
        lhs=variance,
        rhs=xi.value * norm,
        tolerance=_POINCARE_TOLERANCE,
      )
    )
  return (relaxation, checks)


####################################################################################################
# RUN-COUNTER SEPARATION
####################################################################################################


@dataclasses.dataclass(kw_only=True, slots=True, frozen=True)
class RunCountRow:
  """Exact quantities of f_k on an n-site line."""

  k: int
  variance: float
  dirichlet: float
  delta_norm_sq: float
  theta: float  # max P(k given window sites all +)^{1/k}
  cylinder_theta: float  # max P(consecutive cylinder)^{1/length}, lengths <= k + 1
  site_terms: tuple[float, ...]  # ∫(∇_r f_k)² in line order
  coverage: tuple[int, ...]  # windows containing each site, in line order

  @property
  def var_over_dirichlet(self) -> float:
    """Var/E."""
    return self.variance / self.dirichlet if self.dirichlet > 0.0 else 0.0

  @property
  def var_over_delta(self) -> float:
    """Var/‖δf‖₂²."""
    return self.variance / self.delta_norm_sq if self.delta_norm_sq > 0.0 else 0.0


def _WindowTheta(m: model.ExactMeasure, positions: abc.Sequence[int], k: int, /) -> float:
  """max over (k+1)-windows W and r ∈ W of P(W minus r all +)^{1/k}."""
  indices: np.ndarray = np.arange(m.probs.size, dtype=np.int64)
  worst: float = 0.0
  for start in range(len(positions) - k):
    window: abc.Sequence[int] = positions[start : start + k + 1]
    for r in window:
      mask: int = sum(1 << j for j in window if j != r)
      worst = max(worst, float(m.probs[(indices & mask) == mask].sum()))
  return worst ** (1.0 / k)


def RunCountSeparation(
  params: model.ModelParams, n: int, ks: abc.Sequence[int], /
) -> tuple[list[RunCountRow], list[base.Assertion], list[base.Assertion]]:
  """Exact Var, E and ‖δf‖² of f_k on an n-site line (d = 1, free boundary).

  Returns:
    (rows, assertions, stated): `assertions` are the Cauchy-Schwarz bounds
    ∫(∇_r f_k)² <= w_r²θ^k and E(f_k, f_k) <= (k+1)²(n-k)θ^k; `stated` holds the tighter
    2kθ^k and 2k(n-k)θ^k forms, reported with their margins only

  Raises:
    InputError: d != 1 or k out of range

  """
  if params.d != 1:
    raise base.InputError('run counters live on a line (d = 1)')
  enumeration: lattice.Enumeration = lattice.EnumerateBox(1, n)
  m: model.ExactMeasure = model.BuildExactMeasure(params, enumeration, model.BoundaryCondition.FREE)
  rows: list[RunCountRow] = []
  checks: list[base.Assertion] = []
  stated: list[base.Assertion] = []
  for k in ks:
    spec = functionals.RunCountSpec(k=k, axis=0, n=n)
    window: tuple[lattice.Site, ...] = spec.Window(enumeration)
    positions: list[int] = [enumeration.Position(s) for s in window]
    f: functionals.Functional = functionals.RunCount(spec, enumeration)
    values: np.ndarray = f.Vector(enumeration)
    per_site: np.ndarray = functionals.DirichletPerSite(m, values)
    theta: float = _WindowTheta(m, positions, k)
    row = RunCountRow(
      k=k,
      variance=functionals.Variance(m, values),
      dirichlet=float(per_site.sum()),
      delta_norm_sq=functionals.DeltaNormSq(f, enumeration).value,
      theta=theta,
      cylinder_theta=functionals.CylinderTheta(m, k + 1, line=window),
      site_terms=tuple(float(per_site[j]) for j in positions),
      coverage=spec.Coverage(),
    )
    rows.append(row)
    margins: list[float] = [
      w * w * theta**k - term for w, term in zip(row.coverage, row.site_terms, strict=True)
    ]
    j: int = int(np.argmin(margins))
    checks.append(
      base.Assertion(
        name=f'run_count_site(k={k},r={j + 1})',
        lhs=row.site_terms[j],
        rhs=row.coverage[j] ** 2 * theta**k,
        tolerance=_POINCARE_TOLERANCE,
      )
    )
    checks.append(
      base.Assertion(
        name=f'run_count_dirichlet(k={k})',
        lhs=row.dirichlet,
        rhs=(k + 1) ** 2 * (n - k) * theta**k,
        tolerance=_POINCARE_TOLERANCE,
      )
    )
    stated.append(
      base.Assertion(
        name=f'stated_site_bound(k={k})', lhs=max(row.site_terms), rhs=2.0 * k * theta**k
      )
    )
    stated.append(
      base.Assertion(
        name=f'stated_dirichlet_bound(k={k})',
        lhs=row.dirichlet,
        rhs=2.0 * k * (n - k) * theta**k,
      )
    )
  return (rows, checks, stated)
