# SPDX-FileCopyrightText: Copyright 2026 BellaKeri@github.com & balparda@github.com
# SPDX-License-Identifier: Apache-2.0
"""Heat-bath Glauber dynamics on finite boxes.

Exact side: the 2^N generator L (rows sum to zero, L[σ, σ^x] = c(x, σ)), its spectral gap in
L²(Pr), Dirichlet forms and e^{tL}f. Monte Carlo side: uniformized continuous-time trajectories,
vectorized over replicas, and nested estimates of Var(S_t f).
"""

from __future__ import annotations

import dataclasses
import enum
import logging
import math
from collections import abc

import numpy as np
import pydantic
from scipy import linalg, sparse, special, stats
from scipy.sparse import linalg as sparse_linalg

from . import functionals, lattice, model
from . import mrf_base as base

MAX_GENERATOR_SITES = 14
MAX_DENSE_EIGEN_SITES = 11
DEFAULT_BURN_IN_SWEEPS_PER_SITE = 100
_SHIFT = -0.01  # shift-invert target just below the zero eigenvalue
_ZERO_EIGENVALUE_ULPS = 1024.0  # |λ_0| allowance in units of eps·‖-L‖
_OUTER_CHUNK = 64


@dataclasses.dataclass(kw_only=True, slots=True, frozen=True)
class RateFunction:
  """Heat-bath rates c(x, σ) = P(X_x = -σ_x | rest), bounded in [δ, M]."""

  params: model.ModelParams
  kind: str = 'heat_bath'

  def __post_init__(self) -> None:
    """Check construction.

    Raises:
      InputError: unknown rate kind

    """
    if self.kind != 'heat_bath':
      raise base.InputError(f'unsupported rate kind {self.kind!r}')

  @property
  def delta(self) -> float:
    """Lower rate bound 1/(1 + e^{2β(h+2d)})."""
    return float(special.expit(-2.0 * self.params.beta * (self.params.h + 2.0 * self.params.d)))

  @property
  def upper(self) -> float:
    """Upper rate bound M = 1 - δ."""
    return 1.0 - self.delta

  def _FromSums(self, spins: np.ndarray, sums: np.ndarray, /) -> np.ndarray:
    return special.expit(-2.0 * self.params.beta * spins * (self.params.h + self.params.J * sums))

  def Rates(
    self,
    enumeration: lattice.Enumeration,
    boundary: model.BoundaryCondition,
    states: np.ndarray,
    /,
  ) -> np.ndarray:
    """(R, N) rates of every site for a batch of configurations."""
    return self._FromSums(states, model.NeighborSums(enumeration, boundary, states))

  def SiteRates(
    self,
    enumeration: lattice.Enumeration,
    boundary: model.BoundaryCondition,
    states: np.ndarray,
    positions: np.ndarray,
    /,
  ) -> np.ndarray:
    """Rate of row r at position positions[r]."""
    rows: np.ndarray = np.arange(states.shape[0])
    padded: np.ndarray = np.concatenate(
      [states.astype(np.int64), np.full((states.shape[0], 1), boundary.field, dtype=np.int64)],
      axis=1,
    )
    sums: np.ndarray = padded[rows[:, None], enumeration.NeighborArray()[positions]].sum(axis=1)
    return self._FromSums(states[rows, positions], sums)

  def Table(self, m: model.ExactMeasure, /) -> np.ndarray:
    """(2^N, N) rates of every site at every configuration of an unconditioned measure."""
    if m.prefix:
      raise base.InputError('rate tables need an unconditioned measure')
    return self.Rates(m.enumeration, m.boundary, model.SpinTable(m.n_free))


def Rate(
  params: model.ModelParams,
  config: model.SpinConfig,
  site: lattice.Site,
  boundary: model.BoundaryCondition = model.BoundaryCondition.FREE,
  /,
) -> float:
  """c(x, σ) = 1/(1 + e^{2βσ_x(h + J·S)})."""
  spin: int = config.Spin(site)
  total: int = config.NeighborSum(site, boundary)
  return float(special.expit(-2.0 * params.beta * spin * (params.h + params.J * total)))


def DetailedBalanceAudit(m: model.ExactMeasure, rates: RateFunction, /) -> float:
  """max_{σ,x} |c(x,σ)P(σ) - c(x,σ^x)P(σ^x)|."""
  table: np.ndarray = rates.Table(m)
  indices: np.ndarray = np.arange(m.probs.size, dtype=np.int64)
  worst: float = 0.0
  for k in range(m.n_free):
    flow: np.ndarray = table[:, k] * m.probs
    worst = max(worst, float(np.abs(flow - flow[indices ^ (1 << k)]).max()))
  return worst


####################################################################################################
# GENERATOR AND SPECTRUM
####################################################################################################


@dataclasses.dataclass(kw_only=True, slots=True, frozen=True, eq=False)
class GeneratorMatrix:
  """Sparse generator L of the dynamics together with its stationary law."""

  matrix: sparse.csr_matrix
  stationary: np.ndarray

  def RowSums(self) -> np.ndarray:
    """Row sums (zero up to rounding)."""
    return np.asarray(self.matrix.sum(axis=1)).ravel()

  def Symmetrized(self) -> sparse.csr_matrix:
    """D^{1/2} L D^{-1/2} with D = diag(Pr), symmetric iff detailed balance holds."""
    root: np.ndarray = np.sqrt(self.stationary)
    return sparse.csr_matrix(sparse.diags(root) @ self.matrix @ sparse.diags(1.0 / root))

  def SymmetryDefect(self) -> float:
    """max |S - S^T| of the symmetrized generator."""
    sym: sparse.csr_matrix = self.Symmetrized()
    defect: sparse.csr_matrix = sparse.csr_matrix(sym - sym.T)
    return float(np.abs(defect.data).max()) if defect.nnz else 0.0

  def StationarityDefect(self) -> float:
    """max |(Pr·L)_σ|."""
    return float(np.abs(self.matrix.T @ self.stationary).max())

  def Apply(self, values: np.ndarray, t: float, /) -> np.ndarray:
    """S_t f = e^{tL} f."""
    if t < 0.0:
      raise base.InputError(f'time must be >= 0, got {t}')
    if t == 0.0:
      return values.astype(np.float64, copy=True)
    return np.asarray(sparse_linalg.expm_multiply(self.matrix * t, values.astype(np.float64)))


def Generator(m: model.ExactMeasure, rates: RateFunction, /) -> GeneratorMatrix:
  """Build L with L[σ, σ^x] = c(x, σ) and zero row sums.

  Raises:
    CapacityError: N > MAX_GENERATOR_SITES

  """
  n: int = m.n_free
  if n > MAX_GENERATOR_SITES:
    raise base.CapacityError(f'generator needs N <= {MAX_GENERATOR_SITES}, N={n}')
  table: np.ndarray = rates.Table(m)
  indices: np.ndarray = np.arange(1 << n, dtype=np.int64)
  rows: np.ndarray = np.repeat(indices, n)
  cols: np.ndarray = (indices[:, None] ^ (1 << np.arange(n, dtype=np.int64))).ravel()
  off_diagonal = sparse.coo_matrix((table.ravel(), (rows, cols)), shape=(1 << n, 1 << n))
  matrix = sparse.csr_matrix(off_diagonal + sparse.diags(-table.sum(axis=1)))
  logging.debug('generator on %d sites: %d non-zeros', n, matrix.nnz)
  return GeneratorMatrix(matrix=matrix, stationary=m.probs)


def ZeroEigenvalueResolution(n_free: int, rates: RateFunction, /) -> float:
  """Rounding allowance for the zero eigenvalue of -L on `n_free` sites."""
  norm_bound: float = max(1.0, 2.0 * n_free * rates.upper)
  return _ZERO_EIGENVALUE_ULPS * float(np.finfo(np.float64).eps) * norm_bound


def SpectralGapExact(m: model.ExactMeasure, rates: RateFunction, /) -> float:
  """Second-smallest eigenvalue of -L in L²(Pr).

  Dense symmetric solve up to MAX_DENSE_EIGEN_SITES, shift-invert Lanczos above. The bottom
  eigenvalue must vanish up to rounding against the norm bound 2·N·M of -L; the gap may be
  arbitrarily small (low temperature, free boundary) and only has to lie above it.

  Raises:
    CapacityError: N > MAX_GENERATOR_SITES
    Error: the bottom eigenvalue is not zero or not simple

  """
  sym: sparse.csr_matrix = -Generator(m, rates).Symmetrized()
  sym = sparse.csr_matrix((sym + sym.T) * 0.5)
  eigenvalues: np.ndarray
  if m.n_free <= MAX_DENSE_EIGEN_SITES:
    eigenvalues = linalg.eigh(sym.toarray(), eigvals_only=True, subset_by_index=[0, 1])
  else:
    eigenvalues = np.sort(
      sparse_linalg.eigsh(
        sparse.csc_matrix(sym), k=2, sigma=_SHIFT, which='LM', return_eigenvectors=False
      )
    )
  resolution: float = ZeroEigenvalueResolution(m.n_free, rates)
  if abs(eigenvalues[0]) > resolution:
    raise base.Error(f'bottom eigenvalue is not zero: {eigenvalues!r}')
  if eigenvalues[1] <= eigenvalues[0]:
    raise base.Error(f'zero eigenvalue is not simple: {eigenvalues!r}')
  if eigenvalues[1] <= resolution:
    logging.warning(
      'Spectral gap %r on %d sites is below the rounding resolution %r',
      float(eigenvalues[1]),
      m.n_free,
      resolution,
    )
  logging.info('Spectral gap on %d sites: %r', m.n_free, float(eigenvalues[1]))
  return float(eigenvalues[1])


def GapTrend(
  params: model.ModelParams,
  boundary: model.BoundaryCondition,
  sizes: abc.Sequence[int],
  /,
) -> list[tuple[int, float]]:
  """(N, exact gap) for growing boxes (a trend, never extrapolated)."""
  rates = RateFunction(params=params)
  return [
    (
      n,
      SpectralGapExact(
        model.BuildExactMeasure(params, lattice.EnumerateBox(params.d, n), boundary), rates
      ),
    )
    for n in sizes
  ]


@dataclasses.dataclass(kw_only=True, slots=True, frozen=True)
class DirichletPair:
  """Plain form E(f,f) and rate-weighted form E_c(f,f), with standard errors when sampled."""

  plain: float
  rated: float
  plain_se: float = 0.0
  rated_se: float = 0.0


def DirichletForms(
  m: model.ExactMeasure, rates: RateFunction, values: np.ndarray, /
) -> DirichletPair:
  """Exact E(f,f) = Σ_x ∫(∇_x f)² and E_c(f,f) = Σ_x ∫c(x,·)(∇_x f)²."""
  table: np.ndarray = rates.Table(m)
  indices: np.ndarray = np.arange(values.size, dtype=np.int64)
  rated: float = 0.0
  for k in range(m.n_free):
    squares: np.ndarray = (values[indices ^ (1 << k)] - values) ** 2
    rated += float(np.dot(m.probs * table[:, k], squares))
  return DirichletPair(plain=functionals.DirichletPlain(m, values), rated=rated)


def SampledDirichletForms(
  rates: RateFunction,
  enumeration: lattice.Enumeration,
  boundary: model.BoundaryCondition,
  f: functionals.Functional,
  states: np.ndarray,
  /,
) -> DirichletPair:
  """Monte Carlo E(f,f), E_c(f,f) over stationary `states` (R, N)."""
  base_values: np.ndarray = f.Evaluate(states)
  rate_table: np.ndarray = rates.Rates(enumeration, boundary, states)
  plain: np.ndarray = np.zeros(states.shape[0])
  rated: np.ndarray = np.zeros(states.shape[0])
  for k in range(enumeration.size):
    flipped: np.ndarray = states.copy()
    flipped[:, k] *= -1
    squares: np.ndarray = (f.Evaluate(flipped) - base_values) ** 2
    plain += squares
    rated += rate_table[:, k] * squares
  root: float = math.sqrt(states.shape[0])
  return DirichletPair(
    plain=float(plain.mean()),
    rated=float(rated.mean()),
    plain_se=float(plain.std(ddof=1) / root) if states.shape[0] > 1 else 0.0,
    rated_se=float(rated.std(ddof=1) / root) if states.shape[0] > 1 else 0.0,
  )


####################################################################################################
# SIMULATION
####################################################################################################


def SimulateBatch(
  rates: RateFunction,
  enumeration: lattice.Enumeration,
  boundary: model.BoundaryCondition,
  states: np.ndarray,
  t: float,
  rng: np.random.Generator,
  /,
) -> np.ndarray:
  """Run every row of `states` for time t by uniformization at total rate N·M.

  Each row gets Poisson(N·M·t) events; an event picks a uniform site and flips it with
  probability c(x, σ)/M. Random numbers are drawn for all rows at every event round, so the
  result depends only on (states, t, rng).

  Raises:
    InputError: t < 0

  """
  if t < 0.0:
    raise base.InputError(f'time must be >= 0, got {t}')
  out: np.ndarray = states.astype(np.int8, copy=True)
  n_rows, n = out.shape
  bound: float = rates.upper
  events: np.ndarray = rng.poisson(n * bound * t, size=n_rows)
  rows: np.ndarray = np.arange(n_rows)
  for e in range(int(events.max(initial=0))):
    positions: np.ndarray = rng.integers(0, n, size=n_rows)
    u: np.ndarray = rng.random(n_rows)
    flip: np.ndarray = (events > e) & (
      u * bound < rates.SiteRates(enumeration, boundary, out, positions)
    )
    out[rows[flip], positions[flip]] *= -1
  return out


def Simulate(
  config: model.SpinConfig,
  rates: RateFunction,
  t: float,
  rng: np.random.Generator,
  /,
  *,
  boundary: model.BoundaryCondition = model.BoundaryCondition.FREE,
) -> model.SpinConfig:
  """One trajectory from σ0 = `config` up to time t."""
  row: np.ndarray = SimulateBatch(rates, config.enumeration, boundary, config.AsArray(), t, rng)
  return model.SpinConfig(values=tuple(int(v) for v in row[0]), enumeration=config.enumeration)


def HeatBathSample(
  params: model.ModelParams,
  enumeration: lattice.Enumeration,
  boundary: model.BoundaryCondition,
  rng: np.random.Generator,
  /,
  *,
  sweeps: int,
  fixed: tuple[int, ...] = (),
  replicas: int = 1,
  initial: np.ndarray | None = None,
) -> np.ndarray:
  """Systematic-sweep heat-bath sampler, vectorized over replicas.

  Args:
    params: model
    enumeration: the box
    boundary: boundary condition
    rng: random stream
    sweeps: number of sweeps over the free sites
    fixed: spins held fixed on positions [0, len(fixed))
    replicas: number of independent chains
    initial: optional (replicas, N) start (default: independent uniform spins)

  Returns:
    np.ndarray: (replicas, N) int8 configurations after the last sweep

  Raises:
    InputError: bad sizes

  """
  n: int = enumeration.size
  if sweeps < 0 or replicas < 1 or len(fixed) > n:
    raise base.InputError(f'invalid sampler setup: sweeps={sweeps}, replicas={replicas}')
  work: np.ndarray = np.full((replicas, n + 1), boundary.field, dtype=np.int8)
  if initial is None:
    work[:, :n] = np.where(rng.random((replicas, n)) < 0.5, 1, -1)
  else:
    work[:, :n] = initial
  work[:, : len(fixed)] = fixed
  neighbors: np.ndarray = enumeration.NeighborArray()
  for _ in range(sweeps):
    for k in range(len(fixed), n):
      total: np.ndarray = work[:, neighbors[k]].sum(axis=1, dtype=np.int64)
      plus: np.ndarray = special.expit(2.0 * params.beta * (params.h + params.J * total))
      work[:, k] = np.where(rng.random(replicas) < plus, 1, -1)
  return work[:, :n].copy()


####################################################################################################
# RELAXATION
####################################################################################################


class RelaxationMethod(enum.Enum):
  """How Var(S_t f) was obtained."""

  EXACT_MATRIX = 'exact_matrix'
  MONTE_CARLO = 'monte_carlo'


@dataclasses.dataclass(kw_only=True, slots=True, frozen=True)
class RelaxationCurve:
  """Var(S_t f) on a time grid."""

  times: tuple[float, ...]
  variances: tuple[float, ...]
  std_errors: tuple[float, ...]
  method: RelaxationMethod
  bias_bounds: tuple[float, ...] | None = None  # Monte Carlo only: inner-variance correction

  def __post_init__(self) -> None:
    """Check construction.

    Raises:
      Error: mismatched lengths, negative variances or unsorted times

    """
    if not len(self.times) == len(self.variances) == len(self.std_errors):
      raise base.Error('relaxation curve arrays differ in length')
    if any(v < 0.0 for v in self.variances) or any(s < 0.0 for s in self.std_errors):
      raise base.Error('negative variance or standard error')
    if any(b < a for a, b in zip(self.times, self.times[1:], strict=False)):
      raise base.Error('relaxation times must be nondecreasing')


def _CheckTimes(times: abc.Sequence[float], /) -> tuple[float, ...]:
  grid: tuple[float, ...] = tuple(float(t) for t in times)
  if not grid or grid[0] < 0.0 or any(b < a for a, b in zip(grid, grid[1:], strict=False)):
    raise base.InputError(f'time grid must be nonempty, >= 0 and sorted: {grid}')
  return grid


def RelaxationCurveExact(
  m: model.ExactMeasure, rates: RateFunction, values: np.ndarray, times: abc.Sequence[float], /
) -> RelaxationCurve:
  """Var(e^{tL} f) by sparse matrix exponential, chained along the sorted grid."""
  grid: tuple[float, ...] = _CheckTimes(times)
  gen: GeneratorMatrix = Generator(m, rates)
  current: np.ndarray = values.astype(np.float64)
  previous: float = 0.0
  variances: list[float] = []
  for t in grid:
    current = gen.Apply(current, t - previous)
    previous = t
    variances.append(functionals.Variance(m, current))
  return RelaxationCurve(
    times=grid,
    variances=tuple(variances),
    std_errors=(0.0,) * len(grid),
    method=RelaxationMethod.EXACT_MATRIX,
  )


def RelaxationCurveMonteCarlo(
  rates: RateFunction,
  enumeration: lattice.Enumeration,
  boundary: model.BoundaryCondition,
  f: functionals.Functional,
  times: abc.Sequence[float],
  streams: base.Streams,
  /,
  *,
  outer: int = 256,
  inner: int = 32,
  measure: model.ExactMeasure | None = None,
  burn_in_sweeps: int | None = None,
  threads: int = 1,
) -> RelaxationCurve:
  """Nested Monte Carlo estimate of Var(S_t f) from stationary starts.

  Outer replicas draw σ0 (exactly from `measure`, else by heat-bath burn-in); each runs `inner`
  trajectories. With m_j, s_j² the inner mean and variance of replica j, the estimate is the mean
  of (m_j - m̄)²·R/(R-1) - s_j²/inner, unbiased for Var(S_t f); it is clipped at 0.

  Raises:
    InputError: outer < 2, inner < 2 or a bad time grid

  """
  grid: tuple[float, ...] = _CheckTimes(times)
  if outer < 2 or inner < 2:
    raise base.InputError(f'need outer >= 2 and inner >= 2, got {outer}, {inner}')
  n: int = enumeration.size
  sweeps: int = DEFAULT_BURN_IN_SWEEPS_PER_SITE * n if burn_in_sweeps is None else burn_in_sweeps
  chunks: list[int] = base.ChunkSizes(outer, chunk=_OUTER_CHUNK)

  def _Chunk(i: int, /) -> tuple[list[np.ndarray], list[np.ndarray]]:
    rng: np.random.Generator = streams.Replica(i)
    starts: np.ndarray
    if measure is not None:
      starts = model.StatesFromIndices(
        rng.choice(measure.probs.size, size=chunks[i], p=measure.probs), n
      )
    else:
      starts = HeatBathSample(
        rates.params, enumeration, boundary, rng, sweeps=sweeps, replicas=chunks[i]
      )
    states: np.ndarray = np.repeat(starts, inner, axis=0)
    previous: float = 0.0
    means: list[np.ndarray] = []
    inner_vars: list[np.ndarray] = []
    for t in grid:
      states = SimulateBatch(rates, enumeration, boundary, states, t - previous, rng)
      previous = t
      values: np.ndarray = f.Evaluate(states).reshape(chunks[i], inner)
      means.append(values.mean(axis=1))
      inner_vars.append(values.var(axis=1, ddof=1))
    return (means, inner_vars)

  parts = base.ParallelMap(_Chunk, len(chunks), threads=threads)
  variances: list[float] = []
  errors: list[float] = []
  biases: list[float] = []
  for j in range(len(grid)):
    means: np.ndarray = np.concatenate([p[0][j] for p in parts])
    inner_vars: np.ndarray = np.concatenate([p[1][j] for p in parts])
    q: np.ndarray = (means - means.mean()) ** 2 * (outer / (outer - 1)) - inner_vars / inner
    variances.append(max(0.0, float(q.mean())))
    errors.append(float(q.std(ddof=1) / math.sqrt(outer)))
    biases.append(float(inner_vars.mean() / inner))
  logging.info('Monte Carlo relaxation: %d x %d trajectories, %d times', outer, inner, len(grid))
  return RelaxationCurve(
    times=grid,
    variances=tuple(variances),
    std_errors=tuple(errors),
    method=RelaxationMethod.MONTE_CARLO,
    bias_bounds=tuple(biases),
  )


def SupContractionAudit(
  m: model.ExactMeasure, rates: RateFunction, values: np.ndarray, t: float, /
) -> base.Assertion:
  """‖e^{tL} f‖∞ <= ‖f‖∞ (tolerance 1e-10)."""
  moved: np.ndarray = Generator(m, rates).Apply(values, t)
  return base.Assertion(
    name=f'sup_contraction(t={t!r})',
    lhs=float(np.abs(moved).max()),
    rhs=float(np.abs(values).max()),
    tolerance=1e-10,
  )


@dataclasses.dataclass(kw_only=True, slots=True, frozen=True)
class RelaxationFit:
  """Best of the exponential (log var ~ -rate·t) and polynomial (log var ~ -rate·log t) fits."""

  kind: str
  rate: float
  r_squared: float


def FitRelaxation(curve: RelaxationCurve, /) -> RelaxationFit | None:
  """Fit the decay of a relaxation curve; None when fewer than two usable points exist."""
  times: np.ndarray = np.array(curve.times)
  variances: np.ndarray = np.array(curve.variances)
  fits: list[RelaxationFit] = []
  usable: np.ndarray = variances > 0.0
  if usable.sum() >= 2 and np.ptp(times[usable]) > 0.0:  # noqa: PLR2004
    line = stats.linregress(times[usable], np.log(variances[usable]))
    fits.append(RelaxationFit(kind='exponential', rate=-line.slope, r_squared=line.rvalue**2))
  usable &= times > 0.0
  if usable.sum() >= 2 and np.ptp(times[usable]) > 0.0:  # noqa: PLR2004
    line = stats.linregress(np.log(times[usable]), np.log(variances[usable]))
    fits.append(RelaxationFit(kind='polynomial', rate=-line.slope, r_squared=line.rvalue**2))
  if not fits:
    return None
  return max(fits, key=lambda fit: fit.r_squared)


class RelaxationPointModel(base.ReportBaseModel):
  """One point of a relaxation curve."""

  t: float = pydantic.Field(description='Time')
  var: float = pydantic.Field(description='Var(S_t f)')
  se: float = pydantic.Field(description='Standard error (0 for exact curves)')


class RelaxationFitModel(base.ReportBaseModel):
  """Decay fit of a relaxation curve."""

  kind: str = pydantic.Field(description='exponential | polynomial')
  rate: float = pydantic.Field(description='Fitted decay rate')
  r_squared: float = pydantic.Field(description='Coefficient of determination')

  @classmethod
  def from_domain(cls, fit: RelaxationFit | None) -> RelaxationFitModel | None:
    """Convert domain ``RelaxationFit`` to Pydantic model.

    Returns:
      RelaxationFitModel | None: converted model or ``None``.

    """
    if fit is None:
      return None
    return cls(kind=fit.kind, rate=float(fit.rate), r_squared=float(fit.r_squared))
