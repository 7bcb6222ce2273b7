# SPDX-FileCopyrightText: Copyright 2026 BellaKeri@github.com & balparda@github.com
# SPDX-License-Identifier: Apache-2.0
"""Independent site percolation: cluster-of-origin sampling and the moment constants.

Every estimator is a truncated Monte Carlo mean plus a remainder for what the truncation dropped.
Remainders use the self-avoiding-path envelope ((2d-1)p)^{n-1} for P_p(|C| >= n), the same path
count that gives the series sufficient condition; it is an envelope, not a sharp per-n bound
(at d=2, n=2 it can sit below the true tail). A divergent remainder is `math.inf`, never raised.
"""

from __future__ import annotations

import collections
import dataclasses
import logging
import math
from collections import abc

import numpy as np
import pydantic

from . import lattice
from . import mrf_base as base

type UniformSource = abc.Callable[[lattice.Site], float]

_MAX_TAIL_TERMS = 1_000_000
_TAIL_RELATIVE_TOLERANCE = 1e-17
_TRUNCATION_WARNING_FRACTION = 0.01


####################################################################################################
# CLUSTER GROWTH
####################################################################################################


class SiteUniforms:
  """Lazily drawn uniform per site, memoized so that several growths share one field.

  Growing at p1 <= p2 against the same `SiteUniforms` gives nested clusters (monotone coupling).
  """

  def __init__(self, rng: np.random.Generator, /) -> None:
    """Constructor."""
    self._rng: np.random.Generator = rng
    self._values: dict[lattice.Site, float] = {}

  def __call__(self, site: lattice.Site, /) -> float:
    """Uniform at `site`."""
    value: float | None = self._values.get(site)
    if value is None:
      value = self._values[site] = float(self._rng.random())
    return value


@dataclasses.dataclass(kw_only=True, slots=True, frozen=True)
class ClusterSample:
  """Open cluster of the origin (origin forced open)."""

  sites: frozenset[lattice.Site]
  truncated: bool

  def __post_init__(self) -> None:
    """Check construction.

    Raises:
      Error: empty cluster or missing origin

    """
    if not self.sites:
      raise base.Error('empty cluster')
    origin: lattice.Site = lattice.Origin(len(next(iter(self.sites))))
    if origin not in self.sites:
      raise base.Error('cluster must contain the origin')

  @property
  def size(self) -> int:
    """|C| (a lower bound when truncated)."""
    return len(self.sites)


def _CheckP(p: float, cap: int, d: int, /) -> None:
  if not 0.0 <= p < 1.0:
    raise base.InputError(f'percolation parameter must be in [0, 1), got {p}')
  if cap < 1:
    raise base.InputError(f'cap must be >= 1, got {cap}')
  if d < 1:
    raise base.InputError(f'dimension must be >= 1, got {d}')


def _Grow(
  p: float,
  d: int,
  cap: int,
  draw: UniformSource,
  within: abc.Set[lattice.Site] | None,
  /,
) -> tuple[set[lattice.Site], bool]:
  origin: lattice.Site = lattice.Origin(d)
  cluster: set[lattice.Site] = {origin}
  explored: set[lattice.Site] = {origin}
  queue: collections.deque[lattice.Site] = collections.deque([origin])
  while queue:
    for nb in lattice.LatticeNeighbors(queue.popleft()):
      if nb in explored or (within is not None and nb not in within):
        continue
      explored.add(nb)
      if draw(nb) < p:
        if len(cluster) >= cap:
          return (cluster, True)
        cluster.add(nb)
        queue.append(nb)
  return (cluster, False)


def SampleCluster(
  p: float,
  d: int,
  cap: int,
  uniforms: np.random.Generator | UniformSource,
  /,
  *,
  within: abc.Set[lattice.Site] | None = None,
) -> ClusterSample:
  """Breadth-first growth of the open cluster of the origin.

  One uniform is consumed per newly explored site; a site is open iff its uniform is < p.

  Args:
    p: open probability in [0, 1)
    d: dimension
    cap: growth stops (truncated=True) when an open site would make the cluster exceed cap
    uniforms: a generator (fresh uniforms) or a `SiteUniforms` field (coupled growth)
    within: restrict growth to these sites (the origin is always included)

  Returns:
    ClusterSample: the cluster

  Raises:
    InputError: p outside [0, 1), cap < 1 or d < 1

  """
  _CheckP(p, cap, d)
  draw: UniformSource
  if isinstance(uniforms, np.random.Generator):
    rng: np.random.Generator = uniforms
    draw = lambda _site: float(rng.random())
  else:
    draw = uniforms
  cluster, truncated = _Grow(p, d, cap, draw, within)
  return ClusterSample(sites=frozenset(cluster), truncated=truncated)


####################################################################################################
# ESTIMATES
####################################################################################################


@dataclasses.dataclass(kw_only=True, slots=True, frozen=True)
class MomentEstimate:
  """Truncated Monte Carlo value with its standard error and analytic remainder bound."""

  value: float
  std_error: float
  n_samples: int
  truncation_cap: int
  tail_bound: float = 0.0

  def __post_init__(self) -> None:
    """Check construction.

    Raises:
      Error: negative standard error or tail bound

    """
    if self.std_error < 0.0 or self.tail_bound < 0.0:
      raise base.Error(f'invalid estimate {self}')

  @property
  def upper(self) -> float:
    """Conservative envelope value + 3·std_error + tail_bound."""
    return self.value + 3.0 * self.std_error + self.tail_bound

  @property
  def finite(self) -> bool:
    """True iff the envelope is finite."""
    return math.isfinite(self.upper)


class MomentEstimateModel(base.ReportBaseModel):
  """Monte Carlo moment with error envelope."""

  value: float = pydantic.Field(description='Truncated Monte Carlo value')
  se: float = pydantic.Field(description='Standard error')
  tail_bound: float = pydantic.Field(description='Analytic bound on the truncated remainder')
  upper: float = pydantic.Field(description='value + 3·se + tail_bound')
  n_samples: int = pydantic.Field(description='Monte Carlo samples')
  truncation_cap: int = pydantic.Field(description='Cluster size cap')

  @classmethod
  def from_domain(cls, m: MomentEstimate | None) -> MomentEstimateModel | None:
    """Convert domain ``MomentEstimate`` to Pydantic model.

    Returns:
      MomentEstimateModel | None: converted model or ``None``.

    """
    if m is None:
      return None
    return cls(
      value=m.value,
      se=m.std_error,
      tail_bound=m.tail_bound,
      upper=m.upper,
      n_samples=m.n_samples,
      truncation_cap=m.truncation_cap,
    )


def _MeanAndError(values: np.ndarray, /) -> tuple[float, float]:
  if values.size == 0:
    raise base.InputError('no samples')
  if values.size == 1 or bool(np.all(values == values[0])):
    return (float(values[0]), 0.0)
  return (float(values.mean()), float(values.std(ddof=1) / math.sqrt(values.size)))


def PolyGeometricTail(power: int, ratio: float, start: int, /) -> float:
  """Σ_{n >= start} n^power · ratio^n (inf when ratio >= 1).

  Args:
    power: polynomial degree >= 0
    ratio: geometric ratio >= 0
    start: first index >= 1

  Returns:
    float: the sum, or inf for a divergent series

  """
  if ratio <= 0.0:
    return 0.0
  if ratio >= 1.0:
    return math.inf
  log_ratio: float = math.log(ratio)
  peak: float = power / -log_ratio  # terms decrease past this index
  total: float = 0.0
  for n in range(start, start + _MAX_TAIL_TERMS):
    term: float = math.exp(power * math.log(n) + n * log_ratio)
    total += term
    if n > peak and term <= _TAIL_RELATIVE_TOLERANCE * total:
      return total
  logging.warning('tail series n^%d·%r^n not converged after %d terms', power, ratio, n)
  return math.inf


def SAWSeries(p: float, d: int, c: float, /) -> float:
  """Σ_n n p^n (2d-1)^n e^{cn} = x/(1-x)^2 with x = p(2d-1)e^c, inf when x >= 1."""
  x: float = SAWRatio(p, d, c)
  return x / (1.0 - x) ** 2 if x < 1.0 else math.inf


def SAWRatio(p: float, d: int, c: float, /) -> float:
  """Geometric ratio p(2d-1)e^c of the self-avoiding-path series."""
  return p * (2.0 * d - 1.0) * math.exp(c)


@dataclasses.dataclass(kw_only=True, slots=True, frozen=True, eq=False)
class ClusterSizes:
  """One batch of truncated cluster sizes; every estimator below shares it (common numbers)."""

  p: float
  d: int
  cap: int
  sizes: np.ndarray  # int64, |C| capped at `cap`
  truncated: np.ndarray  # bool, True iff |C| > cap

  def __post_init__(self) -> None:
    """Check construction.

    Raises:
      InputError: empty batch or mismatched arrays

    """
    if self.sizes.size == 0 or self.sizes.shape != self.truncated.shape:
      raise base.InputError('cluster size batch must be non-empty with matching flags')

  @property
  def n_samples(self) -> int:
    """Number of clusters."""
    return int(self.sizes.size)

  @property
  def truncated_fraction(self) -> float:
    """Fraction of clusters that hit the cap."""
    return float(self.truncated.mean())

  def Tail(self, n: int, /) -> MomentEstimate:
    """P_p(|C| >= n) with binomial standard error (n <= cap + 1).

    Raises:
      InputError: n < 1 or n > cap + 1

    """
    if not 1 <= n <= self.cap + 1:
      raise base.InputError(f'tail index must be in [1, {self.cap + 1}], got {n}')
    hits: np.ndarray = (self.sizes >= n) | self.truncated
    q: float = float(hits.mean())
    return MomentEstimate(
      value=q,
      std_error=math.sqrt(q * (1.0 - q) / self.n_samples),
      n_samples=self.n_samples,
      truncation_cap=self.cap,
    )

  def Tails(self, n_max: int, /) -> list[tuple[int, MomentEstimate]]:
    """Tail estimates for n in [1, n_max]."""
    return [(n, self.Tail(n)) for n in range(1, n_max + 1)]

  def MomentK(self, c: float, /) -> MomentEstimate:
    """E_p(|C| e^{c|C|}) truncated at cap, plus Σ_{n>cap} n((2d-1)p e^c)^n."""
    weights: np.ndarray = self.sizes * np.exp(c * self.sizes)
    value, se = _MeanAndError(np.where(self.truncated, 0.0, weights))
    tail: float = PolyGeometricTail(1, SAWRatio(self.p, self.d, c), self.cap + 1)
    if math.isinf(tail):
      logging.warning('moment K tail diverges: p=%r, d=%d, c=%r', self.p, self.d, c)
    return MomentEstimate(
      value=value,
      std_error=se,
      n_samples=self.n_samples,
      truncation_cap=self.cap,
      tail_bound=tail,
    )

  def KPrime(self, c_prime: float, /) -> MomentEstimate:
    """Σ_n n(2d-1)^n e^{c'n} P_p(|C| >= n)^{1/2}: partial sum to cap plus SAW remainder."""
    branching: float = 2.0 * self.d - 1.0
    value: float = 0.0
    se: float = 0.0
    for n in range(1, self.cap + 1):
      tail: MomentEstimate = self.Tail(n)
      if tail.value <= 0.0:
        continue
      log_weight: float = math.log(n) + n * (math.log(branching) + c_prime)
      value += math.exp(log_weight + 0.5 * math.log(tail.value))
      se += math.exp(log_weight) * tail.std_error / (2.0 * math.sqrt(tail.value))
    remainder: float = 0.0
    if self.p > 0.0:
      q: float = branching * self.p
      y: float = branching * math.exp(c_prime) * math.sqrt(q)
      remainder = PolyGeometricTail(1, y, self.cap + 1)
      if math.isfinite(remainder):
        remainder /= math.sqrt(q)
      else:
        logging.warning('K-prime remainder diverges: ratio %r >= 1', y)
    return MomentEstimate(
      value=value,
      std_error=se,
      n_samples=self.n_samples,
      truncation_cap=self.cap,
      tail_bound=remainder,
    )

  def KN(self, c: float, n: int, /) -> MomentEstimate:
    """K_N = Σ_{k=1}^{N} k e^{ck} P_p(|C| >= k), as a per-sample mean (N <= cap).

    Raises:
      InputError: N < 1 or N > cap

    """
    if not 1 <= n <= self.cap:
      raise base.InputError(f'K_N needs 1 <= N <= cap={self.cap}, got {n}')
    ks: np.ndarray = np.arange(1, n + 1, dtype=np.float64)
    cumulative: np.ndarray = np.concatenate([[0.0], np.cumsum(ks * np.exp(c * ks))])
    value, se = _MeanAndError(cumulative[np.minimum(self.sizes, n)])
    return MomentEstimate(value=value, std_error=se, n_samples=self.n_samples, truncation_cap=n)

  def TailSecondMoment(self, n: int, /) -> MomentEstimate:
    """E_p(|C|^2 1{|C| > N}) over untruncated clusters, plus Σ_{k>cap} k^2 ((2d-1)p)^{k-1}.

    Raises:
      InputError: N < 0

    """
    if n < 0:
      raise base.InputError(f'N must be >= 0, got {n}')
    squares: np.ndarray = np.where(~self.truncated & (self.sizes > n), self.sizes**2, 0)
    value, se = _MeanAndError(squares.astype(np.float64))
    q: float = (2.0 * self.d - 1.0) * self.p
    tail: float = PolyGeometricTail(2, q, max(self.cap, n) + 1) / q if q > 0.0 else 0.0
    return MomentEstimate(
      value=value,
      std_error=se,
      n_samples=self.n_samples,
      truncation_cap=self.cap,
      tail_bound=tail,
    )


def SampleClusterSizes(
  p: float,
  d: int,
  cap: int,
  samples: int,
  streams: base.Streams,
  /,
  *,
  threads: int = 1,
) -> ClusterSizes:
  """Draw `samples` truncated cluster sizes in fixed chunks, one stream per chunk.

  Args:
    p: open probability in [0, 1)
    d: dimension
    cap: truncation cap
    samples: number of clusters >= 1
    streams: stream family; chunk i uses streams.Replica(i)
    threads: worker pool size (never changes the result)

  Returns:
    ClusterSizes: the batch, in chunk order

  Raises:
    InputError: invalid parameters

  """
  _CheckP(p, cap, d)
  if samples < 1:
    raise base.InputError(f'samples must be >= 1, got {samples}')
  chunks: list[int] = base.ChunkSizes(samples)

  def _Chunk(i: int, /) -> tuple[np.ndarray, np.ndarray]:
    rng: np.random.Generator = streams.Replica(i)
    draw: UniformSource = lambda _site: float(rng.random())
    sizes: np.ndarray = np.empty(chunks[i], dtype=np.int64)
    truncated: np.ndarray = np.empty(chunks[i], dtype=np.bool_)
    for j in range(chunks[i]):
      cluster, cut = _Grow(p, d, cap, draw, None)
      sizes[j], truncated[j] = len(cluster), cut
    logging.debug('cluster chunk #%d: %d samples', i, chunks[i])
    return (sizes, truncated)

  results: list[tuple[np.ndarray, np.ndarray]] = base.ParallelMap(
    _Chunk, len(chunks), threads=threads
  )
  batch = ClusterSizes(
    p=p,
    d=d,
    cap=cap,
    sizes=np.concatenate([r[0] for r in results]),
    truncated=np.concatenate([r[1] for r in results]),
  )
  logging.info(
    'Sampled %d clusters at p=%r, d=%d (cap %d, %.3f%% truncated)',
    samples,
    p,
    d,
    cap,
    100.0 * batch.truncated_fraction,
  )
  if batch.truncated_fraction > _TRUNCATION_WARNING_FRACTION:
    logging.warning('%.2f%% of clusters hit the cap %d', 100.0 * batch.truncated_fraction, cap)
  return batch


####################################################################################################
# ONE-SHOT ESTIMATORS (each draws its own batch)
####################################################################################################


def TailEstimate(
  p: float, d: int, n: int, samples: int, streams: base.Streams, /, *, threads: int = 1
) -> MomentEstimate:
  """P_p(|C| >= n); n = 1 gives exactly 1."""
  if n < 1:
    raise base.InputError(f'n must be >= 1, got {n}')
  return SampleClusterSizes(p, d, n, samples, streams, threads=threads).Tail(n)


def MomentK(
  p: float, d: int, c: float, cap: int, samples: int, streams: base.Streams, /, *, threads: int = 1
) -> MomentEstimate:
  """E_p(|C| e^{c|C|}) envelope (see `ClusterSizes.MomentK`)."""
  return SampleClusterSizes(p, d, cap, samples, streams, threads=threads).MomentK(c)


def KPrimeEstimate(
  p: float,
  d: int,
  c_prime: float,
  cap: int,
  samples: int,
  streams: base.Streams,
  /,
  *,
  threads: int = 1,
) -> MomentEstimate:
  """Square-root tail constant envelope (see `ClusterSizes.KPrime`)."""
  return SampleClusterSizes(p, d, cap, samples, streams, threads=threads).KPrime(c_prime)


def KNCurve(
  p: float,
  d: int,
  c: float,
  n_max: int,
  samples: int,
  streams: base.Streams,
  /,
  *,
  threads: int = 1,
) -> list[tuple[int, MomentEstimate]]:
  """(N, K_N) for N in [1, n_max] from one shared batch (nondecreasing in N)."""
  if n_max < 1:
    raise base.InputError(f'N_max must be >= 1, got {n_max}')
  batch: ClusterSizes = SampleClusterSizes(p, d, n_max, samples, streams, threads=threads)
  return [(n, batch.KN(c, n)) for n in range(1, n_max + 1)]


def TailSecondMoment(
  p: float,
  d: int,
  n: int,
  samples: int,
  streams: base.Streams,
  /,
  *,
  cap: int = 256,
  threads: int = 1,
) -> MomentEstimate:
  """E_p(|C|^2 1{|C| > N}) (see `ClusterSizes.TailSecondMoment`)."""
  return SampleClusterSizes(p, d, max(cap, n), samples, streams, threads=threads).TailSecondMoment(
    n
  )
