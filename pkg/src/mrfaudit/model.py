# SPDX-FileCopyrightText: Copyright 2026 BellaKeri@github.com & balparda@github.com
# SPDX-License-Identifier: Apache-2.0
"""Nearest-neighbor Ising Markov random field on finite boxes.

Single-site conditional kernels, exact Gibbs measures by enumeration of all 2^N configurations,
Radon-Nikodym bounds under spin flips, and the scalar threshold conditions that decide which
variance inequality can be certified.

Configuration indices: bit k of the index is set iff the spin at enumeration position k is +1.
"""

from __future__ import annotations

import dataclasses
import enum
import logging
import math
import pathlib
from collections import abc

import numpy as np
from scipy import optimize, special

from . import lattice
from . import mrf_base as base

MAX_EXACT_SITES = 24  # 2^24 doubles
_HEADER_BYTES = 8
_NORMALIZATION_TOLERANCE = 1e-12

# site percolation thresholds, used for regime labels only; higher d uses the 1/(2d-1) lower bound
_PERCOLATION_THRESHOLDS: dict[int, float] = {1: 1.0, 2: 0.592746, 3: 0.3116081}


class BoundaryCondition(enum.Enum):
  """How neighbors outside the box enter the neighbor sum."""

  FREE = 'free'
  PLUS = 'plus'
  MINUS = 'minus'

  @property
  def field(self) -> int:
    """Spin contributed by each missing neighbor (0 for free boundary)."""
    return {'free': 0, 'plus': 1, 'minus': -1}[self.value]


@dataclasses.dataclass(kw_only=True, slots=True, frozen=True)
class ModelParams:
  """Ising parameters (d, beta, h, J) and the constants derived from them."""

  d: int
  beta: float
  h: float = 0.0
  J: int = 1

  def __post_init__(self) -> None:
    """Check construction.

    Raises:
      InputError: d < 1, beta or h negative/non-finite, J not in {-1, +1}

    """
    if self.d < 1:
      raise base.InputError(f'dimension must be >= 1, got {self.d}')
    if not math.isfinite(self.beta) or self.beta < 0.0:
      raise base.InputError(f'beta must be finite and >= 0, got {self.beta}')
    if not math.isfinite(self.h) or self.h < 0.0:
      raise base.InputError(f'h must be finite and >= 0, got {self.h}')
    if self.J not in {-1, 1}:
      raise base.InputError(f'J must be -1 or +1, got {self.J}')

  @property
  def c(self) -> float:
    """Single-flip Radon-Nikodym exponent 2βh + 4βd."""
    return 2.0 * self.beta * self.h + 4.0 * self.beta * self.d

  @property
  def c_prime(self) -> float:
    """Field-free exponent 4βd."""
    return 4.0 * self.beta * self.d

  @property
  def p(self) -> float:
    """Per-site disagreement bound e^{-2βh}(e^{4βd} - e^{-4βd})."""
    return math.exp(-2.0 * self.beta * self.h) * 2.0 * math.sinh(4.0 * self.beta * self.d)


def ConditionalPlusProb(params: ModelParams, neighbor_sum: int, /) -> float:
  """P(X_x = +1 | neighbors) for a boundary-adjusted neighbor sum S.

  Args:
    params: model
    neighbor_sum: S in [-2d, 2d]

  Returns:
    float: e^{βh+βJS} / (2 cosh(βh+βJS)), in (0, 1)

  Raises:
    InputError: |S| > 2d

  """
  if abs(neighbor_sum) > 2 * params.d:
    raise base.InputError(f'neighbor sum {neighbor_sum} out of [-{2 * params.d}, {2 * params.d}]')
  return float(special.expit(2.0 * params.beta * (params.h + params.J * neighbor_sum)))


####################################################################################################
# CONFIGURATIONS
####################################################################################################


def SpinTable(n: int, /) -> np.ndarray:
  """(2^n, n) int8 table of all configurations, row s holding the spins of index s."""
  if not 0 <= n <= MAX_EXACT_SITES:
    raise base.CapacityError(f'cannot tabulate 2^{n} configurations (cap {MAX_EXACT_SITES})')
  bits: np.ndarray = (np.arange(1 << n, dtype=np.int64)[:, None] >> np.arange(n)) & 1
  return (2 * bits - 1).astype(np.int8)


def ConfigIndices(states: np.ndarray, /) -> np.ndarray:
  """Configuration index of each row of an (R, N) ±1 array."""
  weights: np.ndarray = np.left_shift(1, np.arange(states.shape[1], dtype=np.int64))
  return ((states > 0).astype(np.int64) * weights).sum(axis=1)


def StatesFromIndices(indices: np.ndarray, n: int, /) -> np.ndarray:
  """(R, n) int8 spins of the given configuration indices (inverse of `ConfigIndices`)."""
  bits: np.ndarray = (np.asarray(indices, dtype=np.int64)[:, None] >> np.arange(n)) & 1
  return (2 * bits - 1).astype(np.int8)


def NeighborSums(
  enumeration: lattice.Enumeration, boundary: BoundaryCondition, states: np.ndarray, /
) -> np.ndarray:
  """Boundary-adjusted neighbor sums of every site for a batch of configurations.

  Args:
    enumeration: the box
    boundary: boundary condition
    states: (R, N) array of ±1 spins

  Returns:
    np.ndarray: (R, N) int64 neighbor sums

  """
  padded: np.ndarray = np.concatenate(
    [states.astype(np.int64), np.full((states.shape[0], 1), boundary.field, dtype=np.int64)],
    axis=1,
  )
  return padded[:, enumeration.NeighborArray()].sum(axis=2)


@dataclasses.dataclass(kw_only=True, slots=True, frozen=True)
class SpinConfig:
  """±1 spins indexed by enumeration position."""

  values: tuple[int, ...]
  enumeration: lattice.Enumeration

  def __post_init__(self) -> None:
    """Check construction.

    Raises:
      InputError: wrong length or a value other than ±1

    """
    if len(self.values) != self.enumeration.size:
      raise base.InputError(
        f'configuration has {len(self.values)} spins, box has {self.enumeration.size}'
      )
    if any(v not in {-1, 1} for v in self.values):
      raise base.InputError('spins must be -1 or +1')

  @classmethod
  def Constant(cls, enumeration: lattice.Enumeration, value: int, /) -> SpinConfig:
    """All spins equal to `value`."""
    return cls(values=(value,) * enumeration.size, enumeration=enumeration)

  @classmethod
  def FromIndex(cls, enumeration: lattice.Enumeration, index: int, /) -> SpinConfig:
    """Configuration with the given index (bit k set iff position k is +1)."""
    if not 0 <= index < (1 << enumeration.size):
      raise base.InputError(f'configuration index {index} out of range')
    return cls(
      values=tuple(1 if (index >> k) & 1 else -1 for k in range(enumeration.size)),
      enumeration=enumeration,
    )

  @property
  def index(self) -> int:
    """Configuration index."""
    return sum(1 << k for k, v in enumerate(self.values) if v > 0)

  def AsArray(self) -> np.ndarray:
    """Spins as a (1, N) int8 array."""
    return np.array([self.values], dtype=np.int8)

  def Spin(self, site: lattice.Site, /) -> int:
    """σ_x."""
    return self.values[self.enumeration.Position(site)]

  def Flip(self, site: lattice.Site, /) -> SpinConfig:
    """σ^x."""
    return self.FlipSet((site,))

  def FlipSet(self, sites: abc.Iterable[lattice.Site], /) -> SpinConfig:
    """σ^A (flipping a site twice is not allowed, members must be distinct)."""
    positions: list[int] = [self.enumeration.Position(s) for s in sites]
    if len(set(positions)) != len(positions):
      raise base.InputError('flip set has repeated sites')
    values: list[int] = list(self.values)
    for k in positions:
      values[k] = -values[k]
    return SpinConfig(values=tuple(values), enumeration=self.enumeration)

  def NeighborSum(self, site: lattice.Site, boundary: BoundaryCondition, /) -> int:
    """Boundary-adjusted neighbor sum at `site`."""
    k: int = self.enumeration.Position(site)
    return sum(self.values[j] for j in self.enumeration.neighbor_table[k]) + (
      boundary.field * self.enumeration.missing[k]
    )


####################################################################################################
# EXACT MEASURES
####################################################################################################


@dataclasses.dataclass(kw_only=True, slots=True, frozen=True, eq=False)
class ExactMeasure:
  """Full probability vector of a finite-box Gibbs measure, possibly conditioned on a prefix.

  Spins on positions [0, len(prefix)) are fixed to `prefix`; `probs` ranges over the remaining
  positions, with bit j of an index standing for position len(prefix) + j.
  """

  params: ModelParams
  enumeration: lattice.Enumeration
  boundary: BoundaryCondition
  probs: np.ndarray
  prefix: tuple[int, ...] = ()

  def __post_init__(self) -> None:
    """Check construction.

    Raises:
      InputError: shape mismatch, bad prefix or probabilities not normalized

    """
    if len(self.prefix) > self.enumeration.size or any(v not in {-1, 1} for v in self.prefix):
      raise base.InputError(f'invalid conditioning prefix {self.prefix}')
    if self.probs.shape != (1 << self.n_free,):
      raise base.InputError(f'probability vector shape {self.probs.shape} != (2^{self.n_free},)')
    if abs(float(self.probs.sum()) - 1.0) > _NORMALIZATION_TOLERANCE:
      raise base.InputError(f'probabilities sum to {float(self.probs.sum())!r}, not 1')

  @property
  def offset(self) -> int:
    """First free position."""
    return len(self.prefix)

  @property
  def n_free(self) -> int:
    """Number of free (unconditioned) spins."""
    return self.enumeration.size - len(self.prefix)

  def FreeBit(self, site: lattice.Site, /) -> int:
    """Bit of `site` in the indices of `probs`.

    Raises:
      InputError: site is fixed by the prefix (or outside the box)

    """
    k: int = self.enumeration.Position(site)
    if k < self.offset:
      raise base.InputError(f'site {site} is fixed by the conditioning prefix')
    return k - self.offset

  def FullStates(self) -> np.ndarray:
    """(2^n_free, N) int8 spins of every configuration, prefix included."""
    free: np.ndarray = SpinTable(self.n_free)
    fixed: np.ndarray = np.broadcast_to(
      np.array(self.prefix, dtype=np.int8), (free.shape[0], self.offset)
    )
    return np.concatenate([fixed, free], axis=1)

  def Probability(self, config: SpinConfig, /) -> float:
    """P(σ); zero when σ disagrees with the prefix."""
    if config.values[: self.offset] != self.prefix:
      return 0.0
    return float(self.probs[config.index >> self.offset])


def _Normalized(log_weights: np.ndarray, /) -> np.ndarray:
  weights: np.ndarray = np.exp(log_weights - log_weights.max())
  return weights / weights.sum()


def BuildExactMeasure(
  params: ModelParams,
  enumeration: lattice.Enumeration,
  boundary: BoundaryCondition,
  /,
  *,
  max_sites: int = MAX_EXACT_SITES,
) -> ExactMeasure:
  """Gibbs measure ∝ exp(β Σ_<xy> Jσ_xσ_y + βh Σ_x σ_x + boundary terms) by enumeration.

  Args:
    params: model
    enumeration: the box
    boundary: boundary condition
    max_sites: hard cap on N

  Returns:
    ExactMeasure: normalized probability vector over all 2^N configurations

  Raises:
    CapacityError: N > max_sites (or above MAX_EXACT_SITES)

  """
  n: int = enumeration.size
  if n > min(max_sites, MAX_EXACT_SITES):
    raise base.CapacityError(f'exact measure needs N <= {min(max_sites, MAX_EXACT_SITES)}, N={n}')
  indices: np.ndarray = np.arange(1 << n, dtype=np.int64)
  column: abc.Callable[[int], np.ndarray] = lambda k: (2 * ((indices >> k) & 1) - 1).astype(
    np.int8
  )
  log_w: np.ndarray = np.zeros(1 << n, dtype=np.float64)
  for k in range(n):
    spin_k: np.ndarray = column(k)
    field: float = params.beta * (params.h + params.J * boundary.field * enumeration.missing[k])
    if field:
      log_w += field * spin_k
    upper: list[int] = [j for j in enumeration.neighbor_table[k] if j > k]
    if upper and params.beta:
      bond_sum: np.ndarray = np.zeros(1 << n, dtype=np.int8)
      for j in upper:
        bond_sum += column(j)
      log_w += (params.beta * params.J) * (spin_k * bond_sum)
  logging.info('Built exact measure on %d sites (%d configurations)', n, 1 << n)
  return ExactMeasure(
    params=params, enumeration=enumeration, boundary=boundary, probs=_Normalized(log_w)
  )


def ConditionalMeasure(m: ExactMeasure, fixed: abc.Sequence[int], /) -> ExactMeasure:
  """Condition on spins `fixed` at positions [0, len(fixed)) (extending m's own prefix).

  Args:
    m: measure
    fixed: full prefix ξ_1..ξ_i (an empty prefix returns m itself)

  Returns:
    ExactMeasure: exact conditional law of the remaining spins

  Raises:
    InputError: `fixed` does not extend m.prefix, is too long or has zero mass

  """
  fixed = tuple(fixed)
  if fixed[: m.offset] != m.prefix or len(fixed) > m.enumeration.size:
    raise base.InputError(f'prefix {fixed} does not extend {m.prefix}')
  extra: tuple[int, ...] = fixed[m.offset :]
  if not extra:
    return m
  low: int = sum(1 << j for j, v in enumerate(extra) if v > 0)
  column: np.ndarray = m.probs.reshape(-1, 1 << len(extra))[:, low]
  mass: float = float(column.sum())
  if mass <= 0.0:
    raise base.InputError(f'conditioning prefix {fixed} has zero mass')
  return ExactMeasure(
    params=m.params,
    enumeration=m.enumeration,
    boundary=m.boundary,
    probs=column / mass,
    prefix=fixed,
  )


def RNFlipSup(m: ExactMeasure, site: lattice.Site, /) -> float:
  """max_σ P(σ^x)/P(σ) over free configurations."""
  return RNFlipSetSup(m, {site})


def RNFlipSetSup(m: ExactMeasure, sites: abc.Set[lattice.Site], /) -> float:
  """max_σ P(σ^A)/P(σ); 1 for the empty set."""
  mask: int = sum(1 << m.FreeBit(s) for s in sites)
  if not mask:
    return 1.0
  indices: np.ndarray = np.arange(m.probs.size, dtype=np.int64)
  return float(np.max(m.probs[indices ^ mask] / m.probs))


####################################################################################################
# THRESHOLDS
####################################################################################################


def PercolationBetaThreshold(d: int, /) -> float:
  """β below which the self-avoiding-path series converges at every h: log(2d/(2d-1)) / (8d)."""
  if d < 1:
    raise base.InputError(f'dimension must be >= 1, got {d}')
  return math.log(2.0 * d / (2.0 * d - 1.0)) / (8.0 * d)


def DobrushinThreshold(d: int, /) -> float:
  """β at which 2d·tanh(β) = 1."""
  if d < 1:
    raise base.InputError(f'dimension must be >= 1, got {d}')
  return math.atanh(1.0 / (2.0 * d))


def DobrushinOK(params: ModelParams, /) -> bool:
  """Dobrushin uniqueness condition 2d·tanh(β) < 1 (ferromagnet only).

  Raises:
    NotApplicableError: J = -1

  """
  if params.J != 1:
    raise base.NotApplicableError('Dobrushin condition is only stated for J = +1')
  return 2.0 * params.d * math.tanh(params.beta) < 1.0


def SqrtTailValue(params: ModelParams, /) -> float:
  """(2d-1)·p^{1/2}·e^{c'}: the square-root tail series converges when below 1."""
  return (2.0 * params.d - 1.0) * math.sqrt(params.p) * math.exp(params.c_prime)


def SqrtTailSufficient(params: ModelParams, /) -> bool:
  """Closed-form sufficient condition for the square-root tail constant to be finite."""
  return SqrtTailValue(params) < 1.0


def PercolationThreshold(d: int, /) -> float:
  """Site percolation p_c label for dimension d (1/(2d-1) lower bound beyond d = 3)."""
  if d < 1:
    raise base.InputError(f'dimension must be >= 1, got {d}')
  return _PERCOLATION_THRESHOLDS.get(d, 1.0 / (2.0 * d - 1.0))


def BetaForP(p: float, d: int, h: float = 0.0, /) -> float:
  """β with ModelParams(d, β, h).p == p.

  Args:
    p: target disagreement parameter >= 0
    d: dimension
    h: field >= 0

  Returns:
    float: the unique root (p is increasing in β while h <= 2d)

  Raises:
    InputError: p < 0, or the target is not reachable at this h

  """
  if p < 0.0 or not math.isfinite(p):
    raise base.InputError(f'invalid target p={p}')
  if p == 0.0:
    return 0.0
  if h == 0.0:
    return math.asinh(p / 2.0) / (4.0 * d)
  gap: abc.Callable[[float], float] = lambda beta: ModelParams(d=d, beta=beta, h=h).p - p
  upper: float = 1.0
  for _ in range(64):
    if gap(upper) > 0.0:
      return float(optimize.brentq(gap, 0.0, upper, xtol=1e-15, rtol=1e-13))
    upper *= 2.0
  raise base.InputError(f'p={p} is not reachable at d={d}, h={h}')


####################################################################################################
# BINARY EXPORT: u64 little-endian N, then 2^N little-endian doubles
####################################################################################################


def ExportProbabilities(m: ExactMeasure, path: pathlib.Path, /) -> None:
  """Write m.probs to `path` in the binary exchange format."""
  header: bytes = np.array([m.n_free], dtype='<u8').tobytes()
  path.write_bytes(header + m.probs.astype('<f8').tobytes())
  logging.info('Exported %d probabilities to %r', m.probs.size, str(path))


def ImportProbabilities(path: pathlib.Path, /) -> np.ndarray:
  """Read a probability vector written by `ExportProbabilities`.

  Raises:
    InputError: truncated file or inconsistent header

  """
  data: bytes = path.read_bytes()
  if len(data) < _HEADER_BYTES:
    raise base.InputError(f'{str(path)!r} too short for a header')
  n = int(np.frombuffer(data[:_HEADER_BYTES], dtype='<u8')[0])
  if n > MAX_EXACT_SITES or len(data) != _HEADER_BYTES + 8 * (1 << n):
    raise base.InputError(f'{str(path)!r} does not hold 2^{n} doubles')
  return np.frombuffer(data[_HEADER_BYTES:], dtype='<f8').astype(np.float64)
