# SPDX-FileCopyrightText: Copyright 2026 BellaKeri@github.com & balparda@github.com
# SPDX-License-Identifier: Apache-2.0
"""Disagreement-percolation coupling of two conditioned Gibbs measures.

Given a prefix ξ on ranks [1, i), the measures conditioned on ξ·(+ at rank i) and
ξ·(- at rank i) are coupled site by site in scan order: the next site is the lowest-ranked
ungenerated site above the pivot that touches the current disagreement cluster, otherwise a
frontier site of the generated region (the fallback order). Every pair is drawn from the maximal
coupling of the two exact single-site conditionals given everything generated so far.

Exact mode enumerates or samples this construction on small boxes; two-stage mode replaces it by
an independent failure cluster that dominates the disagreement cluster by construction.
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

from . import glauber, lattice, model
from . import mrf_base as base

MAX_EXACT_COUPLING_SITES = 20  # free sites above the pivot
_AGREEMENT_SNAP = 1e-12
_DOMINATION_TOLERANCE = 1e-10


class CouplingMode(enum.Enum):
  """How a transcript was produced."""

  EXACT = 'exact'
  TWO_STAGE = 'two_stage'


class FallbackOrder(enum.Enum):
  """Which frontier site is generated when no site touches the disagreement cluster."""

  LOWEST = 'lowest'
  HIGHEST = 'highest'


####################################################################################################
# MAXIMAL COUPLING OF TWO BERNOULLI LAWS
####################################################################################################


@dataclasses.dataclass(kw_only=True, slots=True, frozen=True)
class BinaryCouplingTable:
  """Joint law of (Y, Z) ∈ {±1}²; pm = P(Y=+, Z=-) and so on."""

  pp: float
  pm: float
  mp: float
  mm: float

  def __post_init__(self) -> None:
    """Check construction.

    Raises:
      InputError: negative cells or cells not summing to 1

    """
    cells: tuple[float, ...] = (self.pp, self.pm, self.mp, self.mm)
    if min(cells) < 0.0 or abs(math.fsum(cells) - 1.0) > _AGREEMENT_SNAP:
      raise base.InputError(f'invalid coupling table {cells}')

  @property
  def disagreement(self) -> float:
    """P(Y != Z)."""
    return self.pm + self.mp

  @property
  def y_plus(self) -> float:
    """P(Y = +)."""
    return self.pp + self.pm

  @property
  def z_plus(self) -> float:
    """P(Z = +)."""
    return self.pp + self.mp

  def Cells(self) -> tuple[tuple[int, int, float], ...]:
    """(y, z, probability) for the four cells, in (++, +-, -+, --) order."""
    return ((1, 1, self.pp), (1, -1, self.pm), (-1, 1, self.mp), (-1, -1, self.mm))

  def Draw(self, u: float, /) -> tuple[int, int]:
    """(y, z) from one uniform u in [0, 1) by inversion over `Cells()`."""
    total: float = 0.0
    last: tuple[int, int] = (1, 1)
    for y, z, q in self.Cells():
      if q <= 0.0:
        continue
      total += q
      last = (y, z)
      if u < total:
        return last
    return last

  def ZGivenY(self, y: int, u: float, /) -> int:
    """Z drawn from its conditional law given Y = y, using uniform u."""
    mass: float = self.y_plus if y > 0 else 1.0 - self.y_plus
    if mass <= 0.0:
      return y
    plus: float = (self.pp if y > 0 else self.mp) / mass
    return 1 if u < plus else -1


def OptimalBinaryCoupling(p1: float, p2: float, /) -> BinaryCouplingTable:
  """Maximal coupling of Bernoulli laws with P(Y=+) = p1 and P(Z=+) = p2.

  Args:
    p1: P(Y = +) in [0, 1]
    p2: P(Z = +) in [0, 1]

  Returns:
    BinaryCouplingTable: pp = min(p1, p2), mm = min(1-p1, 1-p2), the remaining |p1 - p2|
        on the single off-diagonal cell consistent with the marginals

  Raises:
    InputError: probabilities outside [0, 1]

  """
  if not (0.0 <= p1 <= 1.0 and 0.0 <= p2 <= 1.0):
    raise base.InputError(f'probabilities must be in [0, 1], got {p1}, {p2}')
  return BinaryCouplingTable(
    pp=min(p1, p2),
    pm=max(0.0, p1 - p2),
    mp=max(0.0, p2 - p1),
    mm=min(1.0 - p1, 1.0 - p2),
  )


####################################################################################################
# TRANSCRIPTS
####################################################################################################


@dataclasses.dataclass(kw_only=True, slots=True, frozen=True)
class CouplingTranscript:
  """One realization of the coupling above a pivot."""

  enumeration: lattice.Enumeration
  pivot_rank: int
  conditioning: tuple[int, ...]
  pairs: tuple[tuple[int, int, int], ...]  # (rank, y, z) in generation order
  disagreement: frozenset[lattice.Site]  # pivot included
  mode: CouplingMode
  failure: frozenset[lattice.Site] | None = None

  def __post_init__(self) -> None:
    """Check the transcript invariants.

    Raises:
      Error: any structural invariant broken

    """
    pivot: lattice.Site = self.enumeration.SiteAtRank(self.pivot_rank)
    if len(self.conditioning) != self.pivot_rank - 1:
      raise base.Error(
        f'conditioning has {len(self.conditioning)} spins, pivot rank is {self.pivot_rank}'
      )
    ranks: list[int] = [r for r, _, _ in self.pairs]
    if sorted(ranks) != list(range(self.pivot_rank + 1, self.enumeration.size + 1)):
      raise base.Error(f'pairs do not cover ranks above {self.pivot_rank} exactly once')
    expected: set[lattice.Site] = {pivot} | {
      self.enumeration.SiteAtRank(r) for r, y, z in self.pairs if y != z
    }
    if self.disagreement != expected:
      raise base.Error('disagreement set does not match the pairs')
    if not lattice.IsConnected(self.disagreement):
      raise base.Error(f'disagreement cluster is not connected: {sorted(self.disagreement)}')
    if self.mode is CouplingMode.TWO_STAGE and (
      self.failure is None or not self.disagreement <= self.failure
    ):
      raise base.Error('two-stage disagreement cluster escapes the failure cluster')

  @property
  def size(self) -> int:
    """|C_i|."""
    return len(self.disagreement)


class TranscriptModel(base.ReportBaseModel):
  """Coupling transcript."""

  pivot_rank: int = pydantic.Field(description='Rank of the pivot site')
  conditioning: list[int] = pydantic.Field(description='Spins on ranks before the pivot')
  pairs: list[tuple[int, int, int]] = pydantic.Field(description='(rank, y, z) in scan order')
  disagreement: list[int] = pydantic.Field(description='Ranks where y != z, pivot included')
  failure: list[int] | None = pydantic.Field(description='Failure cluster ranks (two-stage)')
  mode: str = pydantic.Field(description='exact | two_stage')

  @classmethod
  def from_domain(cls, t: CouplingTranscript) -> TranscriptModel:
    """Convert domain ``CouplingTranscript`` to Pydantic model.

    Returns:
      TranscriptModel: converted model

    """
    ranks: abc.Callable[[abc.Iterable[lattice.Site]], list[int]] = lambda sites: sorted(
      t.enumeration.Rank(s) for s in sites
    )
    return cls(
      pivot_rank=t.pivot_rank,
      conditioning=list(t.conditioning),
      pairs=list(t.pairs),
      disagreement=ranks(t.disagreement),
      failure=None if t.failure is None else ranks(t.failure),
      mode=t.mode.value,
    )


def _NextPosition(
  enumeration: lattice.Enumeration,
  pivot: int,
  generated: abc.Set[int],
  cluster: abc.Set[int],
  fallback: FallbackOrder,
  /,
) -> int | None:
  """Next position to generate, or None once every position above the pivot is generated."""
  touching: set[int] = {
    j for c in cluster for j in enumeration.neighbor_table[c] if j > pivot and j not in generated
  }
  if touching:
    return min(touching)
  frontier: set[int] = {
    j
    for r in itertools.chain(range(pivot + 1), generated)
    for j in enumeration.neighbor_table[r]
    if j > pivot and j not in generated
  }
  if not frontier:
    return None
  return min(frontier) if fallback is FallbackOrder.LOWEST else max(frontier)


def _CheckPivot(
  enumeration: lattice.Enumeration, pivot_rank: int, prefix: abc.Sequence[int], /
) -> None:
  enumeration.SiteAtRank(pivot_rank)
  if len(prefix) != pivot_rank - 1 or any(v not in {-1, 1} for v in prefix):
    raise base.InputError(f'prefix must hold {pivot_rank - 1} spins of ±1, got {tuple(prefix)}')


####################################################################################################
# EXACT MODE
####################################################################################################


@dataclasses.dataclass(kw_only=True, slots=True, frozen=True, eq=False)
class _ExactContext:
  """Exact conditional laws above the pivot under ξ·(+) and ξ·(-)."""

  enumeration: lattice.Enumeration
  pivot: int  # 0-based
  plus: np.ndarray  # bit j stands for position pivot + 1 + j
  minus: np.ndarray
  fallback: FallbackOrder


def _Context(
  m: model.ExactMeasure,
  pivot_rank: int,
  prefix: abc.Sequence[int],
  fallback: FallbackOrder,
  /,
) -> _ExactContext:
  if m.prefix:
    raise base.InputError('coupling needs an unconditioned measure')
  _CheckPivot(m.enumeration, pivot_rank, prefix)
  rest: int = m.enumeration.size - pivot_rank
  if rest > MAX_EXACT_COUPLING_SITES:
    raise base.CapacityError(
      f'exact coupling needs <= {MAX_EXACT_COUPLING_SITES} sites above the pivot, got {rest}'
    )
  return _ExactContext(
    enumeration=m.enumeration,
    pivot=pivot_rank - 1,
    plus=model.ConditionalMeasure(m, (*prefix, 1)).probs,
    minus=model.ConditionalMeasure(m, (*prefix, -1)).probs,
    fallback=fallback,
  )


@dataclasses.dataclass(kw_only=True, slots=True, frozen=True, eq=False)
class _Node:
  weight: float
  y_indices: np.ndarray  # indices still consistent with Y's generated values
  z_indices: np.ndarray
  order: tuple[tuple[int, int, int], ...]  # (position, y, z)
  cluster: frozenset[int]


def _Root(ctx: _ExactContext, /) -> _Node:
  everything: np.ndarray = np.arange(ctx.plus.size, dtype=np.int64)
  return _Node(
    weight=1.0,
    y_indices=everything,
    z_indices=everything,
    order=(),
    cluster=frozenset([ctx.pivot]),
  )


def _Split(
  ctx: _ExactContext, node: _Node, position: int, /
) -> tuple[BinaryCouplingTable, dict[tuple[int, int], tuple[np.ndarray, np.ndarray]]]:
  """Maximal coupling at `position` and the index sets of each (y, z) outcome."""
  bit: int = 1 << (position - ctx.pivot - 1)
  y_up: np.ndarray = node.y_indices[(node.y_indices & bit) != 0]
  y_down: np.ndarray = node.y_indices[(node.y_indices & bit) == 0]
  z_up: np.ndarray = node.z_indices[(node.z_indices & bit) != 0]
  z_down: np.ndarray = node.z_indices[(node.z_indices & bit) == 0]
  p1: float = min(1.0, float(ctx.plus[y_up].sum() / ctx.plus[node.y_indices].sum()))
  p2: float = min(1.0, float(ctx.minus[z_up].sum() / ctx.minus[node.z_indices].sum()))
  if abs(p1 - p2) <= _AGREEMENT_SNAP:
    p2 = p1
  table: BinaryCouplingTable = OptimalBinaryCoupling(p1, p2)
  branches: dict[tuple[int, int], tuple[np.ndarray, np.ndarray]] = {
    (y, z): (y_up if y > 0 else y_down, z_up if z > 0 else z_down) for y, z, _ in table.Cells()
  }
  return (table, branches)


def _Child(
  node: _Node,
  position: int,
  y: int,
  z: int,
  q: float,
  branch: tuple[np.ndarray, np.ndarray],
  /,
) -> _Node:
  return _Node(
    weight=node.weight * q,
    y_indices=branch[0],
    z_indices=branch[1],
    order=(*node.order, (position, y, z)),
    cluster=node.cluster | {position} if y != z else node.cluster,
  )


@dataclasses.dataclass(kw_only=True, slots=True, frozen=True)
class CouplingLeaf:
  """Complete branch of the coupling tree."""

  weight: float
  y_index: int  # configuration index of Y above the pivot
  z_index: int
  cluster: frozenset[int]  # disagreement positions, pivot included
  order: tuple[tuple[int, int, int], ...]


def CouplingTree(
  m: model.ExactMeasure,
  pivot_rank: int,
  prefix: abc.Sequence[int],
  /,
  *,
  fallback: FallbackOrder = FallbackOrder.LOWEST,
) -> list[CouplingLeaf]:
  """Every branch of the exact coupling with its probability (weights sum to 1).

  Args:
    m: unconditioned exact measure
    pivot_rank: rank i of the pivot
    prefix: spins ξ on ranks [1, i)
    fallback: frontier order when no site touches the disagreement cluster

  Returns:
    list[CouplingLeaf]: leaves in depth-first order

  Raises:
    InputError: invalid pivot or prefix
    CapacityError: too many sites above the pivot

  """
  ctx: _ExactContext = _Context(m, pivot_rank, prefix, fallback)
  leaves: list[CouplingLeaf] = []
  stack: list[_Node] = [_Root(ctx)]
  while stack:
    node: _Node = stack.pop()
    position: int | None = _NextPosition(
      ctx.enumeration, ctx.pivot, {k for k, _, _ in node.order}, node.cluster, ctx.fallback
    )
    if position is None:
      leaves.append(
        CouplingLeaf(
          weight=node.weight,
          y_index=int(node.y_indices[0]),
          z_index=int(node.z_indices[0]),
          cluster=node.cluster,
          order=node.order,
        )
      )
      continue
    table, branches = _Split(ctx, node, position)
    for y, z, q in reversed(table.Cells()):
      if q > 0.0:
        stack.append(_Child(node, position, y, z, q, branches[y, z]))
  logging.debug('coupling tree above rank %d: %d leaves', pivot_rank, len(leaves))
  return leaves


def TreeMarginals(
  leaves: abc.Sequence[CouplingLeaf], size: int, /
) -> tuple[np.ndarray, np.ndarray]:
  """Laws of Y and of Z (over `size` configurations above the pivot) implied by the leaves."""
  y: np.ndarray = np.zeros(size)
  z: np.ndarray = np.zeros(size)
  for leaf in leaves:
    y[leaf.y_index] += leaf.weight
    z[leaf.z_index] += leaf.weight
  return (y, z)


def ClusterSizeLaw(leaves: abc.Sequence[CouplingLeaf], /) -> dict[int, float]:
  """Exact law of |C_i| from the leaves."""
  law: dict[int, float] = {}
  for leaf in leaves:
    law[len(leaf.cluster)] = law.get(len(leaf.cluster), 0.0) + leaf.weight
  return dict(sorted(law.items()))


def _Transcript(
  enumeration: lattice.Enumeration,
  pivot_rank: int,
  prefix: abc.Sequence[int],
  order: abc.Iterable[tuple[int, int, int]],
  mode: CouplingMode,
  /,
  *,
  failure: frozenset[lattice.Site] | None = None,
) -> CouplingTranscript:
  pairs: tuple[tuple[int, int, int], ...] = tuple((k + 1, y, z) for k, y, z in order)
  pivot: lattice.Site = enumeration.SiteAtRank(pivot_rank)
  return CouplingTranscript(
    enumeration=enumeration,
    pivot_rank=pivot_rank,
    conditioning=tuple(prefix),
    pairs=pairs,
    disagreement=frozenset(
      [pivot, *(enumeration.SiteAtRank(r) for r, y, z in pairs if y != z)]
    ),
    mode=mode,
    failure=failure,
  )


def GrowCouplingExact(
  m: model.ExactMeasure,
  pivot_rank: int,
  prefix: abc.Sequence[int],
  rng: np.random.Generator,
  /,
  *,
  fallback: FallbackOrder = FallbackOrder.LOWEST,
) -> CouplingTranscript:
  """Sample one branch of the exact coupling (one uniform per generated site).

  Raises:
    InputError: invalid pivot or prefix
    CapacityError: too many sites above the pivot

  """
  ctx: _ExactContext = _Context(m, pivot_rank, prefix, fallback)
  node: _Node = _Root(ctx)
  while True:
    position: int | None = _NextPosition(
      ctx.enumeration, ctx.pivot, {k for k, _, _ in node.order}, node.cluster, fallback
    )
    if position is None:
      break
    table, branches = _Split(ctx, node, position)
    y, z = table.Draw(float(rng.random()))
    node = _Child(node, position, y, z, 1.0, branches[y, z])
  return _Transcript(m.enumeration, pivot_rank, prefix, node.order, CouplingMode.EXACT)


####################################################################################################
# TWO-STAGE MODE
####################################################################################################


def GrowCouplingTwoStage(
  params: model.ModelParams,
  enumeration: lattice.Enumeration,
  boundary: model.BoundaryCondition,
  pivot_rank: int,
  prefix: abc.Sequence[int],
  rng: np.random.Generator,
  /,
  *,
  measure: model.ExactMeasure | None = None,
  burn_in_sweeps: int | None = None,
) -> CouplingTranscript:
  """Failure-coin realization: C̃_i grown from independent coins, Z = Y off C̃_i.

  Y follows the ξ·(+) conditional law (exact sampling when `measure` is given, heat-bath sweeps
  otherwise). Failure coins, each failing with probability min(p, 1), are tossed in scan order
  on sites touching the failure cluster, independently of Y. On a failure site touching the
  current disagreement set, Z is drawn from the maximal coupling of the local heat-bath
  conditionals of Y and Z; everywhere else Z copies Y.

  Raises:
    InputError: invalid pivot or prefix

  """
  _CheckPivot(enumeration, pivot_rank, prefix)
  n: int = enumeration.size
  pivot: int = pivot_rank - 1
  fixed: tuple[int, ...] = (*prefix, 1)
  y_states: np.ndarray
  if measure is not None:
    if measure.enumeration != enumeration or measure.prefix:
      raise base.InputError('measure does not match the box')
    cond: model.ExactMeasure = model.ConditionalMeasure(measure, fixed)
    free: np.ndarray = model.StatesFromIndices(
      np.array([rng.choice(cond.probs.size, p=cond.probs)]), cond.n_free
    )
    y_states = np.concatenate([np.array([fixed], dtype=np.int8), free], axis=1)[0]
  else:
    sweeps: int = (
      glauber.DEFAULT_BURN_IN_SWEEPS_PER_SITE * n if burn_in_sweeps is None else burn_in_sweeps
    )
    y_states = glauber.HeatBathSample(
      params, enumeration, boundary, rng, sweeps=sweeps, fixed=fixed
    )[0]
  # failure cluster, grown in scan order and independent of Y
  fail_p: float = min(params.p, 1.0)
  failure: set[int] = {pivot}
  examined: list[int] = []
  while touching := sorted(
    {
      j
      for c in failure
      for j in enumeration.neighbor_table[c]
      if j > pivot and j not in examined
    }
  ):
    examined.append(touching[0])
    if rng.random() < fail_p:
      failure.add(touching[0])
  # Z from Y: only failure sites touching the disagreement set may differ
  y_config: model.SpinConfig = model.SpinConfig(
    values=tuple(int(v) for v in y_states), enumeration=enumeration
  )
  z_values: list[int] = list(y_config.values)
  z_values[pivot] = -1
  disagreement: set[int] = {pivot}
  for position in examined:
    if position not in failure or not disagreement & set(enumeration.neighbor_table[position]):
      continue
    site: lattice.Site = enumeration.sites[position]
    z_config = model.SpinConfig(values=tuple(z_values), enumeration=enumeration)
    table: BinaryCouplingTable = OptimalBinaryCoupling(
      model.ConditionalPlusProb(params, y_config.NeighborSum(site, boundary)),
      model.ConditionalPlusProb(params, z_config.NeighborSum(site, boundary)),
    )
    z_values[position] = table.ZGivenY(y_config.values[position], float(rng.random()))
    if z_values[position] != y_config.values[position]:
      disagreement.add(position)
  order: list[int] = examined + sorted(set(range(pivot + 1, n)) - set(examined))
  return _Transcript(
    enumeration,
    pivot_rank,
    prefix,
    ((k, y_config.values[k], z_values[k]) for k in order),
    CouplingMode.TWO_STAGE,
    failure=frozenset(enumeration.sites[k] for k in failure),
  )


####################################################################################################
# AUDITS
####################################################################################################


@dataclasses.dataclass(kw_only=True, slots=True, frozen=True)
class DominationResult:
  """sup_ξ P̂(C_i ⊇ A) against P_p(cluster of the origin ⊇ A) = p^{|A|-1}."""

  subset: frozenset[lattice.Site]
  lhs: float
  rhs: float
  worst_prefix: tuple[int, ...]

  def AsAssertion(self, enumeration: lattice.Enumeration, /) -> base.Assertion:
    """Assertion lhs <= rhs (+1e-10)."""
    ranks: list[int] = sorted(enumeration.Rank(s) for s in self.subset)
    return base.Assertion(
      name=f'domination(A={ranks})', lhs=self.lhs, rhs=self.rhs, tolerance=_DOMINATION_TOLERANCE
    )


def DominationAudit(
  m: model.ExactMeasure,
  pivot_rank: int,
  subsets: abc.Sequence[abc.Set[lattice.Site]],
  /,
  *,
  prefixes: abc.Iterable[tuple[int, ...]] | None = None,
  fallback: FallbackOrder = FallbackOrder.LOWEST,
  threads: int = 1,
) -> list[DominationResult]:
  """Exact domination of the disagreement cluster by independent site percolation.

  A connected A containing the pivot is inside the open cluster iff its other |A|-1 sites are
  open, so the percolation side is exactly p^{|A|-1}.

  Args:
    m: unconditioned exact measure
    pivot_rank: rank i of the pivot
    subsets: connected sets containing the pivot
    prefixes: conditionings to scan (default: all 2^{i-1})
    fallback: frontier order
    threads: worker pool size (one task per prefix)

  Returns:
    list[DominationResult]: one per subset, in input order

  Raises:
    InputError: a subset not connected, not containing the pivot or leaving the box

  """
  pivot: lattice.Site = m.enumeration.SiteAtRank(pivot_rank)
  targets: list[frozenset[int]] = []
  for a in subsets:
    if pivot not in a or not lattice.IsConnected(a):
      raise base.InputError(f'subset {sorted(a)} must be connected and contain the pivot')
    targets.append(frozenset(m.enumeration.Position(s) for s in a))
  scan: list[tuple[int, ...]] = (
    list(itertools.product((-1, 1), repeat=pivot_rank - 1)) if prefixes is None else list(prefixes)
  )

  def _Prefix(j: int, /) -> list[float]:
    leaves: list[CouplingLeaf] = CouplingTree(m, pivot_rank, scan[j], fallback=fallback)
    return [
      math.fsum(leaf.weight for leaf in leaves if target <= leaf.cluster) for target in targets
    ]

  table: list[list[float]] = base.ParallelMap(_Prefix, len(scan), threads=threads)
  results: list[DominationResult] = []
  for t, a in enumerate(subsets):
    column: list[float] = [row[t] for row in table]
    worst: int = int(np.argmax(column)) if column else 0
    results.append(
      DominationResult(
        subset=frozenset(a),
        lhs=column[worst] if column else 0.0,
        rhs=m.params.p ** (len(a) - 1),
        worst_prefix=scan[worst] if scan else (),
      )
    )
  logging.info('Domination audit: %d subsets over %d prefixes', len(targets), len(scan))
  return results


def ConditionalRNAudit(
  m: model.ExactMeasure,
  pivot_rank: int,
  subset: lattice.OrderedSubset,
  site: lattice.Site,
  /,
  *,
  prefix: abc.Sequence[int] | None = None,
) -> float:
  """max over configurations of P(Z on A_{<x}, Y elsewhere) / P(Y) above the pivot.

  The composite uses Z on the members of A before `site` and Y on every other free site; both
  laws come from the exact coupling tree. Members at or below the pivot are fixed by the
  conditioning and play no role.

  Returns:
    float: the maximal likelihood ratio (1 when A_{<x} has no free member)

  Raises:
    InputError: pivot not in A, `site` not in A, or a bad prefix

  """
  pivot_site: lattice.Site = m.enumeration.SiteAtRank(pivot_rank)
  if pivot_site not in subset:
    raise base.InputError('the subset must contain the pivot')
  before: lattice.OrderedSubset = subset.PrefixBefore(site)
  fixed: tuple[int, ...] = (1,) * (pivot_rank - 1) if prefix is None else tuple(prefix)
  leaves: list[CouplingLeaf] = CouplingTree(m, pivot_rank, fixed)
  mask: int = sum(
    1 << (m.enumeration.Position(s) - pivot_rank)
    for s in before.members
    if m.enumeration.Position(s) >= pivot_rank
  )
  size: int = 1 << (m.enumeration.size - pivot_rank)
  composite: np.ndarray = np.zeros(size)
  for leaf in leaves:
    composite[(leaf.z_index & mask) | (leaf.y_index & ~mask)] += leaf.weight
  reference: np.ndarray = model.ConditionalMeasure(m, (*fixed, 1)).probs
  return float(np.max(composite / reference))


def SingleSiteBoundAudit(params: model.ModelParams, /) -> base.Assertion:
  """max over neighbor sums S of the disagreement |P(+|S) - P(+|S+2)| against p."""
  worst: float = max(
    OptimalBinaryCoupling(
      model.ConditionalPlusProb(params, s), model.ConditionalPlusProb(params, s + 2)
    ).disagreement
    for s in range(-2 * params.d, 2 * params.d - 1)
  )
  return base.Assertion(
    name=f'single_site_disagreement(beta={params.beta!r},h={params.h!r})',
    lhs=worst,
    rhs=params.p,
    tolerance=1e-15,
  )
