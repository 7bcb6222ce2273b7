# SPDX-FileCopyrightText: Copyright 2026 BellaKeri@github.com & balparda@github.com
# SPDX-License-Identifier: Apache-2.0
"""Finite boxes of Z^d in shell order, neighbor tables and order-dependent subsets.

A box is the first N sites of the shell enumeration: sites sorted by l1-norm, ties broken by
lexicographic coordinate order. Every site after the origin touches some earlier site, so every
prefix of the enumeration is itself a connected box.

Internally sites are addressed by 0-based *position* in the enumeration; reports use 1-based
*rank* (rank = position + 1).
"""

from __future__ import annotations

import collections
import dataclasses
import functools
import itertools
from collections import abc

import numpy as np

from . import mrf_base as base

type Site = tuple[int, ...]


def Origin(d: int, /) -> Site:
  """Origin of Z^d."""
  return (0,) * d


def LatticeNeighbors(site: Site, /) -> tuple[Site, ...]:
  """The 2d nearest neighbors of `site` in Z^d, in (axis, -1 before +1) order."""
  out: list[Site] = []
  for axis, coord in enumerate(site):
    for step in (-1, 1):
      out.append((*site[:axis], coord + step, *site[axis + 1 :]))
  return tuple(out)


def IsConnected(sites: abc.Set[Site], /) -> bool:
  """True iff `sites` is nearest-neighbor connected (the empty set counts as connected)."""
  if not sites:
    return True
  start: Site = next(iter(sites))
  seen: set[Site] = {start}
  queue: collections.deque[Site] = collections.deque([start])
  while queue:
    for nb in LatticeNeighbors(queue.popleft()):
      if nb in sites and nb not in seen:
        seen.add(nb)
        queue.append(nb)
  return len(seen) == len(sites)


@functools.cache
def _Shell(d: int, radius: int, /) -> tuple[Site, ...]:
  """All sites of Z^d with l1-norm exactly `radius`, lexicographically sorted."""
  if d == 1:
    return ((-radius,), (radius,)) if radius else ((0,),)
  out: list[Site] = []
  for first in range(-radius, radius + 1):
    out.extend((first, *tail) for tail in _Shell(d - 1, radius - abs(first)))
  return tuple(out)


@dataclasses.dataclass(kw_only=True, slots=True, frozen=True)
class Enumeration:
  """Ordered finite sublattice of Z^d with its neighbor structure."""

  dim: int
  sites: tuple[Site, ...]
  index_of: dict[Site, int] = dataclasses.field(init=False, repr=False, compare=False)
  neighbor_table: tuple[tuple[int, ...], ...] = dataclasses.field(
    init=False, repr=False, compare=False
  )  # per position: positions of in-box neighbors
  padded_neighbors: tuple[tuple[int, ...], ...] = dataclasses.field(
    init=False, repr=False, compare=False
  )  # per position: 2d entries, `size` marks a neighbor outside the box
  missing: tuple[int, ...] = dataclasses.field(init=False, repr=False, compare=False)

  def __post_init__(self) -> None:
    """Check construction and build the lookup tables.

    Raises:
      InputError: bad dimension, empty box, duplicates, origin not first,
          or a site not touching the sites before it

    """
    if self.dim < 1:
      raise base.InputError(f'dimension must be >= 1, got {self.dim}')
    if not self.sites:
      raise base.InputError('empty enumeration')
    if any(len(s) != self.dim for s in self.sites):
      raise base.InputError(f'all sites must have {self.dim} coordinates')
    index_of: dict[Site, int] = {s: i for i, s in enumerate(self.sites)}
    if len(index_of) != len(self.sites):
      raise base.InputError('duplicate sites in enumeration')
    if self.sites[0] != Origin(self.dim):
      raise base.InputError(f'enumeration must start at the origin, got {self.sites[0]}')
    n: int = len(self.sites)
    padded: list[tuple[int, ...]] = []
    for i, site in enumerate(self.sites):
      row: tuple[int, ...] = tuple(index_of.get(nb, n) for nb in LatticeNeighbors(site))
      if i and min(row) >= i:
        raise base.InputError(f'site {site} at rank {i + 1} touches no earlier site')
      padded.append(row)
    object.__setattr__(self, 'index_of', index_of)
    object.__setattr__(self, 'padded_neighbors', tuple(padded))
    object.__setattr__(
      self, 'neighbor_table', tuple(tuple(j for j in row if j < n) for row in padded)
    )
    object.__setattr__(self, 'missing', tuple(row.count(n) for row in padded))

  @property
  def size(self) -> int:
    """Number of sites N."""
    return len(self.sites)

  def Position(self, site: Site, /) -> int:
    """0-based position of `site`.

    Raises:
      InputError: site not in the box

    """
    try:
      return self.index_of[site]
    except KeyError as err:
      raise base.InputError(f'site {site} not in box of {self.size} sites') from err

  def Rank(self, site: Site, /) -> int:
    """1-based rank of `site` (x_rank in enumeration order)."""
    return self.Position(site) + 1

  def SiteAtRank(self, rank: int, /) -> Site:
    """Site with 1-based `rank`.

    Raises:
      InputError: rank out of [1, N]

    """
    if not 1 <= rank <= self.size:
      raise base.InputError(f'rank {rank} out of [1, {self.size}]')
    return self.sites[rank - 1]

  def Neighbors(self, site: Site, /) -> tuple[Site, ...]:
    """In-box nearest neighbors of `site`."""
    return tuple(self.sites[j] for j in self.neighbor_table[self.Position(site)])

  def NeighborArray(self) -> np.ndarray:
    """(N, 2d) int64 array of neighbor positions; N stands for 'outside the box'."""
    return np.array(self.padded_neighbors, dtype=np.int64).reshape(self.size, 2 * self.dim)

  def Line(self, axis: int, start: int, length: int, /) -> tuple[Site, ...]:
    """Sites origin + (start + j)·e_axis for j in [0, length), all required to be in the box.

    Raises:
      InputError: axis out of range or a line site outside the box

    """
    if not 0 <= axis < self.dim:
      raise base.InputError(f'axis {axis} out of [0, {self.dim})')
    line: list[Site] = []
    for j in range(length):
      site: Site = tuple(start + j if a == axis else 0 for a in range(self.dim))
      if site not in self.index_of:
        raise base.InputError(f'line site {site} not in box of {self.size} sites')
      line.append(site)
    return tuple(line)


@functools.cache
def EnumerateBox(d: int, n_sites: int, /) -> Enumeration:
  """First `n_sites` sites of the shell enumeration of Z^d.

  Args:
    d: dimension >= 1
    n_sites: box size >= 1

  Returns:
    Enumeration: deterministic (and cached) box

  Raises:
    InputError: d < 1 or n_sites < 1

  """
  if d < 1 or n_sites < 1:
    raise base.InputError(f'invalid box: d={d}, n_sites={n_sites}')
  sites: list[Site] = []
  for radius in itertools.count():
    sites.extend(_Shell(d, radius))
    if len(sites) >= n_sites:
      break
  return Enumeration(dim=d, sites=tuple(sites[:n_sites]))


def ExteriorBoundary(sites: abc.Set[Site], enumeration: Enumeration, /) -> set[Site]:
  """All sites of the box adjacent to `sites` but not in it.

  Raises:
    InputError: `sites` not contained in the box

  """
  if not sites <= enumeration.index_of.keys():
    raise base.InputError('set is not contained in the box')
  return {nb for s in sites for nb in enumeration.Neighbors(s) if nb not in sites}


@dataclasses.dataclass(kw_only=True, slots=True, frozen=True)
class OrderedSubset:
  """Distinct sites in the order used for telescoping sums."""

  members: tuple[Site, ...]

  def __post_init__(self) -> None:
    """Check construction.

    Raises:
      InputError: repeated members

    """
    if len(set(self.members)) != len(self.members):
      raise base.InputError(f'repeated sites in ordered subset {self.members}')

  def __len__(self) -> int:
    """Number of members."""
    return len(self.members)

  def __contains__(self, site: object) -> bool:
    """Membership."""
    return site in self.members

  def AsSet(self) -> frozenset[Site]:
    """Members as an unordered set."""
    return frozenset(self.members)

  def PrefixBefore(self, site: Site, /) -> OrderedSubset:
    """A_{<x}: members strictly before `site` (empty for the first member).

    Raises:
      InputError: `site` is not a member

    """
    try:
      return OrderedSubset(members=self.members[: self.members.index(site)])
    except ValueError as err:
      raise base.InputError(f'site {site} not in ordered subset') from err

  def ExtendedBy(self, other: abc.Iterable[Site], /) -> OrderedSubset:
    """This subset followed by the new sites of `other` (B enumerated A-first)."""
    return OrderedSubset(members=self.members + tuple(s for s in other if s not in self.members))


def PrefixBefore(subset: OrderedSubset, site: Site, /) -> OrderedSubset:
  """A_{<x} of `subset` at `site` (see `OrderedSubset.PrefixBefore`)."""
  return subset.PrefixBefore(site)


def ConnectedSubsets(
  enumeration: Enumeration, root: Site, max_size: int, /
) -> list[frozenset[Site]]:
  """All connected subsets of the box containing `root` with at most `max_size` sites.

  Args:
    enumeration: the box
    root: site every subset must contain
    max_size: largest subset size (>= 1)

  Returns:
    list[frozenset[Site]]: subsets ordered by size, then by sorted ranks

  Raises:
    InputError: root outside the box or max_size < 1

  """
  enumeration.Position(root)
  if max_size < 1:
    raise base.InputError(f'max_size must be >= 1, got {max_size}')
  level: set[frozenset[Site]] = {frozenset([root])}
  found: list[frozenset[Site]] = []
  for _ in range(max_size):
    found.extend(
      sorted(level, key=lambda s: sorted(enumeration.Position(x) for x in s))
    )
    level = {s | {nb} for s in level for nb in ExteriorBoundary(s, enumeration)}
  return found
