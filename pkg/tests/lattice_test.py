# SPDX-FileCopyrightText: Copyright 2026 BellaKeri@github.com & balparda@github.com
# SPDX-License-Identifier: Apache-2.0
"""lattice.py unittest."""

from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from mrfaudit import lattice
from mrfaudit import mrf_base as base


def test_EnumerateBox_d2() -> None:
  """Test."""
  box: lattice.Enumeration = lattice.EnumerateBox(2, 5)
  assert box.sites == ((0, 0), (-1, 0), (0, -1), (0, 1), (1, 0))
  assert box.Position((0, 1)) == 3
  assert box.Rank((0, 1)) == 4
  assert box.SiteAtRank(1) == (0, 0)
  assert set(box.Neighbors((0, 0))) == {(-1, 0), (0, -1), (0, 1), (1, 0)}
  assert box.missing[0] == 0 and box.missing[1] == 3  # noqa: PT018


def test_EnumerateBox_d1() -> None:
  """Test."""
  assert lattice.EnumerateBox(1, 4).sites == ((0,), (-1,), (1,), (-2,))


@given(st.integers(min_value=1, max_value=3), st.integers(min_value=1, max_value=40))
def test_EnumerateBox_prefixes_connected(d: int, n: int) -> None:
  """Test."""
  box: lattice.Enumeration = lattice.EnumerateBox(d, n)
  assert box.size == n
  assert lattice.IsConnected(set(box.sites))
  norms: list[int] = [sum(abs(c) for c in s) for s in box.sites]
  assert norms == sorted(norms)


def test_NeighborArray_padding() -> None:
  """Test."""
  box: lattice.Enumeration = lattice.EnumerateBox(2, 3)
  array = box.NeighborArray()
  assert array.shape == (3, 4)
  assert int((array == 3).sum()) == sum(box.missing)


@pytest.mark.parametrize(
  'sites',
  [
    (),
    ((1, 0),),
    ((0, 0), (0, 0)),
    ((0, 0), (2, 0)),
    ((0,), (1, 0)),
  ],
)
def test_Enumeration_invalid(sites: tuple[lattice.Site, ...]) -> None:
  """Test."""
  with pytest.raises(base.InputError):
    lattice.Enumeration(dim=2, sites=sites)


def test_Enumeration_lookup_errors() -> None:
  """Test."""
  box: lattice.Enumeration = lattice.EnumerateBox(2, 5)
  with pytest.raises(base.InputError):
    box.Position((5, 5))
  with pytest.raises(base.InputError):
    box.SiteAtRank(0)
  with pytest.raises(base.InputError):
    box.SiteAtRank(6)
  with pytest.raises(base.InputError):
    lattice.EnumerateBox(0, 3)
  with pytest.raises(base.InputError):
    lattice.EnumerateBox(2, 0)


def test_Line() -> None:
  """Test."""
  box: lattice.Enumeration = lattice.EnumerateBox(1, 5)
  assert box.Line(0, -2, 5) == ((-2,), (-1,), (0,), (1,), (2,))
  with pytest.raises(base.InputError):
    box.Line(0, -3, 5)
  with pytest.raises(base.InputError):
    box.Line(1, 0, 1)


def test_ExteriorBoundary() -> None:
  """Test."""
  box: lattice.Enumeration = lattice.EnumerateBox(2, 5)
  assert lattice.ExteriorBoundary({(0, 0)}, box) == {(-1, 0), (0, -1), (0, 1), (1, 0)}
  assert lattice.ExteriorBoundary({(1, 0)}, box) == {(0, 0)}
  with pytest.raises(base.InputError):
    lattice.ExteriorBoundary({(9, 9)}, box)


def test_OrderedSubset() -> None:
  """Test."""
  a = lattice.OrderedSubset(members=((0, 0), (1, 0), (0, 1)))
  assert len(a) == 3 and (1, 0) in a  # noqa: PT018
  assert a.PrefixBefore((0, 0)).members == ()
  assert lattice.PrefixBefore(a, (0, 1)).members == ((0, 0), (1, 0))
  assert a.ExtendedBy([(0, 1), (-1, 0)]).members == ((0, 0), (1, 0), (0, 1), (-1, 0))
  assert a.AsSet() == frozenset({(0, 0), (1, 0), (0, 1)})
  with pytest.raises(base.InputError):
    a.PrefixBefore((5, 5))
  with pytest.raises(base.InputError):
    lattice.OrderedSubset(members=((0, 0), (0, 0)))


def test_ConnectedSubsets_counts() -> None:
  """Test."""
  box: lattice.Enumeration = lattice.EnumerateBox(2, 25)
  subsets: list[frozenset[lattice.Site]] = lattice.ConnectedSubsets(box, (0, 0), 3)
  # lattice animals rooted at the origin: 1 of size 1, 4 of size 2, 18 of size 3
  assert [sum(1 for s in subsets if len(s) == k) for k in (1, 2, 3)] == [1, 4, 18]
  assert all(lattice.IsConnected(set(s)) and (0, 0) in s for s in subsets)
  assert len(set(subsets)) == len(subsets)


def test_ConnectedSubsets_line() -> None:
  """Test."""
  box: lattice.Enumeration = lattice.EnumerateBox(1, 7)
  subsets: list[frozenset[lattice.Site]] = lattice.ConnectedSubsets(box, (0,), 4)
  assert [sum(1 for s in subsets if len(s) == k) for k in range(1, 5)] == list(range(1, 5))
  with pytest.raises(base.InputError):
    lattice.ConnectedSubsets(box, (0,), 0)
