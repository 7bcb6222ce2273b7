# SPDX-FileCopyrightText: Copyright 2026 BellaKeri@github.com & balparda@github.com
# SPDX-License-Identifier: Apache-2.0
"""model.py unittest."""

from __future__ import annotations

import math
import pathlib

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mrfaudit import lattice, model
from mrfaudit import mrf_base as base


@pytest.mark.parametrize(
  ('d', 'beta', 'h', 'j_sign'),
  [
    (0, 0.1, 0.0, 1),
    (2, -0.1, 0.0, 1),
    (2, math.inf, 0.0, 1),
    (2, 0.1, -1.0, 1),
    (2, 0.1, 0.0, 0),
  ],
)
def test_ModelParams_invalid(d: int, beta: float, h: float, j_sign: int) -> None:
  """Test."""
  with pytest.raises(base.InputError):
    model.ModelParams(d=d, beta=beta, h=h, J=j_sign)


def test_ModelParams_constants() -> None:
  """Test."""
  params = model.ModelParams(d=2, beta=0.01)
  assert params.c == pytest.approx(0.08)
  assert params.c_prime == pytest.approx(0.08)
  assert params.p == pytest.approx(2.0 * math.sinh(0.08))
  assert params.p == pytest.approx(0.16017, abs=1e-5)
  assert model.ModelParams(d=2, beta=0.01, h=1.0).c == pytest.approx(0.1)
  assert model.ModelParams(d=3, beta=0.0, h=5.0).p == 0.0


@given(
  st.floats(min_value=0.001, max_value=0.5),
  st.floats(min_value=0.0, max_value=3.0),
  st.floats(min_value=0.01, max_value=1.0),
)
def test_ModelParams_p_monotone(beta: float, h: float, step: float) -> None:
  """Test."""
  here: float = model.ModelParams(d=2, beta=beta, h=h).p
  assert model.ModelParams(d=2, beta=beta, h=h + step).p < here
  assert model.ModelParams(d=2, beta=beta + step, h=h).p > here


def test_ConditionalPlusProb() -> None:
  """Test."""
  params = model.ModelParams(d=2, beta=0.5)
  assert 1.0 - model.ConditionalPlusProb(params, 4) == pytest.approx(1.0 / (1.0 + math.e**4))
  assert model.ConditionalPlusProb(params, 0) == pytest.approx(0.5)
  assert model.ConditionalPlusProb(model.ModelParams(d=2, beta=0.5, J=-1), 4) == pytest.approx(
    1.0 / (1.0 + math.e**4)
  )
  with pytest.raises(base.InputError):
    model.ConditionalPlusProb(params, 5)


def test_SpinConfig() -> None:
  """Test."""
  box: lattice.Enumeration = lattice.EnumerateBox(2, 5)
  sigma = model.SpinConfig.FromIndex(box, 0b00011)
  assert sigma.values == (1, 1, -1, -1, -1)
  assert sigma.index == 0b00011
  assert sigma.Flip((0, 0)).values == (-1, 1, -1, -1, -1)
  assert sigma.NeighborSum((0, 0), model.BoundaryCondition.FREE) == -2
  assert sigma.NeighborSum((1, 0), model.BoundaryCondition.PLUS) == 1 + 3
  assert model.SpinConfig.Constant(box, -1).index == 0
  with pytest.raises(base.InputError):
    sigma.FlipSet([(0, 0), (0, 0)])
  with pytest.raises(base.InputError):
    model.SpinConfig(values=(1, 0, 1, 1, 1), enumeration=box)
  with pytest.raises(base.InputError):
    model.SpinConfig.FromIndex(box, 32)


def test_StatesFromIndices_inverse() -> None:
  """Test."""
  indices: np.ndarray = np.arange(16, dtype=np.int64)
  states: np.ndarray = model.StatesFromIndices(indices, 4)
  assert np.array_equal(model.ConfigIndices(states), indices)
  assert np.array_equal(states, model.SpinTable(4))


def test_BuildExactMeasure_beta_zero_is_uniform() -> None:
  """Test."""
  m: model.ExactMeasure = model.BuildExactMeasure(
    model.ModelParams(d=2, beta=0.0), lattice.EnumerateBox(2, 5), model.BoundaryCondition.PLUS
  )
  assert np.allclose(m.probs, 1.0 / 32.0)


def test_BuildExactMeasure_single_site_field() -> None:
  """Test."""
  params = model.ModelParams(d=1, beta=0.3, h=1.0)
  m: model.ExactMeasure = model.BuildExactMeasure(
    params, lattice.EnumerateBox(1, 1), model.BoundaryCondition.FREE
  )
  assert float(m.probs[1]) == pytest.approx(model.ConditionalPlusProb(params, 0))


@pytest.mark.parametrize('boundary', list(model.BoundaryCondition))
@pytest.mark.parametrize('j_sign', [1, -1])
def test_BuildExactMeasure_conditionals(boundary: model.BoundaryCondition, j_sign: int) -> None:
  """Test."""
  params = model.ModelParams(d=2, beta=0.2, h=0.3, J=j_sign)
  box: lattice.Enumeration = lattice.EnumerateBox(2, 9)
  m: model.ExactMeasure = model.BuildExactMeasure(params, box, boundary)
  states: np.ndarray = model.SpinTable(9)
  sums: np.ndarray = model.NeighborSums(box, boundary, states)
  indices: np.ndarray = np.arange(1 << 9, dtype=np.int64)
  for k in range(9):
    plus: np.ndarray = states[:, k] > 0
    observed: np.ndarray = m.probs[indices | (1 << k)] / (
      m.probs[indices | (1 << k)] + m.probs[indices & ~(1 << k)]
    )
    expected: np.ndarray = np.array(
      [model.ConditionalPlusProb(params, int(s)) for s in sums[:, k]]
    )
    assert np.allclose(observed[plus], expected[plus], atol=1e-12)


def test_BuildExactMeasure_capacity() -> None:
  """Test."""
  with pytest.raises(base.CapacityError):
    model.BuildExactMeasure(
      model.ModelParams(d=2, beta=0.1),
      lattice.EnumerateBox(2, 9),
      model.BoundaryCondition.FREE,
      max_sites=8,
    )


def test_ConditionalMeasure() -> None:
  """Test."""
  params = model.ModelParams(d=2, beta=0.3)
  box: lattice.Enumeration = lattice.EnumerateBox(2, 5)
  m: model.ExactMeasure = model.BuildExactMeasure(params, box, model.BoundaryCondition.FREE)
  assert model.ConditionalMeasure(m, ()) is m
  cond: model.ExactMeasure = model.ConditionalMeasure(m, (1, -1))
  assert cond.n_free == 3 and cond.offset == 2  # noqa: PT018
  assert float(cond.probs.sum()) == pytest.approx(1.0)
  # P(rest | prefix) by brute force
  states: np.ndarray = model.SpinTable(5)
  mask: np.ndarray = (states[:, 0] == 1) & (states[:, 1] == -1)
  assert np.allclose(cond.probs, m.probs[mask] / m.probs[mask].sum())
  assert model.ConditionalMeasure(cond, (1, -1, 1)).prefix == (1, -1, 1)
  sigma = model.SpinConfig.FromIndex(box, 0b00010)
  assert cond.Probability(sigma) == 0.0
  assert cond.Probability(sigma.FlipSet([(0, 0), (-1, 0)])) > 0.0
  assert cond.FullStates().shape == (8, 5)
  with pytest.raises(base.InputError):
    model.ConditionalMeasure(cond, (-1, -1))
  with pytest.raises(base.InputError):
    cond.FreeBit((0, 0))


@pytest.mark.parametrize('boundary', list(model.BoundaryCondition))
def test_RNFlipSup_bounded(boundary: model.BoundaryCondition) -> None:
  """Test."""
  params = model.ModelParams(d=2, beta=0.1, h=0.5)
  box: lattice.Enumeration = lattice.EnumerateBox(2, 9)
  m: model.ExactMeasure = model.BuildExactMeasure(params, box, boundary)
  for site in box.sites:
    assert model.RNFlipSup(m, site) <= math.exp(params.c) + 1e-12
  assert model.RNFlipSetSup(m, set()) == 1.0
  assert model.RNFlipSetSup(m, {(0, 0)}) == model.RNFlipSup(m, (0, 0))
  assert model.RNFlipSetSup(m, {(0, 0), (1, 0)}) <= math.exp(2.0 * params.c) + 1e-12


def test_Thresholds() -> None:
  """Test."""
  assert model.PercolationBetaThreshold(2) == pytest.approx(math.log(4.0 / 3.0) / 16.0, abs=1e-12)
  assert model.PercolationBetaThreshold(2) == pytest.approx(0.01798, abs=1e-5)
  assert model.PercolationBetaThreshold(3) == pytest.approx(math.log(6.0 / 5.0) / 24.0)
  for d in range(1, 10):
    assert model.PercolationBetaThreshold(d + 1) < model.PercolationBetaThreshold(d)
  assert model.DobrushinThreshold(2) == pytest.approx(0.2554128, abs=1e-6)
  with pytest.raises(base.InputError):
    model.PercolationBetaThreshold(0)


@pytest.mark.parametrize(('beta', 'ok'), [(0.1, True), (0.3, False), (0.0, True)])
def test_DobrushinOK(beta: float, ok: bool) -> None:
  """Test."""
  assert model.DobrushinOK(model.ModelParams(d=2, beta=beta)) is ok


def test_DobrushinOK_antiferromagnet() -> None:
  """Test."""
  with pytest.raises(base.NotApplicableError):
    model.DobrushinOK(model.ModelParams(d=2, beta=0.1, J=-1))


@pytest.mark.parametrize(
  ('beta', 'h', 'squared', 'ok'),
  [
    (0.001, 0.0, 9.0 * (math.exp(0.024) - math.exp(0.008)), True),
    (0.1, 0.0, 9.0 * (math.exp(2.4) - math.exp(0.8)), False),
    (0.1, 25.0, 9.0 * math.exp(-5.0) * (math.exp(2.4) - math.exp(0.8)), True),
    (0.01, 0.0, 9.0 * (math.exp(0.24) - math.exp(0.08)), False),
  ],
)
def test_SqrtTail(beta: float, h: float, squared: float, ok: bool) -> None:
  """Test."""
  params = model.ModelParams(d=2, beta=beta, h=h)
  assert model.SqrtTailValue(params) ** 2 == pytest.approx(squared, rel=1e-9)
  assert model.SqrtTailSufficient(params) is ok


def test_PercolationBeta_series_converges() -> None:
  """Test."""
  for d in range(1, 6):
    params = model.ModelParams(d=d, beta=0.99 * model.PercolationBetaThreshold(d))
    assert params.p * (2 * d - 1) * math.exp(params.c) < 1.0


def test_PercolationThreshold() -> None:
  """Test."""
  assert model.PercolationThreshold(1) == 1.0
  assert model.PercolationThreshold(2) == pytest.approx(0.592746)
  assert model.PercolationThreshold(5) == pytest.approx(1.0 / 9.0)


@pytest.mark.parametrize(('p', 'h'), [(0.0, 0.0), (0.16017, 0.0), (0.25, 0.0), (0.1, 0.7)])
def test_BetaForP(p: float, h: float) -> None:
  """Test."""
  beta: float = model.BetaForP(p, 2, h)
  assert model.ModelParams(d=2, beta=beta, h=h).p == pytest.approx(p, abs=1e-10)


def test_BetaForP_invalid() -> None:
  """Test."""
  with pytest.raises(base.InputError):
    model.BetaForP(-0.1, 2)


def test_Probabilities_export_import(tmp_path: pathlib.Path) -> None:
  """Test."""
  m: model.ExactMeasure = model.BuildExactMeasure(
    model.ModelParams(d=2, beta=0.2), lattice.EnumerateBox(2, 4), model.BoundaryCondition.MINUS
  )
  path: pathlib.Path = tmp_path / 'probs.bin'
  model.ExportProbabilities(m, path)
  assert path.stat().st_size == 8 + 8 * 16
  assert np.array_equal(model.ImportProbabilities(path), m.probs)
  path.write_bytes(path.read_bytes()[:-3])
  with pytest.raises(base.InputError):
    model.ImportProbabilities(path)
  path.write_bytes(b'123')
  with pytest.raises(base.InputError):
    model.ImportProbabilities(path)
