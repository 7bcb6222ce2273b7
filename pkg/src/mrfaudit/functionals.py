# SPDX-FileCopyrightText: Copyright 2026 BellaKeri@github.com & balparda@github.com
# SPDX-License-Identifier: Apache-2.0
"""Functions of spin configurations: discrete derivatives, variations and run counters."""

from __future__ import annotations

import dataclasses
import itertools
import math
import re
from collections import abc

import numpy as np

from . import lattice, model
from . import mrf_base as base

type Evaluator = abc.Callable[[np.ndarray], np.ndarray]

MAX_EXACT_VARIATION_SITES = 20
_RANDOM_TERMS_BASE = 32
_RANDOM_TERMS_PER_SITE = 8
_EXPRESSION: re.Pattern[str] = re.compile(r'^\s*([a-z_]+)\s*\(([^()]*)\)\s*$')


@dataclasses.dataclass(kw_only=True, slots=True, frozen=True)
class Functional:
  """Real function of a configuration, evaluated in batches of (R, N) ±1 rows."""

  name: str
  evaluator: Evaluator
  support_hint: frozenset[lattice.Site] | None = None

  def Evaluate(self, states: np.ndarray, /) -> np.ndarray:
    """f on every row of `states`, as float64 of shape (R,)."""
    return np.asarray(self.evaluator(states), dtype=np.float64).reshape(states.shape[0])

  def __call__(self, config: model.SpinConfig, /) -> float:
    """f(σ)."""
    return float(self.Evaluate(config.AsArray())[0])

  def Vector(self, enumeration: lattice.Enumeration, /) -> np.ndarray:
    """f on every configuration of the box, indexed by configuration index."""
    return self.Evaluate(model.SpinTable(enumeration.size))


def Constant(value: float, /) -> Functional:
  """f ≡ value."""
  return Functional(name=f'const({value!r})', evaluator=lambda s: np.full(s.shape[0], value))


def Spin(enumeration: lattice.Enumeration, site: lattice.Site, /) -> Functional:
  """f(σ) = σ_x."""
  k: int = enumeration.Position(site)
  return Functional(
    name=f'spin({k + 1})', evaluator=lambda s: s[:, k], support_hint=frozenset([site])
  )


def Corr(enumeration: lattice.Enumeration, x: lattice.Site, y: lattice.Site, /) -> Functional:
  """f(σ) = σ_x σ_y."""
  i, j = enumeration.Position(x), enumeration.Position(y)
  return Functional(
    name=f'corr({i + 1},{j + 1})',
    evaluator=lambda s: s[:, i].astype(np.int64) * s[:, j],
    support_hint=frozenset([x, y]),
  )


def Centered(f: Functional, mean: float, /) -> Functional:
  """f - mean."""
  return Functional(
    name=f'{f.name}-mean', evaluator=lambda s: f.Evaluate(s) - mean, support_hint=f.support_hint
  )


def RandomPolynomial(seed: int, degree: int, enumeration: lattice.Enumeration, /) -> Functional:
  """Seeded random multilinear polynomial Σ_T a_T Π_{x∈T} σ_x with |T| <= degree.

  Args:
    seed: coefficient seed
    degree: maximum monomial degree >= 0
    enumeration: the box

  Returns:
    Functional: deterministic given (seed, degree, box)

  Raises:
    InputError: negative degree

  """
  if degree < 0:
    raise base.InputError(f'degree must be >= 0, got {degree}')
  n: int = enumeration.size
  degree = min(degree, n)
  rng: np.random.Generator = base.Streams(seed=seed, tag='functionals/random').Replica(0)
  n_monomials: int = sum(math.comb(n, j) for j in range(degree + 1))
  terms: list[tuple[int, ...]]
  if n_monomials <= _RANDOM_TERMS_BASE + _RANDOM_TERMS_PER_SITE * n:
    terms = [t for j in range(degree + 1) for t in itertools.combinations(range(n), j)]
  else:
    terms = []
    for _ in range(_RANDOM_TERMS_BASE + _RANDOM_TERMS_PER_SITE * n):
      size = int(rng.integers(0, degree + 1))
      terms.append(tuple(sorted(int(x) for x in rng.choice(n, size=size, replace=False))))
  coefficients: np.ndarray = rng.standard_normal(len(terms))

  def _Evaluate(states: np.ndarray, /) -> np.ndarray:
    total: np.ndarray = np.zeros(states.shape[0], dtype=np.float64)
    for a, term in zip(coefficients, terms, strict=True):
      total += a * (np.prod(states[:, list(term)], axis=1, dtype=np.int64) if term else 1)
    return total

  return Functional(name=f'random({seed},{degree})', evaluator=_Evaluate)


####################################################################################################
# DISCRETE DERIVATIVES
####################################################################################################


def Grad(f: Functional, config: model.SpinConfig, site: lattice.Site, /) -> float:
  """∇_x f(σ) = f(σ^x) - f(σ)."""
  return f(config.Flip(site)) - f(config)


def GradSet(f: Functional, config: model.SpinConfig, subset: lattice.OrderedSubset, /) -> float:
  """∇_A f(σ) = f(σ^A) - f(σ)."""
  return f(config.FlipSet(subset.members)) - f(config)


def TelescopeSum(
  f: Functional, config: model.SpinConfig, subset: lattice.OrderedSubset, /
) -> float:
  """Σ_{x∈A} |∇_x f(σ^{A_{<x}})|, an upper bound on |∇_A f(σ)|."""
  return sum(
    abs(Grad(f, config.FlipSet(subset.PrefixBefore(x).members), x)) for x in subset.members
  )


@dataclasses.dataclass(kw_only=True, slots=True, frozen=True)
class Variation:
  """sup_σ ∇_x f(σ); `exact` is False for a sampled value (then only a lower bound)."""

  value: float
  exact: bool


def _FlipDifferences(values: np.ndarray, position: int, /) -> np.ndarray:
  indices: np.ndarray = np.arange(values.size, dtype=np.int64)
  return values[indices ^ (1 << position)] - values


def _SampledDifferences(f: Functional, states: np.ndarray, position: int, /) -> np.ndarray:
  flipped: np.ndarray = states.copy()
  flipped[:, position] *= -1
  return f.Evaluate(flipped) - f.Evaluate(states)


def VariationAt(
  f: Functional,
  site: lattice.Site,
  enumeration: lattice.Enumeration,
  /,
  *,
  samples: np.ndarray | None = None,
) -> Variation:
  """δ_x f = sup_σ (f(σ^x) - f(σ)), exact by enumeration or a lower bound over `samples`.

  Raises:
    CapacityError: exact mode on a box above MAX_EXACT_VARIATION_SITES

  """
  position: int = enumeration.Position(site)
  if samples is not None:
    return Variation(value=float(_SampledDifferences(f, samples, position).max()), exact=False)
  if enumeration.size > MAX_EXACT_VARIATION_SITES:
    raise base.CapacityError(f'exact variation needs N <= {MAX_EXACT_VARIATION_SITES}')
  return Variation(value=float(_FlipDifferences(f.Vector(enumeration), position).max()), exact=True)


def DeltaNormSq(
  f: Functional, enumeration: lattice.Enumeration, /, *, samples: np.ndarray | None = None
) -> Variation:
  """‖δf‖₂² = Σ_x (δ_x f)²."""
  parts: list[Variation] = [
    VariationAt(f, x, enumeration, samples=samples) for x in enumeration.sites
  ]
  return Variation(value=math.fsum(v.value**2 for v in parts), exact=all(v.exact for v in parts))


def DirichletPerSite(m: model.ExactMeasure, values: np.ndarray, /) -> np.ndarray:
  """∫(∇_x f)² dPr for every position x (f given as its vector over configurations)."""
  if m.prefix:
    raise base.InputError('Dirichlet forms need an unconditioned measure')
  return np.array(
    [float(np.dot(m.probs, _FlipDifferences(values, k) ** 2)) for k in range(m.n_free)]
  )


def DirichletPlain(m: model.ExactMeasure, values: np.ndarray, /) -> float:
  """Plain Dirichlet form Σ_x ∫(∇_x f)² dPr."""
  return float(DirichletPerSite(m, values).sum())


def Variance(m: model.ExactMeasure, values: np.ndarray, /) -> float:
  """Var(f) under m."""
  mean: float = float(np.dot(m.probs, values))
  return max(0.0, float(np.dot(m.probs, (values - mean) ** 2)))


####################################################################################################
# RUN COUNTERS
####################################################################################################


@dataclasses.dataclass(kw_only=True, slots=True, frozen=True)
class RunCountSpec:
  """f_k on a line window of n sites along `axis`, starting at coordinate `start`."""

  k: int
  axis: int
  n: int
  start: int | None = None  # default centers the window: -(n // 2)

  def __post_init__(self) -> None:
    """Check construction.

    Raises:
      InputError: k or n out of range, negative axis

    """
    if not 1 <= self.k < self.n:
      raise base.InputError(f'run count needs 1 <= k < n, got k={self.k}, n={self.n}')
    if self.axis < 0:
      raise base.InputError(f'invalid axis {self.axis}')

  def Window(self, enumeration: lattice.Enumeration, /) -> tuple[lattice.Site, ...]:
    """The n window sites, in line order."""
    return enumeration.Line(
      self.axis, -(self.n // 2) if self.start is None else self.start, self.n
    )

  def Coverage(self) -> tuple[int, ...]:
    """Number of (k+1)-windows containing each window site."""
    return tuple(
      min(j, self.n - self.k - 1) - max(0, j - self.k) + 1 for j in range(self.n)
    )


def RunCount(spec: RunCountSpec, enumeration: lattice.Enumeration, /) -> Functional:
  """f_k(σ) = #{i : σ_i = ... = σ_{i+k} = +1 along the window}.

  Raises:
    InputError: window does not fit in the box

  """
  window: tuple[lattice.Site, ...] = spec.Window(enumeration)
  positions: list[int] = [enumeration.Position(s) for s in window]

  def _Evaluate(states: np.ndarray, /) -> np.ndarray:
    plus: np.ndarray = states[:, positions] > 0
    runs: np.ndarray = np.lib.stride_tricks.sliding_window_view(plus, spec.k + 1, axis=1)
    return runs.all(axis=2).sum(axis=1)

  return Functional(
    name=f'runcount({spec.k},{spec.axis},{spec.n})',
    evaluator=_Evaluate,
    support_hint=frozenset(window),
  )


def CylinderTheta(
  m: model.ExactMeasure, n_max: int, /, *, line: abc.Sequence[lattice.Site] | None = None
) -> float:
  """max over consecutive cylinders of length n <= n_max on `line` of P(cylinder)^{1/n}.

  Args:
    m: unconditioned exact measure
    n_max: longest cylinder >= 1
    line: sites in line order (default: the whole box, which must be 1-dimensional)

  Returns:
    float: θ, so that every such cylinder has P <= θ^n

  Raises:
    InputError: conditioned measure, bad n_max, or no line given for d >= 2

  """
  if m.prefix:
    raise base.InputError('cylinder bound needs an unconditioned measure')
  if line is None:
    if m.enumeration.dim != 1:
      raise base.InputError('a line must be given for d >= 2')
    line = sorted(m.enumeration.sites)
  if not 1 <= n_max <= len(line):
    raise base.InputError(f'n_max must be in [1, {len(line)}], got {n_max}')
  positions: list[int] = [m.enumeration.Position(s) for s in line]
  indices: np.ndarray = np.arange(m.probs.size, dtype=np.int64)
  theta: float = 0.0
  for n in range(1, n_max + 1):
    for start in range(len(positions) - n + 1):
      pattern: np.ndarray = np.zeros(m.probs.size, dtype=np.int64)
      for j, k in enumerate(positions[start : start + n]):
        pattern |= ((indices >> k) & 1) << j
      marginal: np.ndarray = np.bincount(pattern, weights=m.probs, minlength=1 << n)
      theta = max(theta, float(marginal.max()) ** (1.0 / n))
  return theta


def RunCountVarianceProduct(n: int, k: int, q: float, /) -> float:
  """Var(f_k) on n sites under the product measure with P(+) = q (closed form).

  Raises:
    InputError: k, n or q out of range

  """
  if not 1 <= k < n or not 0.0 <= q <= 1.0:
    raise base.InputError(f'invalid run count variance input n={n}, k={k}, q={q}')
  windows: int = n - k
  a: float = q ** (k + 1)
  total: float = windows * (a - a * a)
  for g in range(1, min(k, windows - 1) + 1):
    total += 2.0 * (windows - g) * (q ** (k + 1 + g) - a * a)
  return total


def RunCountTrend(
  ns: abc.Sequence[int], factor: float, q: float = 0.5, /
) -> list[tuple[int, int, float]]:
  """(n, k, Var f_k) with k = max(1, ceil(factor·log n)), for each window length n."""
  out: list[tuple[int, int, float]] = []
  for n in ns:
    k: int = max(1, math.ceil(factor * math.log(n)))
    if k >= n:
      raise base.InputError(f'k={k} does not fit a window of {n} sites')
    out.append((n, k, RunCountVarianceProduct(n, k, q)))
  return out


####################################################################################################
# EXPRESSIONS: spin(x), corr(x,y), runcount(k,axis,n), random(seed,degree), const(v); x = rank
####################################################################################################


def ParseFunctional(expression: str, enumeration: lattice.Enumeration, /) -> Functional:
  """Build a functional from its CLI expression.

  Args:
    expression: e.g. 'spin(1)', 'corr(1,2)', 'runcount(2,0,5)', 'random(7,3)', 'const(1.5)'
    enumeration: the box (sites are given by 1-based rank)

  Returns:
    Functional: the parsed functional

  Raises:
    InputError: unknown name, wrong arity or bad arguments

  """
  match: re.Match[str] | None = _EXPRESSION.match(expression)
  if match is None:
    raise base.InputError(f'cannot parse functional {expression!r}')
  name: str = match.group(1)
  raw: list[str] = [a.strip() for a in match.group(2).split(',')] if match.group(2).strip() else []
  arity: dict[str, int] = {'spin': 1, 'corr': 2, 'runcount': 3, 'random': 2, 'const': 1}
  if name not in arity:
    raise base.InputError(f'unknown functional {name!r} (known: {sorted(arity)})')
  if len(raw) != arity[name]:
    raise base.InputError(f'{name} takes {arity[name]} arguments, got {len(raw)}')
  try:
    if name == 'const':
      return Constant(float(raw[0]))
    args: list[int] = [int(a) for a in raw]
  except ValueError as err:
    raise base.InputError(f'bad arguments in {expression!r}') from err
  match name:
    case 'spin':
      return Spin(enumeration, enumeration.SiteAtRank(args[0]))
    case 'corr':
      return Corr(enumeration, enumeration.SiteAtRank(args[0]), enumeration.SiteAtRank(args[1]))
    case 'runcount':
      return RunCount(RunCountSpec(k=args[0], axis=args[1], n=args[2]), enumeration)
    case _:
      return RandomPolynomial(args[0], args[1], enumeration)
