# SPDX-FileCopyrightText: Copyright 2026 BellaKeri@github.com & balparda@github.com
# SPDX-License-Identifier: Apache-2.0
"""MRFAudit base constants, errors, assertion records, seeded streams and report envelope."""

from __future__ import annotations

import concurrent.futures
import dataclasses
import hashlib
import math
import os
import re
from collections import abc

import numpy as np
import pydantic
from transcrypto.utils import base

# Logging and formatting

ANSI_ESCAPE: re.Pattern[str] = re.compile(r'\x1b\[[0-9;]*m')
STRIP_ANSI: abc.Callable[[str], str] = lambda s: ANSI_ESCAPE.sub('', s)

NULL_TEXT: str = '∅'  # ∅
INFINITY_TEXT: str = '∞'  # ∞
PRETTY_BOOL: abc.Callable[[bool | None], str] = lambda b: (  # ✓ and ✗
  NULL_TEXT if b is None else ('✓' if b else '✗')
)
PRETTY_FLOAT: abc.Callable[[float | None], str] = lambda v: (
  NULL_TEXT if v is None else (INFINITY_TEXT if math.isinf(v) else f'{v:.6g}')
)

# Path utilities

APP_NAME = 'MRFAudit'
CONFIG_FILE_NAME = 'mrfaudit.toml'

# Reports

SCHEMA_VERSION = '1.0'

# Parallel Monte Carlo

DEFAULT_THREADS: int = os.cpu_count() or 1
CHUNK_SIZE = 4096  # samples per replica stream; never depends on the thread count
_MAX_SEED: int = 2**64


class Error(base.Error):
  """MRFAudit exception."""


class InputError(Error):
  """Invalid parameters, geometry or functional."""


class CapacityError(InputError):
  """Box too large for an exact (2^N) oracle."""


class NotApplicableError(InputError):
  """Condition only stated for other parameters (e.g. Dobrushin for J = -1)."""


####################################################################################################
# ASSERTIONS: every audit reports (lhs, rhs, margin, pass), never a bare boolean
####################################################################################################


@dataclasses.dataclass(kw_only=True, slots=True, frozen=True)
class Assertion:
  """A numeric inequality lhs <= rhs (+ tolerance) with its margin; lhs < rhs when `strict`."""

  name: str
  lhs: float
  rhs: float
  tolerance: float = 0.0
  strict: bool = False

  @property
  def margin(self) -> float:
    """Slack rhs - lhs (negative means violated before tolerance)."""
    return self.rhs - self.lhs

  @property
  def passed(self) -> bool:
    """True iff lhs <= rhs + tolerance, or lhs < rhs when strict (NaN never passes)."""
    if self.strict:
      return bool(self.lhs < self.rhs)
    return bool(self.lhs <= self.rhs + self.tolerance)


def AllPassed(assertions: abc.Iterable[Assertion], /) -> bool:
  """True iff every assertion passed (vacuously True when empty)."""
  return all(a.passed for a in assertions)


class ReportBaseModel(pydantic.BaseModel):
  """Base of all report models: infinities serialize as strings so output stays valid JSON."""

  model_config = pydantic.ConfigDict(ser_json_inf_nan='strings')


class AssertionModel(ReportBaseModel):
  """Assertion entry of a report."""

  name: str = pydantic.Field(description='What is being checked')
  lhs: float = pydantic.Field(description='Left-hand side of lhs <= rhs')
  rhs: float = pydantic.Field(description='Right-hand side of lhs <= rhs')
  margin: float = pydantic.Field(description='rhs - lhs')
  passed: bool = pydantic.Field(serialization_alias='pass', description='Did it hold?')

  @classmethod
  def from_domain(cls, a: Assertion) -> AssertionModel:
    """Convert domain ``Assertion`` to Pydantic model.

    Returns:
      AssertionModel: converted model

    """
    return cls(name=a.name, lhs=a.lhs, rhs=a.rhs, margin=a.margin, passed=a.passed)


class ReportModel(ReportBaseModel):
  """Envelope emitted on standard output by every CLI command."""

  schema_version: str = pydantic.Field(default=SCHEMA_VERSION, description='Report schema')
  command: str = pydantic.Field(description='CLI subcommand that produced the report')
  config: pydantic.SerializeAsAny[pydantic.BaseModel] = pydantic.Field(
    description='Fully resolved run configuration'
  )
  results: pydantic.SerializeAsAny[pydantic.BaseModel] | None = pydantic.Field(
    default=None, description='Command-specific results'
  )
  assertions: list[AssertionModel] = pydantic.Field(
    default_factory=list[AssertionModel], description='Every numeric check performed'
  )
  certificate: pydantic.SerializeAsAny[pydantic.BaseModel] | None = pydantic.Field(
    default=None, description='Poincaré certificate, when the command builds one'
  )
  error: str | None = pydantic.Field(default=None, description='Validation/capacity error')
  wall_time: float = pydantic.Field(description='Seconds spent computing')


####################################################################################################
# SEEDED STREAMS: stream id = hash(master_seed, module_tag, replica_index)
####################################################################################################


def _TagHash(tag: str, /) -> int:
  return int.from_bytes(hashlib.blake2b(tag.encode('utf-8'), digest_size=8).digest(), 'little')


@dataclasses.dataclass(kw_only=True, slots=True, frozen=True)
class Streams:
  """Family of independent, reproducible random streams under one master seed."""

  seed: int
  tag: str

  def __post_init__(self) -> None:
    """Check construction.

    Raises:
      InputError: seed not in [0, 2**64) or empty tag

    """
    if not 0 <= self.seed < _MAX_SEED:
      raise InputError(f'seed must be a 64-bit unsigned integer, got {self.seed}')
    if not self.tag:
      raise InputError('empty stream tag')

  def Replica(self, index: int, /) -> np.random.Generator:
    """Generator for replica `index` of this family.

    Args:
      index: replica index >= 0

    Returns:
      np.random.Generator: independent stream, identical on every call with the same index

    Raises:
      InputError: negative index

    """
    if index < 0:
      raise InputError(f'invalid replica index {index}')
    return np.random.default_rng(np.random.SeedSequence([self.seed, _TagHash(self.tag), index]))

  def Child(self, tag: str, /) -> Streams:
    """Sub-family for a nested workload."""
    return Streams(seed=self.seed, tag=f'{self.tag}/{tag}')


def ChunkSizes(total: int, /, *, chunk: int = CHUNK_SIZE) -> list[int]:
  """Split `total` samples into fixed-size chunks (the last one possibly shorter).

  Args:
    total: number of samples >= 0
    chunk: chunk size >= 1

  Returns:
    list[int]: chunk sizes, summing to total

  Raises:
    InputError: invalid sizes

  """
  if total < 0 or chunk < 1:
    raise InputError(f'invalid chunking: total={total}, chunk={chunk}')
  full, rest = divmod(total, chunk)
  return [chunk] * full + ([rest] if rest else [])


def ParallelMap[T](fn: abc.Callable[[int], T], n_tasks: int, /, *, threads: int = 1) -> list[T]:
  """Run fn(0..n_tasks-1) on a worker pool; results always come back in task order.

  Args:
    fn: task body, receives the task index
    n_tasks: number of tasks
    threads: pool size; <= 1 runs inline

  Returns:
    list[T]: results in index order (deterministic reduction order)

  """
  if threads <= 1 or n_tasks <= 1:
    return [fn(i) for i in range(n_tasks)]
  with concurrent.futures.ThreadPoolExecutor(max_workers=min(threads, n_tasks)) as pool:
    return list(pool.map(fn, range(n_tasks)))
