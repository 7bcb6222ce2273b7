# SPDX-FileCopyrightText: Copyright 2026 BellaKeri@github.com & balparda@github.com
# SPDX-License-Identifier: Apache-2.0
"""mrfaudit: command line front end, run configuration and report emission."""

from __future__ import annotations

import csv
import dataclasses
import itertools
import logging
import math
import pathlib
import time
import tomllib
from collections import abc

import click
import numpy as np
import pydantic
import typer
from rich import console as rich_console
from rich import table as rich_table
from transcrypto.cli import clibase
from transcrypto.utils import config as app_config
from transcrypto.utils import logging as tc_logging

from . import __version__, audit, coupling, functionals, glauber, lattice, model, percolation
from . import mrf_base as base

# defaults (flag, then run file, then these)
_DEFAULT_DIM = 2
_DEFAULT_BETA = 0.01
_DEFAULT_BOUNDARY = 'free'
_DEFAULT_BOX_SITES = 9
_DEFAULT_SAMPLES = 100_000
_DEFAULT_CAP = 64
_DEFAULT_REPLICAS = 256
_DEFAULT_INNER = 32
_DEFAULT_TIME_GRID: tuple[float, ...] = (0.25, 0.5, 1.0, 2.0, 4.0)
_DEFAULT_N_RANGE: tuple[int, ...] = tuple(range(2, 21))
_DEFAULT_TRANSCRIPTS = 1000
_DEFAULT_MAX_SUBSET = 3
_DEFAULT_BATTERY = 20
_DEFAULT_DEGREE = 3
_TRANSCRIPT_CHUNK = 64
_MONTE_CARLO_SIGMAS = 4.0
_RELAXATION_TOLERANCE = 1e-8
_DETAILED_BALANCE_TOLERANCE = 1e-12
_IDENTITY_TOLERANCE = 1e-10
_MONOTONE_TOLERANCE = 1e-12

# exit codes
_EXIT_OK = 0
_EXIT_ASSERTION = 1
_EXIT_INPUT = 2


####################################################################################################
# RUN CONFIGURATION
####################################################################################################


class RunFileModel(pydantic.BaseModel):
  """Run-configuration file (TOML); every key is optional and every flag overrides it."""

  model_config = pydantic.ConfigDict(extra='forbid', populate_by_name=True)

  dim: int | None = None
  beta: float | None = None
  h: float | None = None
  J: int | None = None
  boundary: str | None = None
  box_sites: int | None = None
  seed: int | None = None
  samples: int | None = None
  cap: int | None = None
  replicas: int | None = None
  inner: int | None = None
  time_grid: list[float] | None = None
  n_range: list[int] | None = None


def LoadRunFile(path: pathlib.Path | None, /) -> RunFileModel:
  """Read and validate a run-configuration file (empty model when `path` is None).

  Raises:
    InputError: unreadable file, bad TOML or unknown/mistyped keys

  """
  if path is None:
    return RunFileModel()
  try:
    run_file: RunFileModel = RunFileModel.model_validate(
      tomllib.loads(path.read_text(encoding='utf-8'))
    )
  except (OSError, tomllib.TOMLDecodeError, pydantic.ValidationError) as err:
    raise base.InputError(f'invalid run configuration {str(path)!r}: {err}') from err
  logging.info('Loaded run configuration from %r', str(path))
  return run_file


@dataclasses.dataclass(kw_only=True, slots=True, frozen=True)
class MRFAuditConfig(clibase.CLIConfig):
  """CLI global context, storing the configuration."""

  threads: int = 1
  run_file: RunFileModel = dataclasses.field(default_factory=RunFileModel)


class RunConfigModel(base.ReportBaseModel):
  """Fully resolved configuration, embedded in every report."""

  dim: int = pydantic.Field(description='Lattice dimension d')
  beta: float = pydantic.Field(description='Inverse temperature')
  h: float = pydantic.Field(description='External field')
  J: int = pydantic.Field(description='Coupling sign (+1 ferromagnet, -1 antiferromagnet)')
  boundary: str = pydantic.Field(description='free | plus | minus')
  box_sites: int | None = pydantic.Field(default=None, description='Sites of the finite box')
  seed: int = pydantic.Field(description='Master seed of every random stream')
  samples: int | None = pydantic.Field(default=None, description='Monte Carlo samples')
  cap: int | None = pydantic.Field(default=None, description='Cluster size truncation cap')
  replicas: int | None = pydantic.Field(default=None, description='Outer Monte Carlo replicas')
  inner: int | None = pydantic.Field(default=None, description='Trajectories per replica')
  time_grid: list[float] | None = pydantic.Field(default=None, description='Relaxation times')
  n_range: list[int] | None = pydantic.Field(default=None, description='Truncation levels N')
  threads: int = pydantic.Field(description='Worker pool size (never changes results)')
  options: dict[str, str | int | float | bool | list[str] | None] = pydantic.Field(
    default_factory=dict[str, str | int | float | bool | list[str] | None],
    description='Command-specific flags',
  )


def _Pick[T](flag: T | None, stored: T | None, default: T, /) -> T:
  """Flag, else run-file value, else built-in default."""
  if flag is not None:
    return flag
  return default if stored is None else stored


def _ModelConfig(
  config: MRFAuditConfig,
  /,
  *,
  dim: int | None,
  beta: float | None,
  h: float | None,
  j_sign: int | None,
  boundary: str | None = None,
  box_sites: int | None = None,
  seed: int | None = None,
  p_target: float | None = None,
) -> RunConfigModel:
  """Resolve the model keys shared by every command (`p_target` solves for β).

  Raises:
    InputError: p_target not reachable

  """
  stored: RunFileModel = config.run_file
  d: int = _Pick(dim, stored.dim, _DEFAULT_DIM)
  field: float = _Pick(h, stored.h, 0.0)
  resolved_beta: float = _Pick(beta, stored.beta, _DEFAULT_BETA)
  if p_target is not None:
    resolved_beta = model.BetaForP(p_target, d, field)
  return RunConfigModel(
    dim=d,
    beta=resolved_beta,
    h=field,
    J=_Pick(j_sign, stored.J, 1),
    boundary=_Pick(boundary, stored.boundary, _DEFAULT_BOUNDARY),
    box_sites=_Pick(box_sites, stored.box_sites, _DEFAULT_BOX_SITES),
    seed=_Pick(seed, stored.seed, 0),
    threads=config.threads,
  )


def _Params(run: RunConfigModel, /) -> model.ModelParams:
  return model.ModelParams(d=run.dim, beta=run.beta, h=run.h, J=run.J)


def _Boundary(run: RunConfigModel, /) -> model.BoundaryCondition:
  try:
    return model.BoundaryCondition(run.boundary)
  except ValueError as err:
    raise base.InputError(f'unknown boundary {run.boundary!r} (free | plus | minus)') from err


def _Box(run: RunConfigModel, /) -> lattice.Enumeration:
  if run.box_sites is None or run.box_sites < 1:
    raise base.InputError(f'box must have >= 1 site, got {run.box_sites}')
  return lattice.EnumerateBox(run.dim, run.box_sites)


def ParseFloats(text: str | None, /) -> tuple[float, ...] | None:
  """'0.5,1,2' -> (0.5, 1.0, 2.0); None passes through.

  Raises:
    InputError: a value is not a number

  """
  if text is None:
    return None
  try:
    return tuple(float(v) for v in text.split(',') if v.strip())
  except ValueError as err:
    raise base.InputError(f'invalid number list {text!r}') from err


def ParseInts(text: str | None, /) -> tuple[int, ...] | None:
  """'2..5' -> (2, 3, 4, 5) and '2,4,8' -> (2, 4, 8); None passes through.

  Raises:
    InputError: malformed list or range

  """
  if text is None:
    return None
  try:
    if '..' in text:
      first, last = text.split('..', 1)
      return tuple(range(int(first), int(last) + 1))
    return tuple(int(v) for v in text.split(',') if v.strip())
  except ValueError as err:
    raise base.InputError(f'invalid integer list {text!r}') from err


####################################################################################################
# REPORT EMISSION
####################################################################################################


@dataclasses.dataclass(kw_only=True, slots=True, frozen=True)
class _Outcome:
  results: pydantic.BaseModel
  assertions: tuple[base.Assertion, ...] = ()
  certificate: pydantic.BaseModel | None = None


def _Execute(
  config: MRFAuditConfig,
  command: str,
  resolve: abc.Callable[[], RunConfigModel],
  body: abc.Callable[[RunConfigModel], _Outcome],
  /,
) -> None:
  """Resolve the configuration, run `body`, emit the report and exit with its code.

  Invalid input and capacity errors exit 2. Any other domain error is an internal invariant that
  failed during the audit: it is reported like a failed assertion and exits 1.

  Raises:
    typer.Exit: always; 0 all passed, 1 an assertion or invariant failed, 2 invalid input

  """
  start: float = time.perf_counter()
  run: RunConfigModel | None = None
  try:
    run = resolve()
    outcome: _Outcome = body(run)
  except (base.Error, pydantic.ValidationError) as err:
    invalid: bool = isinstance(err, (base.InputError, pydantic.ValidationError))
    echo: pydantic.BaseModel = run if run is not None else pydantic.BaseModel()
    report = base.ReportModel(
      command=command, config=echo, error=str(err), wall_time=time.perf_counter() - start
    )
    typer.echo(report.model_dump_json(indent=2, by_alias=True))
    logging.error('%s: %s', command, err)
    raise typer.Exit(_EXIT_INPUT if invalid else _EXIT_ASSERTION) from err
  report = base.ReportModel(
    command=command,
    config=run,
    results=outcome.results,
    assertions=[base.AssertionModel.from_domain(a) for a in outcome.assertions],
    certificate=outcome.certificate,
    wall_time=time.perf_counter() - start,
  )
  typer.echo(report.model_dump_json(indent=2, by_alias=True))
  _PrintSummary(config, report)
  raise typer.Exit(_EXIT_OK if base.AllPassed(outcome.assertions) else _EXIT_ASSERTION)


def _PrintSummary(config: MRFAuditConfig, report: base.ReportModel, /) -> None:
  """Human-readable assertion table on standard error."""
  console = rich_console.Console(stderr=True, no_color=config.color is False)
  table = rich_table.Table(show_header=True, title=f'{report.command} ({report.wall_time:.2f}s)')
  table.add_column('[bold cyan]Check[/]')
  table.add_column('[bold cyan]LHS[/]', justify='right')
  table.add_column('[bold cyan]RHS[/]', justify='right')
  table.add_column('[bold cyan]Margin[/]', justify='right')
  table.add_column('[bold cyan]Pass[/]', justify='center')
  for a in report.assertions:
    table.add_row(
      a.name,
      base.PRETTY_FLOAT(a.lhs),
      base.PRETTY_FLOAT(a.rhs),
      base.PRETTY_FLOAT(a.margin),
      f'[bold green]{base.PRETTY_BOOL(True)}[/]'
      if a.passed
      else f'[bold red]{base.PRETTY_BOOL(False)}[/]',
    )
  console.print(table)


class SeriesPointModel(base.ReportBaseModel):
  """Indexed Monte Carlo value."""

  n: int = pydantic.Field(description='Index (size n or truncation level N)')
  value: float = pydantic.Field(description='Estimate')
  se: float = pydantic.Field(description='Standard error')


def _SeriesPoints(points: abc.Iterable[tuple[int, percolation.MomentEstimate]], /) -> list[
  SeriesPointModel
]:
  return [SeriesPointModel(n=n, value=e.value, se=e.std_error) for n, e in points]


def _CurvePoints(curve: glauber.RelaxationCurve, /) -> list[glauber.RelaxationPointModel]:
  return [
    glauber.RelaxationPointModel(t=t, var=v, se=s)
    for t, v, s in zip(curve.times, curve.variances, curve.std_errors, strict=True)
  ]


def _WriteCSV(
  path: pathlib.Path, header: abc.Sequence[str], rows: abc.Iterable[abc.Sequence[float]], /
) -> None:
  with path.open('w', encoding='utf-8', newline='') as out:
    writer = csv.writer(out)
    writer.writerow(header)
    writer.writerows(rows)
  logging.info('Wrote %r', str(path))


####################################################################################################
# CLI APP
####################################################################################################


# CLI app setup, this is an important object and can be imported elsewhere and called
app = typer.Typer(
  add_completion=True,
  no_args_is_help=True,
  help='mrfaudit: numerical audits of Ising Poincaré inequalities.',  # keep in sync with Main()
  epilog=(
    'Example:\n\n\n\n'
    '# --- Closed-form thresholds ---\n\n'
    'poetry run mrfaudit thresholds --dim 2 --beta 0.01\n\n\n\n'
    '# --- Percolation constants ---\n\n'
    'poetry run mrfaudit perc-moments --dim 2 --beta 0.01 --samples 100000\n\n\n\n'
    '# --- Exact audits on a finite box ---\n\n'
    'poetry run mrfaudit coupling-audit --box-sites 9 --beta 0.05\n\n'
    'poetry run mrfaudit gap-audit --dim 1 --box-sites 1 --beta 0\n\n'
    'poetry run mrfaudit poincare-audit --box-sites 9 --beta 0.016\n\n\n\n'
    '# --- Generate documentation ---\n\n'
    'poetry run mrfaudit markdown > mrfaudit.md\n\n'
  ),
)


def Run() -> None:  # pragma: no cover
  """Run the CLI."""
  app()


@app.callback(
  invoke_without_command=True,  # have only one; this is the "constructor"
  help='mrfaudit: numerical audits of Ising Poincaré inequalities.',  # keep in sync with app.help
)
@clibase.CLIErrorGuard
def Main(  # documentation is help/epilog/args # noqa: D103
  *,
  ctx: click.Context,  # global context
  version: bool = typer.Option(False, '--version', help='Show version and exit.'),
  verbose: int = typer.Option(
    0,
    '-v',
    '--verbose',
    count=True,
    help='Verbosity (nothing=ERROR, -v=WARNING, -vv=INFO, -vvv=DEBUG).',
    min=0,
    max=3,
  ),
  color: bool | None = typer.Option(
    None,
    '--color/--no-color',
    help=(
      'Force enable/disable colored output (respects NO_COLOR env var if not provided). '
      'Defaults to having colors.'  # state default because None default means docs don't show it
    ),
  ),
  config_file: pathlib.Path | None = typer.Option(
    None,
    '--config',
    dir_okay=False,
    help=(
      'Run-configuration TOML file (keys: dim, beta, h, J, boundary, box_sites, seed, samples, '
      'cap, replicas, inner, time_grid, n_range); flags override it. '
      'Defaults to mrfaudit.toml in the app config directory, when present.'
    ),
  ),
  threads: int | None = typer.Option(
    None,
    '--threads',
    min=1,
    help='Worker pool size; never changes results. Defaults to hardware parallelism.',
  ),
) -> None:
  if version:
    typer.echo(__version__)
    raise typer.Exit(0)
  # initialize logging and get console
  console: rich_console.Console
  console, verbose, color = tc_logging.InitLogging(
    verbose,
    color=color,
    include_process=False,
  )
  appconfig: app_config.AppConfig = app_config.InitConfig(base.APP_NAME, base.CONFIG_FILE_NAME)
  if config_file is None and appconfig.path.exists():
    config_file = appconfig.path
  try:
    run_file: RunFileModel = LoadRunFile(config_file)
  except base.InputError as err:
    raise typer.BadParameter(str(err), param_hint='--config') from err
  # create context with the arguments we received.
  ctx.obj = MRFAuditConfig(
    console=console,
    verbose=verbose,
    color=color,
    appconfig=appconfig,
    threads=base.DEFAULT_THREADS if threads is None else threads,
    run_file=run_file,
  )


####################################################################################################
# thresholds
####################################################################################################


class ThresholdsModel(base.ReportBaseModel):
  """Closed-form constants and regime thresholds."""

  d: int = pydantic.Field(description='Dimension')
  beta: float = pydantic.Field(description='Inverse temperature')
  h: float = pydantic.Field(description='External field')
  J: int = pydantic.Field(description='Coupling sign')
  c: float = pydantic.Field(description='2βh + 4βd')
  c_prime: float = pydantic.Field(description='4βd')
  p: float = pydantic.Field(description='Per-site disagreement bound')
  beta_threshold_saw: float = pydantic.Field(
    description='β below which the self-avoiding-path series converges at every h'
  )
  beta_below_saw_threshold: bool = pydantic.Field(description='β < beta_threshold_saw')
  dobrushin_threshold: float = pydantic.Field(description='atanh(1/(2d))')
  dobrushin_ok: bool | None = pydantic.Field(
    description='2d·tanh(β) < 1 (null when J = -1: not applicable)'
  )
  threshold_ratio: float = pydantic.Field(description='dobrushin_threshold / beta_threshold_saw')
  saw_ratio: float = pydantic.Field(description='p(2d-1)e^c')
  saw_series: float = pydantic.Field(description='Σ n p^n (2d-1)^n e^{cn}')
  sqrt_tail_value: float = pydantic.Field(description='(2d-1)·p^{1/2}·e^{c-prime}')
  sqrt_tail_condition: bool = pydantic.Field(description='sqrt_tail_value < 1')
  percolation_threshold: float = pydantic.Field(description='Site percolation p_c label')
  subcritical: bool = pydantic.Field(description='p < p_c')


@app.command(
  'thresholds',
  help='Closed-form thresholds and constants for (d, beta, h, J).',
  epilog=(
    'Example:\n\n\n\n$ poetry run mrfaudit thresholds --dim 2 --beta 0.01 --h 0\n\n'
    '<<JSON with beta_threshold_saw ≈ 0.01798, p ≈ 0.16017>>'
  ),
)
@clibase.CLIErrorGuard
def Thresholds(  # documentation is help/epilog/args # noqa: D103
  *,
  ctx: click.Context,
  dim: int | None = typer.Option(None, '--dim', help='Lattice dimension d. Default 2.'),
  beta: float | None = typer.Option(None, '--beta', help='Inverse temperature. Default 0.01.'),
  h: float | None = typer.Option(None, '--h', help='External field >= 0. Default 0.'),
  j_sign: int | None = typer.Option(None, '--J', help='Coupling sign, 1 or -1. Default 1.'),
  certify: bool = typer.Option(
    False, '--certify/--no-certify', help='Also build the Poincaré certificate (Monte Carlo).'
  ),
  samples: int | None = typer.Option(None, '--samples', help='Clusters for --certify.'),
  cap: int | None = typer.Option(None, '--cap', help='Cluster cap for --certify.'),
  seed: int | None = typer.Option(None, '--seed', help='Master seed. Default 0.'),
) -> None:
  config: MRFAuditConfig = ctx.obj

  def _Resolve() -> RunConfigModel:
    run: RunConfigModel = _ModelConfig(config, dim=dim, beta=beta, h=h, j_sign=j_sign, seed=seed)
    if certify:
      run.samples = _Pick(samples, config.run_file.samples, _DEFAULT_SAMPLES)
      run.cap = _Pick(cap, config.run_file.cap, _DEFAULT_CAP)
    run.box_sites = None
    run.options = {'certify': certify}
    return run

  def _Body(run: RunConfigModel) -> _Outcome:
    params: model.ModelParams = _Params(run)
    saw_threshold: float = model.PercolationBetaThreshold(params.d)
    dobrushin: float = model.DobrushinThreshold(params.d)
    try:
      dobrushin_ok: bool | None = model.DobrushinOK(params)
    except base.NotApplicableError:
      dobrushin_ok = None
    saw_ratio: float = percolation.SAWRatio(params.p, params.d, params.c)
    checks: list[base.Assertion] = [coupling.SingleSiteBoundAudit(params)]
    if params.beta < saw_threshold:
      checks.append(base.Assertion(name='saw_ratio_below_threshold', lhs=saw_ratio, rhs=1.0))
    certificate: pydantic.BaseModel | None = None
    if run.samples is not None and run.cap is not None:
      certificate = audit.PoincareCertificateModel.from_domain(
        audit.PoincareCertificateFor(
          params,
          audit.PercolationBudget(
            samples=run.samples, cap=run.cap, seed=run.seed, threads=run.threads
          ),
        )
      )
    return _Outcome(
      results=ThresholdsModel(
        d=params.d,
        beta=params.beta,
        h=params.h,
        J=params.J,
        c=params.c,
        c_prime=params.c_prime,
        p=params.p,
        beta_threshold_saw=saw_threshold,
        beta_below_saw_threshold=params.beta < saw_threshold,
        dobrushin_threshold=dobrushin,
        dobrushin_ok=dobrushin_ok,
        threshold_ratio=dobrushin / saw_threshold,
        saw_ratio=saw_ratio,
        saw_series=percolation.SAWSeries(params.p, params.d, params.c),
        sqrt_tail_value=model.SqrtTailValue(params),
        sqrt_tail_condition=model.SqrtTailSufficient(params),
        percolation_threshold=model.PercolationThreshold(params.d),
        subcritical=params.p < model.PercolationThreshold(params.d),
      ),
      assertions=tuple(checks),
      certificate=certificate,
    )

  _Execute(config, 'thresholds', _Resolve, _Body)


####################################################################################################
# perc-moments
####################################################################################################


class PercMomentsModel(base.ReportBaseModel):
  """Percolation moment constants from one shared cluster batch."""

  model_config = pydantic.ConfigDict(ser_json_inf_nan='strings', populate_by_name=True)

  p: float = pydantic.Field(description='Open probability')
  d: int = pydantic.Field(description='Dimension')
  c: float = pydantic.Field(description='Exponent of K')
  c_prime: float = pydantic.Field(description='Exponent of K-prime')
  cap: int = pydantic.Field(description='Cluster size cap')
  samples: int = pydantic.Field(description='Clusters sampled')
  truncated_fraction: float = pydantic.Field(description='Fraction of clusters above the cap')
  saw_ratio: float = pydantic.Field(description='p(2d-1)e^c')
  saw_series: float = pydantic.Field(description='Σ n p^n (2d-1)^n e^{cn}')
  k: percolation.MomentEstimateModel | None = pydantic.Field(
    serialization_alias='K', description='E_p(|C| e^{c|C|}) envelope'
  )
  k_prime: percolation.MomentEstimateModel | None = pydantic.Field(
    serialization_alias='K_prime', description='Square-root tail constant envelope'
  )
  k_n: list[SeriesPointModel] = pydantic.Field(serialization_alias='K_N', description='(N, K_N)')
  tails: list[SeriesPointModel] = pydantic.Field(description='(n, P_p(|C| >= n))')
  tail_second_moments: list[SeriesPointModel] = pydantic.Field(
    description='(N, E_p(|C|² 1{|C| > N}))'
  )


def _MaxIncrease(values: abc.Sequence[float], /) -> float:
  """Largest step values[j+1] - values[j] (0 for fewer than two values)."""
  return max((b - a for a, b in itertools.pairwise(values)), default=0.0)


@app.command(
  'perc-moments',
  help='Percolation tails and the moment constants K, K-prime and K_N.',
  epilog=(
    'Example:\n\n\n\n$ poetry run mrfaudit perc-moments --dim 2 --beta 0.01 --samples 100000\n\n'
    '<<JSON with K, K_prime, K_N and tails>>'
  ),
)
@clibase.CLIErrorGuard
def PercMoments(  # documentation is help/epilog/args # noqa: D103
  *,
  ctx: click.Context,
  dim: int | None = typer.Option(None, '--dim', help='Lattice dimension d. Default 2.'),
  beta: float | None = typer.Option(None, '--beta', help='Inverse temperature. Default 0.01.'),
  h: float | None = typer.Option(None, '--h', help='External field >= 0. Default 0.'),
  j_sign: int | None = typer.Option(None, '--J', help='Coupling sign, 1 or -1. Default 1.'),
  p_target: float | None = typer.Option(
    None, '--p', help='Target percolation parameter; solves for beta at the given h.'
  ),
  samples: int | None = typer.Option(None, '--samples', help='Clusters. Default 100000.'),
  cap: int | None = typer.Option(None, '--cap', help='Cluster size cap. Default 64.'),
  n_max: int | None = typer.Option(
    None, '--n-max', help='Largest n for tails and K_N. Default min(cap, 20).'
  ),
  seed: int | None = typer.Option(None, '--seed', help='Master seed. Default 0.'),
) -> None:
  config: MRFAuditConfig = ctx.obj

  def _Resolve() -> RunConfigModel:
    run: RunConfigModel = _ModelConfig(
      config, dim=dim, beta=beta, h=h, j_sign=j_sign, seed=seed, p_target=p_target
    )
    run.box_sites = None
    run.samples = _Pick(samples, config.run_file.samples, _DEFAULT_SAMPLES)
    run.cap = _Pick(cap, config.run_file.cap, _DEFAULT_CAP)
    run.options = {'p': p_target, 'n_max': min(run.cap, 20) if n_max is None else n_max}
    return run

  def _Body(run: RunConfigModel) -> _Outcome:
    params: model.ModelParams = _Params(run)
    if run.samples is None or run.cap is None:
      raise base.InputError('missing percolation budget')
    top: int = min(run.cap, 20) if n_max is None else n_max
    if not 1 <= top <= run.cap:
      raise base.InputError(f'need 1 <= n_max <= cap, got n_max={top}, cap={run.cap}')
    batch: percolation.ClusterSizes = percolation.SampleClusterSizes(
      params.p,
      params.d,
      run.cap,
      run.samples,
      base.Streams(seed=run.seed, tag='cli/perc-moments'),
      threads=run.threads,
    )
    tails: list[tuple[int, percolation.MomentEstimate]] = batch.Tails(top)
    k_n: list[tuple[int, percolation.MomentEstimate]] = [
      (n, batch.KN(params.c, n)) for n in range(1, top + 1)
    ]
    second: list[tuple[int, percolation.MomentEstimate]] = [
      (n, batch.TailSecondMoment(n)) for n in range(top + 1)
    ]
    checks: list[base.Assertion] = [
      base.Assertion(name='tail_at_one', lhs=abs(tails[0][1].value - 1.0), rhs=0.0),
      base.Assertion(
        name='tails_nonincreasing',
        lhs=_MaxIncrease([e.value for _, e in tails]),
        rhs=0.0,
        tolerance=_MONOTONE_TOLERANCE,
      ),
      base.Assertion(
        name='k_n_nondecreasing',
        lhs=_MaxIncrease([-e.value for _, e in k_n]),
        rhs=0.0,
        tolerance=_MONOTONE_TOLERANCE,
      ),
      base.Assertion(
        name='tail_second_moment_nonincreasing',
        lhs=_MaxIncrease([e.value for _, e in second]),
        rhs=0.0,
        tolerance=_MONOTONE_TOLERANCE,
      ),
    ]
    return _Outcome(
      results=PercMomentsModel(
        p=params.p,
        d=params.d,
        c=params.c,
        c_prime=params.c_prime,
        cap=run.cap,
        samples=run.samples,
        truncated_fraction=batch.truncated_fraction,
        saw_ratio=percolation.SAWRatio(params.p, params.d, params.c),
        saw_series=percolation.SAWSeries(params.p, params.d, params.c),
        k=percolation.MomentEstimateModel.from_domain(batch.MomentK(params.c)),
        k_prime=percolation.MomentEstimateModel.from_domain(batch.KPrime(params.c_prime)),
        k_n=_SeriesPoints(k_n),
        tails=_SeriesPoints(tails),
        tail_second_moments=_SeriesPoints(second),
      ),
      assertions=tuple(checks),
    )

  _Execute(config, 'perc-moments', _Resolve, _Body)


####################################################################################################
# coupling-audit
####################################################################################################


class HistogramBinModel(base.ReportBaseModel):
  """One |C_i| value."""

  size: int = pydantic.Field(description='|C_i|')
  count: int = pydantic.Field(description='Sampled transcripts with this size')
  frequency: float = pydantic.Field(description='count / samples')
  exact: float | None = pydantic.Field(description='Exact probability (exact mode)')


class LawPointModel(base.ReportBaseModel):
  """Probability of one cluster size."""

  size: int = pydantic.Field(description='|C_i|')
  probability: float = pydantic.Field(description='Exact probability')


class CouplingAuditModel(base.ReportBaseModel):
  """Coupling audit summary and sample transcripts."""

  mode: str = pydantic.Field(description='exact | two_stage')
  pivot_rank: int = pydantic.Field(description='Rank of the pivot site')
  prefix: list[int] = pydantic.Field(description='Conditioning used for sampled transcripts')
  p: float = pydantic.Field(description='Per-site disagreement bound')
  samples: int = pydantic.Field(description='Sampled transcripts')
  max_violation_margin: float | None = pydantic.Field(
    description='max(lhs - rhs) over the domination checks (<= 0 means all held)'
  )
  cluster_size_histogram: list[HistogramBinModel] = pydantic.Field(description='|C_i| counts')
  failure_size_mean: float | None = pydantic.Field(
    description='Mean failure-cluster size (two-stage mode)'
  )
  fallback_laws: dict[str, list[LawPointModel]] | None = pydantic.Field(
    description='Exact |C_i| law under each fallback order (exact mode)'
  )
  fallback_tv_distance: float | None = pydantic.Field(
    description='Total variation between the fallback laws'
  )
  transcripts: list[coupling.TranscriptModel] = pydantic.Field(description='First transcripts')


def _SampleTranscripts(
  samples: int,
  streams: base.Streams,
  threads: int,
  grow: abc.Callable[[np.random.Generator], coupling.CouplingTranscript],
  /,
) -> list[coupling.CouplingTranscript]:
  """`samples` transcripts in fixed chunks, one stream per chunk."""
  chunks: list[int] = base.ChunkSizes(samples, chunk=_TRANSCRIPT_CHUNK)

  def _Chunk(i: int, /) -> list[coupling.CouplingTranscript]:
    rng: np.random.Generator = streams.Replica(i)
    return [grow(rng) for _ in range(chunks[i])]

  return [t for part in base.ParallelMap(_Chunk, len(chunks), threads=threads) for t in part]


def _LawPoints(law: dict[int, float], /) -> list[LawPointModel]:
  return [LawPointModel(size=s, probability=q) for s, q in law.items()]


@app.command(
  'coupling-audit',
  help='Disagreement-percolation coupling: domination, change of measure, transcripts.',
  epilog=(
    'Example:\n\n\n\n$ poetry run mrfaudit coupling-audit --box-sites 9 --beta 0.05\n\n'
    '<<exact domination audit on a 3x3 box>>'
  ),
)
@clibase.CLIErrorGuard
def CouplingAudit(  # documentation is help/epilog/args # noqa: C901, D103, PLR0915
  *,
  ctx: click.Context,
  mode: coupling.CouplingMode = typer.Option(
    coupling.CouplingMode.EXACT, '--mode', help='exact (coupling tree) or two_stage (coins).'
  ),
  pivot: int = typer.Option(1, '--pivot', min=1, help='Pivot rank i (1-based).'),
  dim: int | None = typer.Option(None, '--dim', help='Lattice dimension d. Default 2.'),
  beta: float | None = typer.Option(None, '--beta', help='Inverse temperature. Default 0.01.'),
  h: float | None = typer.Option(None, '--h', help='External field >= 0. Default 0.'),
  j_sign: int | None = typer.Option(None, '--J', help='Coupling sign, 1 or -1. Default 1.'),
  boundary: str | None = typer.Option(None, '--boundary', help='free | plus | minus.'),
  box_sites: int | None = typer.Option(None, '--box-sites', help='Box size N. Default 9.'),
  samples: int | None = typer.Option(None, '--samples', help='Transcripts. Default 1000.'),
  seed: int | None = typer.Option(None, '--seed', help='Master seed. Default 0.'),
  max_subset: int = typer.Option(
    _DEFAULT_MAX_SUBSET, '--max-subset', min=1, help='Largest connected set A audited.'
  ),
  fallback: coupling.FallbackOrder = typer.Option(
    coupling.FallbackOrder.LOWEST, '--fallback', help='Frontier order when nothing touches C_i.'
  ),
  show: int = typer.Option(3, '--show', min=0, help='Transcripts echoed in the report.'),
  burn_in: int | None = typer.Option(
    None, '--burn-in', help='Heat-bath sweeps for two-stage Y on boxes beyond exact sampling.'
  ),
) -> None:
  config: MRFAuditConfig = ctx.obj

  def _Resolve() -> RunConfigModel:
    run: RunConfigModel = _ModelConfig(
      config,
      dim=dim,
      beta=beta,
      h=h,
      j_sign=j_sign,
      boundary=boundary,
      box_sites=box_sites,
      seed=seed,
    )
    run.samples = samples if samples is not None else _DEFAULT_TRANSCRIPTS
    run.options = {
      'mode': mode.value,
      'pivot': pivot,
      'max_subset': max_subset,
      'fallback': fallback.value,
      'show': show,
      'burn_in': burn_in,
    }
    return run

  def _Body(run: RunConfigModel) -> _Outcome:
    params: model.ModelParams = _Params(run)
    bc: model.BoundaryCondition = _Boundary(run)
    enumeration: lattice.Enumeration = _Box(run)
    if not 1 <= pivot <= enumeration.size:
      raise base.InputError(f'pivot rank must be in [1, {enumeration.size}], got {pivot}')
    if run.samples is None or run.samples < 1:
      raise base.InputError(f'samples must be >= 1, got {run.samples}')
    prefix: tuple[int, ...] = (1,) * (pivot - 1)
    subsets: list[frozenset[lattice.Site]] = lattice.ConnectedSubsets(
      enumeration, enumeration.SiteAtRank(pivot), max_subset
    )
    streams = base.Streams(seed=run.seed, tag=f'cli/coupling-audit/{mode.value}')
    checks: list[base.Assertion] = [coupling.SingleSiteBoundAudit(params)]
    domination: list[base.Assertion] = []
    exact_law: dict[int, float] | None = None
    laws: dict[str, list[LawPointModel]] | None = None
    tv: float | None = None
    failure_mean: float | None = None
    transcripts: list[coupling.CouplingTranscript]
    if mode is coupling.CouplingMode.EXACT:
      m: model.ExactMeasure = model.BuildExactMeasure(params, enumeration, bc)
      domination = [
        r.AsAssertion(enumeration)
        for r in coupling.DominationAudit(
          m, pivot, subsets, fallback=fallback, threads=run.threads
        )
      ]
      for subset in subsets:
        if len(subset) < 2:  # noqa: PLR2004
          continue
        ordered = lattice.OrderedSubset(members=tuple(sorted(subset, key=enumeration.Position)))
        ratio: float = coupling.ConditionalRNAudit(m, pivot, ordered, ordered.members[-1])
        checks.append(
          base.Assertion(
            name=f'change_of_measure(A={sorted(enumeration.Rank(s) for s in subset)})',
            lhs=ratio,
            rhs=math.exp(params.c_prime * len(subset)),
            tolerance=_IDENTITY_TOLERANCE,
          )
        )
      per_order: dict[str, dict[int, float]] = {
        order.value: coupling.ClusterSizeLaw(
          coupling.CouplingTree(m, pivot, prefix, fallback=order)
        )
        for order in coupling.FallbackOrder
      }
      exact_law = per_order[fallback.value]
      laws = {name: _LawPoints(law) for name, law in per_order.items()}
      low, high = per_order.values()
      tv = 0.5 * math.fsum(abs(low.get(s, 0.0) - high.get(s, 0.0)) for s in {*low, *high})
      transcripts = _SampleTranscripts(
        run.samples,
        streams,
        run.threads,
        lambda rng: coupling.GrowCouplingExact(m, pivot, prefix, rng, fallback=fallback),
      )
    else:
      exact_measure: model.ExactMeasure | None = (
        model.BuildExactMeasure(params, enumeration, bc)
        if enumeration.size <= coupling.MAX_EXACT_COUPLING_SITES
        else None
      )
      transcripts = _SampleTranscripts(
        run.samples,
        streams,
        run.threads,
        lambda rng: coupling.GrowCouplingTwoStage(
          params,
          enumeration,
          bc,
          pivot,
          prefix,
          rng,
          measure=exact_measure,
          burn_in_sweeps=burn_in,
        ),
      )
      failure_mean = float(np.mean([len(t.failure or ()) for t in transcripts]))
      q_fail: float = min(params.p, 1.0)
      for subset in subsets:
        hits: float = float(np.mean([subset <= t.disagreement for t in transcripts]))
        rhs: float = q_fail ** (len(subset) - 1)
        domination.append(
          base.Assertion(
            name=f'sampled_domination(A={sorted(enumeration.Rank(s) for s in subset)})',
            lhs=hits,
            rhs=rhs,
            tolerance=_MONTE_CARLO_SIGMAS * math.sqrt(rhs * (1.0 - rhs) / len(transcripts)),
          )
        )
    checks.extend(domination)
    counts: dict[int, int] = {}
    for t in transcripts:
      counts[t.size] = counts.get(t.size, 0) + 1
    sizes: list[int] = sorted({*counts, *(exact_law or {})})
    return _Outcome(
      results=CouplingAuditModel(
        mode=mode.value,
        pivot_rank=pivot,
        prefix=list(prefix),
        p=params.p,
        samples=len(transcripts),
        max_violation_margin=max((a.lhs - a.rhs for a in domination), default=None),
        cluster_size_histogram=[
          HistogramBinModel(
            size=s,
            count=counts.get(s, 0),
            frequency=counts.get(s, 0) / len(transcripts),
            exact=None if exact_law is None else exact_law.get(s, 0.0),
          )
          for s in sizes
        ],
        failure_size_mean=failure_mean,
        fallback_laws=laws,
        fallback_tv_distance=tv,
        transcripts=[coupling.TranscriptModel.from_domain(t) for t in transcripts[:show]],
      ),
      assertions=tuple(checks),
    )

  _Execute(config, 'coupling-audit', _Resolve, _Body)


####################################################################################################
# gap-audit
####################################################################################################


class GapPointModel(base.ReportBaseModel):
  """Exact gap of one box."""

  n: int = pydantic.Field(serialization_alias='N', description='Box sites')
  gap: float = pydantic.Field(description='Exact spectral gap')


class GapAuditModel(base.ReportBaseModel):
  """Exact spectral gap against the certificate."""

  box_sites: int = pydantic.Field(description='Box sites N')
  gap: float = pydantic.Field(description='Exact spectral gap of -L')
  bound_2delta_over_cp: float = pydantic.Field(description='Certified lower bound 2δ/C_P')
  delta: float = pydantic.Field(description='Lower rate bound δ')
  upper_rate: float = pydantic.Field(description='Upper rate bound M')
  detailed_balance_defect: float = pydantic.Field(description='max |c P - c^x P^x|')
  symmetry_defect: float = pydantic.Field(description='Asymmetry of the symmetrized generator')
  stationarity_defect: float = pydantic.Field(description='max |P·L|')
  gap_trend: list[GapPointModel] = pydantic.Field(description='Exact gaps of growing boxes')
  exported: str | None = pydantic.Field(description='Probability vector file, if written')


@app.command(
  'gap-audit',
  help='Exact spectral gap of the Glauber generator against the certified bound 2δ/C_P.',
  epilog=(
    'Example:\n\n\n\n$ poetry run mrfaudit gap-audit --dim 1 --box-sites 1 --beta 0\n\n'
    '<<gap 1.0, bound 1.0, pass>>'
  ),
)
@clibase.CLIErrorGuard
def GapAudit(  # documentation is help/epilog/args # noqa: D103
  *,
  ctx: click.Context,
  dim: int | None = typer.Option(None, '--dim', help='Lattice dimension d. Default 2.'),
  beta: float | None = typer.Option(None, '--beta', help='Inverse temperature. Default 0.01.'),
  h: float | None = typer.Option(None, '--h', help='External field >= 0. Default 0.'),
  j_sign: int | None = typer.Option(None, '--J', help='Coupling sign, 1 or -1. Default 1.'),
  boundary: str | None = typer.Option(None, '--boundary', help='free | plus | minus.'),
  box_sites: int | None = typer.Option(None, '--box-sites', help='Box size N. Default 9.'),
  samples: int | None = typer.Option(None, '--samples', help='Clusters. Default 100000.'),
  cap: int | None = typer.Option(None, '--cap', help='Cluster size cap. Default 64.'),
  seed: int | None = typer.Option(None, '--seed', help='Master seed. Default 0.'),
  trend: str | None = typer.Option(None, '--trend', help='Box sizes for a gap trend, e.g. 1..9.'),
  export: pathlib.Path | None = typer.Option(
    None, '--export', dir_okay=False, help='Write the exact probability vector (binary).'
  ),
) -> None:
  config: MRFAuditConfig = ctx.obj

  def _Resolve() -> RunConfigModel:
    run: RunConfigModel = _ModelConfig(
      config,
      dim=dim,
      beta=beta,
      h=h,
      j_sign=j_sign,
      boundary=boundary,
      box_sites=box_sites,
      seed=seed,
    )
    run.samples = _Pick(samples, config.run_file.samples, _DEFAULT_SAMPLES)
    run.cap = _Pick(cap, config.run_file.cap, _DEFAULT_CAP)
    run.n_range = list(ParseInts(trend) or ())
    run.options = {'export': None if export is None else str(export)}
    return run

  def _Body(run: RunConfigModel) -> _Outcome:
    params: model.ModelParams = _Params(run)
    bc: model.BoundaryCondition = _Boundary(run)
    enumeration: lattice.Enumeration = _Box(run)
    if enumeration.size > glauber.MAX_GENERATOR_SITES:
      raise base.CapacityError(
        f'exact generator needs N <= {glauber.MAX_GENERATOR_SITES}, N={enumeration.size}'
      )
    if run.samples is None or run.cap is None:
      raise base.InputError('missing percolation budget')
    m: model.ExactMeasure = model.BuildExactMeasure(params, enumeration, bc)
    rates = glauber.RateFunction(params=params)
    generator: glauber.GeneratorMatrix = glauber.Generator(m, rates)
    gap: float = glauber.SpectralGapExact(m, rates)
    cert: audit.PoincareCertificate = audit.PoincareCertificateFor(
      params,
      audit.PercolationBudget(samples=run.samples, cap=run.cap, seed=run.seed, threads=run.threads),
    )
    balance: float = glauber.DetailedBalanceAudit(m, rates)
    checks: list[base.Assertion] = [
      base.Assertion(
        name='detailed_balance', lhs=balance, rhs=0.0, tolerance=_DETAILED_BALANCE_TOLERANCE
      ),
      base.Assertion(name='gap_positive', lhs=0.0, rhs=gap),
    ]
    if math.isfinite(cert.c_p):
      checks.append(
        base.Assertion(
          name='gap_vs_certificate',
          lhs=cert.gap_lower_bound,
          rhs=gap,
          tolerance=_RELAXATION_TOLERANCE,
        )
      )
    if export is not None:
      model.ExportProbabilities(m, export)
    return _Outcome(
      results=GapAuditModel(
        box_sites=enumeration.size,
        gap=gap,
        bound_2delta_over_cp=cert.gap_lower_bound,
        delta=rates.delta,
        upper_rate=rates.upper,
        detailed_balance_defect=balance,
        symmetry_defect=generator.SymmetryDefect(),
        stationarity_defect=generator.StationarityDefect(),
        gap_trend=[
          GapPointModel(n=n, gap=g) for n, g in glauber.GapTrend(params, bc, run.n_range or [])
        ],
        exported=None if export is None else str(export),
      ),
      assertions=tuple(checks),
      certificate=audit.PoincareCertificateModel.from_domain(cert),
    )

  _Execute(config, 'gap-audit', _Resolve, _Body)


####################################################################################################
# relax
####################################################################################################


class RelaxModel(base.ReportBaseModel):
  """Relaxation of Var(S_t f) under the Glauber semigroup."""

  functional: str = pydantic.Field(description='Functional expression')
  method: str = pydantic.Field(description='exact | monte_carlo | both')
  gap: float | None = pydantic.Field(description='Exact spectral gap (exact methods)')
  curve: list[glauber.RelaxationPointModel] = pydantic.Field(description='Var(S_t f) curve')
  fit: glauber.RelaxationFitModel | None = pydantic.Field(description='Decay fit of the curve')
  monte_carlo: list[glauber.RelaxationPointModel] | None = pydantic.Field(
    description='Monte Carlo curve (method both)'
  )


@app.command(
  'relax',
  help='Relaxation curve Var(S_t f), exact (matrix exponential) or Monte Carlo.',
  epilog=(
    'Example:\n\n\n\n$ poetry run mrfaudit relax --box-sites 9 --beta 0.05 --functional '
    '"random(7,3)" --csv relax.csv\n\n<<exact curve, decay fit and bound checks>>'
  ),
)
@clibase.CLIErrorGuard
def Relax(  # documentation is help/epilog/args # noqa: C901, D103
  *,
  ctx: click.Context,
  dim: int | None = typer.Option(None, '--dim', help='Lattice dimension d. Default 2.'),
  beta: float | None = typer.Option(None, '--beta', help='Inverse temperature. Default 0.01.'),
  h: float | None = typer.Option(None, '--h', help='External field >= 0. Default 0.'),
  j_sign: int | None = typer.Option(None, '--J', help='Coupling sign, 1 or -1. Default 1.'),
  boundary: str | None = typer.Option(None, '--boundary', help='free | plus | minus.'),
  box_sites: int | None = typer.Option(None, '--box-sites', help='Box size N. Default 9.'),
  seed: int | None = typer.Option(None, '--seed', help='Master seed. Default 0.'),
  functional: str = typer.Option(
    'random(0,3)',
    '--functional',
    help='spin(x) | corr(x,y) | runcount(k,axis,n) | random(seed,degree) | const(v).',
  ),
  times: str | None = typer.Option(
    None, '--times', help='Comma-separated time grid. Default 0.25,0.5,1,2,4.'
  ),
  method: str | None = typer.Option(
    None,
    '--method',
    help='exact | monte_carlo | both. Default exact when the box fits the generator.',
  ),
  replicas: int | None = typer.Option(None, '--replicas', help='Outer replicas. Default 256.'),
  inner: int | None = typer.Option(None, '--inner', help='Trajectories per replica. Default 32.'),
  burn_in: int | None = typer.Option(
    None, '--burn-in', help='Heat-bath sweeps for Monte Carlo starts beyond the exact cap.'
  ),
  csv_path: pathlib.Path | None = typer.Option(
    None, '--csv', dir_okay=False, help='Write the curve as t,var,se rows.'
  ),
) -> None:
  config: MRFAuditConfig = ctx.obj

  def _Resolve() -> RunConfigModel:
    run: RunConfigModel = _ModelConfig(
      config,
      dim=dim,
      beta=beta,
      h=h,
      j_sign=j_sign,
      boundary=boundary,
      box_sites=box_sites,
      seed=seed,
    )
    run.time_grid = list(
      _Pick(ParseFloats(times), _Tuple(config.run_file.time_grid), _DEFAULT_TIME_GRID)
    )
    run.replicas = _Pick(replicas, config.run_file.replicas, _DEFAULT_REPLICAS)
    run.inner = _Pick(inner, config.run_file.inner, _DEFAULT_INNER)
    exact_fits: bool = (run.box_sites or 0) <= glauber.MAX_GENERATOR_SITES
    run.options = {
      'functional': functional,
      'method': method if method is not None else ('exact' if exact_fits else 'monte_carlo'),
      'burn_in': burn_in,
      'csv': None if csv_path is None else str(csv_path),
    }
    return run

  def _Body(run: RunConfigModel) -> _Outcome:
    params: model.ModelParams = _Params(run)
    bc: model.BoundaryCondition = _Boundary(run)
    enumeration: lattice.Enumeration = _Box(run)
    chosen: str = str(run.options['method'])
    if chosen not in {'exact', 'monte_carlo', 'both'}:
      raise base.InputError(f'unknown method {chosen!r} (exact | monte_carlo | both)')
    grid: list[float] = run.time_grid or []
    f: functionals.Functional = functionals.ParseFunctional(functional, enumeration)
    rates = glauber.RateFunction(params=params)
    checks: list[base.Assertion] = []
    gap: float | None = None
    exact: glauber.RelaxationCurve | None = None
    sampled: glauber.RelaxationCurve | None = None
    m: model.ExactMeasure | None = None
    if chosen != 'monte_carlo':
      if enumeration.size > glauber.MAX_GENERATOR_SITES:
        raise base.CapacityError(
          f'exact relaxation needs N <= {glauber.MAX_GENERATOR_SITES}, N={enumeration.size}'
        )
      m = model.BuildExactMeasure(params, enumeration, bc)
      values: np.ndarray = f.Vector(enumeration)
      centered: np.ndarray = values - float(np.dot(m.probs, values))
      norm: float = float(np.dot(m.probs, centered**2))
      gap = glauber.SpectralGapExact(m, rates)
      exact = glauber.RelaxationCurveExact(m, rates, centered, grid)
      for t, variance in zip(exact.times, exact.variances, strict=True):
        checks.append(
          base.Assertion(
            name=f'relaxation(t={t!r})',
            lhs=variance,
            rhs=math.exp(-gap * t) * norm,
            tolerance=_RELAXATION_TOLERANCE,
          )
        )
        checks.append(glauber.SupContractionAudit(m, rates, centered, t))
    if chosen != 'exact':
      if m is None and enumeration.size <= model.MAX_EXACT_SITES and burn_in is None:
        m = model.BuildExactMeasure(params, enumeration, bc)
      if run.replicas is None or run.inner is None:
        raise base.InputError('missing Monte Carlo workload')
      sampled = glauber.RelaxationCurveMonteCarlo(
        rates,
        enumeration,
        bc,
        f,
        grid,
        base.Streams(seed=run.seed, tag='cli/relax'),
        outer=run.replicas,
        inner=run.inner,
        measure=m,
        burn_in_sweeps=burn_in,
        threads=run.threads,
      )
      if exact is not None:
        for j, t in enumerate(sampled.times):
          bias: float = (sampled.bias_bounds or (0.0,) * len(grid))[j]
          checks.append(
            base.Assertion(
              name=f'monte_carlo_vs_exact(t={t!r})',
              lhs=abs(sampled.variances[j] - exact.variances[j]),
              rhs=0.0,
              tolerance=_MONTE_CARLO_SIGMAS * sampled.std_errors[j] + bias,
            )
          )
    main: glauber.RelaxationCurve | None = exact if exact is not None else sampled
    if main is None:
      raise base.InputError(f'no relaxation curve for method {chosen!r}')
    if csv_path is not None:
      _WriteCSV(
        csv_path,
        ('t', 'var', 'se'),
        zip(main.times, main.variances, main.std_errors, strict=True),
      )
    return _Outcome(
      results=RelaxModel(
        functional=f.name,
        method=chosen,
        gap=gap,
        curve=_CurvePoints(main),
        fit=glauber.RelaxationFitModel.from_domain(glauber.FitRelaxation(main)),
        monte_carlo=None if sampled is None or exact is None else _CurvePoints(sampled),
      ),
      assertions=tuple(checks),
    )

  _Execute(config, 'relax', _Resolve, _Body)


def _Tuple[T](values: abc.Sequence[T] | None, /) -> tuple[T, ...] | None:
  return None if values is None else tuple(values)


####################################################################################################
# poincare-audit
####################################################################################################


class PoincareAuditModel(base.ReportBaseModel):
  """Poincaré audit of a functional battery on a finite box."""

  box_sites: int = pydantic.Field(description='Box sites N')
  gap: float | None = pydantic.Field(description='Exact spectral gap, when computable')
  sharp_constant: float = pydantic.Field(description='max over the battery of Var/E')
  uniform_worst_ratio: float = pydantic.Field(description='max over the battery of Var/‖δf‖²')
  uniform_skipped: list[str] = pydantic.Field(description='Functionals without variation')
  reports: list[audit.VarianceReportModel] = pydantic.Field(description='Per-functional data')


def _Battery(
  enumeration: lattice.Enumeration,
  seed: int,
  size: int,
  degree: int,
  extra: abc.Sequence[str],
  /,
) -> list[functionals.Functional]:
  """Seeded random polynomials, the first spin, a neighbor correlation and any extra expressions."""
  battery: list[functionals.Functional] = [
    functionals.RandomPolynomial(seed + j, degree, enumeration) for j in range(size)
  ]
  origin: lattice.Site = enumeration.SiteAtRank(1)
  battery.append(functionals.Spin(enumeration, origin))
  if neighbors := enumeration.Neighbors(origin):
    battery.append(functionals.Corr(enumeration, origin, neighbors[0]))
  battery.extend(functionals.ParseFunctional(e, enumeration) for e in extra)
  return battery


@app.command(
  'poincare-audit',
  help='Certificate C_P and the Poincaré, uniform and martingale checks on a finite box.',
  epilog=(
    'Example:\n\n\n\n$ poetry run mrfaudit poincare-audit --box-sites 9 --beta 0.016\n\n'
    '<<certificate block plus Var <= C_P E(f,f) for a random battery>>'
  ),
)
@clibase.CLIErrorGuard
def PoincareAuditCommand(  # documentation is help/epilog/args # noqa: D103
  *,
  ctx: click.Context,
  dim: int | None = typer.Option(None, '--dim', help='Lattice dimension d. Default 2.'),
  beta: float | None = typer.Option(None, '--beta', help='Inverse temperature. Default 0.01.'),
  h: float | None = typer.Option(None, '--h', help='External field >= 0. Default 0.'),
  j_sign: int | None = typer.Option(None, '--J', help='Coupling sign, 1 or -1. Default 1.'),
  boundary: str | None = typer.Option(None, '--boundary', help='free | plus | minus.'),
  box_sites: int | None = typer.Option(None, '--box-sites', help='Box size N. Default 9.'),
  samples: int | None = typer.Option(None, '--samples', help='Clusters. Default 100000.'),
  cap: int | None = typer.Option(None, '--cap', help='Cluster size cap. Default 64.'),
  seed: int | None = typer.Option(None, '--seed', help='Master seed. Default 0.'),
  battery_size: int = typer.Option(
    _DEFAULT_BATTERY, '--functions', min=0, help='Random polynomials in the battery.'
  ),
  degree: int = typer.Option(_DEFAULT_DEGREE, '--degree', min=0, help='Polynomial degree.'),
  extra: list[str] | None = typer.Option(
    None, '--functional', help='Extra functional expression (repeatable).'
  ),
) -> None:
  config: MRFAuditConfig = ctx.obj

  def _Resolve() -> RunConfigModel:
    run: RunConfigModel = _ModelConfig(
      config,
      dim=dim,
      beta=beta,
      h=h,
      j_sign=j_sign,
      boundary=boundary,
      box_sites=box_sites,
      seed=seed,
    )
    run.samples = _Pick(samples, config.run_file.samples, _DEFAULT_SAMPLES)
    run.cap = _Pick(cap, config.run_file.cap, _DEFAULT_CAP)
    run.options = {'functions': battery_size, 'degree': degree, 'functional': list(extra or [])}
    return run

  def _Body(run: RunConfigModel) -> _Outcome:
    params: model.ModelParams = _Params(run)
    enumeration: lattice.Enumeration = _Box(run)
    if enumeration.size > functionals.MAX_EXACT_VARIATION_SITES:
      raise base.CapacityError(
        f'exact audit needs N <= {functionals.MAX_EXACT_VARIATION_SITES}, N={enumeration.size}'
      )
    if run.samples is None or run.cap is None:
      raise base.InputError('missing percolation budget')
    m: model.ExactMeasure = model.BuildExactMeasure(params, enumeration, _Boundary(run))
    battery: list[functionals.Functional] = _Battery(
      enumeration, run.seed, battery_size, degree, extra or []
    )
    cert: audit.PoincareCertificate = audit.PoincareCertificateFor(
      params,
      audit.PercolationBudget(samples=run.samples, cap=run.cap, seed=run.seed, threads=run.threads),
    )
    result: audit.PoincareAuditResult = audit.PoincareAudit(
      m, glauber.RateFunction(params=params), battery, cert
    )
    uniform: audit.UniformVarianceResult = audit.UniformVarianceAudit(m, battery)
    checks: list[base.Assertion] = [
      base.Assertion(
        name=f'martingale_identity({r.name})',
        lhs=r.identity_defect,
        rhs=0.0,
        tolerance=_IDENTITY_TOLERANCE,
      )
      for r in result.reports
    ]
    checks.extend(result.assertions)
    return _Outcome(
      results=PoincareAuditModel(
        box_sites=enumeration.size,
        gap=result.gap,
        sharp_constant=result.sharp_constant,
        uniform_worst_ratio=uniform.worst_ratio,
        uniform_skipped=list(uniform.skipped),
        reports=[audit.VarianceReportModel.from_domain(r) for r in result.reports],
      ),
      assertions=tuple(checks),
      certificate=audit.PoincareCertificateModel.from_domain(cert),
    )

  _Execute(config, 'poincare-audit', _Resolve, _Body)


####################################################################################################
# weak-poincare
####################################################################################################


class XiPointModel(base.ReportBaseModel):
  """Relaxation profile value."""

  t: float = pydantic.Field(description='Time')
  xi: float = pydantic.Field(description='ξ(t) from the weak Poincaré curve')
  power_law_bound: float | None = pydantic.Field(description='Closed-form power-law bound')


class WeakPoincareModel(base.ReportBaseModel):
  """Weak Poincaré curve, its relaxation profile and the finite-box check."""

  p: float = pydantic.Field(description='Percolation parameter')
  functional: str = pydantic.Field(description='Functional audited on the box')
  curve: audit.WeakPoincareCurveModel = pydantic.Field(description='(N, r, α) and power-law fit')
  xi: list[XiPointModel] = pydantic.Field(description='ξ(t) on the time grid')
  relaxation: list[glauber.RelaxationPointModel] = pydantic.Field(
    description='Exact Var(S_t f) of the centered functional'
  )
  informational: list[base.AssertionModel] = pydantic.Field(
    description='Reported but not gating: log-log fit R² against 0.9'
  )


@app.command(
  'weak-poincare',
  help='Weak Poincaré curve (K_N and tail second moments), ξ(t) and the relaxation check.',
  epilog=(
    'Example:\n\n\n\n$ poetry run mrfaudit weak-poincare --dim 2 --p 0.25 --n-range 2..20\n\n'
    '<<curve points, kappa fit, xi(t) and weak relaxation checks>>'
  ),
)
@clibase.CLIErrorGuard
def WeakPoincare(  # documentation is help/epilog/args # noqa: D103
  *,
  ctx: click.Context,
  dim: int | None = typer.Option(None, '--dim', help='Lattice dimension d. Default 2.'),
  beta: float | None = typer.Option(None, '--beta', help='Inverse temperature. Default 0.01.'),
  h: float | None = typer.Option(None, '--h', help='External field >= 0. Default 0.'),
  j_sign: int | None = typer.Option(None, '--J', help='Coupling sign, 1 or -1. Default 1.'),
  p_target: float | None = typer.Option(
    None, '--p', help='Target percolation parameter; solves for beta at the given h.'
  ),
  boundary: str | None = typer.Option(None, '--boundary', help='free | plus | minus.'),
  box_sites: int | None = typer.Option(None, '--box-sites', help='Box size N. Default 9.'),
  samples: int | None = typer.Option(None, '--samples', help='Clusters. Default 100000.'),
  cap: int | None = typer.Option(None, '--cap', help='Cluster size cap. Default 64.'),
  seed: int | None = typer.Option(None, '--seed', help='Master seed. Default 0.'),
  n_range: str | None = typer.Option(None, '--n-range', help='Truncation levels. Default 2..20.'),
  times: str | None = typer.Option(
    None, '--times', help='Comma-separated time grid. Default 0.25,0.5,1,2,4.'
  ),
  functional: str = typer.Option(
    'random(0,3)', '--functional', help='Functional for the finite-box relaxation check.'
  ),
  csv_path: pathlib.Path | None = typer.Option(
    None, '--csv', dir_okay=False, help='Write the curve as N,r,alpha rows.'
  ),
) -> None:
  config: MRFAuditConfig = ctx.obj

  def _Resolve() -> RunConfigModel:
    run: RunConfigModel = _ModelConfig(
      config,
      dim=dim,
      beta=beta,
      h=h,
      j_sign=j_sign,
      boundary=boundary,
      box_sites=box_sites,
      seed=seed,
      p_target=p_target,
    )
    run.samples = _Pick(samples, config.run_file.samples, _DEFAULT_SAMPLES)
    run.cap = _Pick(cap, config.run_file.cap, _DEFAULT_CAP)
    run.n_range = list(
      _Pick(ParseInts(n_range), _Tuple(config.run_file.n_range), _DEFAULT_N_RANGE)
    )
    run.time_grid = list(
      _Pick(ParseFloats(times), _Tuple(config.run_file.time_grid), _DEFAULT_TIME_GRID)
    )
    run.options = {
      'p': p_target,
      'functional': functional,
      'csv': None if csv_path is None else str(csv_path),
    }
    return run

  def _Body(run: RunConfigModel) -> _Outcome:
    params: model.ModelParams = _Params(run)
    enumeration: lattice.Enumeration = _Box(run)
    if enumeration.size > glauber.MAX_GENERATOR_SITES:
      raise base.CapacityError(
        f'exact relaxation needs N <= {glauber.MAX_GENERATOR_SITES}, N={enumeration.size}'
      )
    if run.samples is None or run.cap is None:
      raise base.InputError('missing percolation budget')
    budget = audit.PercolationBudget(
      samples=run.samples, cap=run.cap, seed=run.seed, threads=run.threads
    )
    curve: audit.WeakPoincareCurve = audit.WeakPoincareCurveFor(params, run.n_range or [], budget)
    m: model.ExactMeasure = model.BuildExactMeasure(params, enumeration, _Boundary(run))
    rates = glauber.RateFunction(params=params)
    f: functionals.Functional = functionals.ParseFunctional(functional, enumeration)
    relaxation, checks = audit.WeakRelaxationAudit(
      m, rates, f.Vector(enumeration), curve, run.time_grid or []
    )
    checks.extend(curve.Assertions())
    quality: base.Assertion | None = curve.FitQuality()
    xi: list[audit.XiValue] = [audit.XiOfT(curve, rates.delta, t) for t in relaxation.times]
    if csv_path is not None:
      _WriteCSV(csv_path, ('N', 'r', 'alpha'), curve.points)
    return _Outcome(
      results=WeakPoincareModel(
        p=params.p,
        functional=f.name,
        curve=audit.WeakPoincareCurveModel.from_domain(curve),
        xi=[XiPointModel(t=x.t, xi=x.value, power_law_bound=x.power_law_bound) for x in xi],
        relaxation=_CurvePoints(relaxation),
        informational=[] if quality is None else [base.AssertionModel.from_domain(quality)],
      ),
      assertions=tuple(checks),
      certificate=audit.PoincareCertificateModel.from_domain(
        audit.PoincareCertificateFor(params, budget)
      ),
    )

  _Execute(config, 'weak-poincare', _Resolve, _Body)


####################################################################################################
# run-counts
####################################################################################################


class RunCountRowModel(base.ReportBaseModel):
  """Exact quantities of the run counter f_k."""

  k: int = pydantic.Field(description='Run length minus one')
  variance: float = pydantic.Field(description='Var(f_k)')
  dirichlet: float = pydantic.Field(description='E(f_k, f_k)')
  delta_norm_sq: float = pydantic.Field(description='‖δf_k‖²')
  theta: float = pydantic.Field(description='Window cylinder constant θ')
  cylinder_theta: float = pydantic.Field(description='Consecutive cylinder constant')
  var_over_dirichlet: float = pydantic.Field(description='Var/E')
  var_over_delta: float = pydantic.Field(description='Var/‖δf‖²')
  site_terms: list[float] = pydantic.Field(description='∫(∇_r f_k)² in line order')
  coverage: list[int] = pydantic.Field(description='Windows containing each site')


class TrendPointModel(base.ReportBaseModel):
  """Var(f_k) of a growing window under a product measure."""

  n: int = pydantic.Field(description='Window length')
  k: int = pydantic.Field(description='Run length minus one')
  variance: float = pydantic.Field(description='Closed-form Var(f_k)')


class RunCountsModel(base.ReportBaseModel):
  """Run-counter separation of the uniform and Poincaré inequalities."""

  n: int = pydantic.Field(description='Line length')
  rows: list[RunCountRowModel] = pydantic.Field(description='One row per k')
  stated: list[base.AssertionModel] = pydantic.Field(
    description='Tighter 2k forms, informational only'
  )
  trend: list[TrendPointModel] = pydantic.Field(description='Var(f_k) with k ~ factor·log n')


@app.command(
  'run-counts',
  help='Run counters f_k on a line: Var/E against Var/‖δf‖² and the variance trend.',
  epilog=(
    'Example:\n\n\n\n$ poetry run mrfaudit run-counts --n 12 --k 1,2,3,4 --beta 0\n\n'
    '<<exact separation table and Dirichlet bounds>>'
  ),
)
@clibase.CLIErrorGuard
def RunCounts(  # documentation is help/epilog/args # noqa: D103
  *,
  ctx: click.Context,
  beta: float | None = typer.Option(None, '--beta', help='Inverse temperature. Default 0.'),
  h: float | None = typer.Option(None, '--h', help='External field >= 0. Default 0.'),
  j_sign: int | None = typer.Option(None, '--J', help='Coupling sign, 1 or -1. Default 1.'),
  n: int = typer.Option(10, '--n', min=2, help='Line length (exact, at most 20).'),
  ks: str = typer.Option('1,2,3,4', '--k', help='Run lengths minus one, e.g. 1,2,3,4.'),
  factor: float = typer.Option(1.0, '--trend-factor', help='k = ceil(factor·log n) in the trend.'),
  trend_max_log2: int = typer.Option(
    10, '--trend-max-log2', min=0, help='Trend windows n = 2^2..2^this (0 disables).'
  ),
  q: float = typer.Option(0.5, '--q', help='P(+) of the product measure used by the trend.'),
) -> None:
  config: MRFAuditConfig = ctx.obj

  def _Resolve() -> RunConfigModel:
    run: RunConfigModel = _ModelConfig(
      config, dim=1, beta=_Pick(beta, config.run_file.beta, 0.0), h=h, j_sign=j_sign
    )
    run.box_sites = n
    run.boundary = model.BoundaryCondition.FREE.value
    run.options = {
      'k': ks,
      'trend_factor': factor,
      'trend_max_log2': trend_max_log2,
      'q': q,
    }
    return run

  def _Body(run: RunConfigModel) -> _Outcome:
    params: model.ModelParams = _Params(run)
    k_values: tuple[int, ...] = ParseInts(ks) or ()
    if not k_values:
      raise base.InputError('no k given')
    if n > functionals.MAX_EXACT_VARIATION_SITES:
      raise base.CapacityError(
        f'exact run counts need n <= {functionals.MAX_EXACT_VARIATION_SITES}, n={n}'
      )
    rows, checks, stated = audit.RunCountSeparation(params, n, k_values)
    trend: list[tuple[int, int, float]] = functionals.RunCountTrend(
      [1 << e for e in range(2, trend_max_log2 + 1)], factor, q
    )
    return _Outcome(
      results=RunCountsModel(
        n=n,
        rows=[
          RunCountRowModel(
            k=r.k,
            variance=r.variance,
            dirichlet=r.dirichlet,
            delta_norm_sq=r.delta_norm_sq,
            theta=r.theta,
            cylinder_theta=r.cylinder_theta,
            var_over_dirichlet=r.var_over_dirichlet,
            var_over_delta=r.var_over_delta,
            site_terms=list(r.site_terms),
            coverage=list(r.coverage),
          )
          for r in rows
        ],
        stated=[base.AssertionModel.from_domain(a) for a in stated],
        trend=[TrendPointModel(n=tn, k=tk, variance=tv) for tn, tk, tv in trend],
      ),
      assertions=tuple(checks),
    )

  _Execute(config, 'run-counts', _Resolve, _Body)


####################################################################################################
# markdown
####################################################################################################


@app.command(
  'markdown',
  help='Emit Markdown docs for the CLI (see README.md section "Creating a New Version").',
  epilog=('Example:\n\n\n\n$ poetry run mrfaudit markdown > mrfaudit.md\n\n<<saves CLI doc>>'),
)
@clibase.CLIErrorGuard
def Markdown(*, ctx: click.Context) -> None:  # documentation is help/epilog/args # noqa: D103
  config: MRFAuditConfig = ctx.obj
  config.console.print(clibase.GenerateTyperHelpMarkdown(app, prog_name='mrfaudit'))
