# SPDX-FileCopyrightText: Copyright 2026 BellaKeri@github.com & balparda@github.com
# SPDX-License-Identifier: Apache-2.0
"""cli.py unittest."""

from __future__ import annotations

import math
import pathlib
from typing import Any

import pytest
from click import testing as click_testing
from transcrypto.utils import config as app_config
from transcrypto.utils import logging as tc_logging

from mrfaudit import __version__, cli
from mrfaudit import mrf_base as base

from . import util


@pytest.fixture(autouse=True)
def reset_cli_logging_singletons() -> None:
  """Reset global console/logging state between tests.

  The CLI callback initializes a global Rich console singleton via InitLogging().
  Tests invoke the CLI multiple times across test cases, so we must reset that
  singleton to keep tests isolated.
  """
  tc_logging.ResetConsole()
  app_config.ResetConfig()


def test_ParseInts() -> None:
  """Test."""
  assert cli.ParseInts('2..5') == (2, 3, 4, 5)
  assert cli.ParseInts('2,4, 8') == (2, 4, 8)
  assert cli.ParseInts('') == ()
  assert cli.ParseInts(None) is None
  with pytest.raises(base.InputError):
    cli.ParseInts('2..x')


def test_ParseFloats() -> None:
  """Test."""
  assert cli.ParseFloats('0.5,1,2') == (0.5, 1.0, 2.0)
  assert cli.ParseFloats(None) is None
  with pytest.raises(base.InputError):
    cli.ParseFloats('1,two')


def test_LoadRunFile(tmp_path: pathlib.Path) -> None:
  """Test."""
  assert cli.LoadRunFile(None) == cli.RunFileModel()
  good: pathlib.Path = tmp_path / 'run.toml'
  good.write_text('beta = 0.02\ntime_grid = [0.5, 1.0]\n', encoding='utf-8')
  run_file: cli.RunFileModel = cli.LoadRunFile(good)
  assert run_file.beta == 0.02 and run_file.time_grid == [0.5, 1.0] and run_file.dim is None
  bad: pathlib.Path = tmp_path / 'bad.toml'
  bad.write_text('temperature = 3\n', encoding='utf-8')
  with pytest.raises(base.InputError):
    cli.LoadRunFile(bad)
  with pytest.raises(base.InputError):
    cli.LoadRunFile(tmp_path / 'missing.toml')


def test_version() -> None:
  """Test."""
  result: click_testing.Result = util.RunCLI('--version')
  assert result.exit_code == 0
  assert __version__ in result.stdout


def test_markdown() -> None:
  """Test."""
  result: click_testing.Result = util.RunCLI('markdown')
  assert result.exit_code == 0, result.output
  assert 'gap-audit' in result.output


def test_thresholds() -> None:
  """Test."""
  result: click_testing.Result = util.RunCLI('thresholds', '--dim', '2', '--beta', '0.01')
  assert result.exit_code == 0, result.output
  report: dict[str, Any] = util.Report(result)
  assert report['command'] == 'thresholds' and report['error'] is None
  assert report['schema_version'] == base.SCHEMA_VERSION
  results: dict[str, Any] = report['results']
  assert results['p'] == pytest.approx(2.0 * math.sinh(0.08))
  assert results['beta_threshold_saw'] == pytest.approx(math.log(4.0 / 3.0) / 16.0)
  assert results['dobrushin_threshold'] == pytest.approx(math.atanh(0.25))
  assert results['beta_below_saw_threshold'] is True
  assert results['dobrushin_ok'] is True
  assert results['subcritical'] is True
  checks: dict[str, bool] = util.Checks(report)
  assert checks['saw_ratio_below_threshold']
  assert report['certificate'] is None
  assert report['config']['dim'] == 2 and report['config']['box_sites'] is None


def test_thresholds_antiferromagnet() -> None:
  """Test."""
  result: click_testing.Result = util.RunCLI('thresholds', '--beta', '0.1', '--J', '-1')
  assert result.exit_code == 0, result.output
  results: dict[str, Any] = util.Report(result)['results']
  assert results['dobrushin_ok'] is None
  assert results['J'] == -1
  assert results['saw_series'] == 'Infinity'


def test_thresholds_certify() -> None:
  """Test."""
  result: click_testing.Result = util.RunCLI(
    'thresholds', '--beta', '0', '--certify', '--samples', '200', '--cap', '8'
  )
  assert result.exit_code == 0, result.output
  certificate: dict[str, Any] = util.Report(result)['certificate']
  assert certificate['regime'] == 'theorem1'
  assert certificate['c_p'] == pytest.approx(1.0)
  assert certificate['gap_lower_bound'] == pytest.approx(1.0)


@pytest.mark.parametrize(
  'args',
  [
    ('thresholds', '--beta', '-1'),
    ('thresholds', '--h', '-0.5'),
    ('thresholds', '--dim', '0'),
    ('gap-audit', '--box-sites', '15', '--samples', '10'),
    ('gap-audit', '--box-sites', '4', '--boundary', 'sideways', '--samples', '10'),
    ('perc-moments', '--cap', '16', '--n-max', '20', '--samples', '10'),
    ('perc-moments', '--p', '1.5', '--samples', '10'),
    ('coupling-audit', '--box-sites', '6', '--pivot', '10'),
    ('relax', '--box-sites', '15', '--method', 'exact'),
    ('relax', '--box-sites', '4', '--method', 'magic'),
    ('relax', '--box-sites', '4', '--functional', 'spin(9)'),
    ('poincare-audit', '--box-sites', '21', '--samples', '10'),
    ('weak-poincare', '--p', '0.9', '--box-sites', '4', '--samples', '10'),
    ('run-counts', '--n', '21'),
    ('run-counts', '--k', ''),
  ],
)
def test_invalid_input(args: tuple[str, ...]) -> None:
  """Test."""
  result: click_testing.Result = util.RunCLI(*args)
  assert result.exit_code == 2, result.output
  report: dict[str, Any] = util.Report(result)
  assert report['error']
  assert report['results'] is None


def test_gap_audit_single_site() -> None:
  """Test."""
  result: click_testing.Result = util.RunCLI(
    'gap-audit', '--dim', '1', '--box-sites', '1', '--beta', '0', '--samples', '2000',
    '--trend', '1..3',
  )  # fmt: skip
  assert result.exit_code == 0, result.output
  report: dict[str, Any] = util.Report(result)
  results: dict[str, Any] = report['results']
  assert results['gap'] == pytest.approx(1.0)
  assert results['bound_2delta_over_cp'] == pytest.approx(1.0)
  assert results['delta'] == pytest.approx(0.5)
  assert [(pt['N'], pytest.approx(pt['gap'])) for pt in results['gap_trend']] == [
    (1, 1.0),
    (2, 1.0),
    (3, 1.0),
  ]
  checks: dict[str, bool] = util.Checks(report)
  assert checks == {'detailed_balance': True, 'gap_positive': True, 'gap_vs_certificate': True}
  assert report['certificate']['regime'] == 'theorem1'


def test_gap_audit_low_temperature() -> None:
  """Test."""
  result: click_testing.Result = util.RunCLI(
    'gap-audit', '--box-sites', '9', '--beta', '3', '--samples', '10', '--cap', '16',
  )  # fmt: skip
  assert result.exit_code in {0, 1}, result.output
  report: dict[str, Any] = util.Report(result)
  assert report['error'] is None
  assert 0.0 < report['results']['gap'] < 1e-3


def test_internal_error_is_reported(monkeypatch: pytest.MonkeyPatch) -> None:
  """Test."""

  def _Broken(*_: object) -> float:
    raise base.Error('zero eigenvalue is not simple')

  monkeypatch.setattr(cli.glauber, 'SpectralGapExact', _Broken)
  result: click_testing.Result = util.RunCLI(
    'gap-audit', '--dim', '1', '--box-sites', '1', '--beta', '0', '--samples', '10'
  )
  assert result.exit_code == 1, result.output
  report: dict[str, Any] = util.Report(result)
  assert report['command'] == 'gap-audit'
  assert report['results'] is None
  assert 'zero eigenvalue is not simple' in report['error']
  assert report['config']['box_sites'] == 1


def test_gap_audit_export(tmp_path: pathlib.Path) -> None:
  """Test."""
  target: pathlib.Path = tmp_path / 'probs.bin'
  result: click_testing.Result = util.RunCLI(
    'gap-audit', '--box-sites', '5', '--beta', '0.05', '--samples', '500', '--cap', '16',
    '--export', str(target),
  )  # fmt: skip
  assert result.exit_code == 0, result.output
  assert target.exists()
  assert util.Report(result)['results']['exported'] == str(target)


def test_perc_moments() -> None:
  """Test."""
  result: click_testing.Result = util.RunCLI(
    'perc-moments', '--beta', '0.01', '--samples', '2000', '--cap', '16', '--n-max', '8'
  )
  assert result.exit_code == 0, result.output
  report: dict[str, Any] = util.Report(result)
  results: dict[str, Any] = report['results']
  assert {'K', 'K_prime', 'K_N', 'tails', 'tail_second_moments'} <= results.keys()
  assert len(results['tails']) == 8 and len(results['K_N']) == 8
  assert len(results['tail_second_moments']) == 9
  assert results['tails'][0]['value'] == 1.0
  assert results['samples'] == 2000
  assert all(util.Checks(report).values())


def test_perc_moments_target_p() -> None:
  """Test."""
  result: click_testing.Result = util.RunCLI(
    'perc-moments', '--p', '0.2', '--samples', '500', '--cap', '8'
  )
  assert result.exit_code == 0, result.output
  report: dict[str, Any] = util.Report(result)
  assert report['results']['p'] == pytest.approx(0.2)
  assert report['config']['options']['p'] == 0.2


def test_perc_moments_reproducible() -> None:
  """Test."""
  args: tuple[str, ...] = ('perc-moments', '--samples', '300', '--cap', '8', '--seed', '11')
  first: dict[str, Any] = util.Report(util.RunCLI(*args, '--n-max', '4'))
  tc_logging.ResetConsole()
  app_config.ResetConfig()
  second: dict[str, Any] = util.Report(util.RunCLI('--threads', '3', *args, '--n-max', '4'))
  assert first['results'] == second['results']


def test_coupling_audit_exact() -> None:
  """Test."""
  result: click_testing.Result = util.RunCLI(
    'coupling-audit', '--box-sites', '6', '--beta', '0.05', '--samples', '100', '--show', '2'
  )
  assert result.exit_code == 0, result.output
  report: dict[str, Any] = util.Report(result)
  results: dict[str, Any] = report['results']
  assert results['mode'] == 'exact' and results['samples'] == 100
  assert set(results['fallback_laws']) == {'lowest', 'highest'}
  assert math.fsum(b['frequency'] for b in results['cluster_size_histogram']) == pytest.approx(1.0)
  assert math.fsum(b['exact'] for b in results['cluster_size_histogram']) == pytest.approx(1.0)
  assert results['max_violation_margin'] <= 1e-10
  assert len(results['transcripts']) == 2
  checks: dict[str, bool] = util.Checks(report)
  assert checks['domination(A=[1])']
  assert any(name.startswith('change_of_measure') for name in checks)
  assert all(checks.values())


def test_coupling_audit_two_stage() -> None:
  """Test."""
  result: click_testing.Result = util.RunCLI(
    'coupling-audit', '--mode', 'two_stage', '--box-sites', '6', '--beta', '0.02',
    '--samples', '300', '--pivot', '2',
  )  # fmt: skip
  assert result.exit_code == 0, result.output
  results: dict[str, Any] = util.Report(result)['results']
  assert results['mode'] == 'two_stage'
  assert results['prefix'] == [1]
  assert results['failure_size_mean'] >= 1.0
  assert results['fallback_laws'] is None
  assert all(t['failure'] is not None for t in results['transcripts'])


def test_relax_exact(tmp_path: pathlib.Path) -> None:
  """Test."""
  target: pathlib.Path = tmp_path / 'relax.csv'
  result: click_testing.Result = util.RunCLI(
    'relax', '--dim', '1', '--box-sites', '4', '--beta', '0', '--functional', 'spin(1)',
    '--times', '0.5,1,2', '--csv', str(target),
  )  # fmt: skip
  assert result.exit_code == 0, result.output
  report: dict[str, Any] = util.Report(result)
  results: dict[str, Any] = report['results']
  assert results['method'] == 'exact'
  assert results['gap'] == pytest.approx(1.0)
  assert [pt['var'] for pt in results['curve']] == pytest.approx(
    [math.exp(-1.0), math.exp(-2.0), math.exp(-4.0)]
  )
  assert results['fit']['rate'] == pytest.approx(2.0)
  assert results['monte_carlo'] is None
  assert set(util.Checks(report)) == {
    'relaxation(t=0.5)',
    'sup_contraction(t=0.5)',
    'relaxation(t=1.0)',
    'sup_contraction(t=1.0)',
    'relaxation(t=2.0)',
    'sup_contraction(t=2.0)',
  }
  lines: list[str] = target.read_text(encoding='utf-8').splitlines()
  assert lines[0] == 't,var,se' and len(lines) == 4


@pytest.mark.slow
@pytest.mark.stochastic
def test_relax_both() -> None:
  """Test."""
  result: click_testing.Result = util.RunCLI(
    'relax', '--dim', '1', '--box-sites', '3', '--beta', '0.1', '--functional', 'spin(1)',
    '--times', '0.5', '--method', 'both', '--replicas', '64', '--inner', '8',
  )  # fmt: skip
  assert result.exit_code in {0, 1}, result.output
  report: dict[str, Any] = util.Report(result)
  assert len(report['results']['monte_carlo']) == 1
  assert 'monte_carlo_vs_exact(t=0.5)' in util.Checks(report)


def test_poincare_audit_product() -> None:
  """Test."""
  result: click_testing.Result = util.RunCLI(
    'poincare-audit', '--box-sites', '4', '--beta', '0', '--functions', '3', '--degree', '2',
    '--samples', '200', '--cap', '8', '--functional', 'corr(1,3)',
  )  # fmt: skip
  assert result.exit_code == 0, result.output
  report: dict[str, Any] = util.Report(result)
  results: dict[str, Any] = report['results']
  assert results['gap'] == pytest.approx(1.0)
  assert results['sharp_constant'] == pytest.approx(0.25)
  assert len(results['reports']) == 6
  assert results['uniform_skipped'] == []
  assert report['certificate']['regime'] == 'theorem1'
  checks: dict[str, bool] = util.Checks(report)
  assert checks['martingale_identity(spin(1))']
  assert checks['gap_vs_certificate']


def test_weak_poincare(tmp_path: pathlib.Path) -> None:
  """Test."""
  target: pathlib.Path = tmp_path / 'curve.csv'
  result: click_testing.Result = util.RunCLI(
    'weak-poincare', '--p', '0.3', '--box-sites', '4', '--samples', '2000', '--cap', '32',
    '--n-range', '1..6', '--times', '0.5,1', '--functional', 'spin(1)', '--csv', str(target),
  )  # fmt: skip
  assert result.exit_code == 0, result.output
  report: dict[str, Any] = util.Report(result)
  results: dict[str, Any] = report['results']
  assert results['p'] == pytest.approx(0.3)
  assert [pt['N'] for pt in results['curve']['points']] == [1, 2, 3, 4, 5, 6]
  assert [x['t'] for x in results['xi']] == [0.5, 1.0]
  assert all(0.0 < x['xi'] <= 1.0 for x in results['xi'])
  assert len(results['relaxation']) == 2
  assert report['certificate']['regime'] == 'weak'
  checks: dict[str, bool] = util.Checks(report)
  assert 'weak_relaxation(t=0.5)' in checks
  assert checks['tail_nonincreasing'] and checks['kn_nondecreasing']
  assert checks['alpha_nonincreasing_in_r'] and checks['kappa_positive']
  assert results['curve']['kappa'] > 0.0
  assert [a['name'] for a in results['informational']] == ['fit_r_squared']
  lines: list[str] = target.read_text(encoding='utf-8').splitlines()
  assert lines[0] == 'N,r,alpha' and len(lines) == 7


def test_run_counts() -> None:
  """Test."""
  result: click_testing.Result = util.RunCLI(
    'run-counts', '--n', '6', '--k', '1,2', '--trend-max-log2', '4'
  )
  assert result.exit_code == 0, result.output
  report: dict[str, Any] = util.Report(result)
  results: dict[str, Any] = report['results']
  assert results['n'] == 6
  assert [r['k'] for r in results['rows']] == [1, 2]
  assert results['rows'][0]['theta'] == pytest.approx(0.5)
  assert results['rows'][0]['coverage'] == [1, 2, 2, 2, 2, 1]
  assert [(t['n'], t['k']) for t in results['trend']] == [(4, 2), (8, 3), (16, 3)]
  assert len(results['stated']) == 4
  assert report['config']['dim'] == 1 and report['config']['beta'] == 0.0
  assert len(report['assertions']) == 4 and all(util.Checks(report).values())


def test_config_file(tmp_path: pathlib.Path) -> None:
  """Test."""
  run_file: pathlib.Path = tmp_path / 'mrfaudit.toml'
  run_file.write_text(
    'dim = 1\nbeta = 0.0\nbox_sites = 1\nsamples = 500\ncap = 8\nseed = 4\n', encoding='utf-8'
  )
  result: click_testing.Result = util.RunCLI('--config', str(run_file), 'gap-audit')
  assert result.exit_code == 0, result.output
  report: dict[str, Any] = util.Report(result)
  assert report['config']['dim'] == 1 and report['config']['seed'] == 4
  assert report['config']['samples'] == 500
  assert report['results']['gap'] == pytest.approx(1.0)
  tc_logging.ResetConsole()
  app_config.ResetConfig()
  override: click_testing.Result = util.RunCLI(
    '--config', str(run_file), 'gap-audit', '--box-sites', '2'
  )
  assert override.exit_code == 0, override.output
  assert util.Report(override)['config']['box_sites'] == 2


def test_config_file_invalid(tmp_path: pathlib.Path) -> None:
  """Test."""
  run_file: pathlib.Path = tmp_path / 'mrfaudit.toml'
  run_file.write_text('temperature = 1\n', encoding='utf-8')
  result: click_testing.Result = util.RunCLI('--config', str(run_file), 'thresholds')
  assert result.exit_code != 0
