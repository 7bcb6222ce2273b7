# SPDX-FileCopyrightText: Copyright 2026 BellaKeri@github.com & balparda@github.com
# SPDX-License-Identifier: Apache-2.0
"""Integration tests: build wheel, install into a fresh venv, run installed console scripts.

Why this exists (vs normal unit tests):
- Unit tests (CliRunner) validate CLI wiring while running from the source tree.
- This test validates *packaging*: the wheel builds, installs, and the console script works.

What we verify:
- `mrfaudit --version` prints the expected version.
- A closed-form command and an exact finite-box audit run from the installed script, emit a
  JSON report on stdout and keep ANSI codes out of it.
- Invalid input exits with code 2 and still emits a report.

Run this with:

poetry run pytest -vvv -q tests_integration
"""

from __future__ import annotations

import json
import pathlib
import subprocess  # noqa: S404
from typing import Any

import pytest
from transcrypto.utils import base, config

import mrfaudit

_APP_NAMES: set[str] = {'mrfaudit'}


@pytest.mark.integration
def test_installed_cli_smoke(tmp_path: pathlib.Path) -> None:
  """Build wheel, install into a clean venv, run the installed CLI."""
  repo_root: pathlib.Path = pathlib.Path(__file__).resolve().parents[1]
  expected_version: str = mrfaudit.__version__
  vpy, bin_dir = config.EnsureAndInstallWheel(repo_root, tmp_path, expected_version, _APP_NAMES)
  cli_paths: dict[str, pathlib.Path] = config.EnsureConsoleScriptsPrintExpectedVersion(
    vpy, bin_dir, expected_version, _APP_NAMES
  )
  _thresholds_call(cli_paths)
  _gap_audit_call(cli_paths)
  _invalid_call(cli_paths)


def _Report(stdout: str, /) -> dict[str, Any]:
  report, _ = json.JSONDecoder().raw_decode(stdout[stdout.index('{\n') :])
  return report


def _thresholds_call(cli_paths: dict[str, pathlib.Path], /) -> None:
  r = base.Run([str(cli_paths['mrfaudit']), '--no-color', 'thresholds', '--beta', '0.01'])
  report: dict[str, Any] = _Report(r.stdout)
  assert report['command'] == 'thresholds'
  assert abs(report['results']['p'] - 0.16017) < 1e-4  # noqa: PLR2004
  assert '\x1b[' not in r.stdout and '\x1b[' not in r.stderr  # no ANSI codes


def _gap_audit_call(cli_paths: dict[str, pathlib.Path], /) -> None:
  r = base.Run(
    [
      str(cli_paths['mrfaudit']),
      '--no-color',
      'gap-audit',
      '--dim',
      '1',
      '--box-sites',
      '1',
      '--beta',
      '0',
      '--samples',
      '2000',
    ]
  )
  report: dict[str, Any] = _Report(r.stdout)
  assert abs(report['results']['gap'] - 1.0) < 1e-9  # noqa: PLR2004
  assert all(a['pass'] for a in report['assertions'])
  assert 'gap_vs_certificate' in r.stderr  # summary table goes to stderr


def _invalid_call(cli_paths: dict[str, pathlib.Path], /) -> None:
  proc: subprocess.CompletedProcess[str] = subprocess.run(  # noqa: S603
    [str(cli_paths['mrfaudit']), '--no-color', 'thresholds', '--beta', '-1'],
    capture_output=True,
    text=True,
    check=False,
  )
  assert proc.returncode == 2  # noqa: PLR2004
  assert _Report(proc.stdout)['error']
