# SPDX-FileCopyrightText: Copyright 2026 BellaKeri@github.com & balparda@github.com
# SPDX-License-Identifier: Apache-2.0
"""Test utils."""

from __future__ import annotations

import json
from typing import Any

from click import testing as click_testing
from typer import testing as typer_testing

from mrfaudit import cli


def RunCLI(*args: str) -> click_testing.Result:
  """Invoke the mrfaudit CLI in-process.

  Args:
    *args: command line, without the program name

  Returns:
    click_testing.Result: exit code and captured streams

  """
  return typer_testing.CliRunner().invoke(cli.app, list(args))


def Report(result: click_testing.Result, /) -> dict[str, Any]:
  """Parse the JSON report a command printed on standard output.

  Log lines may precede the report; the report itself is the first indented JSON object.

  Returns:
    dict[str, Any]: the decoded report

  """
  out: str = result.stdout
  report, _ = json.JSONDecoder().raw_decode(out[out.index('{\n') :])
  assert isinstance(report, dict), f'report is not an object: {out!r}'
  return report


def Checks(report: dict[str, Any], /) -> dict[str, bool]:
  """Assertion name -> pass flag of a report."""
  return {a['name']: a['pass'] for a in report['assertions']}
