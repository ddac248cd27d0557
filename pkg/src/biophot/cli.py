"""Command-line interface: run scenario configs, ingest click files, and
render reports with figures.

Exit codes: 2 for unreadable configs or files, 3 for validation problems,
4 for numeric failures (non-convergence, truncation).  Every error prints a
one-line machine-readable JSON record on stderr.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import numpy as np

from . import __version__
from .clicks import ClickFormatError, read_clickstream
from .qcore import TruncationError
from .scenarios import (
    MANIFEST_NAME,
    ConfigError,
    NumericError,
    build_summary,
    execute_config,
    load_config,
)
from .serialize import json_text

EXIT_PARSE = 2
EXIT_VALIDATION = 3
EXIT_NUMERIC = 4


def _fail(code: int, kind: str, reason: str):
    click.echo(json.dumps({"error": kind, "reason": reason}), err=True)
    sys.exit(code)


@click.group()
@click.version_option(__version__)
def main():
    """Coupled-mode coherence, click statistics, and polarization tomography."""


@main.command()
@click.argument("config_path", type=click.Path())
@click.option("--out-root", default=None, help="Directory under which relative outdirs resolve "
                                               "(default: $BIOPHOT_RUNS or ./runs).")
def run(config_path, out_root):
    """Run the scenario described by a JSON config file."""
    try:
        config = load_config(config_path)
    except (OSError, json.JSONDecodeError, UnicodeDecodeError) as err:
        _fail(EXIT_PARSE, "parse", str(err))
    try:
        outdir = execute_config(config, out_root)
    except ConfigError as err:
        _fail(EXIT_VALIDATION, "validation", str(err))
    except ClickFormatError as err:
        _fail(EXIT_VALIDATION, "validation", str(err))
    except FileNotFoundError as err:
        _fail(EXIT_VALIDATION, "validation", str(err))
    except (NumericError, TruncationError, FloatingPointError, np.linalg.LinAlgError) as err:
        _fail(EXIT_NUMERIC, "numeric", str(err))
    click.echo(str(outdir))


@main.command()
@click.argument("click_file", type=click.Path())
@click.option("--summary", is_flag=True, help="Print per-detector counts and rates.")
def ingest(click_file, summary):
    """Validate a clickstream v1 file."""
    try:
        stream = read_clickstream(click_file)
    except OSError as err:
        _fail(EXIT_PARSE, "parse", str(err))
    except ClickFormatError as err:
        _fail(EXIT_VALIDATION, "validation", str(err))
    click.echo(f"ok: {stream.n_events} events over {stream.duration:g} s")
    if summary:
        for det in (int(d) for d in stream.detector_ids()):
            n = int(np.count_nonzero(stream.detectors == det))
            click.echo(f"detector {det}: {n} events, mean rate {n / stream.duration:.6g}/s")
        if stream.labels is not None:
            click.echo(f"outcome labels present on {sum(1 for x in stream.labels if x)} events")


@main.command()
@click.argument("run_dir", type=click.Path())
@click.option("--no-figures", is_flag=True, help="Skip PNG rendering.")
def report(run_dir, no_figures):
    """Summarize a finished run: summary.txt, summary.json, and figures."""
    outdir = Path(run_dir)
    if not (outdir / MANIFEST_NAME).exists():
        _fail(EXIT_VALIDATION, "validation", f"no {MANIFEST_NAME} in {run_dir}")
    try:
        summary, text = build_summary(outdir)
    except (FileNotFoundError, json.JSONDecodeError, KeyError) as err:
        _fail(EXIT_VALIDATION, "validation", f"missing or unreadable artifact: {err}")
    figures: list[str] = []
    if not no_figures and summary.get("status") == "ok":
        from .plots import render_figures  # deferred: matplotlib is heavy

        manifest = json.loads((outdir / MANIFEST_NAME).read_text())
        figures = render_figures(outdir, manifest["scenario"])
    summary["figures"] = figures
    (outdir / "summary.json").write_text(json_text(summary), encoding="utf-8")
    (outdir / "summary.txt").write_text(text, encoding="utf-8")
    click.echo(text, nl=False)
    if figures:
        click.echo("figures: " + ", ".join(figures))


if __name__ == "__main__":
    main()
