import json
import logging
from pathlib import Path
from typing import List, Optional

import torch
import typer

from .errors import BSDEError, ConfigError
from .pricing import price_claim, verify_suite
from .utils.load_config import apply_environment, apply_overrides, load_config

logger = logging.getLogger(__name__)

app = typer.Typer(help="Price European claims by solving monotone BSDEs", add_completion=False)

EXIT_VERIFY_FAILED = 1
EXIT_CONFIG = 2
EXIT_SOLVER = 3


def _setup_logging(level: str, verbose: bool, quiet: bool) -> None:
    log_level = level.upper()
    if verbose:
        log_level = "DEBUG"
    if quiet:
        log_level = "ERROR"
    logging.basicConfig(
        level=getattr(logging, log_level, logging.INFO),
        format="%(levelname)s | %(message)s",
    )


def _error_dump(exc: BSDEError) -> str:
    dump = {"error": type(exc).__name__, "message": str(exc)}
    for attr in ("residuals", "residual", "trace"):
        if hasattr(exc, attr):
            dump[attr] = getattr(exc, attr)
    return json.dumps(dump)


@app.command()
def main(
    config: Optional[Path] = typer.Option(None, "--config", "-c", help="JSON config file."),
    solver: Optional[List[str]] = typer.Option(None, "--solver", help="Solver to run; repeat for several."),
    paths: Optional[int] = typer.Option(None, "--paths", help="Number of Monte Carlo paths."),
    steps: Optional[int] = typer.Option(None, "--steps", help="Number of time steps."),
    seed: Optional[int] = typer.Option(None, "--seed", help="RNG seed."),
    out: Optional[Path] = typer.Option(None, "--out", help="Report file; stdout when omitted."),
    fmt: Optional[str] = typer.Option(None, "--format", help="Report format (json, csv)."),
    verify: bool = typer.Option(False, "--verify", help="Run the invariant checks instead of pricing."),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Verbose logging."),
    quiet: bool = typer.Option(False, "--quiet", help="Quiet logging."),
    log_level: str = typer.Option("WARNING", "--log-level", help="Log level (DEBUG, INFO, WARNING, ERROR)."),
) -> None:
    """Price the configured claim with every selected solver and print the report."""
    _setup_logging(log_level, verbose, quiet)
    torch.use_deterministic_algorithms(True)

    try:
        cfg = load_config(None if config is None else str(config))
        cfg = apply_overrides(cfg, solvers=solver, paths=paths, steps=steps, seed=seed,
                              out=None if out is None else str(out), fmt=fmt)
        cfg = apply_environment(cfg)
    except ConfigError as exc:
        typer.echo(f"Invalid configuration: {exc}", err=True)
        raise typer.Exit(code=EXIT_CONFIG)

    try:
        if verify:
            table = verify_suite(cfg)
            text = table.render(cfg.output.format)
            if cfg.output.path is not None:
                with open(cfg.output.path, "w", encoding="utf-8", newline="") as f:
                    f.write(text)
            typer.echo(text, nl=False)
            if not table.passed:
                raise typer.Exit(code=EXIT_VERIFY_FAILED)
            return
        report = price_claim(cfg)
    except ConfigError as exc:
        typer.echo(f"Invalid configuration: {exc}", err=True)
        raise typer.Exit(code=EXIT_CONFIG)
    except BSDEError as exc:
        logger.error("Solver failed: %s", exc)
        typer.echo(_error_dump(exc), err=True)
        raise typer.Exit(code=EXIT_SOLVER)

    text = report.write(cfg.output.path, cfg.output.format)
    if cfg.output.path is None:
        typer.echo(text, nl=False)


if __name__ == "__main__":
    app()
