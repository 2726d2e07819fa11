import logging
from pathlib import Path
from typing import Optional

import typer
from rich import box
from rich.console import Console
from rich.logging import RichHandler
from rich.panel import Panel
from rich.table import Table

from . import __version__
from .config.env import configure_global_env, load_project_env
from .config.settings import EXPERIMENTS, load_config
from .errors import ConfigError, LabError, NumericalError

console = Console()
cli = typer.Typer(help="Monte Carlo laboratory for log-concave random matrices.", no_args_is_help=True)

EXIT_PASS = 0
EXIT_ERROR = 1
EXIT_FAIL = 2


def _setup_logging(verbose: bool) -> None:
    root = logging.getLogger()
    if not any(isinstance(handler, RichHandler) for handler in root.handlers):
        root.addHandler(RichHandler(console=console, show_path=False, rich_tracebacks=verbose))
    root.setLevel(logging.DEBUG if verbose else logging.INFO)


def _format_value(value) -> str:
    if isinstance(value, float):
        return f"{value:.6g}"
    if isinstance(value, list) and len(value) > 6:
        return f"[{len(value)} values]"
    return str(value)


def _render_result(result) -> None:
    aggregates = Table(title=f"{result.experiment} aggregates", box=box.SIMPLE_HEAVY)
    aggregates.add_column("name", style="cyan")
    aggregates.add_column("value", justify="right")
    for name, value in result.aggregates.items():
        aggregates.add_row(name, _format_value(value))
    console.print(aggregates)

    verdicts = Table(title="verdicts", box=box.SIMPLE_HEAVY)
    verdicts.add_column("check", style="cyan")
    verdicts.add_column("status")
    for name, ok in result.verdicts.items():
        verdicts.add_row(name, "[green]pass[/]" if ok else "[red]FAIL[/]")
    console.print(verdicts)
    console.print(f"[dim]{len(result.rows)} rows in {result.wall_clock:.1f}s; files: {', '.join(str(p) for p in result.files)}[/]")


def _run_experiment(
    experiment: str,
    config_path: Path,
    seed: Optional[int],
    trials: Optional[int],
    out: Optional[Path],
    threads: Optional[int],
    no_plots: bool,
    verbose: bool,
) -> None:
    _setup_logging(verbose)
    load_project_env()
    # Deferred so plain `--help` never pays for numpy/scipy/matplotlib imports.
    from .plots import emit_plots
    from .runner import run

    try:
        config = load_config(
            config_path,
            experiment=experiment,
            seed=seed,
            trials=trials,
            output_dir=str(out) if out is not None else None,
            threads=threads,
        )
        with console.status(f"[bold magenta]Running {experiment} ({config.trials} trials)...", spinner="dots"):
            result = run(config)
        if config.plots and not no_plots:
            result.files.extend(emit_plots(result, Path(config.output_dir).expanduser().resolve()))
    except ConfigError as exc:
        console.print(Panel("\n".join(exc.problems), title="Invalid configuration", border_style="red"))
        raise typer.Exit(code=EXIT_ERROR)
    except NumericalError as exc:
        console.print(f"[red]Numerical failure:[/] {exc}")
        if verbose:
            console.print_exception()
        raise typer.Exit(code=EXIT_ERROR)
    except (LabError, OSError) as exc:
        console.print(f"[red]Error:[/] {exc}")
        if verbose:
            console.print_exception()
        raise typer.Exit(code=EXIT_ERROR)

    _render_result(result)
    if not result.passed:
        console.print(f"[red]Failed checks:[/] {', '.join(result.failed_verdicts)}")
        raise typer.Exit(code=EXIT_FAIL)
    console.print("[green]All checks passed.[/]")


def _register(experiment: str) -> None:
    def command(
        config: Path = typer.Option(..., "--config", "-c", exists=True, dir_okay=False, help="Experiment JSON."),
        seed: Optional[int] = typer.Option(None, help="Override the 64-bit master seed."),
        trials: Optional[int] = typer.Option(None, help="Override the trial count."),
        out: Optional[Path] = typer.Option(None, help="Override the output directory."),
        threads: Optional[int] = typer.Option(None, help="Worker count (default: LCLAB_THREADS)."),
        no_plots: bool = typer.Option(False, "--no-plots", help="Skip SVG figures."),
        verbose: bool = typer.Option(False, "--verbose", "-v", help="Debug logging and tracebacks."),
    ) -> None:
        _run_experiment(experiment, config, seed, trials, out, threads, no_plots, verbose)

    command.__doc__ = f"Run the {experiment} experiment."
    cli.command(name=experiment)(command)


for _name in EXPERIMENTS:
    _register(_name)


@cli.command()
def config() -> None:
    """
    Configure global environment variables.
    """
    configure_global_env(force=True)


@cli.command("build-tw-table")
def build_tw_table(
    out: Optional[Path] = typer.Option(None, help="Destination file (default: the user cache)."),
    nodes: int = typer.Option(128, help="Gauss-Legendre nodes per Fredholm determinant."),
    step: float = typer.Option(0.01, help="Grid spacing in s."),
) -> None:
    """
    Tabulate the TW1 distribution function with the Fredholm oracle.
    """
    _setup_logging(False)
    from .rmt.tw_dist import build_tw1_table, table_cache_path, write_tw1_table

    target = out if out is not None else table_cache_path()
    with console.status("[bold magenta]Evaluating Fredholm determinants...", spinner="dots"):
        table = build_tw1_table(nodes=nodes, step=step)
    write_tw1_table(table, target)
    console.print(f"[green]Wrote[/] {target} (mean {table.mean():.6f}, variance {table.variance():.6f})")


@cli.command()
def version() -> None:
    """Print the package version."""
    console.print(__version__)


if __name__ == "__main__":
    cli()
