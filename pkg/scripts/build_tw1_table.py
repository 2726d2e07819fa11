"""Regenerate the packaged TW1 table asset (lclab/data/tw1_table.txt)."""

import logging
from pathlib import Path

import typer
from rich.logging import RichHandler

from lclab.rmt.tw_dist import DEFAULT_NODES, TABLE_FILENAME, TABLE_STEP, build_tw1_table, write_tw1_table

DEFAULT_TARGET = Path(__file__).resolve().parent.parent / "lclab" / "data" / TABLE_FILENAME

logger = logging.getLogger("build_tw1_table")


def main(
    out: Path = typer.Option(DEFAULT_TARGET, help="Destination file."),
    nodes: int = typer.Option(DEFAULT_NODES, help="Gauss-Legendre nodes per determinant."),
    step: float = typer.Option(TABLE_STEP, help="Grid spacing in s."),
) -> None:
    logging.basicConfig(level=logging.INFO, handlers=[RichHandler(show_path=False)], format="%(message)s")
    table = build_tw1_table(nodes=nodes, step=step)
    path = write_tw1_table(table, out)
    logger.info("Wrote %s: mean=%.6f variance=%.6f", path, table.mean(), table.variance())


if __name__ == "__main__":
    typer.run(main)
