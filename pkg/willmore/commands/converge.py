"""`converge`: accuracy table of the manufactured solution."""

import logging
import os
from typing import List, Optional, Sequence, Tuple

from .. import config
from ..problems.studies import DEGREES, EPS_COLUMNS, MESHES, ConvergenceRow, convergence_study
from ..utils.output import OutputWriter

# Per eps column: L2 error, its order, Linf error, its order
COLUMN_FIELDS = ("l2", "l2_order", "linf", "linf_order")
CELL_WIDTH = 33


def _fmt_order(order: Optional[float]) -> str:
    return "-" if order is None else f"{order:.2f}"


def pivot(rows: Sequence[ConvergenceRow]) -> Tuple[List[str], List[tuple]]:
    """
    Wide layout of long-form rows: one line per (degree, n), one column block per eps label

    Returns:
        tuple: (eps labels in first-seen order, [(degree, n, [row or None per label])])
    """
    labels = list(dict.fromkeys(r.eps_label for r in rows))
    keys = list(dict.fromkeys((r.degree, r.n) for r in rows))
    lookup = {(r.degree, r.n, r.eps_label): r for r in rows}
    return labels, [(degree, n, [lookup.get((degree, n, label)) for label in labels]) for degree, n in keys]


def table_header(labels: Sequence[str]) -> List[str]:
    return ["degree", "n"] + [f"{label}_{name}" for label in labels for name in COLUMN_FIELDS]


def table_rows(rows: Sequence[ConvergenceRow]) -> List[list]:
    labels, table = pivot(rows)
    out = []
    for degree, n, cells in table:
        line = [degree, n]
        for r in cells:
            line.extend([None] * 4 if r is None else [r.l2, r.l2_order, r.linf, r.linf_order])
        out.append(line)
    return out


def _fmt_cell(r: Optional[ConvergenceRow]) -> str:
    if r is None:
        return " " * CELL_WIDTH
    return f"{r.l2:>10.2e} {_fmt_order(r.l2_order):>5} {r.linf:>10.2e} {_fmt_order(r.linf_order):>5}"


def format_table(rows: Sequence[ConvergenceRow]) -> str:
    """Aligned text layout: degrees and meshes down the rows, (L2, order, Linf, order) per eps column"""
    labels, table = pivot(rows)
    lines = [
        f"{'':>3} {'':>5}" + "".join(f" | {label:^{CELL_WIDTH}}" for label in labels),
        f"{'P':>3} {'n':>5}" + "".join(f" | {'L2 error':>10} {'order':>5} {'Linf error':>10} {'order':>5}"
                                      for _ in labels),
    ]
    for degree, n, cells in table:
        lines.append(f"{degree:>3} {n:>5}" + "".join(f" | {_fmt_cell(r)}" for r in cells))
    return "\n".join(lines) + "\n"


def cmd_converge(out_dir: Optional[str] = None, degrees: Sequence[int] = DEGREES,
                 columns: Sequence[Tuple[str, float]] = EPS_COLUMNS,
                 meshes: Sequence[int] = MESHES) -> List[ConvergenceRow]:
    """
    Run every (degree, eps) column under mesh refinement and write the table

    Returns:
        list: every ConvergenceRow, grouped by degree then eps column
    """
    writer = OutputWriter(out_dir or os.path.join(config.OUTPUT_DIR, "converge"))
    rows = []
    for degree in degrees:
        for scaling, coefficient in columns:
            rows.extend(convergence_study(degree, scaling, coefficient, meshes))

    labels, _ = pivot(rows)
    writer.write_rows("convergence.csv", table_header(labels), table_rows(rows))
    table = format_table(rows)
    writer.write_text("convergence.txt", table)
    print(table, end="")
    logging.info(f"Wrote convergence table to {writer.out_dir}")
    return rows


def register(subparsers):
    parser = subparsers.add_parser("converge", help="Accuracy table of the 1D manufactured solution")
    parser.add_argument("--out", default=None, help="Output directory")
    parser.set_defaults(handler=lambda args: cmd_converge(args.out))
