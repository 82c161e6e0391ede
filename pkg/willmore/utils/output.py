import csv
import logging
import os
from typing import Iterable, List, Sequence

import numpy as np

from ..dgcore import ALLOWED_DEGREES, DegreeMap, DgScalarField, Discretization
from ..exceptions import ConfigError
from . import validators

FIELD_HEADER = ["cell", "degree", "mode", "coefficient"]
CONTOUR_HEADER = ["polyline", "x", "y"]


class OutputWriter:
    """
    Writes the CSV and report files of one run into a directory

    Every file written is recorded in `manifest`, relative to the directory.
    """

    def __init__(self, out_dir: str):
        self.out_dir = out_dir
        self.manifest: List[str] = []
        try:
            # Create the directory if it doesn't exist
            os.makedirs(out_dir, exist_ok=True)
        except OSError as e:
            raise ConfigError(f"Cannot create output directory {out_dir}: {str(e)}")

    def path(self, name: str) -> str:
        return os.path.join(self.out_dir, name)

    def _record(self, name: str):
        if name not in self.manifest:
            self.manifest.append(name)

    def write_rows(self, name: str, header: Sequence[str], rows: Iterable[Sequence]) -> str:
        path = self.path(name)
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(header)
            writer.writerows(rows)
        self._record(name)
        logging.debug(f"Wrote {path}")
        return path

    def write_contours(self, name: str, polylines: Sequence[np.ndarray]) -> str:
        rows = [(i, float(x), float(y)) for i, line in enumerate(polylines) for x, y in line]
        return self.write_rows(name, CONTOUR_HEADER, rows)

    def write_field(self, name: str, u: DgScalarField) -> str:
        """Dump active coefficients as (cell, degree, mode, coefficient) rows"""
        degrees = u.degree_map.degrees
        rows = []
        for cell in range(u.space.ncells):
            for mode, value in enumerate(u.block(cell)):
                rows.append((cell, int(degrees[cell]), mode, float(value)))
        return self.write_rows(name, FIELD_HEADER, rows)

    def write_text(self, name: str, text: str) -> str:
        path = self.path(name)
        with open(path, "w") as f:
            f.write(text)
        self._record(name)
        return path

    def write_report(self, report, name: str = "report.json") -> str:
        """Report goes last and lists every file, itself included"""
        self._record(name)
        report.manifest = list(self.manifest)
        return self.write_text(name, report.model_dump_json(indent=2))


def read_field(path: str, disc: Discretization) -> DgScalarField:
    """
    Load a field dump written by OutputWriter.write_field

    Args:
        path: CSV file
        disc: Discretization of the mesh the dump was written on

    Returns:
        DgScalarField: field on the dumped degree map
    """
    try:
        with open(path, newline="") as f:
            reader = csv.DictReader(f)
            rows = [(int(r["cell"]), int(r["degree"]), int(r["mode"]), float(r["coefficient"]))
                    for r in reader]
    except (OSError, KeyError, ValueError) as e:
        logging.error(f"Error reading field dump {path}: {str(e)}")
        raise ConfigError(f"Unreadable field dump {path}: {str(e)}")

    ncells = disc.mesh.ncells
    degrees = np.zeros(ncells, dtype=int)
    coeffs = np.zeros((ncells, disc.nm))
    seen = np.zeros(ncells, dtype=bool)
    for cell, degree, mode, value in rows:
        if not (0 <= cell < ncells and 0 <= mode < disc.nm):
            raise ConfigError(f"Field dump {path} does not fit a mesh of {ncells} cells")
        degrees[cell] = degree
        coeffs[cell, mode] = value
        seen[cell] = True

    missing = np.flatnonzero(~seen)
    if missing.size:
        raise ConfigError(f"Field dump {path} has no rows for {missing.size} of {ncells} cells")
    is_valid, error_msg = validators.validate_degrees(degrees, ALLOWED_DEGREES)
    if not is_valid:
        raise ConfigError(f"Field dump {path}: {error_msg}")
    space = disc.space(DegreeMap(degrees))
    return DgScalarField(space, coeffs)
