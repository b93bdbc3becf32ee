"""Bundled iris measurements (50 flowers per species, centimetres)."""

from __future__ import annotations

from importlib import resources

from .io import read_csv

SPECIES = ("setosa", "versicolor", "virginica")
COLUMNS = ("sepal_length", "sepal_width", "petal_length", "petal_width")


def iris_path(species):
    """Filesystem path of the bundled CSV for ``species``."""
    species = str(species).lower()
    if species not in SPECIES:
        raise ValueError(f"unknown species {species!r}; choose from {SPECIES}")
    return resources.files("dirichletkit") / "data" / f"iris_{species}.csv"


def load_iris(species):
    """Return the 50 x 4 measurement array for one species.

    The four lengths are treated as Type II values whose reference component
    is implicit.
    """
    with resources.as_file(iris_path(species)) as path:
        return read_csv(path).values
