"""Figure recipes: input tables, schema validation, figure kinds."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import pandas as pd

SCHEMAS = {
    "bands": ("nu", "K", "E_over_J", "label"),
    "projections": ("E_over_J", "P"),
    "variance": ("tau", "sigma2_raw", "sigma2_shifted", "stderr"),
    "occupation": ("tau", "site", "n"),
    "gain": ("U_over_J", "gamma", "g_sigma", "stderr"),
    "autocorr": ("lag", "estimate", "stderr", "analytic"),
}

KINDS = tuple(SCHEMAS)


class SchemaError(ValueError):
    """An input table does not carry the columns its figure kind requires."""


@dataclass(frozen=True)
class FigureRecipe:
    """What to draw: figure kind, input CSV paths, output image path.

    ``series`` selects the variance column for variance figures: ``raw``
    keeps the plain second moment, ``shifted`` starts every curve at zero
    (the convention for comparing launch separations).
    """

    kind: str
    inputs: tuple[Path, ...]
    output: Path
    series: str = "raw"
    title: str | None = None

    def __post_init__(self):
        if self.kind not in SCHEMAS:
            raise ValueError(
                f"unknown figure kind {self.kind!r}; expected one of {KINDS}")
        if not self.inputs:
            raise ValueError("at least one input CSV is required")
        if self.series not in ("raw", "shifted"):
            raise ValueError(f"series must be 'raw' or 'shifted', "
                             f"got {self.series!r}")
        object.__setattr__(self, "inputs",
                           tuple(Path(p) for p in self.inputs))
        object.__setattr__(self, "output", Path(self.output))

    def load(self) -> list[pd.DataFrame]:
        """Read and schema-check every input table."""
        frames = []
        for path in self.inputs:
            frame = pd.read_csv(path)
            missing = [c for c in SCHEMAS[self.kind] if c not in frame.columns]
            if missing:
                raise SchemaError(
                    f"{path}: missing column(s) {', '.join(missing)} "
                    f"required by figure kind '{self.kind}' "
                    f"(found: {', '.join(frame.columns)})")
            frames.append(frame)
        return frames


def curve_label(path: Path) -> str:
    """Legend label from a CSV filename, dropping the schema prefix."""
    stem = Path(path).stem
    for prefix in ("variance_", "occupation_", "bands_", "projections_"):
        if stem.startswith(prefix):
            return stem[len(prefix):]
    return stem
