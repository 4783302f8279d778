"""Figure rendering for the pair-walk simulator's CSV outputs."""

from .recipes import KINDS, FigureRecipe, SchemaError
from .render import build_figure, render

__version__ = "0.1.0"
