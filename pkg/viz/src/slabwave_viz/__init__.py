"""Figure generation for slabwave SLB1/CSV outputs."""

from .render import FigureJob, render

__version__ = "0.1.0"
