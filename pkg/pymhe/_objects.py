"""
pymhe._objects
==============
"""

from object_colors import Color as _Color
from rich.console import Console as _Console

NAME = __name__.split(".", maxsplit=1)[0]


colors = _Color()

colors.populate_colors()

#: Console for tabular reports.
console = _Console(soft_wrap=False)
