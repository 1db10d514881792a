"""
pymhe.__main__
==============

Module entry point.
"""

import sys as _sys

from pymhe import main

if __name__ == "__main__":
    _sys.exit(main())
