# -*- coding: utf-8 -*-
"""Start the command line interface with python -m scenecraft."""
__author__ = "Scenecraft contributors"
__copyright__ = "Copyright (C) 2026 Scenecraft contributors"
__license__ = "LGPLv2"

import sys

from .cli import main

if __name__ == "__main__":
    sys.exit(main())
