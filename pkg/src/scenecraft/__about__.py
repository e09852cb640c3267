# -*- coding: utf-8 -*-
"""Metadata of package."""
__author__ = "Scenecraft contributors"
__copyright__ = "Copyright (C) 2026 Scenecraft contributors"
__license__ = "LGPLv2"
__version__ = "0.3.0"
