# -*- coding: utf-8 -*-
"""Tests of evaluation."""
__author__ = "Scenecraft contributors"
__copyright__ = "Copyright (C) 2026 Scenecraft contributors"
__license__ = "LGPLv2"
