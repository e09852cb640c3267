# coding=utf-8
# Configuration file for the Sphinx documentation builder.
#
# For the full list of built-in configuration values, see the documentation:

import os
import sys

sys.path.insert(0, os.path.abspath('../src'))
from scenecraft import __version__

# -- Project information -----------------------------------------------------

project = 'scenecraft'
copyright = '2026, Scenecraft contributors'
author = 'Scenecraft contributors'
version = __version__

# -- General configuration ---------------------------------------------------

extensions = [
    'sphinx.ext.autodoc',
    'sphinx.ext.viewcode'
]

templates_path = ['_templates']
exclude_patterns = ['_build', 'Thumbs.db', '.DS_Store']

# -- Options for HTML output -------------------------------------------------

html_theme = 'alabaster'
html_static_path = ['_static']
