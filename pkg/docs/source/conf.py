# ruff: noqa
# Sphinx configuration for the sailcone API documentation.
#
# Built-in options: https://www.sphinx-doc.org/en/master/usage/configuration.html

import sys
from pathlib import Path

project = "sailcone"
copyright = "2026, sailcone developers"
author = "sailcone developers"
release = "0.1.0"

PROJECT_ROOT_DIR = Path(__file__).parents[2].resolve()
sys.path.insert(0, str(PROJECT_ROOT_DIR / "src"))


extensions = [
    "sphinx.ext.autodoc",
    "sphinx.ext.doctest",
    "sphinx.ext.mathjax",
    "sphinx.ext.napoleon",
]

autodoc_member_order = "bysource"
templates_path = ["_templates"]
exclude_patterns = []

html_theme = "classic"
html_static_path = ["_static"]
