#
# Configuration file for the Sphinx documentation builder.
#
# This file does only contain a selection of the most common options. For a
# full list see the documentation:
# https://www.sphinx-doc.org/en/master/config

# -- Path setup --------------------------------------------------------------

import os
import sys
from typing import Dict

sys.path.insert(0, os.path.abspath("../../.."))

import macsolve  # noqa: E402

# -- Project information -----------------------------------------------------

project = "macsolve"
copyright = "2024, macsolve contributors"
author = "macsolve contributors"

# The short X.Y version
version = macsolve.__version__
# The full version, including alpha/beta/rc tags
release = macsolve.__version__


# -- General configuration ---------------------------------------------------

# Add any Sphinx extension module names here, as strings.
extensions = ["myst_parser", "sphinx.ext.autodoc", "sphinx.ext.napoleon", "sphinx.ext.mathjax"]

# Add any paths that contain templates here, relative to this directory.
templates_path = ["./_templates"]

# The suffix(es) of source filenames.
source_suffix = [".rst", ".md"]

# The master toctree document.
master_doc = "index"

language: str = "en"

# List of patterns, relative to source directory, that match files and
# directories to ignore when looking for source files.
exclude_patterns = ["_build", "Thumbs.db", ".DS_Store"]

# Keep the documented signatures in source order
autodoc_member_order = "bysource"


# -- Options for HTML output -------------------------------------------------

html_theme = "sphinx_rtd_theme"

html_copy_source = False

# Output file base name for HTML help builder.
htmlhelp_basename = "macsolvedoc"


# -- Options for LaTeX output ------------------------------------------------

latex_elements: Dict[str, str] = {}

latex_documents = [
    (master_doc, "macsolve.tex", "macsolve API documentation", author, "manual"),
]


# -- Options for manual page output ------------------------------------------

man_pages = [(master_doc, "macsolve", "macsolve API documentation", [author], 1)]
