# Configuration file for the Sphinx documentation builder.
#
# This file only contains a selection of the most common options. For a full
# list see the documentation:
# https://www.sphinx-doc.org/en/master/usage/configuration.html

# -- Project information -----------------------------------------------------
import os
import sys

sys.path.insert(0, os.path.abspath(".."))
import hill4bp

project = "hill4bp"
copyright = "2026, hill4bp developers"
author = "hill4bp developers"

# The full version, including alpha/beta/rc tags
release = hill4bp.__version__

intersphinx_mapping = {
    "python": ("https://docs.python.org/3/", None),
    "numpy": ("https://numpy.org/doc/stable/", None),
    "scipy": ("https://docs.scipy.org/doc/scipy/reference/", None),
    "pandas": ("https://pandas.pydata.org/docs/", None),
}

# -- General configuration ---------------------------------------------------

extensions = [
    "myst_parser",
    "sphinx.ext.napoleon",
    "sphinx.ext.autosectionlabel",
    "sphinx.ext.intersphinx",
    "sphinx.ext.autodoc",
    "sphinx.ext.autosummary",
    "sphinx.ext.mathjax",
]
extensions.append("autoapi.extension")
autoapi_dirs = ["../hill4bp"]

napoleon_google_docstring = True
myst_enable_extensions = ["dollarmath"]
myst_dmath_double_inline = True

autosectionlabel_prefix_document = True
autosummary_generate = True

exclude_patterns = ["_build", "_templates"]

source_suffix = {
    ".rst": "restructuredtext",
    ".md": "markdown",
}

# -- Options for HTML output -------------------------------------------------

html_theme = "furo"
