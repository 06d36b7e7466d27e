# Configuration file for the Sphinx documentation builder.
#
# For a full list of options see the documentation:
# https://www.sphinx-doc.org/en/master/usage/configuration.html

# -- Project information -----------------------------------------------------

project = 'pyrds'
copyright = '2026, the pyrds developers'
author = 'the pyrds developers'

# The full version, including alpha/beta/rc tags
release = '0.1'


# -- General configuration ---------------------------------------------------

extensions = ['autoapi.extension', 'sphinxcontrib.napoleon',
 'sphinx.ext.autodoc', 'sphinx.ext.inheritance_diagram']

templates_path = ['_templates']

exclude_patterns = ['*.asdf', '*.log', '*.tsv', '*.csv']


# -- Options for HTML output -------------------------------------------------

html_theme_options = {'body_max_width': 'auto'}
master_doc = 'index'

autoapi_dirs = ['../../pyrds']
html_theme = 'sphinx_rtd_theme'

html_static_path = ['_static']
