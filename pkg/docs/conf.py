# -*- coding: utf-8 -*-
#
# couplex documentation build configuration file.
#
# Only the values that differ from the sphinx defaults are set here.


# -- General configuration ------------------------------------------------

extensions = [
    'sphinx.ext.autodoc',
    'sphinx.ext.viewcode',
    'sphinx.ext.intersphinx',
    'sphinx.ext.mathjax',
    'numpydoc',
]

intersphinx_mapping = {
    "python": ('https://docs.python.org/3', None),
    "numpy": ('https://numpy.org/doc/stable', None),
    "scipy": ('https://docs.scipy.org/doc/scipy', None),
}

templates_path = ['_templates']
source_suffix = '.rst'
master_doc = 'index'

project = u'couplex'
copyright = u"2026, The couplex authors"

# keep in step with setup.cfg
version = '0.9'
release = '0.9.0'

language = 'en'
exclude_patterns = ['_build']
pygments_style = 'sphinx'

# Cheetah is only needed to render HTML reports
autodoc_mock_imports = ['Cheetah']
autodoc_member_order = 'bysource'


# -- Options for HTML output ----------------------------------------------

html_theme = 'default'
html_static_path = []
htmlhelp_basename = 'couplexdoc'


# -- Options for other builders -------------------------------------------

_title = u'couplex Documentation'
_authors = u"The couplex authors"

latex_documents = [
    ('index', 'couplex.tex', _title, _authors, 'manual'),
]

man_pages = [
    ('index', 'couplex', _title, [_authors], 1),
]

texinfo_documents = [
    ('index', 'couplex', _title, _authors, 'couplex',
     'Numerical checks of gradient bounds for diffusion semigroups',
     'Miscellaneous'),
]

epub_title = project
epub_author = _authors
epub_publisher = _authors
epub_copyright = copyright
epub_exclude_files = ['search.html']


# -- numpydoc -------------------------------------------------------------

numpydoc_show_class_members = False
numpydoc_class_members_toctree = False


#
# The end.
