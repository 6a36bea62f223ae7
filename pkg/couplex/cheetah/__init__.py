# This library is free software; you can redistribute it and/or modify
# it under the terms of the GNU Lesser General Public License as
# published by the Free Software Foundation; either version 3 of the
# License, or (at your option) any later version.
#
# This library is distributed in the hope that it will be useful, but
# WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the GNU
# Lesser General Public License for more details.
#
# You should have received a copy of the GNU Lesser General Public
# License along with this library; if not, see
# <http://www.gnu.org/licenses/>.



"""
Locates the Cheetah templates for the HTML report

:author: The couplex authors
:license: LGPL
"""


from os.path import join


__all__ = ("template_path", "xml_entity_escape", )


def template_path(name="report.tmpl"):
    """
    the filename of a template installed with this package
    """

    return join(__path__[0], name)


def xml_entity_escape(data):
    """
    replace special characters with their XML entity versions
    """

    data = str(data)
    data = data.replace("&", "&amp;")
    data = data.replace(">", "&gt;")
    data = data.replace("<", "&lt;")
    return data


#
# The end.
