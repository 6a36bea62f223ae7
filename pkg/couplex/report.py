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
Writers for check results. A Reporter holds a set of ReportFormat
classes, picked by short name, and runs each of them over one
finished check tree:

 * ``json``: results.json, the simplified check tree with sorted keys
 * ``csv``: one file per table of the tree, named after the table
 * ``text``: the indented pass/fail tree, as results.text
 * ``html``: the Cheetah rendering of the tree, as results.html

:author: The couplex authors
:license: LGPL
"""


from __future__ import print_function


import csv
import io
import sys

from abc import ABCMeta, abstractmethod
from argparse import Action
from functools import partial
from json import JSONEncoder, dump
from os import makedirs
from os.path import exists, join

import numpy as np

from six import add_metaclass, string_types

from .check import plain


_BUFFERING = 2 ** 16


__all__ = (
    "Reporter", "ReportFormat", "REPORT_FORMATS",
    "quick_report", "add_general_report_optgroup", "makedirsp",
    "JSONReportFormat", "JSONCheckEncoder", "add_json_report_optgroup",
    "CSVReportFormat", "TextReportFormat",
    "CheetahReportFormat", "add_html_report_optgroup", )


def makedirsp(dirname):
    """
    create dirname and its parents, if missing
    """

    if dirname and not exists(dirname):
        makedirs(dirname)


def _open_text(filename):
    # newline="" so the csv writer's CRLF is written untouched
    return io.open(filename, "w", _BUFFERING, encoding="utf-8",
                   newline="")


class Reporter(object):
    """
    Runs a list of report formats over one check, writing into
    basedir. entry names the per-run output files (results.json,
    results.text, ...); formats that write several files, such as
    CSV, name them after their contents instead.
    """


    def __init__(self, basedir, entry, options):
        self.basedir = basedir
        self.entry = entry
        self.options = options
        self.formats = list()


    def add_formats_by_name(self, names):
        """
        add formats by their short names, as given to --report. Raises
        ValueError for a name with no format
        """

        for name in names:
            fmt = REPORT_FORMATS.get(name)
            if fmt is None:
                known = ", ".join(sorted(REPORT_FORMATS))
                raise ValueError("unknown report format %r, expected one"
                                 " of %s" % (name, known))
            self.add_report_format(fmt)


    def add_report_format(self, report_format):
        """
        add a ReportFormat subclass; each class is run at most once
        """

        if report_format not in self.formats:
            self.formats.append(report_format)


    def run(self, check):
        """
        write check with every added format, in the order they were
        added. Returns the written file names
        """

        makedirsp(self.basedir)

        written = list()
        for fmt_class in self.formats:
            found = fmt_class(self.basedir, self.options).run(check,
                                                               self.entry)
            if isinstance(found, string_types):
                written.append(found)
            elif found:
                written.extend(found)
        return written


@add_metaclass(ABCMeta)
class ReportFormat(object):
    """
    One way of writing a check. Subclasses set extension and
    implement run_impl against an open text stream
    """

    extension = ".report"


    def __init__(self, basedir, options):
        self.basedir = basedir or "."
        self.options = options


    @abstractmethod
    def run_impl(self, check, entry, out):
        """
        write check to the text stream out
        """

        pass


    def run(self, check, entry, out=None):
        """
        write check to out if given, else to basedir/entry+extension
        if entry is given, else to stdout. Returns the file name
        written, if any
        """

        if out is None and entry:
            fn = join(self.basedir, entry + self.extension)
            with _open_text(fn) as stream:
                self.run_impl(check, entry, stream)
            return fn

        self.run_impl(check, entry, out or sys.stdout)
        return None


class _opt_cb_report(Action):
    """
    --report accepts comma-separated names and may be repeated
    """

    def __call__(self, parser, options, values, option_string=None):

        found = getattr(options, self.dest, None)
        if found is None:
            found = list()
            setattr(options, self.dest, found)

        found.extend(v for v in values.split(",") if v)


def add_general_report_optgroup(parser):
    """
    Reporting Options
    """

    g = parser.add_argument_group("Reporting Options")

    g.add_argument("--out", action="store", dest="output_dir",
                   default=None,
                   help="directory for result files, overriding the"
                   " output_dir of the config")

    g.add_argument("--report", action=_opt_cb_report, dest="reports",
                   default=None,
                   help="comma-separated list of report formats"
                   " (json, csv, text, html); json and csv are always"
                   " written")


def _prepare(o, options):
    """
    reduce o to dicts, lists, strings and JSON-safe numbers
    """

    if hasattr(o, "simplify"):
        return _prepare(o.simplify(options), options)

    if isinstance(o, dict):
        return dict((str(k), _prepare(v, options)) for k, v in o.items())

    if isinstance(o, string_types) or o is None or isinstance(o, bool):
        return o

    if isinstance(o, np.bool_):
        return bool(o)

    if isinstance(o, (np.integer, int)):
        return int(o)

    if isinstance(o, (float, np.floating)):
        return plain(o)

    if isinstance(o, np.ndarray):
        return _prepare(o.tolist(), options)

    try:
        i = iter(o)
    except TypeError:
        return o
    else:
        return [_prepare(v, options) for v in i]


class JSONCheckEncoder(JSONEncoder):
    """
    Encodes checks (anything with a simplify method), numpy scalars
    and arrays, and other iterables as lists. Infinite and NaN floats
    become strings, so the output is strict JSON.
    """


    def __init__(self, options, *a, **k):
        JSONEncoder.__init__(self, *a, **k)
        self.options = options


    def iterencode(self, o, _one_shot=False):
        return JSONEncoder.iterencode(self, _prepare(o, self.options),
                                      _one_shot)


    def default(self, o):
        # pylint: disable=E0202
        return _prepare(o, self.options)


class JSONReportFormat(ReportFormat):
    """
    The simplified check tree under a single "report" key, written as
    results.json whatever the entry name
    """

    extension = ".json"


    def run(self, check, entry, out=None):
        return ReportFormat.run(self, check, entry and "results", out)


    def run_impl(self, check, entry, out):
        indent = getattr(self.options, "json_indent", 2)
        encoder = partial(JSONCheckEncoder, self.options)

        dump({"report": check}, out, sort_keys=True, indent=indent,
             cls=encoder, separators=(",", ": "))
        out.write(u"\n")


def add_json_report_optgroup(parser):
    """
    JSON Report Options
    """

    g = parser.add_argument_group("JSON Report Options")

    g.add_argument("--json-indent", action="store", default=2, type=int,
                   help="indentation of results.json (default 2)")


def _cell(value):
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, np.integer):
        return str(int(value))
    return value


class CSVReportFormat(ReportFormat):
    """
    Every table of the check tree as its own RFC 4180 file, named
    after the table. Floats are written with repr, so they read back
    exactly
    """

    extension = ".csv"


    def run(self, check, entry, out=None):
        tables = check.tables()

        if out is not None or not entry:
            self.run_impl(check, entry, out or sys.stdout)
            return None

        written = list()
        for name in sorted(tables):
            fn = join(self.basedir, name + self.extension)
            with _open_text(fn) as stream:
                self.write_table(tables[name], stream)
            written.append(fn)
        return written


    def write_table(self, table, out):
        columns, rows = table
        writer = csv.writer(out, lineterminator="\r\n")
        writer.writerow(columns)
        writer.writerows([_cell(v) for v in row] for row in rows)


    def run_impl(self, check, entry, out):
        for _name, table in sorted(check.tables().items()):
            self.write_table(table, out)


def _flatten(check, depth=0):
    """
    (depth, description, "pass" or "fail") for check and every check
    below it, depth first
    """

    yield depth, check.get_description(), \
        "pass" if check.is_pass() else "fail"
    for sub in check.collect():
        for found in _flatten(sub, depth + 1):
            yield found


class TextReportFormat(ReportFormat):
    """
    The check tree as indented descriptions, two spaces per level
    """

    extension = ".text"


    def run_impl(self, check, entry, out):
        for depth, description, _state in _flatten(check):
            # keep the stream ASCII whatever the console encoding
            safe = description.encode("ascii", "backslashreplace")
            out.write(u"  " * depth + safe.decode("ascii") + u"\n")


class CheetahReportFormat(ReportFormat):
    """
    HTML output for a check tree, rendered through the report.tmpl
    Cheetah template
    """

    extension = ".html"


    def run_impl(self, check, entry, out):
        """
        renders the report template for check. The template is given

         * summary - the check being reported
         * entry - the name of this report
         * lines - (depth, description, pass/fail) for every check
         * tables - (name, columns, rows) for every table
         * constants - (name, value) of the constants snapshot
         * note - the header note of the summary, if any
         * stylesheets - list of .css links
         * escape - an XML entity escaping function
        """

        from Cheetah.Template import Template
        from .cheetah import template_path, xml_entity_escape

        constants = getattr(check, "constants", None)
        if constants is not None and hasattr(constants, "simplify"):
            constants = constants.simplify(self.options)
        constants = sorted((constants or {}).items())

        tables = [(name, cols, rows) for name, (cols, rows)
                  in sorted(check.tables().items())]

        values = {
            "summary": check,
            "entry": entry or check.label,
            "lines": list(_flatten(check)),
            "tables": tables,
            "constants": constants,
            "note": getattr(check, "note", None),
            "stylesheets": getattr(self.options, "html_stylesheets", ()),
            "escape": xml_entity_escape,
        }

        template = Template(file=template_path(), searchList=[values])
        out.write(str(template))


def add_html_report_optgroup(parser):
    """
    HTML Report Options
    """

    g = parser.add_argument_group("HTML Report Options")

    g.add_argument("--html-stylesheet", action="append",
                   dest="html_stylesheets", default=list(),
                   help="link a stylesheet from results.html; may be"
                   " repeated")


REPORT_FORMATS = {
    "json": JSONReportFormat,
    "csv": CSVReportFormat,
    "text": TextReportFormat,
    "txt": TextReportFormat,
    "html": CheetahReportFormat,
    "htm": CheetahReportFormat,
}


def quick_report(report_type, check, options, out=None):
    """
    write check via report_type to out, or to sys.stdout
    """

    report_type(None, options).run(check, None, out or sys.stdout)


#
# The end.
