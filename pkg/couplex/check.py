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
Classes for representing the outcome of a numerical check.

A Check holds what was measured, what it was compared against, and
whether it passed. SuperCheck groups checks and passes only when all
of its children pass. Checks know how to simplify themselves for the
JSON report and how to flatten themselves into CSV tables.

:author: The couplex authors
:license: LGPL
"""


from math import isinf, isnan


__all__ = (
    "Check", "BoundCheck", "SuperCheck",
    "MomentReport", "InequalityReport", "RunSummary", "TableCheck",
    "plain", )


def plain(value):
    """
    a JSON-safe version of a float. Infinities and NaN become strings
    """

    try:
        value = float(value)
    except (TypeError, ValueError):
        return value
    if isinf(value) or isnan(value):
        return repr(value)
    return value


class Check(object):
    """
    Base class for representing the outcome of a single check
    """

    label = "Check"


    def __init__(self):
        self.description = None
        self.passed = None
        self.entry = None


    def check(self):
        """
        override to compute the pass state, the default only records
        that the check ran
        """

        if self.passed is None:
            self.passed = True


    def is_pass(self):
        if self.passed is None:
            self.check()
        return bool(self.passed)


    def get_description(self):
        return self.description or \
            (self.label + (" passed" if self.is_pass() else " FAILED"))


    def collect(self):
        return tuple()


    def tables(self):
        """
        a dict of CSV table name to (columns, rows) for this check
        """

        return dict()


    def simplify(self, options=None):
        """
        returns a dict describing a simple snapshot of this check, and
        its children if any.
        """

        simple = {
            "class": type(self).__name__,
            "passed": self.is_pass(),
            "description": self.get_description(),
            "label": self.label,
        }

        if self.entry:
            simple["entry"] = self.entry

        return simple


class BoundCheck(Check):
    """
    An empirical value compared against an upper bound, with slack
    times its standard error. With relative set, the allowance is
    bound * (1 + slack * stderr / value) instead.
    """

    label = "Bound"


    def __init__(self, label, value, bound, stderr=0.0, slack=3.0,
                 relative=False):
        Check.__init__(self)
        self.label = label
        self.value = float(value)
        self.bound = float(bound)
        self.stderr = float(stderr)
        self.slack = float(slack)
        self.relative = relative


    def allowance(self):
        if self.relative:
            if self.value == 0:
                return self.bound
            rel = self.stderr / abs(self.value)
            return self.bound * (1.0 + self.slack * rel)
        return self.bound + self.slack * self.stderr


    def fn_violates(self, value, allowed):
        """
        override to change the comparison, defaults to value > allowed
        """

        return value > allowed


    def check(self):
        self.passed = not self.fn_violates(self.value, self.allowance())


    def margin(self):
        return self.bound - self.value


    def get_description(self):
        if self.description:
            return self.description

        state = "pass" if self.is_pass() else "FAIL"
        return "%s: %.6g (stderr %.2g) vs bound %.6g [%s]" % \
            (self.label, self.value, self.stderr, self.bound, state)


    def simplify(self, options=None):
        simple = Check.simplify(self, options)
        simple["value"] = plain(self.value)
        simple["stderr"] = plain(self.stderr)
        simple["bound"] = plain(self.bound)
        simple["slack"] = self.slack
        simple["relative"] = self.relative
        return simple


class SuperCheck(Check):
    """
    A check made of child checks, which passes only when all of its
    children pass
    """

    label = "Checks"


    def __init__(self, label=None, checks=()):
        Check.__init__(self)
        if label:
            self.label = label
        self.checks = list(checks)


    def add(self, check):
        self.checks.append(check)
        self.passed = None


    def check(self):
        for sub in self.checks:
            sub.check()
        self.passed = all(sub.is_pass() for sub in self.checks)


    def collect(self):
        return tuple(self.checks)


    def get_description(self):
        if self.description:
            return self.description

        failed = sum(1 for sub in self.checks if not sub.is_pass())
        if failed:
            return "%s: %i of %i checks FAILED" % \
                (self.label, failed, len(self.checks))
        return "%s: %i checks passed" % (self.label, len(self.checks))


    def tables(self):
        found = dict()
        for sub in self.checks:
            found.update(sub.tables())
        return found


    def simplify(self, options=None):
        simple = Check.simplify(self, options)
        simple["children"] = [sub.simplify(options) for sub in self.checks]
        return simple


class MomentReport(SuperCheck):
    """
    Empirical moments against their bounds. Per-level details (for
    checks swept over a separation or a refinement level) are kept as
    rows and written as a CSV table named after the entry.
    """

    label = "Moments"
    columns = ()


    def __init__(self, label, checks=(), columns=(), rows=(), extra=None):
        SuperCheck.__init__(self, label, checks)
        self.columns = tuple(columns)
        self.rows = [tuple(row) for row in rows]
        self.extra = dict(extra or {})


    def tables(self):
        found = SuperCheck.tables(self)
        if self.rows and self.entry:
            found[self.entry] = (self.columns, self.rows)
        return found


    def simplify(self, options=None):
        simple = SuperCheck.simplify(self, options)
        if self.extra:
            simple["extra"] = dict((k, plain(v)) for k, v in
                                   sorted(self.extra.items()))
        if self.rows:
            simple["columns"] = self.columns
            simple["rows"] = [[plain(v) for v in row] for row in self.rows]
        return simple


class InequalityReport(Check):
    """
    The value of lhs + theta over a (p, t) grid. The defining
    inequality lhs <= -theta holds when the maximum violation stays
    within tolerance.
    """

    label = "Schedule inequality"
    columns = ("p", "t", "lhs", "violation")


    def __init__(self, rows, theta, mode, tolerance=1e-12):
        Check.__init__(self)
        self.rows = [(float(p), float(t), float(v)) for p, t, v in rows]
        self.theta = float(theta)
        self.mode = mode
        self.tolerance = tolerance
        self.entry = "inequality"


    def violations(self):
        return [lhs + self.theta for _p, _t, lhs in self.rows]


    @property
    def max_violation(self):
        return max(self.violations()) if self.rows else float("-inf")


    def check(self):
        self.passed = self.max_violation <= self.tolerance


    def get_description(self):
        state = "pass" if self.is_pass() else "FAIL"
        return "%s (%s): max lhs + theta = %.3g over %i points [%s]" % \
            (self.label, self.mode, self.max_violation, len(self.rows),
             state)


    def tables(self):
        rows = [(p, t, lhs, lhs + self.theta) for p, t, lhs in self.rows]
        return {self.entry: (self.columns, rows)}


    def simplify(self, options=None):
        simple = Check.simplify(self, options)
        simple["mode"] = self.mode
        simple["theta"] = self.theta
        simple["tolerance"] = self.tolerance
        simple["max_violation"] = plain(self.max_violation)
        simple["points"] = len(self.rows)
        return simple


class RunSummary(SuperCheck):
    """
    The top-level result of one experiment run. Carries the constants
    snapshot and any non-check values the experiment produced.
    """

    label = "Run"


    def __init__(self, kind, checks=(), constants=None, config=None,
                 values=None, note=None):
        SuperCheck.__init__(self, kind, checks)
        self.kind = kind
        self.constants = constants
        self.config = config
        self.values = dict(values or {})
        self.note = note
        self.entry = kind


    def simplify(self, options=None):
        simple = SuperCheck.simplify(self, options)
        simple["kind"] = self.kind
        if self.constants is not None:
            simple["constants"] = self.constants
        if self.config is not None:
            simple["constant_config"] = self.config
        if self.values:
            simple["values"] = self.values
        if self.note:
            simple["note"] = self.note
        return simple


class TableCheck(Check):
    """
    A table of values with nothing to compare, written as a CSV file
    named after the entry. Always passes.
    """

    label = "Table"


    def __init__(self, entry, columns, rows, label=None):
        Check.__init__(self)
        self.entry = entry
        self.columns = tuple(columns)
        self.rows = [tuple(row) for row in rows]
        if label:
            self.label = label
        self.passed = True


    def get_description(self):
        return "%s (%i rows)" % (self.label, len(self.rows))


    def tables(self):
        return {self.entry: (self.columns, self.rows)}


#
# The end.
