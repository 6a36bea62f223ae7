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
unit tests for couplex.gexp

:author: The couplex authors
:license: LGPL v.3
"""


from math import cos, exp, pi
from unittest import TestCase

from couplex.gexp import (
    BudgetExhausted, CFLError, ControlFamily, CrossReport,
    cross_validate, evaluate_g_semigroup, solve_g_heat_fd,
    solve_semilinear_fd)
from couplex.model import (
    DriverSpec, InvalidSpecError, TerminalSpec, builtin_spec)
from couplex.paths import RngStream


def _gheat(amplitude):
    return builtin_spec("gheat-1d").with_terminal(
        TerminalSpec("quadratic", amplitude=amplitude))


class ControlFamilyTests(TestCase):

    def test_choices(self):
        family = ControlFamily(builtin_spec("gheat-1d").gamma, 3, 1.0)
        self.assertEqual(len(family.all_choices()), 8)
        self.assertEqual(family.constant_choices(),
                         [(0, 0, 0), (1, 1, 1)])
        control = family.control((0, 1, 0))
        self.assertEqual(control.simplify(), [1.0, 4.0, 1.0])


    def test_halved(self):
        gamma = builtin_spec("gheat-1d").gamma
        self.assertEqual(ControlFamily(gamma, 4, 1.0).halved().K, 2)
        self.assertEqual(ControlFamily(gamma, 3, 1.0).halved(), None)
        self.assertEqual(ControlFamily(gamma, 1, 1.0).halved(), None)


    def test_limits(self):
        gamma = builtin_spec("gheat-1d").gamma
        self.assertRaises(ValueError, ControlFamily, gamma, 17, 1.0)
        self.assertRaises(ValueError, ControlFamily, gamma, 0, 1.0)
        self.assertRaises(ValueError, ControlFamily, gamma, 2, 1.0,
                          "random")
        ControlFamily(gamma, 17, 1.0, "coordinate-ascent")


class SemigroupTests(TestCase):

    def test_convex_picks_largest(self):
        spec = _gheat(1.0)
        family = ControlFamily(spec.gamma, 2, 1.0)
        est = evaluate_g_semigroup(spec, [0.0], family, 20000, 20,
                                   RngStream(31, "gexp-tests"))
        self.assertEqual(est.choice, (1, 1))
        self.assertEqual(est.evaluations, 4)
        self.assertTrue(est.lower_bound)
        self.assertAlmostEqual(est.value, 4.0, delta=4 * est.stderr)


    def test_concave_picks_smallest(self):
        spec = _gheat(-1.0)
        family = ControlFamily(spec.gamma, 2, 1.0)
        est = evaluate_g_semigroup(spec, [0.0], family, 20000, 20,
                                   RngStream(31, "gexp-tests"))
        self.assertEqual(est.choice, (0, 0))
        self.assertAlmostEqual(est.value, -1.0, delta=4 * est.stderr)


    def test_ascent_matches_exhaustive(self):
        spec = _gheat(1.0)
        rng = RngStream(32, "gexp-tests")
        full = evaluate_g_semigroup(spec, [0.0],
                                    ControlFamily(spec.gamma, 3, 1.0),
                                    5000, 12, rng)
        ascent = evaluate_g_semigroup(
            spec, [0.0], ControlFamily(spec.gamma, 3, 1.0,
                                       "coordinate-ascent"),
            5000, 12, rng)

        self.assertEqual(ascent.choice, full.choice)
        self.assertEqual(ascent.value, full.value)
        self.assertEqual(ascent.sweeps, 3)
        self.assertTrue(ascent.converged)


    def test_budget(self):
        spec = _gheat(1.0)
        family = ControlFamily(spec.gamma, 2, 1.0, "coordinate-ascent",
                               budget=1)
        try:
            evaluate_g_semigroup(spec, [0.0], family, 1000, 10,
                                 RngStream(33))
        except BudgetExhausted as be:
            self.assertEqual(be.budget, 1)
            self.assertEqual(be.best.choice, (0, 0))
            self.assertTrue("budget of 1" in str(be))
        else:
            self.fail("search ignored its budget")


    def test_linear_payoff(self):
        spec = builtin_spec("gheat-1d").with_terminal(
            TerminalSpec("linear", amplitude=1.0, offset=0.5))
        family = ControlFamily(spec.gamma, 2, 1.0)
        est = evaluate_g_semigroup(spec, [0.3], family, 5000, 10,
                                   RngStream(35, "gexp-tests"))
        self.assertAlmostEqual(est.value, 0.8, delta=4 * est.stderr)

        fd = solve_g_heat_fd(spec, -6.0, 6.0, 0.1, 0.3)
        self.assertAlmostEqual(fd.value, 0.8, places=9)


    def test_monotone_and_subadditive(self):
        low = TerminalSpec("clamped-quadratic", amplitude=0.5, cap=1.0)
        high = TerminalSpec("clamped-quadratic", amplitude=1.0, cap=1.0)
        convex = TerminalSpec("quadratic", amplitude=1.0)
        concave = TerminalSpec("quadratic", amplitude=-1.0)
        family = ControlFamily(builtin_spec("gheat-1d").gamma, 2, 1.0)

        def estimate(terminal):
            spec = builtin_spec("gheat-1d").with_terminal(terminal)
            return evaluate_g_semigroup(spec, [0.0], family, 5000, 10,
                                        RngStream(36, "gexp-tests"))

        first, second = estimate(low), estimate(high)
        self.assertTrue(first.value <= second.value + 2 * second.stderr)

        both = estimate(TerminalSpec("sum", terms=(convex, concave)))
        apart = estimate(convex).value + estimate(concave).value
        self.assertTrue(both.value <= apart + 3 * both.stderr)


    def test_finer_family(self):
        spec = _gheat(1.0)
        gamma = spec.gamma
        coarse = evaluate_g_semigroup(spec, [0.0],
                                      ControlFamily(gamma, 1, 1.0), 5000,
                                      12, RngStream(37, "gexp-tests"))
        fine = evaluate_g_semigroup(spec, [0.0],
                                    ControlFamily(gamma, 2, 1.0), 5000,
                                    12, RngStream(37, "gexp-tests"))
        self.assertTrue(fine.value >= coarse.value - 2 * coarse.stderr)


    def test_classical_rejected(self):
        family = ControlFamily(builtin_spec("gheat-1d").gamma, 1, 1.0)
        self.assertRaises(InvalidSpecError, evaluate_g_semigroup,
                          builtin_spec("heat-1d"), [0.0], family, 100, 4,
                          RngStream(1))


class FiniteDifferenceTests(TestCase):

    def test_convex(self):
        fd = solve_g_heat_fd(_gheat(1.0), -10.0, 10.0, 0.1, 0.0)
        self.assertAlmostEqual(fd.value, 4.0, places=3)
        self.assertAlmostEqual(fd.times[-1], 1.0)
        self.assertEqual(fd.u.shape, fd.x.shape)


    def test_concave(self):
        fd = solve_g_heat_fd(_gheat(-1.0), -10.0, 10.0, 0.1, 0.0)
        self.assertAlmostEqual(fd.value, -1.0, places=3)


    def test_classical_heat(self):
        spec = builtin_spec("heat-1d").with_terminal(TerminalSpec("cosine"))
        fd = solve_g_heat_fd(spec, -8.0, 8.0, 0.05, 0.3)
        self.assertAlmostEqual(fd.value, exp(-0.5) * cos(0.3), places=3)


    def test_boundary_held_at_terminal(self):
        spec = builtin_spec("heat-1d").with_terminal(TerminalSpec("cosine"))
        fd = solve_g_heat_fd(spec, -8.0, 8.0, 0.05, 0.3)
        for row in fd.surface:
            self.assertEqual(row[0], fd.phi[0])
            self.assertEqual(row[-1], fd.phi[-1])
        self.assertNotEqual(fd.u[1], fd.phi[1])


    def test_bounded_by_terminal(self):
        fd = solve_g_heat_fd(builtin_spec("gheat-1d"), -6.0, 6.0, 0.05,
                             0.0)
        self.assertTrue(fd.max_abs <= 1.0 + 1e-12)
        self.assertTrue(0.0 < fd.value < 1.0)


    def test_constant_shift(self):
        base = builtin_spec("gheat-1d")
        shifted = base.with_terminal(TerminalSpec(
            "sum", terms=(base.terminal,
                          TerminalSpec("constant", offset=0.5))))
        first = solve_g_heat_fd(base, -6.0, 6.0, 0.05, 0.0)
        second = solve_g_heat_fd(shifted, -6.0, 6.0, 0.05, 0.0)
        self.assertAlmostEqual(second.value, first.value + 0.5, places=10)


    def test_cfl(self):
        self.assertRaises(CFLError, solve_g_heat_fd, _gheat(1.0), -5.0,
                          5.0, 0.1, 0.0, 1.5)
        self.assertRaises(ValueError, solve_g_heat_fd, _gheat(1.0), -5.0,
                          5.0, 0.1, 7.0)


    def test_semilinear(self):
        spec = builtin_spec("heat-1d").with_terminal(
            TerminalSpec("sine")).with_driver(DriverSpec("linear",
                                                         K_g=0.5))
        fd = solve_semilinear_fd(spec, -8.0, 8.0, 0.05, pi / 2)
        # e^(T/2) from the driver cancels e^(-T/2) from the heat flow
        self.assertAlmostEqual(fd.value, 1.0, places=3)

        self.assertRaises(InvalidSpecError, solve_semilinear_fd,
                          builtin_spec("gheat-1d"), -8.0, 8.0, 0.05, 0.0)


class CrossTests(TestCase):

    def test_convex_agrees(self):
        spec = _gheat(1.0)
        family = ControlFamily(spec.gamma, 2, 1.0)
        report = cross_validate(spec, [0.0], family, 20000, 20,
                                {"x_lo": -10.0, "x_hi": 10.0, "dx": 0.1},
                                RngStream(34, "gexp-tests"))

        self.assertTrue(isinstance(report, CrossReport))
        self.assertTrue(report.is_pass(), report.get_description())
        self.assertEqual(report.search_gap, 0.0)
        columns, rows = report.tables()["cross_validation"]
        self.assertEqual(len(rows), 1)
        self.assertEqual(columns[-1], "budget")


#
# The end.
