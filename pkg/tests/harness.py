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
unit tests for couplex.harness

:author: The couplex authors
:license: LGPL v.3
"""


from math import cos, exp
from unittest import TestCase

import numpy as np

from couplex.bsde import SolverParams
from couplex.gexp import ControlFamily
from couplex.harness import (
    coupling_control, extrapolate_slope, make_pairs, quadrature_lipschitz,
    quadrature_u, verify_corollary, verify_girsanov, verify_main1,
    verify_main2)
from couplex.model import (
    InvalidSpecError, TerminalSpec, builtin_spec, derive_constants)
from couplex.paths import RngStream, build_grid


class PairTests(TestCase):

    def test_axis_pairs(self):
        pairs = make_pairs([1.0], r0=0.5, levels=3)
        self.assertEqual([p.r for p in pairs], [0.5, 0.25, 0.125])
        self.assertEqual(pairs[0].x.tolist(), [1.25])
        self.assertEqual(pairs[0].y.tolist(), [0.75])
        self.assertEqual([p.pair_id for p in pairs], [0, 1, 2])


    def test_two_dimensions(self):
        pairs = make_pairs([0.0, 0.0], levels=2,
                           directions=("axis", "random"),
                           rng=RngStream(41, "pairs"))
        self.assertEqual(len(pairs), 6)
        self.assertEqual(sorted(set(p.direction for p in pairs)),
                         ["axis-1", "axis-2", "random-1"])
        for pair in pairs:
            self.assertAlmostEqual(pair.r, 0.5 * 2.0 ** -pair.level)
            self.assertTrue(np.allclose(pair.x + pair.y, 0.0))


    def test_bad_directions(self):
        self.assertRaises(ValueError, make_pairs, [0.0],
                          directions=("random",))
        self.assertRaises(ValueError, make_pairs, [0.0],
                          directions=("diagonal",))


class SlopeTests(TestCase):

    def test_exact_line(self):
        r = [0.5, 0.25, 0.125]
        q = [2.0 + 3.0 * x for x in r]
        slope, err = extrapolate_slope(r, q, [0.1, 0.1, 0.1])
        self.assertAlmostEqual(slope, 2.0)
        self.assertTrue(err > 0)

        slope, err = extrapolate_slope(r, q, [0.0, 0.0, 0.0])
        self.assertAlmostEqual(slope, 2.0)
        self.assertEqual(err, 0.0)


    def test_scatter_widens(self):
        r = [0.5, 0.25, 0.125, 0.0625]
        q = [1.0, 2.0, 1.0, 2.0]
        _slope, tight = extrapolate_slope(r, q, [1.0] * 4)
        _slope, wide = extrapolate_slope(r, q, [0.01] * 4)
        self.assertTrue(wide / 0.01 > tight / 1.0)


    def test_noisy_intercept(self):
        gen = np.random.default_rng(7)
        r = 0.5 * 2.0 ** -np.arange(5)
        q = 1.7 + 0.8 * r + gen.normal(0.0, 0.01, size=5)
        slope, err = extrapolate_slope(r, q, [0.01] * 5)
        self.assertAlmostEqual(slope, 1.7, delta=0.05)
        self.assertTrue(0.0 < err < 0.05)


    def test_too_few_levels(self):
        self.assertRaises(ValueError, extrapolate_slope, [0.5, 0.25],
                          [1.0, 1.0], [0.1, 0.1])


class QuadratureTests(TestCase):

    def test_heat(self):
        spec = builtin_spec("heat-1d").with_terminal(TerminalSpec("cosine"))
        found = quadrature_u(spec, [0.0, 0.7])
        self.assertAlmostEqual(found[0], exp(-0.5), places=10)
        self.assertAlmostEqual(found[1], exp(-0.5) * cos(0.7), places=10)

        lip = quadrature_lipschitz(spec, -4.0, 4.0)
        self.assertAlmostEqual(lip, exp(-0.5), places=4)


    def test_needs_constant_coefficients(self):
        self.assertRaises(InvalidSpecError, quadrature_u,
                          builtin_spec("sine-1d"), [0.0])
        self.assertRaises(InvalidSpecError, quadrature_u,
                          builtin_spec("semilinear-1d"), [0.0])


class VerifyTests(TestCase):

    def test_corollary_quadrature(self):
        spec = builtin_spec("heat-1d")
        report = verify_corollary(spec, make_pairs([0.0], levels=4), None,
                                  None, oracle="quadrature")

        self.assertTrue(report.is_pass(), report.get_description())
        self.assertEqual(report.entry, "gradient")
        self.assertEqual(report.extra["oracle"], "quadrature")
        # tanh(2x) smoothed by the heat flow
        self.assertTrue(0.5 < report.extra["global_slope"] < 2.0)
        self.assertTrue(report.margin > 0)

        columns, rows = report.tables()["gradient"]
        self.assertEqual(columns[0], "pair_id")
        self.assertEqual(len(rows), 4)


    def test_corollary_mc(self):
        spec = builtin_spec("sine-1d")
        params = SolverParams(n_paths=2000, n_steps=10, n_boot=20)
        report = verify_corollary(spec, make_pairs([0.0], levels=3),
                                  params, RngStream(42, "corollary"))
        self.assertTrue(report.is_pass(), report.get_description())
        self.assertTrue("axis-1" in report.slopes)

        self.assertRaises(InvalidSpecError, verify_corollary,
                          builtin_spec("semilinear-1d"), [], params,
                          RngStream(42))
        self.assertRaises(ValueError, verify_corollary, spec, [], params,
                          RngStream(42), oracle="guess")


    def test_constant_terminal(self):
        spec = builtin_spec("heat-1d").with_terminal(
            TerminalSpec("constant", offset=0.3))
        report = verify_corollary(spec, make_pairs([0.0], levels=3), None,
                                  None, oracle="quadrature")
        self.assertTrue(report.is_pass(), report.get_description())
        self.assertTrue(all(abs(row[2]) < 1e-12 for row in report.rows))


    def test_main1_reduces_to_corollary(self):
        spec = builtin_spec("sine-1d")
        params = SolverParams(n_paths=1000, n_steps=5, n_boot=10)
        pairs = make_pairs([0.0], levels=3)
        first = verify_main1(spec, pairs, params, RngStream(47, "same"))
        second = verify_corollary(spec, pairs, params,
                                  RngStream(47, "same"))
        self.assertEqual([row[1:4] for row in first.rows],
                         [row[1:4] for row in second.rows])


    def test_main1(self):
        spec = builtin_spec("semilinear-1d")
        params = SolverParams(n_paths=2000, n_steps=10, n_boot=20)
        report = verify_main1(spec, make_pairs([0.0], levels=3), params,
                              RngStream(43, "main1"))
        self.assertTrue(report.is_pass(), report.get_description())
        self.assertEqual(report.bound.which, "main1")
        self.assertEqual(len(report.rows), 3)
        self.assertTrue(all(row[3] > 0 for row in report.rows))


    def test_main2_fd(self):
        spec = builtin_spec("gdrift-1d")
        report = verify_main2(spec, make_pairs([0.0], levels=4),
                              fd_params={"x_lo": -8.0, "x_hi": 8.0,
                                         "dx": 0.05})
        self.assertTrue(report.is_pass(), report.get_description())
        self.assertAlmostEqual(report.bound_slope, 2.515533, places=5)
        self.assertEqual(report.extra["method"], "fd")
        self.assertTrue("sharp_bound" in report.simplify())


    def test_main2_mc(self):
        spec = builtin_spec("gsine-1d")
        family = ControlFamily(spec.gamma, 2, spec.T)
        report = verify_main2(spec, make_pairs([0.0], levels=3),
                              RngStream(44, "main2"), family=family,
                              n_paths=2000, n_steps=10)
        self.assertTrue(report.is_pass(), report.get_description())
        self.assertEqual(report.extra["method"], "mc")

        self.assertRaises(ValueError, verify_main2, spec,
                          make_pairs([0.0], levels=3))


class GirsanovTests(TestCase):

    def test_control(self):
        control = coupling_control(builtin_spec("gheat-1d"))
        self.assertEqual(control.simplify(), [4.0])


    def test_classical_reports(self):
        spec = builtin_spec("heat-1d")
        consts = derive_constants(spec)
        reports = verify_girsanov(spec, consts, build_grid(1.0, 20, 0.5,
                                                           1e-3),
                                  RngStream(45, "girsanov"), [0.0],
                                  [0.05, 0.1, 0.2], 1000, 100.0,
                                  rate_levels=2)
        self.assertEqual([r.entry for r in reports],
                         ["weight_mean", "girsanov_moment",
                          "exp_functional", "drift_moment", "u_moment",
                          "identity", "terminal_rate", "supermartingale"])


    def test_g_reports(self):
        spec = builtin_spec("gheat-1d")
        consts = derive_constants(spec)
        reports = verify_girsanov(spec, consts, build_grid(1.0, 20, 0.5,
                                                           1e-3),
                                  RngStream(46, "girsanov"), [0.0],
                                  [0.1, 0.2], 500, 100.0, rate_levels=2)
        entries = [r.entry for r in reports]
        self.assertEqual(entries, ["weight_mean", "girsanov_moment",
                                   "exp_functional", "gap_energy",
                                   "identity", "terminal_rate",
                                   "supermartingale"])

        # the gap contracts deterministically along xi = 1 - t
        energy = reports[3]
        self.assertTrue(energy.is_pass(), energy.get_description())


#
# The end.
