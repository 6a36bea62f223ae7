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
unit tests for couplex.coupling

:author: The couplex authors
:license: LGPL v.3
"""


import pickle

from unittest import TestCase

import numpy as np

from couplex.coupling import (
    BundleSet, ControlPath, MEASURE_TILTED, NumericalBlowupError,
    drift_moment_check, exp_functional_check, gap_energy,
    gap_energy_check, girsanov_identity_check, girsanov_moment_check,
    girsanov_weight,
    simulate_coupled, simulate_forward, supermartingale_check,
    terminal_rate_check, trace_rows, u_moment_check, weight_mean_check)
from couplex.model import (
    InvalidSpecError, builtin_spec, coupling_schedule, derive_constants)
from couplex.paths import RngStream, build_grid


H_MIN = 1e-3


def _heat(n_paths=4000, r=0.1, **changes):
    spec = builtin_spec("heat-1d")
    consts = derive_constants(spec)
    grid = build_grid(1.0, 20, 0.5, H_MIN)
    params = dict(spec=spec, schedule=coupling_schedule(consts), grid=grid,
                  stream=RngStream(11, "coupling-tests"), x=[r], y=[0.0],
                  n_paths=n_paths, block_size=1000)
    params.update(changes)
    return consts, BundleSet(**params)


class ControlPathTests(TestCase):

    def test_cells(self):
        control = ControlPath([[[1.0]], [[4.0]]], 1.0)
        self.assertEqual(control.K, 2)
        self.assertEqual(control.cells_for([0.0, 0.49, 0.5, 0.99, 1.0])
                         .tolist(), [0, 0, 1, 1, 1])


    def test_roots(self):
        control = ControlPath.constant([[4.0]], 1.0, 3)
        self.assertEqual(control.K, 3)
        self.assertAlmostEqual(control.roots[0, 0, 0], 2.0)
        self.assertAlmostEqual(control.inv_roots[0, 0, 0], 0.5)
        self.assertAlmostEqual(control.inverses[0, 0, 0], 0.25)
        self.assertEqual(control.simplify(), [4.0, 4.0, 4.0])


    def test_outside_gamma(self):
        gamma = builtin_spec("gheat-1d").gamma
        self.assertRaises(InvalidSpecError, ControlPath.constant,
                          [[5.0]], 1.0, 1, gamma)
        ControlPath.constant([[4.0]], 1.0, 1, gamma)


class ForwardTests(TestCase):

    def test_heat_variance(self):
        spec = builtin_spec("heat-1d")
        grid = build_grid(1.0, 20, 0.5, H_MIN)
        X = simulate_forward(spec, grid, RngStream(3, "fwd"), [0.0],
                             n_paths=20000)
        self.assertEqual(X.shape, (len(grid), 20000, 1))
        self.assertAlmostEqual(X[-1].var(), grid.T_eff, delta=0.05)


    def test_control_required(self):
        grid = build_grid(1.0, 20, 0.5, H_MIN)
        control = ControlPath.constant([[1.0]], 1.0)
        self.assertRaises(InvalidSpecError, simulate_forward,
                          builtin_spec("gheat-1d"), grid, RngStream(1),
                          [0.0])
        self.assertRaises(InvalidSpecError, simulate_forward,
                          builtin_spec("heat-1d"), grid, RngStream(1),
                          [0.0], control)


    def test_g_scaling(self):
        spec = builtin_spec("gheat-1d")
        grid = build_grid(1.0, 20, 0.5, H_MIN)
        control = ControlPath.constant([[4.0]], 1.0)
        X = simulate_forward(spec, grid, RngStream(3, "fwd"), [0.0],
                             control, 20000)
        self.assertAlmostEqual(X[-1].var(), 4.0 * grid.T_eff, delta=0.2)


    def test_blowup_pickles(self):
        err = NumericalBlowupError(3, 0.5, "log weight")
        again = pickle.loads(pickle.dumps(err))
        self.assertEqual(str(again), str(err))
        self.assertEqual(again.step, 3)


class CoupledTests(TestCase):

    def test_exact_contraction(self):
        _consts, bset = _heat(n_paths=50)
        bundle = bset.simulate_block(0, 50)
        # constant sigma contracts the gap exactly: xi = 0.625 (1 - t)
        expected = 0.01 * H_MIN ** (2.0 / 0.625)
        self.assertTrue(np.allclose(bundle.H[-1], expected, rtol=1e-6))
        self.assertTrue(np.all(np.diff(bundle.H, axis=0) < 0))
        self.assertEqual(bundle.cap_fraction, 0.0)


    def test_coincident_start(self):
        consts, bset = _heat(n_paths=50, x=[0.0])
        bundle = bset.simulate_block(0, 50)
        self.assertTrue(np.all(bundle.X == bundle.Y))
        self.assertTrue(np.all(bundle.H == 0.0))
        self.assertTrue(np.all(bundle.log_weight == 0.0))
        self.assertTrue(np.all(girsanov_weight(bundle) == 1.0))

        report = exp_functional_check(bset, consts)
        self.assertTrue(report.is_pass())
        self.assertEqual(report.rows[0][1:], (1.0, 0.0, 1.0))


    def test_g_contraction(self):
        spec = builtin_spec("gheat-1d")
        consts = derive_constants(spec)
        grid = build_grid(1.0, 20, 0.5, H_MIN)
        control = ControlPath.constant([[4.0]], 1.0, 1, spec.gamma)
        bundle = simulate_coupled(spec, coupling_schedule(consts), grid,
                                  RngStream(4), [0.1], [0.0],
                                  control=control, n_paths=20)
        # G-mode schedule for gheat-1d is xi = 1 - t
        self.assertTrue(np.allclose(bundle.H[-1], 0.01 * H_MIN ** 2,
                                    rtol=1e-6))


    def test_drift_cap(self):
        _consts, bset = _heat(n_paths=20, drift_cap=1e-3)
        bundle = bset.simulate_block(0, 20)
        self.assertEqual(bundle.cap_fraction, 1.0)
        self.assertTrue(bundle.H[-1].min() > 1e-4)
        self.assertEqual(bset.reduce("terminal")["capped"], 20.0)


    def test_bad_arguments(self):
        consts, bset = _heat()
        self.assertRaises(ValueError, simulate_coupled, bset.spec,
                          bset.schedule, bset.grid, RngStream(1), [0.1],
                          [0.0], drift_cap=0.0)
        self.assertRaises(ValueError, simulate_coupled, bset.spec,
                          bset.schedule, bset.grid, RngStream(1), [0.1],
                          [0.0], measure="sideways")


    def test_tilted_y_is_free(self):
        _consts, bset = _heat(n_paths=10, measure=MEASURE_TILTED)
        bundle = bset.simulate_block(0, 10)
        free = simulate_forward(bset.spec, bset.grid,
                                bset.stream.for_paths(0), [0.0],
                                n_paths=10)
        self.assertTrue(np.allclose(bundle.Y, free))


    def test_gap_energy(self):
        _consts, bset = _heat(n_paths=5)
        bundle = bset.simulate_block(0, 5)
        energy = gap_energy(bundle, bset.spec, bset.schedule)
        expected = 0.01 / (0.625 ** 2 * 2.2)
        self.assertTrue(np.allclose(energy, expected, rtol=1e-4))


    def test_trace(self):
        _consts, bset = _heat(n_paths=5)
        bundle = bset.simulate_block(0, 5)
        columns, rows = trace_rows(bundle, 2)
        self.assertEqual(columns, ("path", "t", "X_1", "Y_1", "H",
                                   "log_weight"))
        self.assertEqual(len(rows), 2 * len(bset.grid))
        self.assertEqual(rows[0][:2], (0, 0.0))
        self.assertAlmostEqual(rows[0][4], 0.01)


    def test_workers_agree(self):
        _consts, single = _heat(n_paths=3000, workers=1)
        _consts, multi = _heat(n_paths=3000, workers=3)
        first = single.reduce("weight")
        second = multi.reduce("weight")
        self.assertEqual(first["weight"].tolist(),
                         second["weight"].tolist())
        self.assertEqual(first["n"], 3000.0)


    def test_samples_in_block_order(self):
        _consts, bset = _heat(n_paths=2500)
        found = bset.reduce("terminal")
        self.assertEqual(found["H_T"].shape, (2500,))


    def test_block_size_invariance(self):
        _consts, bset = _heat(n_paths=1500, x=[0.3], drift_cap=1.0)
        first = bset.reduce("terminal")["H_T"]
        second = bset.derive(block_size=700).reduce("terminal")["H_T"]
        self.assertEqual(first.tolist(), second.tolist())


class CheckTests(TestCase):

    def test_heat_moments(self):
        consts, bset = _heat()
        sets = [bset, bset.derive(x=[0.2])]

        for report in (weight_mean_check(sets),
                       girsanov_moment_check(sets, consts),
                       exp_functional_check(sets, consts),
                       drift_moment_check(sets, consts),
                       supermartingale_check(sets, consts)):
            self.assertTrue(report.is_pass(), report.get_description())
            self.assertTrue(report.entry in report.tables())


    def test_heat_identity(self):
        _consts, bset = _heat()
        report = girsanov_identity_check(bset)
        self.assertTrue(report.is_pass(), report.get_description())
        self.assertEqual(len(report.rows), 3)


    def test_heat_identity_needs_original(self):
        _consts, bset = _heat(measure=MEASURE_TILTED)
        self.assertRaises(ValueError, girsanov_identity_check, bset)


    def test_terminal_rate(self):
        _consts, bset = _heat(n_paths=200)
        report = terminal_rate_check(bset, levels=3)
        self.assertTrue(report.is_pass())
        ratios = [c.value for c in report.checks]
        for ratio in ratios:
            self.assertAlmostEqual(ratio, 0.5 ** 3.2, places=4)


    def test_u_moment(self):
        consts, bset = _heat()
        sets = [bset.derive(x=[r]) for r in (0.05, 0.1, 0.2)]
        report = u_moment_check(sets, consts)
        self.assertTrue(report.is_pass(), report.get_description())
        self.assertEqual(report.extra["order"], 2.5)


    def test_mode_restrictions(self):
        consts, bset = _heat()
        self.assertRaises(InvalidSpecError, gap_energy_check, bset, consts)

        g_consts = derive_constants(builtin_spec("gheat-1d"))
        self.assertRaises(InvalidSpecError, u_moment_check, bset, g_consts)


#
# The end.
