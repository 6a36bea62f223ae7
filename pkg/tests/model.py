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
unit tests for couplex.model

:author: The couplex authors
:license: LGPL v.3
"""


from math import exp, sqrt
from unittest import TestCase

import numpy as np

from scipy.integrate import quad

from couplex.model import (
    MODE_CLASSICAL, MODE_G, ConstantConfig, CouplingSchedule, DomainError,
    DriftField, DriverSpec, InvalidSpecError,
    ProblemSpec, TerminalSpec, UncertaintySet, VolatilityField,
    builtin_spec, builtin_spec_ids, check_schedule_inequality,
    coupling_schedule, derive_constants, schedule_eval, spec_from_json,
    spec_to_json, theorem_bound, unit_schedule)


def _drift_spec(L_b):
    # sin has Lipschitz constant amplitude * frequency
    return ProblemSpec(1, VolatilityField("constant", 1),
                       DriftField("sine-perturbed", 1, amplitude=L_b,
                                  frequency=1.0),
                       DriverSpec("zero"), TerminalSpec("sine"), 1.0,
                       UncertaintySet.interval(1.0, 4.0))


class SpecTests(TestCase):

    def test_builtins_validate(self):
        ids = builtin_spec_ids()
        self.assertTrue(ids)
        for name in ids:
            spec = builtin_spec(name)
            spec.validate()
            self.assertEqual(spec.name, name)

    def test_unknown_builtin(self):
        self.assertRaises(InvalidSpecError, builtin_spec, "no-such-spec")

    def test_sine_hypotheses(self):
        spec = builtin_spec("sine-1d")
        self.assertAlmostEqual(spec.lam_sigma, 0.8)
        self.assertAlmostEqual(spec.Lam_sigma, 1.2)
        self.assertAlmostEqual(spec.L_sigma, 0.1)
        self.assertAlmostEqual(spec.L_b, 0.2)
        self.assertEqual(spec.phi_sup, 1.0)

    def test_affine_sigma_rejected(self):
        self.assertRaises(InvalidSpecError, VolatilityField, "affine", 1)

    def test_degenerate_sigma_rejected(self):
        self.assertRaises(InvalidSpecError, VolatilityField,
                          "sine-perturbed", 1, base=1.0, amplitude=1.0,
                          frequency=1.0)

    def test_clamped_needs_cap(self):
        self.assertRaises(InvalidSpecError, TerminalSpec,
                          "clamped-quadratic")

    def test_terminal_bounds(self):
        self.assertEqual(TerminalSpec("linear").sup_norm(), float("inf"))
        self.assertFalse(TerminalSpec("quadratic").is_bounded())
        self.assertEqual(TerminalSpec("constant", offset=-3).sup_norm(), 3)
        summed = TerminalSpec("sum", terms=[TerminalSpec("sine"),
                                            TerminalSpec("cosine")])
        self.assertEqual(summed.sup_norm(), 2.0)

    def test_terminal_evaluate(self):
        x = np.array([[0.5], [-2.0]])
        phi = TerminalSpec("clamped-quadratic", amplitude=1.0, cap=1.0)
        self.assertEqual(phi.evaluate(x).tolist(), [0.25, 1.0])

    def test_driver(self):
        drv = DriverSpec("linear", g0=0.1, K_g=1.0, L_g=0.5)
        y = np.array([1.0])
        z = np.array([[2.0, 2.0]])
        self.assertAlmostEqual(drv.evaluate(y, z)[0],
                               0.1 + 1.0 + 0.5 * 4.0 / sqrt(2.0))
        self.assertRaises(InvalidSpecError, DriverSpec, "zero", g0=1.0)

    def test_g_function(self):
        gamma = UncertaintySet.interval(1.0, 4.0)
        self.assertEqual(gamma.g_function([[2.0]]), 4.0)
        self.assertEqual(gamma.g_function([[-2.0]]), -1.0)
        self.assertEqual(gamma.lower, 1.0)
        self.assertEqual(gamma.upper, 2.0)

    def test_json_roundtrip(self):
        for name in builtin_spec_ids():
            spec = builtin_spec(name)
            again = spec_from_json(spec_to_json(spec))
            self.assertEqual(spec_to_json(again), spec_to_json(spec))

    def test_json_missing_T(self):
        doc = spec_to_json(builtin_spec("heat-1d"))
        del doc["T"]
        self.assertRaises(InvalidSpecError, spec_from_json, doc)

    def test_constant_value_alias(self):
        doc = spec_to_json(builtin_spec("heat-1d"))
        doc["terminal"] = {"kind": "constant", "value": 0.5}
        self.assertEqual(spec_from_json(doc).terminal.offset, 0.5)


class HypothesisTests(TestCase):

    def setUp(self):
        self.rng = np.random.default_rng(1000)

    def _pairs(self, d, n=1000):
        x = self.rng.uniform(-5.0, 5.0, (n, d))
        y = self.rng.uniform(-5.0, 5.0, (n, d))
        return x, y, np.linalg.norm(x - y, axis=1)

    def test_sigma_and_b_quotients(self):
        for name in builtin_spec_ids():
            spec = builtin_spec(name)
            x, y, dist = self._pairs(spec.d)

            # the diagonal of sigma, so this is the Frobenius distance
            ds = np.linalg.norm(spec.sigma.evaluate(x) -
                                spec.sigma.evaluate(y), axis=1)
            self.assertTrue(np.all(ds <= spec.L_sigma * dist + 1e-12),
                            name)

            db = np.linalg.norm(spec.b.evaluate(x) - spec.b.evaluate(y),
                                axis=1)
            self.assertTrue(np.all(db <= spec.L_b * dist + 1e-12), name)

    def test_driver_quotients(self):
        for kind in ("linear", "sine-lipschitz"):
            drv = DriverSpec(kind, g0=0.3, K_g=0.7, L_g=0.4)
            y0, y1 = self.rng.normal(0.0, 3.0, (2, 1000))
            z0, z1 = self.rng.normal(0.0, 3.0, (2, 1000, 2))

            found = np.abs(drv.evaluate(y0, z0) - drv.evaluate(y1, z1))
            allowed = (0.7 * np.abs(y0 - y1) +
                       0.4 * np.linalg.norm(z0 - z1, axis=1))
            self.assertTrue(np.all(found <= allowed + 1e-12), kind)

    def test_sigma_spectrum(self):
        for name in builtin_spec_ids():
            spec = builtin_spec(name)
            x, _y, _dist = self._pairs(spec.d)
            diag = spec.sigma.evaluate(x)
            self.assertTrue(np.all(diag >= spec.lam_sigma - 1e-12), name)
            self.assertTrue(np.all(diag <= spec.Lam_sigma + 1e-12), name)

    def test_delta_identity(self):
        for _i in range(100):
            lam = self.rng.uniform(0.2, 1.0)
            Lam = lam + self.rng.uniform(0.0, 1.0)
            base, amp = 0.5 * (Lam + lam), 0.5 * (Lam - lam)
            spec = ProblemSpec(1, VolatilityField("sine-perturbed", 1,
                                                  base=base,
                                                  amplitude=amp,
                                                  frequency=1.0),
                               DriftField("constant", 1),
                               DriverSpec("zero"), TerminalSpec("sine"),
                               1.0)
            consts = derive_constants(spec)
            beta = consts.beta_sigma
            self.assertAlmostEqual(consts.delta,
                                   1.0 / (16 * beta ** 6 + 8 * beta ** 3),
                                   places=12)


class ConstantsTests(TestCase):

    def test_semilinear_constants(self):
        consts = derive_constants(builtin_spec("semilinear-1d"))
        self.assertEqual(consts.variant, "main1")
        self.assertAlmostEqual(consts.mu, 2.0)
        self.assertAlmostEqual(consts.L, 0.54)
        self.assertAlmostEqual(consts.C_g, 1.0 + 1.0 / 0.25)

    def test_corollary_variant(self):
        consts = derive_constants(builtin_spec("sine-1d"))
        self.assertEqual(consts.variant, "corollary")
        self.assertAlmostEqual(consts.L, 2 * 0.2 + 4 * 0.01)
        self.assertEqual(consts.C_main1, consts.C_corollary)

    def test_classical_theta(self):
        consts = derive_constants(builtin_spec("heat-1d"))
        self.assertEqual(consts.theta, 0.5)
        self.assertEqual(consts.L, 0.0)
        self.assertAlmostEqual(consts.xi0, 0.625)

    def test_unit_ellipticity(self):
        consts = derive_constants(builtin_spec("heat-1d"))
        self.assertAlmostEqual(consts.delta, 1.0 / 24.0)

        consts = derive_constants(builtin_spec("gheat-1d"))
        self.assertEqual(consts.C_main2, 2.0)

    def test_c5(self):
        consts = derive_constants(builtin_spec("heat-1d"))
        expected = 4.0 ** 0.4 * 0.2 ** 0.2 * 0.8 ** 0.8
        self.assertAlmostEqual(consts.C5, expected)

    def test_constant_driver(self):
        def spec(driver):
            return ProblemSpec(1, VolatilityField("constant", 1),
                               DriftField("constant", 1), driver,
                               TerminalSpec("sine"), 1.0)

        consts = derive_constants(spec(DriverSpec("linear", g0=0.5)))
        self.assertEqual(consts.variant, "main1")
        self.assertEqual(consts.C_g, 1.0)
        self.assertEqual(consts.mu, 0.0)
        self.assertEqual(consts.C_main1, consts.C_corollary)

        self.assertRaises(InvalidSpecError, derive_constants,
                          spec(DriverSpec("linear", g0=0.5, K_g=1.0)))

    def test_missing_bdg_constant(self):
        config = ConstantConfig(alpha=6.0)
        self.assertRaises(InvalidSpecError, derive_constants,
                          builtin_spec("heat-1d"), config=config)

    def test_mode_mismatch(self):
        self.assertRaises(InvalidSpecError, derive_constants,
                          builtin_spec("heat-1d"), "g-mode")

    def test_g_theta_range(self):
        config = ConstantConfig(theta=2.0)
        self.assertRaises(InvalidSpecError, derive_constants,
                          builtin_spec("gheat-1d"), config=config)

    def test_main2_bound(self):
        spec = _drift_spec(0.5)
        consts = derive_constants(spec)
        self.assertAlmostEqual(consts.L, 1.0)
        bound = theorem_bound(consts, spec, "main2")
        self.assertAlmostEqual(bound.slope, 2.515533, places=5)
        self.assertAlmostEqual(bound(0.1), 0.2515533, places=6)

    def test_corollary_bound_needs_zero_driver(self):
        spec = builtin_spec("semilinear-1d")
        consts = derive_constants(spec)
        self.assertRaises(InvalidSpecError, theorem_bound, consts, spec,
                          "corollary")

    def test_bound_recomputed(self):
        spec = builtin_spec("semilinear-1d")
        consts = derive_constants(spec)
        bound = theorem_bound(consts, spec, "main1")
        factor = consts.C_main1 * (1.0 + 0.1 / 2.0) * exp(2.0)
        den = sqrt((1.0 - exp(-0.54)) / 0.54)
        self.assertAlmostEqual(bound.slope / (factor / den), 1.0)

    def test_sharp_bound_tighter_in_theta(self):
        spec = builtin_spec("gsine-1d")
        consts = derive_constants(spec)
        sharp = theorem_bound(consts, spec, "main2-sharp")
        self.assertTrue(0 < sharp.slope < float("inf"))


class ScheduleTests(TestCase):

    def test_value_and_derivative(self):
        consts = derive_constants(builtin_spec("sine-1d"))
        sched = coupling_schedule(consts)
        self.assertEqual(schedule_eval(sched, sched.T)[0], 0.0)
        xi, dxi = schedule_eval(sched, 0.3)
        self.assertTrue(xi > 0)
        self.assertTrue(dxi < 0)
        self.assertAlmostEqual(sched.xi0, consts.xi0)

    def test_closed_forms(self):
        sched = CouplingSchedule(MODE_CLASSICAL, 2.0, 1.0, 1.25 * 0.5,
                                 alpha=5.0, theta=0.5)
        self.assertAlmostEqual(schedule_eval(sched, 0.0)[0], 0.2702077,
                               places=7)
        self.assertEqual(schedule_eval(sched, 1.0)[0], 0.0)

        sched = CouplingSchedule(MODE_G, 1.0, 1.0, 2.0 * (1.0 - 0.5),
                                 theta=0.5)
        self.assertAlmostEqual(sched.xi0, 1.0 - exp(-1.0))

    def test_flat_schedule_limit(self):
        spec = builtin_spec("heat-1d")
        consts = derive_constants(spec)
        bound = theorem_bound(consts, spec, "corollary")
        self.assertEqual(bound.denominator, 1.0)
        self.assertAlmostEqual(bound.slope,
                               consts.C_corollary * spec.phi_sup)

    def test_outside_domain(self):
        consts = derive_constants(builtin_spec("sine-1d"))
        sched = coupling_schedule(consts)
        self.assertRaises(DomainError, sched.value, -0.1)
        self.assertRaises(DomainError, sched.value, 1.5)

    def test_inverse_integral(self):
        consts = derive_constants(builtin_spec("sine-1d"))
        sched = coupling_schedule(consts)
        found = float(sched.inverse_integral(0.1, 0.9))
        expected, _err = quad(lambda t: 1.0 / float(sched.value(t)),
                              0.1, 0.9)
        self.assertAlmostEqual(found, expected, places=8)

    def test_unit_schedule(self):
        sched = unit_schedule(0.0, 2.0)
        self.assertEqual(sched.xi0, 2.0)
        sched = unit_schedule(1.0, 1.0)
        self.assertAlmostEqual(sched.xi0, 1.0 - exp(-1.0))

    def test_inequality_on_builtins(self):
        t_grid = np.linspace(0.0, 1.0, 1000, endpoint=False)
        for name in builtin_spec_ids():
            spec = builtin_spec(name)
            consts = derive_constants(spec)
            report = check_schedule_inequality(coupling_schedule(consts),
                                               consts, [1, 1.5, 2, 2.5],
                                               t_grid)
            self.assertTrue(report.is_pass(), name)
            self.assertTrue(report.max_violation <= 1e-12, name)


#
# The end.
