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
Theorem level verification: Lipschitz quotients of u(T, .) over
shrinking pair separations, extrapolated to r -> 0 and compared with
the gradient bounds, plus the suite of coupling checks.

:author: The couplex authors
:license: LGPL
"""


import logging

from math import sqrt

import numpy as np

from .bsde import difference_stderr, estimate_u
from .check import BoundCheck, SuperCheck
from .coupling import (MEASURE_ORIGINAL, MEASURE_TILTED, BundleSet,
                       ControlPath, drift_moment_check,
                       exp_functional_check, gap_energy_check,
                       girsanov_identity_check, girsanov_moment_check,
                       supermartingale_check, terminal_rate_check,
                       u_moment_check, weight_mean_check)
from .gexp import evaluate_g_semigroup, solve_g_heat_fd
from .model import (MODE_CLASSICAL, MODE_G, InvalidSpecError,
                    derive_constants, theorem_bound)
from .paths import BLOCK_PATHS


__all__ = (
    "Pair", "GradientReport", "make_pairs", "extrapolate_slope",
    "quadrature_u", "quadrature_lipschitz", "coupling_control",
    "verify_main1", "verify_corollary", "verify_main2",
    "verify_girsanov", )


_log = logging.getLogger(__name__)


CONSTANTS_NOTE = ("bound failures are relative to the configured BDG"
                  " constants c_p and d_p recorded with the constants")


class Pair(object):
    """
    Two starting points at separation r, placed symmetrically about a
    center along a unit direction.
    """


    def __init__(self, pair_id, x, y, direction, level):
        self.pair_id = pair_id
        self.x = np.asarray(x, dtype=float)
        self.y = np.asarray(y, dtype=float)
        self.direction = direction
        self.level = level


    @property
    def r(self):
        return float(np.linalg.norm(self.x - self.y))


    def simplify(self, options=None):
        return {
            "pair_id": self.pair_id,
            "x": self.x.tolist(),
            "y": self.y.tolist(),
            "direction": self.direction,
            "r": self.r,
        }


def make_pairs(center, r0=0.5, levels=5, directions=("axis",), rng=None):
    """
    pairs at separations r0 2^-j, j = 0 .. levels-1, along each
    coordinate axis ("axis") and along one random unit direction per
    "random" entry (drawn from rng)
    """

    center = np.atleast_1d(np.asarray(center, dtype=float))
    d = center.shape[0]

    units = list()
    n_random = 0
    for kind in directions:
        if kind == "axis":
            for i in range(d):
                e = np.zeros(d)
                e[i] = 1.0
                units.append(("axis-%i" % (i + 1), e))
        elif kind == "random":
            if rng is None:
                raise ValueError("random directions need an rng")
            gen = rng.for_lane(rng.lane + 3 + n_random).generator()
            v = gen.standard_normal(d)
            units.append(("random-%i" % (n_random + 1),
                          v / np.linalg.norm(v)))
            n_random += 1
        else:
            raise ValueError("unknown pair direction %r" % kind)

    pairs = list()
    for label, unit in units:
        for level in range(levels):
            half = 0.5 * r0 * 2.0 ** -level * unit
            pairs.append(Pair(len(pairs), center + half, center - half,
                              label, level))
    return pairs


def extrapolate_slope(r, quotients, stderr):
    """
    the intercept at r = 0 of a weighted least squares line through
    (r_j, quotient_j), with its standard error. When the scatter
    exceeds the stated errors the standard error is widened by the
    square root of the reduced chi-square.
    """

    r = np.asarray(r, dtype=float)
    q = np.asarray(quotients, dtype=float)
    se = np.asarray(stderr, dtype=float)

    if len(r) < 3:
        raise ValueError("slope extrapolation needs at least 3 levels")

    positive = se[se > 0]
    floor = positive.min() * 1e-3 if len(positive) else 1.0
    w = 1.0 / np.maximum(se, floor)

    design = np.column_stack([np.ones_like(r), r])
    coef, _res, _rank, _sv = np.linalg.lstsq(design * w[:, None], q * w,
                                             rcond=None)

    cov = np.linalg.inv((design * (w * w)[:, None]).T.dot(design))
    err = sqrt(max(cov[0, 0], 0.0)) if len(positive) else 0.0

    resid = (q - design.dot(coef)) * w
    chi2 = float(np.sum(resid * resid)) / (len(r) - 2)
    if len(positive) and chi2 > 1.0:
        _log.warning("quotient scatter exceeds stderr (reduced chi2 %.3g);"
                     " widening the slope stderr", chi2)
        err *= sqrt(chi2)

    return float(coef[0]), float(err)


def quadrature_u(spec, x, n_nodes=80):
    """
    E[phi(x + b T + sigma B_T)] by Gauss-Hermite quadrature, for one
    dimensional specs with constant coefficients and a zero driver
    """

    if spec.d != 1 or spec.is_g_mode() or not spec.driver.is_zero():
        raise InvalidSpecError("quadrature needs a classical 1-d spec"
                               " with a zero driver")
    if not (spec.sigma.is_constant() and spec.b.is_constant()):
        raise InvalidSpecError("quadrature needs constant coefficients")

    nodes, weights = np.polynomial.hermite_e.hermegauss(n_nodes)
    weights = weights / sqrt(2.0 * np.pi)

    origin = np.zeros((1, 1))
    sig = float(spec.sigma.evaluate(origin)[0, 0])
    drift = float(spec.b.evaluate(origin)[0, 0])
    T = spec.T

    x = np.atleast_1d(np.asarray(x, dtype=float)).ravel()
    ends = (x[:, None] + drift * T + sig * sqrt(T) * nodes[None, :])
    vals = spec.terminal.evaluate(ends[..., None])
    return vals.dot(weights)


def quadrature_lipschitz(spec, lo, hi, n_points=2001):
    """
    the largest difference quotient of quadrature_u over a fine grid
    on [lo, hi]
    """

    xs = np.linspace(lo, hi, n_points)
    vals = quadrature_u(spec, xs)
    return float(np.max(np.abs(np.diff(vals)) / np.diff(xs)))


class GradientReport(SuperCheck):
    """
    Lipschitz quotients of u(T, .) for a set of pairs against the
    slope of a gradient bound. Each direction's quotients are
    extrapolated to r -> 0 and must not exceed the bound slope by more
    than three combined standard errors.
    """

    label = "Gradient bound"
    columns = ("pair_id", "r", "quotient", "stderr", "bound_slope",
               "pass")


    def __init__(self, spec_id, mode, bound, constants):
        SuperCheck.__init__(self, "Gradient bound (%s)" % bound.which)
        self.spec_id = spec_id
        self.mode = mode
        self.bound = bound
        self.constants = constants
        self.pairs = list()
        self.rows = list()
        self.slopes = dict()
        self.extra = dict()
        self.note = CONSTANTS_NOTE
        self.entry = "gradient"


    @property
    def bound_slope(self):
        return float(self.bound.slope)


    def add_pair(self, pair, quotient, stderr):
        ok = quotient <= self.bound_slope + 3.0 * stderr
        self.pairs.append(pair)
        self.rows.append((pair.pair_id, pair.r, float(quotient),
                          float(stderr), self.bound_slope, ok))


    def finish(self):
        """
        extrapolate each direction and add the slope checks
        """

        by_direction = dict()
        for pair, row in zip(self.pairs, self.rows):
            by_direction.setdefault(pair.direction, []).append(row)

        for direction in sorted(by_direction):
            rows = by_direction[direction]
            if len(rows) < 3:
                _log.info("direction %s has %i levels, not extrapolated",
                          direction, len(rows))
                continue

            slope, err = extrapolate_slope([row[1] for row in rows],
                                           [row[2] for row in rows],
                                           [row[3] for row in rows])
            self.slopes[direction] = (slope, err)
            self.add(BoundCheck("slope along %s" % direction, slope,
                                self.bound_slope, err))

        for pair, row in zip(self.pairs, self.rows):
            self.add(BoundCheck("quotient of pair %i" % pair.pair_id,
                                row[2], self.bound_slope, row[3]))

        self.check()
        return self


    @property
    def margin(self):
        if not self.slopes:
            return None
        worst = max(s for s, _e in self.slopes.values())
        return self.bound_slope - worst


    def tables(self):
        return {self.entry: (self.columns, self.rows)}


    def simplify(self, options=None):
        simple = SuperCheck.simplify(self, options)
        simple["spec"] = self.spec_id
        simple["mode"] = self.mode
        simple["bound"] = self.bound.simplify(options)
        simple["pairs"] = [p.simplify(options) for p in self.pairs]
        simple["slopes"] = dict((k, {"slope": s, "stderr": e})
                                for k, (s, e) in self.slopes.items())
        simple["margin"] = self.margin
        simple["note"] = self.note
        simple.update(self.extra)
        return simple


def verify_main1(spec, pairs, params, rng, config=None, workers=1):
    """
    quotients of the backward solver estimate against the main1
    bound. A zero driver is accepted and reduces to the corollary
    constants, with u taken by plain Monte Carlo.
    """

    consts = derive_constants(spec, MODE_CLASSICAL, config)
    bound = theorem_bound(consts, spec, "main1")
    report = GradientReport(spec.name, consts.mode, bound, consts)

    for pair in pairs:
        ux = estimate_u(spec, pair.x, params, rng, workers)
        uy = estimate_u(spec, pair.y, params, rng, workers)
        err = difference_stderr(ux, uy, rng.for_lane(rng.lane + 2),
                                params.n_boot)
        report.add_pair(pair, abs(ux.value - uy.value) / pair.r,
                        err / pair.r)
        _log.debug("pair %i: u(x)=%g u(y)=%g", pair.pair_id, ux.value,
                   uy.value)

    return report.finish()


def verify_corollary(spec, pairs, params, rng, config=None, workers=1,
                     oracle="mc", span=None):
    """
    quotients of u against the corollary bound. The "quadrature"
    oracle evaluates u exactly and adds the largest difference
    quotient over the span around the pairs.
    """

    if not spec.driver.is_zero():
        raise InvalidSpecError("the corollary needs a zero driver")

    consts = derive_constants(spec, MODE_CLASSICAL, config)
    bound = theorem_bound(consts, spec, "corollary")
    report = GradientReport(spec.name, consts.mode, bound, consts)

    if oracle == "quadrature":
        for pair in pairs:
            ux, uy = quadrature_u(spec, [pair.x[0], pair.y[0]])
            report.add_pair(pair, abs(ux - uy) / pair.r, 0.0)

        if span is None:
            center = float(np.mean([p.x[0] for p in pairs]))
            span = (center - 4.0, center + 4.0)
        lip = quadrature_lipschitz(spec, span[0], span[1])
        report.extra["global_slope"] = lip
        report.add(BoundCheck("largest quotient on [%g, %g]" % tuple(span),
                              lip, bound.slope, slack=0.0))

    elif oracle == "mc":
        for pair in pairs:
            ux = estimate_u(spec, pair.x, params, rng, workers)
            uy = estimate_u(spec, pair.y, params, rng, workers)
            err = difference_stderr(ux, uy, rng.for_lane(rng.lane + 2),
                                    params.n_boot)
            report.add_pair(pair, abs(ux.value - uy.value) / pair.r,
                            err / pair.r)
    else:
        raise ValueError("unknown oracle %r" % oracle)

    report.extra["oracle"] = oracle
    return report.finish()


def verify_main2(spec, pairs, rng=None, fd_params=None, family=None,
                 n_paths=None, n_steps=None, config=None, workers=1,
                 block_size=BLOCK_PATHS):
    """
    quotients of the nonlinear semigroup against the main2 bound. One
    dimensional specs use a single finite difference solve read off at
    every pair; otherwise each end point is a control supremum on
    common random numbers.
    """

    consts = derive_constants(spec, MODE_G, config)
    bound = theorem_bound(consts, spec, "main2")
    sharp = theorem_bound(consts, spec, "main2-sharp")

    report = GradientReport(spec.name, consts.mode, bound, consts)
    report.extra["sharp_bound"] = sharp.simplify()

    if spec.d == 1 and fd_params is not None:
        center = float(np.mean([p.x[0] for p in pairs]))
        fd = solve_g_heat_fd(spec, fd_params["x_lo"], fd_params["x_hi"],
                             fd_params["dx"], center,
                             fd_params.get("cfl_safety", 0.9))
        for pair in pairs:
            ux = float(np.interp(pair.x[0], fd.x, fd.u))
            uy = float(np.interp(pair.y[0], fd.x, fd.u))
            report.add_pair(pair, abs(ux - uy) / pair.r, 0.0)
        report.extra["method"] = "fd"
        report.extra["fd"] = fd.simplify()

    else:
        if family is None or rng is None:
            raise ValueError("Monte Carlo evaluation needs a control"
                             " family and an rng")
        for pair in pairs:
            ux = evaluate_g_semigroup(spec, pair.x, family, n_paths,
                                      n_steps, rng, workers, block_size)
            uy = evaluate_g_semigroup(spec, pair.y, family, n_paths,
                                      n_steps, rng, workers, block_size)
            err = float(np.hypot(ux.stderr, uy.stderr))
            report.add_pair(pair, abs(ux.value - uy.value) / pair.r,
                            err / pair.r)
        report.extra["method"] = "mc"

    return report.finish()


def coupling_control(spec):
    """
    the constant control at the largest generator of gamma, used to
    run the G-mode coupling under one member of the family
    """

    mats = spec.gamma.matrices
    top = max(mats, key=lambda m: float(np.linalg.eigvalsh(m).max()))
    return ControlPath.constant(top, spec.T, 1, spec.gamma)


def verify_girsanov(spec, consts, grid, stream, x, separations, n_paths,
                    drift_cap, workers=1, block_size=BLOCK_PATHS,
                    rate_levels=3):
    """
    every coupling check for pairs (x, x - r e_1), r in separations.
    Returns the list of reports.
    """

    x = np.atleast_1d(np.asarray(x, dtype=float))
    unit = np.zeros(spec.d)
    unit[0] = 1.0

    schedule = consts.schedule()
    control = coupling_control(spec) if consts.mode == MODE_G else None

    def bundle_sets(measure):
        sub = stream if measure == MEASURE_ORIGINAL else \
            stream.for_experiment("%s/%s" % (stream.experiment, measure))
        return [BundleSet(spec, schedule, grid, sub, x, x - r * unit,
                          n_paths, drift_cap, control, measure, workers,
                          block_size)
                for r in separations]

    original = bundle_sets(MEASURE_ORIGINAL)
    tilted = bundle_sets(MEASURE_TILTED)

    reports = [
        weight_mean_check(original),
        girsanov_moment_check(original, consts),
        exp_functional_check(tilted, consts),
    ]

    if consts.mode == MODE_G:
        reports.append(gap_energy_check(tilted, consts))
    else:
        reports.append(drift_moment_check(tilted, consts))
        if len(separations) >= 3:
            reports.append(u_moment_check(original, consts))
        else:
            _log.info("fewer than 3 separations, skipping the log weight"
                      " slope")

    reports.append(girsanov_identity_check(original))
    reports.append(terminal_rate_check(original, rate_levels))
    reports.append(supermartingale_check(original, consts))

    return reports


#
# The end.
