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
The nonlinear semigroup u(T, x) = E[phi(X^x_T)] under volatility
uncertainty, evaluated two independent ways: a supremum of Monte
Carlo means over piecewise constant volatility controls, and a
monotone explicit finite difference solve in one dimension. The
semilinear finite difference solve used to check the backward solver
lives here as well.

:author: The couplex authors
:license: LGPL
"""


import logging

from itertools import product
from math import ceil, sqrt

import numpy as np

from . import CouplexError
from .bsde import StepSizeError
from .check import BoundCheck, SuperCheck
from .coupling import ControlPath, simulate_forward
from .model import InvalidSpecError, UncertaintySet
from .paths import (BLOCK_PATHS, mean_stderr, moment_sums, path_blocks,
                    tree_sum, uniform_grid)
from .workers import map_blocks


__all__ = (
    "CFLError", "BudgetExhausted",
    "ControlFamily", "GSemigroupEstimate", "FdSolution", "CrossReport",
    "evaluate_g_semigroup", "solve_g_heat_fd", "solve_semilinear_fd",
    "cross_validate", )


_log = logging.getLogger(__name__)


POLICY_EXHAUSTIVE = "exhaustive"
POLICY_ASCENT = "coordinate-ascent"

MAX_EXHAUSTIVE_CELLS = 16

STALL_SWEEPS = 3


class CFLError(StepSizeError):
    """
    An explicit finite difference step outside the monotone range
    """

    pass


class BudgetExhausted(CouplexError):
    """
    The control search ran out of evaluations. Carries the best
    estimate found so far.
    """


    def __init__(self, best, budget):
        CouplexError.__init__(self, best, budget)
        self.best = best
        self.budget = budget


    def __str__(self):
        if self.best is None:
            return ("control search exhausted its budget of %i"
                    " evaluations before any finished" % self.budget)
        return ("control search exhausted its budget of %i evaluations;"
                " best so far %.6g" % (self.budget, self.best.value))


class ControlFamily(object):
    """
    Piecewise constant controls on K equal cells of [0, T], each cell
    taking one of the generators of the uncertainty set. The search
    policy is ``exhaustive`` (K at most 16) or ``coordinate-ascent``;
    budget caps the number of distinct controls evaluated.
    """


    def __init__(self, gamma_set, K, T, policy=POLICY_EXHAUSTIVE,
                 budget=None):

        if policy not in (POLICY_EXHAUSTIVE, POLICY_ASCENT):
            raise ValueError("unknown search policy %r" % policy)
        if int(K) < 1:
            raise ValueError("K must be positive")
        if policy == POLICY_EXHAUSTIVE and K > MAX_EXHAUSTIVE_CELLS:
            raise ValueError("exhaustive search is limited to %i cells"
                             % MAX_EXHAUSTIVE_CELLS)

        self.gamma_set = gamma_set
        self.K = int(K)
        self.T = float(T)
        self.policy = policy
        self.budget = budget
        self.candidates = gamma_set.matrices


    def control(self, choice):
        """
        the ControlPath for a tuple of candidate indices, one per cell
        """

        return ControlPath([self.candidates[i] for i in choice], self.T,
                           self.gamma_set)


    def constant_choices(self):
        return [(i,) * self.K for i in range(len(self.candidates))]


    def all_choices(self):
        return list(product(range(len(self.candidates)), repeat=self.K))


    def halved(self):
        """
        the family on K/2 cells, or None when K is odd or 1
        """

        if self.K < 2 or self.K % 2:
            return None
        return ControlFamily(self.gamma_set, self.K // 2, self.T,
                             self.policy, self.budget)


    def simplify(self, options=None):
        return {
            "K": self.K,
            "policy": self.policy,
            "budget": self.budget,
            "candidates": len(self.candidates),
        }


class GSemigroupEstimate(object):
    """
    The best per-control Monte Carlo mean found by the search. Always
    a lower bound of the true supremum.
    """

    lower_bound = True


    def __init__(self, value, stderr, choice, evaluations, sweeps=0,
                 converged=True):
        self.value = float(value)
        self.stderr = float(stderr)
        self.choice = tuple(choice)
        self.evaluations = evaluations
        self.sweeps = sweeps
        self.converged = converged


    def simplify(self, options=None):
        return {
            "value": self.value,
            "stderr": self.stderr,
            "control": list(self.choice),
            "evaluations": self.evaluations,
            "sweeps": self.sweeps,
            "converged": self.converged,
            "lower_bound": self.lower_bound,
        }


def _control_job(job):
    spec, grid, stream, x0, n_paths, block_size, control = job

    found = list()
    for b, count in path_blocks(n_paths, block_size):
        first = b * block_size
        X = simulate_forward(spec, grid, stream.for_paths(first), x0,
                             control, count)
        found.append(moment_sums(spec.terminal.evaluate(X[-1])))
    return tree_sum(found)


class _Search(object):
    """
    evaluations shared by one control search, cached by choice so a
    repeated candidate costs nothing
    """


    def __init__(self, spec, family, x0, grid, stream, n_paths, workers,
                 block_size):
        self.spec = spec
        self.family = family
        self.x0 = x0
        self.grid = grid
        self.stream = stream
        self.n_paths = n_paths
        self.workers = workers
        self.block_size = block_size
        self.cache = dict()
        self.best = None


    def evaluate(self, choices):
        fresh = [c for c in choices if c not in self.cache]
        budget = self.family.budget
        if budget is not None and len(self.cache) + len(fresh) > budget:
            room = max(budget - len(self.cache), 0)
            self._run(fresh[:room])
            raise BudgetExhausted(self.best, budget)

        self._run(fresh)
        return [self.cache[c] for c in choices]


    def _run(self, choices):
        if not choices:
            return

        jobs = [(self.spec, self.grid, self.stream, self.x0, self.n_paths,
                 self.block_size, self.family.control(c))
                for c in choices]

        for choice, sums in zip(choices,
                                map_blocks(_control_job, jobs,
                                           self.workers)):
            mean, err = mean_stderr(sums)
            est = GSemigroupEstimate(mean, err, choice, 0)
            self.cache[choice] = est
            if self.best is None or est.value > self.best.value:
                self.best = est
            self.best.evaluations = len(self.cache)


def evaluate_g_semigroup(spec, x0, family, n_paths, n_steps, rng,
                         workers=1, block_size=BLOCK_PATHS):
    """
    the largest Monte Carlo mean of phi(X_T) over the controls the
    family's search policy visits. Every control sees the same
    Brownian increments.
    """

    if not spec.is_g_mode():
        raise InvalidSpecError("the semigroup search needs a G-mode spec")
    if not spec.terminal.is_bounded():
        _log.warning("terminal %s is unbounded; the semigroup estimate"
                     " relies on its moments", spec.terminal.kind)

    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    grid = uniform_grid(spec.T, n_steps)
    search = _Search(spec, family, x0, grid, rng, n_paths, workers,
                     block_size)

    if family.policy == POLICY_EXHAUSTIVE:
        search.evaluate(family.all_choices())
        best = search.best
        best.sweeps = 0
        best.converged = True
        return best

    search.evaluate(family.constant_choices())
    current = search.best
    stalled = 0
    sweeps = 0

    while stalled < STALL_SWEEPS:
        sweeps += 1
        improved = False
        for cell in range(family.K):
            options = list()
            for i in range(len(family.candidates)):
                choice = list(current.choice)
                choice[cell] = i
                options.append(tuple(choice))
            for est in search.evaluate(options):
                if est.value > current.value:
                    current = est
                    improved = True
        stalled = 0 if improved else stalled + 1
        _log.info("control sweep %i: best %.6g (%i controls)",
                  sweeps, current.value, len(search.cache))

    current.evaluations = len(search.cache)
    current.sweeps = sweeps
    current.converged = True
    return current


class FdSolution(object):
    """
    An explicit finite difference solve on a uniform one dimensional
    grid. ``surface`` holds u at the times in ``times`` (time to
    maturity), ``u`` the solution at T.
    """


    def __init__(self, x, dt, n_steps, phi, times, surface, max_abs, x0):
        self.x = x
        self.dt = dt
        self.n_steps = n_steps
        self.phi = phi
        self.times = times
        self.surface = surface
        self.max_abs = max_abs
        self.x0 = x0


    @property
    def u(self):
        return self.surface[-1]


    @property
    def dx(self):
        return float(self.x[1] - self.x[0])


    @property
    def value(self):
        return float(np.interp(self.x0, self.x, self.u))


    def simplify(self, options=None):
        return {
            "x_lo": float(self.x[0]),
            "x_hi": float(self.x[-1]),
            "dx": self.dx,
            "dt": self.dt,
            "n_steps": self.n_steps,
            "x0": self.x0,
            "value": self.value,
            "max_abs": self.max_abs,
        }


def _space_grid(x_lo, x_hi, dx, x0):
    if not x_lo < x0 < x_hi:
        raise ValueError("x0 must lie inside (x_lo, x_hi)")
    if not 0 < dx < (x_hi - x_lo) / 2.0:
        raise ValueError("dx must be positive and resolve the domain")

    n = int(round((x_hi - x_lo) / dx))
    return np.linspace(x_lo, x_hi, n + 1)


def _time_step(limit, T, cfl_safety):
    if not 0 < cfl_safety <= 1:
        raise CFLError("cfl_safety %g violates the monotone step limit"
                       % cfl_safety)

    n_steps = int(ceil(T / (cfl_safety * limit)))
    dt = T / n_steps
    if dt > limit * (1 + 1e-12):
        raise CFLError("step %g exceeds the monotone limit %g"
                       % (dt, limit))

    _log.info("explicit scheme: %i steps of %g (limit %g)",
              n_steps, dt, limit)
    return dt, n_steps


def _march(phi, dt, n_steps, update, snapshots=10):
    u = phi.copy()
    every = max(n_steps // snapshots, 1)
    times = [0.0]
    surface = [u.copy()]
    max_abs = float(np.max(np.abs(u)))

    for n in range(1, n_steps + 1):
        inner = u[1:-1] + dt * update(u)
        u = np.concatenate([phi[:1], inner, phi[-1:]])
        max_abs = max(max_abs, float(np.max(np.abs(u))))
        if n % every == 0 or n == n_steps:
            times.append(n * dt)
            surface.append(u.copy())

    if times[-1] != n_steps * dt:
        times.append(n_steps * dt)
        surface.append(u.copy())
    return np.array(times), surface, max_abs


def _upwind(u, drift, dx):
    forward = (u[2:] - u[1:-1]) / dx
    backward = (u[1:-1] - u[:-2]) / dx
    return np.where(drift > 0, drift * forward, drift * backward)


def _check_width(spec, x_lo, x_hi, x0, spread):
    need = 8.0 * spread * sqrt(spec.T)
    if x_hi - x_lo < need:
        _log.warning("domain [%g, %g] is narrower than %g; boundary"
                     " values may reach x0 = %g", x_lo, x_hi, need, x0)


def solve_g_heat_fd(spec, x_lo, x_hi, dx, x0, cfl_safety=0.9):
    """
    u_tau = 1/2 sigma^2 (hi (u_xx)+ - lo (u_xx)-) + b (upwind u_x) on
    [x_lo, x_hi], with lo and hi the variance bounds of gamma and the
    boundary frozen at phi. A classical spec is solved with gamma = 1.
    """

    if spec.d != 1:
        raise InvalidSpecError("the finite difference solver is one"
                               " dimensional")

    gamma = spec.gamma or UncertaintySet([[[1.0]]])
    lo, hi = gamma.lower ** 2, gamma.upper ** 2

    x = _space_grid(x_lo, x_hi, dx, x0)
    dx = float(x[1] - x[0])
    inner = x[1:-1, None]
    sig2 = spec.sigma.evaluate(inner)[:, 0] ** 2
    drift = spec.b.evaluate(inner)[:, 0]

    _check_width(spec, x_lo, x_hi, x0, spec.Lam_sigma * gamma.upper)

    limit = 1.0 / (np.max(sig2) * hi / dx ** 2 +
                   np.max(np.abs(drift)) / dx)
    dt, n_steps = _time_step(limit, spec.T, cfl_safety)

    def update(u):
        second = (u[2:] - 2.0 * u[1:-1] + u[:-2]) / dx ** 2
        curvature = np.where(second > 0, hi * second, lo * second)
        return 0.5 * sig2 * curvature + _upwind(u, drift, dx)

    phi = spec.terminal.evaluate(x[:, None])
    times, surface, max_abs = _march(phi, dt, n_steps, update)
    return FdSolution(x, dt, n_steps, phi, times, surface, max_abs,
                      float(x0))


def solve_semilinear_fd(spec, x_lo, x_hi, dx, x0, cfl_safety=0.9):
    """
    u_tau = 1/2 sigma^2 u_xx + b u_x + g(u, sigma u_x) on [x_lo, x_hi],
    explicit with the driver taken at the old level and the boundary
    frozen at phi
    """

    if spec.d != 1:
        raise InvalidSpecError("the finite difference solver is one"
                               " dimensional")
    if spec.is_g_mode():
        raise InvalidSpecError("the semilinear solver is classical only")

    x = _space_grid(x_lo, x_hi, dx, x0)
    dx = float(x[1] - x[0])
    inner = x[1:-1, None]
    sig = spec.sigma.evaluate(inner)[:, 0]
    drift = spec.b.evaluate(inner)[:, 0]
    g = spec.driver.evaluate

    _check_width(spec, x_lo, x_hi, x0, spec.Lam_sigma)

    limit = 1.0 / (np.max(sig * sig) / dx ** 2 +
                   (np.max(np.abs(drift)) + spec.L_g * np.max(sig)) / dx +
                   spec.K_g)
    dt, n_steps = _time_step(limit, spec.T, cfl_safety)

    def update(u):
        second = (u[2:] - 2.0 * u[1:-1] + u[:-2]) / dx ** 2
        central = (u[2:] - u[:-2]) / (2.0 * dx)
        z = (sig * central)[:, None]
        return (0.5 * sig * sig * second + _upwind(u, drift, dx) +
                g(u[1:-1], z))

    phi = spec.terminal.evaluate(x[:, None])
    times, surface, max_abs = _march(phi, dt, n_steps, update)
    return FdSolution(x, dt, n_steps, phi, times, surface, max_abs,
                      float(x0))


class CrossReport(SuperCheck):
    """
    The Monte Carlo control supremum against the finite difference
    solution. The error budget is three Monte Carlo standard errors
    plus the finite difference error (the change from doubling dx)
    plus the control search gap (the gain from halving K to the full
    K). The Monte Carlo value is a lower bound, so it may not exceed
    the finite difference value by more than three standard errors.
    """

    label = "Cross validation"


    def __init__(self, mc, fd, fd_error, search_gap):
        SuperCheck.__init__(self)
        self.mc = mc
        self.fd = fd
        self.fd_error = float(fd_error)
        self.search_gap = float(search_gap)
        self.entry = "cross_validation"

        diff = abs(mc.value - fd.value)
        self.budget = 3.0 * mc.stderr + self.fd_error + self.search_gap

        self.add(BoundCheck("|MC - FD|", diff, self.budget, slack=0.0))
        self.add(BoundCheck("MC - FD", mc.value - fd.value, 0.0,
                            mc.stderr))
        self.check()


    def tables(self):
        columns = ("mc", "mc_stderr", "fd", "fd_error", "search_gap",
                   "budget")
        rows = [(self.mc.value, self.mc.stderr, self.fd.value,
                 self.fd_error, self.search_gap, self.budget)]
        return {self.entry: (columns, rows)}


    def simplify(self, options=None):
        simple = SuperCheck.simplify(self, options)
        simple["mc"] = self.mc.simplify(options)
        simple["fd"] = self.fd.simplify(options)
        simple["fd_error"] = self.fd_error
        simple["search_gap"] = self.search_gap
        simple["budget"] = self.budget
        return simple


def cross_validate(spec, x0, family, n_paths, n_steps, fd_params, rng,
                   workers=1, block_size=BLOCK_PATHS):
    """
    run both evaluations of u(T, x0) and compare them. fd_params is a
    dict of x_lo, x_hi, dx and optionally cfl_safety.
    """

    if spec.d != 1:
        raise InvalidSpecError("cross validation is one dimensional")

    mc = evaluate_g_semigroup(spec, x0, family, n_paths, n_steps, rng,
                              workers, block_size)

    half = family.halved()
    if half is None:
        gap = 0.0
    else:
        coarse = evaluate_g_semigroup(spec, x0, half, n_paths, n_steps,
                                      rng, workers, block_size)
        gap = max(mc.value - coarse.value, 0.0)

    safety = fd_params.get("cfl_safety", 0.9)
    x_lo, x_hi, dx = fd_params["x_lo"], fd_params["x_hi"], fd_params["dx"]
    fd_x0 = float(np.atleast_1d(x0)[0])
    fd = solve_g_heat_fd(spec, x_lo, x_hi, dx, fd_x0, safety)
    coarse_fd = solve_g_heat_fd(spec, x_lo, x_hi, 2.0 * dx, fd_x0, safety)
    fd_error = abs(fd.value - coarse_fd.value)

    return CrossReport(mc, fd, fd_error, gap)


#
# The end.
