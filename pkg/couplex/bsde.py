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
Regression Monte Carlo for the backward equation

  Y_t = phi(X_T) + int_t^T g(Y_s, Z_s) ds - int_t^T Z_s dB_s

whose initial value Y_0 is u(T, x) for the semilinear equation.
Conditional expectations are global least squares fits on a
standardized monomial basis of the forward state. Normal equations
are assembled block by block and pooled with the fixed tree sum, so a
solve does not depend on the worker count.

:author: The couplex authors
:license: LGPL
"""


import logging

from itertools import combinations_with_replacement
from math import exp

import numpy as np

from scipy.linalg import cho_factor, cho_solve

from . import CouplexError
from .check import BoundCheck, MomentReport
from .coupling import simulate_forward
from .model import InvalidSpecError
from .paths import (BLOCK_PATHS, bootstrap_stderr, moment_sums,
                    path_blocks, tree_sum, uniform_grid)
from .workers import map_blocks


__all__ = (
    "DegradedBasisError", "StepSizeError",
    "SolverParams", "BsdeSolution", "UEstimate",
    "solve_bsde", "estimate_u", "difference_stderr",
    "bsde_apriori_check", "y_sup_bound", "y_sup_check", )


_log = logging.getLogger(__name__)


MAX_CONDITION = 1e12

MIN_PATHS = 1000

SUP_TOLERANCE = 0.05


class DegradedBasisError(CouplexError):
    """
    A regression system too ill-conditioned to trust
    """


    def __init__(self, step, condition):
        CouplexError.__init__(self, step, condition)
        self.step = step
        self.condition = condition


    def __str__(self):
        return ("regression basis degraded at step %i: condition"
                " number %.3g exceeds %.0e" %
                (self.step, self.condition, MAX_CONDITION))


class StepSizeError(CouplexError, ValueError):
    """
    A time step too large for the scheme to be stable
    """

    pass


class SolverParams(object):
    """
    Parameters of the backward solver and of the plain Monte Carlo
    estimate used when the driver is zero.
    """


    def __init__(self, n_paths=100000, n_steps=50, basis_degree=3,
                 picard_iters=3, n_boot=200, block_size=BLOCK_PATHS):

        if int(n_paths) < MIN_PATHS:
            raise ValueError("the solver needs at least %i paths"
                             % MIN_PATHS)
        if int(n_steps) < 1:
            raise ValueError("n_steps must be positive")
        if int(basis_degree) < 0:
            raise ValueError("basis_degree must be non-negative")
        if int(picard_iters) < 1:
            raise ValueError("picard_iters must be positive")

        self.n_paths = int(n_paths)
        self.n_steps = int(n_steps)
        self.basis_degree = int(basis_degree)
        self.picard_iters = int(picard_iters)
        self.n_boot = int(n_boot)
        self.block_size = int(block_size)


    def simplify(self, options=None):
        return {
            "n_paths": self.n_paths,
            "n_steps": self.n_steps,
            "basis_degree": self.basis_degree,
            "picard_iters": self.picard_iters,
            "n_boot": self.n_boot,
        }


def y_sup_bound(spec):
    """
    the sup-norm bound e^(K T) ||phi|| + |g0| (e^(K T) - 1)/K on Y
    """

    K, T = spec.K_g, spec.T
    phi = spec.phi_sup
    if K > 0:
        return exp(K * T) * phi + abs(spec.g0) * (exp(K * T) - 1.0) / K
    return phi + abs(spec.g0) * T


def y_sup_check(solution, tolerance=SUP_TOLERANCE):
    """
    max |Y| over every node and path against the sup-norm bound, with
    a relative allowance for regression overshoot
    """

    diag = solution.diagnostics
    bound = diag["y_sup_bound"] * (1.0 + tolerance)
    return BoundCheck("max |Y| over paths", diag["y_sup"], bound,
                      slack=0.0)


class BsdeSolution(object):
    """
    The outcome of one backward solve: the regression coefficients of
    every step, the per-path values of Y and Z, the initial value y0
    and gradient term z0, and the solver diagnostics.
    """


    def __init__(self, grid, basis_degree, y_coefficients, z_coefficients,
                 y_paths, z_paths, initial_samples, diagnostics):

        self.grid = grid
        self.basis_degree = basis_degree
        self.y_coefficients = y_coefficients
        self.z_coefficients = z_coefficients
        self.y_paths = y_paths
        self.z_paths = z_paths
        self.initial_samples = initial_samples
        self.diagnostics = diagnostics


    @property
    def y0(self):
        return float(np.mean(self.initial_samples))


    @property
    def z0(self):
        return np.array(self.z_paths[0, 0])


    def simplify(self, options=None):
        return {
            "y0": self.y0,
            "z0": self.z0.tolist(),
            "basis_degree": self.basis_degree,
            "diagnostics": self.diagnostics,
        }


def _exponents(d, degree):
    found = [()]
    for total in range(1, degree + 1):
        found.extend(combinations_with_replacement(range(d), total))
    return found


def _basis(x, center, scale, live, exponents):
    """
    monomials of the standardized state; coordinates with no spread
    across paths are left out
    """

    z = (x - center) / scale
    cols = list()
    for combo in exponents:
        if any(not live[j] for j in combo):
            continue
        col = np.ones(x.shape[0])
        for j in combo:
            col = col * z[:, j]
        cols.append(col)
    return np.column_stack(cols)


def _forward_block(job):
    spec, grid, stream, x0, count = job
    return simulate_forward(spec, grid, stream, x0, n_paths=count,
                            increments=True)


def _forward_blocks(spec, grid, stream, x0, n_paths, workers, block_size):
    jobs = [(spec, grid, stream.for_paths(b * block_size), x0, count)
            for b, count in path_blocks(n_paths, block_size)]
    return map_blocks(_forward_block, jobs, workers)


def _solve_normal(blocks_basis, targets, step):
    gram = tree_sum([B.T.dot(B) for B in blocks_basis])
    cond = float(np.linalg.cond(gram))
    if not cond <= MAX_CONDITION:
        raise DegradedBasisError(step, cond)

    factor = cho_factor(gram)
    rhs = tree_sum([B.T.dot(t) for B, t in zip(blocks_basis, targets)])
    return cho_solve(factor, rhs), cond


def solve_bsde(spec, grid, rng, x0, n_paths, basis_degree=3,
               picard_iters=3, workers=1, block_size=BLOCK_PATHS):
    """
    Backward induction on grid. At each step

      Z_k = E[(Y_{k+1} - E[Y_{k+1} | X_k]) dB_k | X_k] / dt_k
      Y_k = E[Y_{k+1} | X_k] + g(Y_k, Z_k) dt_k

    with the implicit Y equation solved by picard_iters fixed point
    iterations. rng is the RngStream of the forward paths.
    """

    if spec.is_g_mode():
        raise InvalidSpecError("the backward solver is classical only")
    if int(n_paths) < MIN_PATHS:
        raise ValueError("the solver needs at least %i paths" % MIN_PATHS)

    dt = grid.steps
    K = spec.K_g
    if K > 0 and np.max(dt) * K >= 1.0:
        raise StepSizeError("time step %g is not below 1/K_g = %g"
                            % (np.max(dt), 1.0 / K))

    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    forward = _forward_blocks(spec, grid, rng, x0, n_paths, workers,
                              block_size)
    paths = [X for X, _dB in forward]
    increments = [dB for _X, dB in forward]

    d = spec.d
    exponents = _exponents(d, basis_degree)
    g = spec.driver.evaluate
    phi = spec.terminal.evaluate

    n_nodes = len(grid)
    Y = [phi(X[-1]) for X in paths]
    y_hist = [[None] * n_nodes for _X in paths]
    z_hist = [[None] * (n_nodes - 1) for _X in paths]
    for b, X in enumerate(paths):
        y_hist[b][-1] = Y[b]

    y_coefs = [None] * (n_nodes - 1)
    z_coefs = [None] * (n_nodes - 1)
    conditions = [None] * (n_nodes - 1)
    residuals = [None] * (n_nodes - 1)
    initial = None

    for k in range(n_nodes - 2, -1, -1):
        sums = tree_sum([moment_sums(X[k]) for X in paths])
        n = sums[0]
        center = sums[1] / n
        spread = np.sqrt(np.maximum(sums[2] / n - center * center, 0.0))
        live = spread > 1e-12 * (1.0 + np.abs(center))
        scale = np.where(live, spread, 1.0)

        basis = [_basis(X[k], center, scale, live, exponents)
                 for X in paths]

        a_y, cond = _solve_normal(basis, Y, k)
        fitted = [B.dot(a_y) for B in basis]

        z_targets = [((y - c)[:, None] * dB[k]) / dt[k]
                     for y, c, dB in zip(Y, fitted, increments)]
        a_z, _cond = _solve_normal(basis, z_targets, k)
        Z = [B.dot(a_z) for B in basis]

        Y_new = list()
        for c, z in zip(fitted, Z):
            y = c
            for _i in range(picard_iters):
                y = c + g(y, z) * dt[k]
            Y_new.append(y)

        res = tree_sum([moment_sums(yn_next - yn + g(yn, z) * dt[k] -
                                    np.sum(z * dB[k], axis=-1))
                        for yn_next, yn, z, dB in
                        zip(Y, Y_new, Z, increments)])
        residuals[k] = float(res[2] / res[0])

        if k == 0:
            initial = np.concatenate([y_next + g(yn, z) * dt[0]
                                      for y_next, yn, z in
                                      zip(Y, Y_new, Z)])

        for b in range(len(paths)):
            y_hist[b][k] = Y_new[b]
            z_hist[b][k] = Z[b]

        y_coefs[k] = a_y
        z_coefs[k] = a_z
        conditions[k] = cond
        Y = Y_new

        _log.debug("step %i: condition %.3g, residual %.3g",
                   k, cond, residuals[k])

    y_paths = np.concatenate([np.array(h) for h in y_hist], axis=1)
    z_paths = np.concatenate([np.array(h) for h in z_hist], axis=1)

    y_sup = float(np.max(np.abs(y_paths)))
    bound = y_sup_bound(spec)
    diagnostics = {
        "max_condition": float(max(conditions)),
        "conditions": conditions,
        "residual_mean_square": float(np.sum(residuals)),
        "residuals": residuals,
        "y_sup": y_sup,
        "y_sup_bound": bound,
    }

    solution = BsdeSolution(grid, basis_degree, y_coefs, z_coefs,
                            y_paths, z_paths, initial, diagnostics)

    K, T = spec.K_g, spec.T
    crude = exp(K * T) * (spec.phi_sup + abs(spec.g0) * T * exp(K * T))
    if not abs(solution.y0) <= crude:
        _log.warning("y0 = %g exceeds the comparison bound %g",
                     solution.y0, crude)

    return solution


class UEstimate(object):
    """
    A point estimate of u(T, x) with its bootstrap standard error. The
    per-path samples are kept so paired estimates can be resampled
    together.
    """


    def __init__(self, value, stderr, method, samples, solution=None):
        self.value = float(value)
        self.stderr = float(stderr)
        self.method = method
        self.samples = samples
        self.solution = solution


    def resample(self, index):
        return float(np.mean(self.samples[index]))


    def simplify(self, options=None):
        simple = {
            "value": self.value,
            "stderr": self.stderr,
            "method": self.method,
        }
        if self.solution is not None:
            simple["diagnostics"] = self.solution.diagnostics
        return simple


def estimate_u(spec, x0, params, rng, workers=1):
    """
    u(T, x0): the backward solver when the driver is non-zero, else
    the plain Monte Carlo mean of phi(X_T). The standard error is a
    bootstrap over paths; for the backward solver it resamples the
    last regression step with the later steps held fixed.
    """

    grid = uniform_grid(spec.T, params.n_steps)
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))

    if spec.driver.is_zero():
        forward = _forward_blocks(spec, grid, rng, x0, params.n_paths,
                                  workers, params.block_size)
        samples = np.concatenate([spec.terminal.evaluate(X[-1])
                                  for X, _dB in forward])
        solution = None
        method = "mc"
    else:
        solution = solve_bsde(spec, grid, rng, x0, params.n_paths,
                              params.basis_degree, params.picard_iters,
                              workers, params.block_size)
        samples = solution.initial_samples
        method = "bsde"

    est = UEstimate(np.mean(samples), 0.0, method, samples, solution)
    est.stderr = bootstrap_stderr(est.resample, len(samples),
                                  rng.for_lane(rng.lane + 1),
                                  params.n_boot)
    return est


def difference_stderr(first, second, rng, n_boot=200):
    """
    paired bootstrap standard error of first - second, for estimates
    computed on common random numbers
    """

    if len(first.samples) != len(second.samples):
        raise ValueError("paired estimates need equal path counts")

    def statistic(index):
        return first.resample(index) - second.resample(index)

    return bootstrap_stderr(statistic, len(first.samples), rng, n_boot)


def bsde_apriori_check(solutions, consts, d1=2.0):
    """
    the a priori bounds on E[sup e^(mu t) |Y_t|] and E[(int e^(2 mu s)
    |Z_s|^2 ds)^(1/2)] against d1 e^(mu T) (||phi|| + |g0|/mu), over
    independent solves
    """

    mu = consts.mu
    T = consts.T
    grid = solutions[0].grid
    nodes = grid.nodes
    dt = grid.steps

    rows = list()
    sup_vals = list()
    energy_vals = list()

    for i, sol in enumerate(solutions):
        weight = np.exp(mu * nodes)
        sup_y = np.max(weight[:, None] * np.abs(sol.y_paths), axis=0)
        z2 = np.sum(sol.z_paths ** 2, axis=-1)
        energy = np.sqrt(np.sum((np.exp(2 * mu * nodes[:-1]) *
                                 dt)[:, None] * z2, axis=0))

        sup_vals.append(float(np.mean(sup_y)))
        energy_vals.append(float(np.mean(energy)))
        rows.append((i, sup_vals[-1], energy_vals[-1]))

    driver_term = abs(consts.g0) / mu if mu > 0 else 0.0
    bound = d1 * exp(mu * T) * (consts.phi_sup + driver_term)

    def summary(vals):
        mean = float(np.mean(vals))
        err = float(np.std(vals, ddof=1) / np.sqrt(len(vals))) \
            if len(vals) > 1 else 0.0
        return mean, err

    sup_mean, sup_err = summary(sup_vals)
    energy_mean, energy_err = summary(energy_vals)

    report = MomentReport("Backward a priori bounds",
                          columns=("run", "sup_Y", "z_energy"),
                          rows=rows,
                          extra={"mu": mu, "d1": d1, "bound": bound})
    report.add(BoundCheck("E[sup e^(mu t)|Y_t|]", sup_mean, bound,
                          sup_err, slack=0.0))
    report.add(BoundCheck("E[(int e^(2 mu s)|Z_s|^2 ds)^(1/2)]",
                          energy_mean, bound, energy_err, slack=0.0))
    report.entry = "bsde_apriori"
    report.check()
    return report


#
# The end.
