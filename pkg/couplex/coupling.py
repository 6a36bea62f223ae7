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
Forward and coupled simulation of the diffusion, the Girsanov weight
of the coupling, and the moment checks built on them.

The coupled pair runs X from x and Y from y on common noise, with Y
carrying the extra drift (1/xi_t) sigma(X)(X - Y) which forces the gap
X - Y to zero as t approaches T. Over each step the linear contraction
is integrated exactly with sigma frozen at the left node, and the
Girsanov drift h is the step average of that contraction. The discrete
weight is then an exact change of measure for the discrete scheme.

Path sets are simulated lazily in fixed blocks by :class:`BundleSet`,
each block reducing itself to the sums a check needs, so no check ever
holds every path in memory.

:author: The couplex authors
:license: LGPL
"""


import logging

from math import sqrt

import numpy as np

from scipy.linalg import eigh

from . import CouplexError
from .check import BoundCheck, MomentReport
from .model import MODE_G, InvalidSpecError, TerminalSpec
from .paths import (BLOCK_PATHS, build_grid, gaussian_increments,
                    mean_stderr, moment_sums, path_blocks, tree_sum)
from .workers import map_blocks


__all__ = (
    "NumericalBlowupError", "DRIFT_CAP",
    "ControlPath", "CoupledPathBundle", "BundleSet",
    "simulate_forward", "simulate_coupled", "girsanov_weight",
    "gap_energy", "trace_rows",
    "weight_mean_check", "girsanov_moment_check",
    "exp_functional_check", "u_moment_check", "drift_moment_check",
    "gap_energy_check", "girsanov_identity_check",
    "terminal_rate_check", "supermartingale_check",
    "identity_terminals", )


_log = logging.getLogger(__name__)


DRIFT_CAP = 100.0

MEASURE_ORIGINAL = "original"
MEASURE_TILTED = "tilted"

_GAUSS_NODES, _GAUSS_WEIGHTS = np.polynomial.legendre.leggauss(8)


class NumericalBlowupError(CouplexError):
    """
    A simulated state stopped being finite
    """


    def __init__(self, step, time, what="state"):
        CouplexError.__init__(self, step, time, what)
        self.step = step
        self.time = time
        self.what = what


    def __str__(self):
        return "non-finite %s at step %i (t=%g)" % \
            (self.what, self.step, self.time)


def _sqrt_pair(gamma):
    """
    the symmetric square roots of gamma and of its inverse
    """

    w, v = eigh(gamma)
    if np.any(w <= 0):
        raise InvalidSpecError("control matrices must be positive definite")
    root = (v * np.sqrt(w)).dot(v.T)
    inv_root = (v / np.sqrt(w)).dot(v.T)
    return root, inv_root


class ControlPath(object):
    """
    A piecewise constant volatility control: gamma_j on the j-th of K
    equal cells of [0, T]. Square roots of gamma_j and of its inverse
    are computed once.
    """


    def __init__(self, gammas, T, gamma_set=None):
        mats = [np.atleast_2d(np.asarray(g, dtype=float)) for g in gammas]
        if not mats:
            raise InvalidSpecError("a control needs at least one cell")

        if gamma_set is not None:
            lo = gamma_set.lower ** 2
            hi = gamma_set.upper ** 2
            tol = 1e-12 * max(1.0, hi)
            for m in mats:
                eigs = np.linalg.eigvalsh(m)
                if eigs.min() < lo - tol or eigs.max() > hi + tol:
                    raise InvalidSpecError("control matrix outside the"
                                           " spectral bounds of gamma")

        self.gammas = tuple(mats)
        self.T = float(T)
        self.d = mats[0].shape[0]

        roots = [_sqrt_pair(m) for m in mats]
        self.roots = np.array([r for r, _i in roots])
        self.inv_roots = np.array([i for _r, i in roots])
        self.inverses = np.array([np.linalg.inv(m) for m in mats])


    @classmethod
    def constant(cls, gamma, T, cells=1, gamma_set=None):
        return cls([gamma] * cells, T, gamma_set)


    @property
    def K(self):
        return len(self.gammas)


    def cells_for(self, times):
        """
        the control cell holding each time
        """

        times = np.asarray(times, dtype=float)
        cells = np.floor(times * self.K / self.T + 1e-9).astype(int)
        return np.clip(cells, 0, self.K - 1)


    def for_grid(self, grid):
        """
        (sqrt gamma, sqrt gamma^-1, gamma^-1) for every step of grid
        """

        cells = self.cells_for(grid.nodes[:-1])
        return self.roots[cells], self.inv_roots[cells], self.inverses[cells]


    def simplify(self, options=None):
        if self.d == 1:
            return [float(m[0, 0]) for m in self.gammas]
        return [m.tolist() for m in self.gammas]


def _apply(mats, k, vecs):
    if mats is None:
        return vecs
    return np.einsum("ij,nj->ni", mats[k], vecs)


def simulate_forward(spec, grid, rng, x0, control=None, n_paths=1,
                     increments=False):
    """
    Euler-Maruyama paths of dX = sigma(X) dB + b(X) dt from x0, shaped
    ``(n_nodes, n_paths, d)``. In G-mode the increments of B are
    sqrt(gamma) dW for the control's gamma. With increments set,
    returns the pair (paths, dB).
    """

    if (control is not None) != spec.is_g_mode():
        raise InvalidSpecError("a control is required in G-mode and"
                               " only there")

    d = spec.d
    dt = grid.steps
    dB = gaussian_increments(rng, grid, d, n_paths)
    if control is not None:
        roots = control.for_grid(grid)[0]
        dB = np.einsum("kij,knj->kni", roots, dB)

    X = np.empty((len(grid), n_paths, d))
    X[0] = np.asarray(x0, dtype=float)

    sigma = spec.sigma.evaluate
    drift = spec.b.evaluate

    for k in range(grid.n_steps):
        x = X[k]
        nxt = x + sigma(x) * dB[k] + drift(x) * dt[k]
        if not np.all(np.isfinite(nxt)):
            raise NumericalBlowupError(k, grid.nodes[k + 1])
        X[k + 1] = nxt

    return (X, dB) if increments else X


class CoupledPathBundle(object):
    """
    One block of coupled paths: the states X and Y at every grid node,
    H = |X - Y|^2, the running log Girsanov weight, and which paths
    had their coupling drift clamped.
    """


    def __init__(self, grid, X, Y, log_weight_path, drift_capped,
                 control=None, measure=MEASURE_ORIGINAL):
        self.grid = grid
        self.X = X
        self.Y = Y
        self.H = np.sum((X - Y) ** 2, axis=-1)
        self.log_weight_path = log_weight_path
        self.drift_capped = drift_capped
        self.control = control
        self.measure = measure


    @property
    def n_paths(self):
        return self.X.shape[1]


    @property
    def log_weight(self):
        return self.log_weight_path[-1]


    @property
    def cap_fraction(self):
        return float(np.mean(self.drift_capped))


def simulate_coupled(spec, schedule, grid, rng, x, y, drift_cap=DRIFT_CAP,
                     control=None, n_paths=1, measure=MEASURE_ORIGINAL):
    """
    Simulate the coupled pair from (x, y) on grid. Under the original
    measure B drives both X and Y; under the tilted measure the
    shifted noise B~ = B - int h dt drives them, which leaves Y free of
    the coupling drift. Either way the recorded log weight is
    u = int h . dB' - 1/2 int h' gamma^-1 h dt, with dB' = dB in the
    classical case.
    """

    if not drift_cap > 0:
        raise ValueError("drift_cap must be positive")

    if measure not in (MEASURE_ORIGINAL, MEASURE_TILTED):
        raise ValueError("unknown measure %r" % measure)

    if (control is not None) != spec.is_g_mode():
        raise InvalidSpecError("a control is required in G-mode and"
                               " only there")

    d = spec.d
    nodes = grid.nodes
    dt = grid.steps
    n_nodes = len(nodes)

    xi_integral = schedule.inverse_integral(nodes[:-1], nodes[1:])

    dW = gaussian_increments(rng, grid, d, n_paths)
    if control is not None:
        roots, inv_roots, inverses = control.for_grid(grid)
    else:
        roots = inv_roots = inverses = None

    X = np.empty((n_nodes, n_paths, d))
    Y = np.empty((n_nodes, n_paths, d))
    lw = np.zeros((n_nodes, n_paths))
    capped = np.zeros(n_paths, dtype=bool)

    X[0] = np.asarray(x, dtype=float)
    Y[0] = np.asarray(y, dtype=float)

    sigma = spec.sigma.evaluate
    drift = spec.b.evaluate
    tilted = (measure == MEASURE_TILTED)

    for k in range(n_nodes - 1):
        xk, yk = X[k], Y[k]
        sx, sy = sigma(xk), sigma(yk)
        gap = xk - yk

        # exact contraction of the gap over the step, sigma frozen
        pull = -np.expm1(-sx * xi_integral[k]) * gap
        h = -pull / (sy * dt[k])

        norm = np.sqrt(np.sum(h * h, axis=-1))
        over = norm > drift_cap
        if np.any(over):
            h[over] *= (drift_cap / norm[over])[:, None]
            capped |= over

        dB = _apply(roots, k, dW[k])
        dB_aux = _apply(inv_roots, k, dW[k])
        energy = np.sum(h * _apply(inverses, k, h), axis=-1) * dt[k]

        if tilted:
            X[k + 1] = xk + sx * (dB + h * dt[k]) + drift(xk) * dt[k]
            Y[k + 1] = yk + sy * dB + drift(yk) * dt[k]
            lw[k + 1] = lw[k] + np.sum(h * dB_aux, axis=-1) + 0.5 * energy
        else:
            X[k + 1] = xk + sx * dB + drift(xk) * dt[k]
            Y[k + 1] = yk + sy * (dB - h * dt[k]) + drift(yk) * dt[k]
            lw[k + 1] = lw[k] + np.sum(h * dB_aux, axis=-1) - 0.5 * energy

        if not (np.all(np.isfinite(X[k + 1])) and
                np.all(np.isfinite(Y[k + 1]))):
            raise NumericalBlowupError(k, nodes[k + 1])
        if not np.all(np.isfinite(lw[k + 1])):
            raise NumericalBlowupError(k, nodes[k + 1], "log weight")

    return CoupledPathBundle(grid, X, Y, lw, capped, control, measure)


def girsanov_weight(bundle):
    """
    U_T = exp(u_T) for each path of the bundle
    """

    return np.exp(bundle.log_weight)


def gap_energy(bundle, spec, schedule, power=1.0):
    """
    the integral of |X - Y|^(2 power) / xi^(2 power) over the grid for
    every path. Within a step the gap decays as exp(-sigma(X_k) int
    1/xi) and the integral is taken by Gauss-Legendre quadrature.
    """

    nodes = bundle.grid.nodes
    total = np.zeros(bundle.n_paths)
    sigma = spec.sigma.evaluate

    for k in range(len(nodes) - 1):
        t0, t1 = nodes[k], nodes[k + 1]
        half = 0.5 * (t1 - t0)
        s = t0 + half * (_GAUSS_NODES + 1.0)
        w = half * _GAUSS_WEIGHTS

        decay_rate = schedule.inverse_integral(np.full(s.shape, t0), s)
        xi = schedule.value(s)

        gap2 = (bundle.X[k] - bundle.Y[k]) ** 2
        sx = sigma(bundle.X[k])
        decay = np.exp(-2.0 * sx[:, :, None] * decay_rate[None, None, :])
        sq = np.sum(decay * gap2[:, :, None], axis=1)

        total += np.sum((sq ** power / xi ** (2.0 * power)) * w, axis=-1)

    return total


def trace_rows(bundle, limit):
    """
    (columns, rows) of a per-path trace of the first limit paths
    """

    d = bundle.X.shape[-1]
    columns = (("path", "t") +
               tuple("X_%i" % (i + 1) for i in range(d)) +
               tuple("Y_%i" % (i + 1) for i in range(d)) +
               ("H", "log_weight"))

    rows = list()
    for p in range(min(limit, bundle.n_paths)):
        for k, t in enumerate(bundle.grid.nodes):
            rows.append((p, float(t)) +
                        tuple(float(v) for v in bundle.X[k, p]) +
                        tuple(float(v) for v in bundle.Y[k, p]) +
                        (float(bundle.H[k, p]),
                         float(bundle.log_weight_path[k, p])))
    return columns, rows


# ---- Block statistics ----
#


def _weights(bundle):
    if bundle.measure == MEASURE_ORIGINAL:
        return girsanov_weight(bundle)
    return np.ones(bundle.n_paths)


def _stat_weight(bundle, params, exponent=1.0):
    u = girsanov_weight(bundle)
    return {"weight": moment_sums(u),
            "power": moment_sums(u ** exponent)}


def _stat_exp_functional(bundle, params, scale):
    energy = gap_energy(bundle, params.spec, params.schedule)
    return {"functional": moment_sums(_weights(bundle) *
                                      np.exp(scale * energy))}


def _stat_gap_moment(bundle, params, power=1.0):
    energy = gap_energy(bundle, params.spec, params.schedule, power)
    return {"moment": moment_sums(_weights(bundle) * energy)}


def _stat_u_moment(bundle, params, order):
    return {"moment": moment_sums(np.abs(bundle.log_weight) ** order)}


def _stat_identity(bundle, params, terminals=()):
    u = girsanov_weight(bundle)
    xt = bundle.X[-1]
    vals = np.array([u * phi.evaluate(xt) for phi in terminals])
    return {"identity": moment_sums(vals, axis=1)}


def _stat_terminal(bundle, params):
    return {}, {"H_T": bundle.H[-1]}


def _stat_supermartingale(bundle, params, rate, lam):
    nodes = bundle.grid.nodes
    steps = params.schedule.inverse_integral(nodes[:-1], nodes[1:])
    growth = -rate * nodes + 2.0 * lam * np.concatenate([[0.0],
                                                         np.cumsum(steps)])
    with np.errstate(divide="ignore"):
        M = np.exp(np.log(bundle.H) + growth[:, None])
    return {"level": moment_sums(M, axis=1),
            "increment": moment_sums(np.diff(M, axis=0), axis=1)}


_STATISTICS = {
    "weight": _stat_weight,
    "exp_functional": _stat_exp_functional,
    "gap_moment": _stat_gap_moment,
    "u_moment": _stat_u_moment,
    "identity": _stat_identity,
    "terminal": _stat_terminal,
    "supermartingale": _stat_supermartingale,
}


class BundleSet(object):
    """
    A reproducible set of n_paths coupled paths from (x, y). Paths are
    simulated block by block on demand, each path drawing from its own
    counter range of ``stream`` by global index. Each block is reduced
    to the sums of one statistic before the blocks are pooled in block
    order.
    """


    def __init__(self, spec, schedule, grid, stream, x, y, n_paths,
                 drift_cap=DRIFT_CAP, control=None,
                 measure=MEASURE_ORIGINAL, workers=1,
                 block_size=BLOCK_PATHS):

        self.spec = spec
        self.schedule = schedule
        self.grid = grid
        self.stream = stream
        self.x = np.atleast_1d(np.asarray(x, dtype=float))
        self.y = np.atleast_1d(np.asarray(y, dtype=float))
        self.n_paths = int(n_paths)
        self.drift_cap = drift_cap
        self.control = control
        self.measure = measure
        self.workers = workers
        self.block_size = block_size


    @property
    def separation(self):
        return float(np.linalg.norm(self.x - self.y))


    def derive(self, **changes):
        """
        a copy of this set with some of its parameters replaced
        """

        params = dict(spec=self.spec, schedule=self.schedule,
                      grid=self.grid, stream=self.stream, x=self.x,
                      y=self.y, n_paths=self.n_paths,
                      drift_cap=self.drift_cap, control=self.control,
                      measure=self.measure, workers=self.workers,
                      block_size=self.block_size)
        params.update(changes)
        return BundleSet(**params)


    def simulate_block(self, block, count):
        first = block * self.block_size
        return simulate_coupled(self.spec, self.schedule, self.grid,
                                self.stream.for_paths(first),
                                self.x, self.y, self.drift_cap,
                                self.control, count, self.measure)


    def bundles(self):
        """
        the blocks of this set as CoupledPathBundle instances, in order
        """

        for block, count in path_blocks(self.n_paths, self.block_size):
            yield self.simulate_block(block, count)


    def reduce(self, statistic, **options):
        """
        simulate every block, reduce each with the named statistic, and
        pool them. Returns a dict of pooled sums plus ``n``, ``capped``
        and any per-path samples (concatenated in block order).
        """

        blocks = path_blocks(self.n_paths, self.block_size)
        jobs = [(self, block, count, statistic, options)
                for block, count in blocks]
        found = map_blocks(_run_block, jobs, self.workers)

        pooled = tree_sum([sums for sums, _samples in found])
        samples = dict()
        for _sums, block_samples in found:
            for key, val in block_samples.items():
                samples.setdefault(key, []).append(val)
        for key in samples:
            pooled[key] = np.concatenate(samples[key])

        capped = pooled["capped"]
        if capped > 0.01 * pooled["n"]:
            _log.warning("drift cap %g active on %i of %i paths",
                         self.drift_cap, capped, pooled["n"])

        return pooled


def _run_block(job):
    bundles, block, count, statistic, options = job
    bundle = bundles.simulate_block(block, count)

    found = _STATISTICS[statistic](bundle, bundles, **options)
    if isinstance(found, tuple):
        sums, samples = found
    else:
        sums, samples = found, {}

    sums["n"] = float(count)
    sums["capped"] = float(np.sum(bundle.drift_capped))
    return sums, samples


# ---- Checks ----
#


def _as_sets(bundles):
    if isinstance(bundles, BundleSet):
        return [bundles]
    return list(bundles)


def _gamma_factor(consts):
    return consts.Lam_gamma ** 2 if consts.mode == MODE_G else 1.0


def weight_mean_check(bundles):
    """
    E[U_T] = 1 within three standard errors for each bundle set
    """

    report = MomentReport("Girsanov weight mean",
                          columns=("r", "mean", "stderr"))
    for bset in _as_sets(bundles):
        pooled = bset.reduce("weight")
        mean, err = mean_stderr(pooled["weight"])
        report.add(BoundCheck("|E[U_T] - 1| at r=%g" % bset.separation,
                              abs(mean - 1.0), 0.0, err))
        report.rows.append((bset.separation, float(mean), float(err)))

    report.entry = "weight_mean"
    report.check()
    return report


def girsanov_moment_check(bundles, consts):
    """
    E[U_T^(1+delta)] against
    exp(theta s / (8 Lam^2 xi_0 (1 + s)) |x-y|^2), s = sqrt(1 + 1/delta)
    """

    delta = consts.delta
    s = sqrt(1.0 + 1.0 / delta)
    rate = (consts.theta * s /
            (8.0 * consts.Lam_sigma ** 2 * _gamma_factor(consts) *
             consts.xi0 * (1.0 + s)))

    report = MomentReport("Girsanov moment", columns=("r", "mean",
                                                      "stderr", "bound"),
                          extra={"delta": delta})
    for bset in _as_sets(bundles):
        pooled = bset.reduce("weight", exponent=1.0 + delta)
        mean, err = mean_stderr(pooled["power"])
        bound = np.exp(rate * bset.separation ** 2)
        report.add(BoundCheck("E[U^(1+delta)] at r=%g" % bset.separation,
                              mean, bound, err, relative=True))
        report.rows.append((bset.separation, float(mean), float(err),
                            float(bound)))

    report.entry = "girsanov_moment"
    report.check()
    return report


def exp_functional_check(bundles, consts):
    """
    the exponential functional exp(theta^2/(8 Lam^2) int |X-Y|^2/xi^2)
    against exp(theta |x-y|^2 / (8 Lam^2 xi_0)). In G-mode both carry
    an extra Lam_gamma^2 in the denominator. Paths simulated under the
    original measure are weighted by U_T.
    """

    base = 8.0 * consts.Lam_sigma ** 2 * _gamma_factor(consts)
    scale = consts.theta ** 2 / base

    report = MomentReport("Exponential functional",
                          columns=("r", "mean", "stderr", "bound"))
    for bset in _as_sets(bundles):
        pooled = bset.reduce("exp_functional", scale=scale)
        mean, err = mean_stderr(pooled["functional"])
        bound = np.exp(consts.theta * bset.separation ** 2 /
                       (base * consts.xi0))
        report.add(BoundCheck("exp functional at r=%g" % bset.separation,
                              mean, bound, err, relative=True))
        report.rows.append((bset.separation, float(mean), float(err),
                            float(bound)))

    report.entry = "exp_functional"
    report.check()
    return report


def u_moment_check(bundles, consts, order=None):
    """
    (E|u_T|^p)^(1/p) / |x-y| over shrinking separations, extrapolated
    to |x-y| -> 0 and compared with C_alpha 2 Lam^2 / lam^3 /
    sqrt(xi^0_0). p defaults to alpha/2.
    """

    from .harness import extrapolate_slope

    if consts.mode == MODE_G:
        raise InvalidSpecError("the log weight moment bound is classical")

    if order is None:
        order = consts.alpha / 2.0

    rows = list()
    for bset in _as_sets(bundles):
        r = bset.separation
        pooled = bset.reduce("u_moment", order=order)
        mom, mom_err = mean_stderr(pooled["moment"])
        norm = mom ** (1.0 / order)
        norm_err = norm * mom_err / (order * mom) if mom > 0 else 0.0
        rows.append((r, float(norm), float(norm_err), float(norm / r),
                     float(norm_err / r)))

    slope, slope_err = extrapolate_slope([row[0] for row in rows],
                                         [row[3] for row in rows],
                                         [row[4] for row in rows])

    bound = (consts.C_alpha * 2.0 * consts.Lam_sigma ** 2 /
             consts.lam_sigma ** 3 / sqrt(consts.xi0_unit))

    report = MomentReport("Log weight moment slope",
                          columns=("r", "norm", "stderr", "quotient",
                                   "quotient_stderr"),
                          rows=rows,
                          extra={"order": order, "slope": slope,
                                 "slope_stderr": slope_err})
    report.add(BoundCheck("slope of (E|u_T|^p)^(1/p) at 0", slope, bound,
                          slope_err, slack=0.0))
    report.entry = "u_moment"
    report.check()
    return report


def drift_moment_check(bundles, consts, power=1.0):
    """
    E[int |X-Y|^(2p) / xi^(2p)] against |x-y|^(2p) / (2p theta
    xi_0^(2p-1)), under the tilted measure
    """

    label = ("Gap energy" if consts.mode == MODE_G else "Drift moment")
    report = MomentReport(label, columns=("r", "mean", "stderr", "bound"),
                          extra={"power": power})

    for bset in _as_sets(bundles):
        r = bset.separation
        pooled = bset.reduce("gap_moment", power=power)
        mean, err = mean_stderr(pooled["moment"])
        bound = r ** (2 * power) / (2 * power * consts.theta *
                                    consts.xi0 ** (2 * power - 1))
        report.add(BoundCheck("%s at r=%g" % (label.lower(), r),
                              mean, bound, err))
        report.rows.append((r, float(mean), float(err), float(bound)))

    report.entry = "gap_energy" if consts.mode == MODE_G else \
        "drift_moment"
    report.check()
    return report


def gap_energy_check(bundles, consts):
    """
    the G-mode energy bound E[int |Z|^2 / xi^2] <= |x-y|^2/(2 theta xi_0)
    for the coupling gap Z = X - Y
    """

    if consts.mode != MODE_G:
        raise InvalidSpecError("the gap energy check is for G-mode")
    return drift_moment_check(bundles, consts, 1.0)


def identity_terminals():
    """
    the bounded test functions of the importance sampling identity
    """

    return (TerminalSpec("sine"),
            TerminalSpec("tanh", amplitude=1.0, frequency=2.0),
            TerminalSpec("clamped-quadratic", amplitude=1.0, cap=1.0))


def girsanov_identity_check(bundles, terminals=None):
    """
    E[U_T phi(X_T)] from the coupled pair against a direct estimate of
    E[phi(X^y_T)]. The direct estimate runs the pair from (y, y), where
    the coupling drift vanishes, on an independent stream.
    """

    if terminals is None:
        terminals = identity_terminals()

    report = MomentReport("Importance sampling identity",
                          columns=("r", "terminal", "weighted", "direct",
                                   "stderr"))

    for bset in _as_sets(bundles):
        if bset.measure != MEASURE_ORIGINAL:
            raise ValueError("the identity check needs the original"
                             " measure")

        direct_set = bset.derive(x=bset.y, stream=bset.stream.for_lane(
            bset.stream.lane + 1))

        weighted = bset.reduce("identity", terminals=terminals)
        direct = direct_set.reduce("identity", terminals=terminals)

        w_mean, w_err = mean_stderr(weighted["identity"])
        d_mean, d_err = mean_stderr(direct["identity"])

        for j, phi in enumerate(terminals):
            err = float(np.hypot(w_err[j], d_err[j]))
            diff = abs(float(w_mean[j] - d_mean[j]))
            report.add(BoundCheck("identity for %s at r=%g" %
                                  (phi.kind, bset.separation),
                                  diff, 0.0, err))
            report.rows.append((bset.separation, phi.kind,
                                float(w_mean[j]), float(d_mean[j]), err))

    report.entry = "identity"
    report.check()
    return report


def terminal_rate_check(bundles, levels=3):
    """
    the median of H at T_eff must shrink by at least q^1.5 each time
    the tail of the grid is refined by one more factor q
    """

    report = MomentReport("Terminal coupling rate",
                          columns=("r", "level", "h_min", "median_H"))

    for bset in _as_sets(bundles):
        grid = bset.grid
        q = grid.q
        medians = list()

        for level in range(levels):
            h_min = grid.h_min * q ** level
            fine = build_grid(grid.T, grid.n0, q, h_min)
            pooled = bset.derive(grid=fine).reduce("terminal")
            med = float(np.median(pooled["H_T"]))
            medians.append(med)
            report.rows.append((bset.separation, level, h_min, med))

        for level in range(1, levels):
            prev, cur = medians[level - 1], medians[level]
            ratio = cur / prev if prev > 0 else 0.0
            report.add(BoundCheck("median H ratio at level %i, r=%g" %
                                  (level, bset.separation),
                                  ratio, q ** 1.5, slack=0.0))

    report.entry = "terminal_rate"
    report.check()
    return report


def supermartingale_check(bundles, consts):
    """
    E[H_t exp(-int (2 L_b + L_sigma^2 - 2 lam/xi))] must not increase
    from node to node beyond three standard errors. In G-mode the
    L_sigma^2 term carries Lam_gamma^2.
    """

    if consts.mode == MODE_G:
        rate = 2.0 * consts.L_b + \
            consts.Lam_gamma ** 2 * consts.L_sigma ** 2
    else:
        rate = 2.0 * consts.L_b + consts.L_sigma ** 2

    report = MomentReport("Supermartingale domination",
                          columns=("r", "t", "mean", "stderr",
                                   "increment", "increment_stderr"))

    for bset in _as_sets(bundles):
        if bset.measure != MEASURE_ORIGINAL:
            raise ValueError("the domination check needs the original"
                             " measure")

        pooled = bset.reduce("supermartingale", rate=rate,
                             lam=consts.lam_sigma)
        level, level_err = mean_stderr(pooled["level"])
        inc, inc_err = mean_stderr(pooled["increment"])

        excess = inc - 3.0 * inc_err
        worst = float(np.max(excess)) if len(excess) else 0.0
        # rounding floor for paths whose level is deterministic
        floor = 1e-9 * float(np.max(np.abs(level)))
        report.add(BoundCheck("largest increase beyond 3 stderr, r=%g" %
                              bset.separation, max(worst, 0.0), floor,
                              slack=0.0))

        nodes = bset.grid.nodes
        for k, t in enumerate(nodes):
            step = (float(inc[k - 1]), float(inc_err[k - 1])) if k else \
                (0.0, 0.0)
            report.rows.append((bset.separation, float(t), float(level[k]),
                                float(level_err[k])) + step)

    report.entry = "supermartingale"
    report.check()
    return report


#
# The end.
