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
Reproducible random numbers and time grids.

Every block of paths draws from its own counter-based stream, keyed by
the run seed and the experiment name, with the block index in the
counter. A block's numbers therefore never depend on how blocks are
spread over worker processes, and partial results are combined with a
fixed pairwise tree so the floating point sums never depend on it
either.

:author: The couplex authors
:license: LGPL
"""


import logging

from hashlib import sha256
from operator import add
from struct import unpack

import numpy as np

from . import CouplexError


__all__ = (
    "GridError", "BLOCK_PATHS",
    "RngStream", "TimeGrid", "build_grid", "uniform_grid",
    "gaussian_increments", "path_blocks",
    "tree_reduce", "tree_sum", "moment_sums", "mean_stderr",
    "bootstrap_stderr", )


_log = logging.getLogger(__name__)


BLOCK_PATHS = 4096

_MASK64 = (1 << 64) - 1


class GridError(CouplexError, ValueError):
    """
    time grid parameters outside their domain
    """

    pass


def _experiment_code(experiment):
    """
    a stable 64-bit code for an experiment name or number
    """

    if isinstance(experiment, int):
        return experiment & _MASK64
    digest = sha256(str(experiment).encode("utf-8")).digest()
    return unpack("<Q", digest[:8])[0]


class RngStream(object):
    """
    A Philox stream identified by (seed, experiment, path, lane). The
    seed and experiment form the 128-bit key. Every path owns the
    counter range whose top words are (lane, path index), and draws its
    increments step by step from the low words, so the noise of a path
    depends only on its global index.
    """


    def __init__(self, seed, experiment="default", path=0, lane=0):
        if seed is None:
            raise ValueError("RngStream needs an explicit seed")

        self.seed = int(seed) & _MASK64
        self.experiment = experiment
        self.path = int(path)
        self.lane = int(lane)


    def key(self):
        return np.array([self.seed, _experiment_code(self.experiment)],
                        dtype=np.uint64)


    def counter(self):
        return np.array([0, 0, self.lane, self.path], dtype=np.uint64)


    def generator(self):
        """
        a fresh numpy Generator positioned at the start of this stream
        """

        bitgen = np.random.Philox(key=self.key(), counter=self.counter())
        return np.random.Generator(bitgen)


    def for_paths(self, first):
        """
        the stream whose first path has global index first
        """

        return RngStream(self.seed, self.experiment, first, self.lane)


    def for_lane(self, lane):
        return RngStream(self.seed, self.experiment, self.path, lane)


    def for_experiment(self, experiment):
        return RngStream(self.seed, experiment, self.path, self.lane)


    def __eq__(self, other):
        return (isinstance(other, RngStream) and
                self.seed == other.seed and
                self.experiment == other.experiment and
                self.path == other.path and
                self.lane == other.lane)


    def __ne__(self, other):
        return not self.__eq__(other)


    def __repr__(self):
        return ("RngStream(%r, %r, path=%r, lane=%r)" %
                (self.seed, self.experiment, self.path, self.lane))


class TimeGrid(object):
    """
    Ascending times from 0 to T_eff = T - h_min. A uniform prefix of
    n0 steps up to T (1 - 1/n0) is followed by a geometric tail with
    ratio q toward T.
    """


    def __init__(self, nodes, T, n0, q=None, h_min=0.0):
        self.nodes = np.asarray(nodes, dtype=float)
        self.T = float(T)
        self.n0 = int(n0)
        self.q = q
        self.h_min = float(h_min)


    @property
    def T_eff(self):
        return float(self.nodes[-1])


    @property
    def steps(self):
        return np.diff(self.nodes)


    @property
    def n_steps(self):
        return len(self.nodes) - 1


    def __len__(self):
        return len(self.nodes)


    def simplify(self, options=None):
        return {
            "T": self.T,
            "T_eff": self.T_eff,
            "n0": self.n0,
            "q": self.q,
            "h_min": self.h_min,
            "n_nodes": len(self.nodes),
        }


def build_grid(T, n0, q, h_min):
    """
    the coupling grid: uniform nodes k T / n0 for k < n0, then
    t_{k+1} = T - q (T - t_k) while T - t_{k+1} > h_min, then T - h_min
    """

    if not T > 0:
        raise GridError("T must be positive")
    if int(n0) != n0 or n0 < 2:
        raise GridError("n0 must be an integer of at least 2")
    if not 0 < q < 1:
        raise GridError("q must lie in (0, 1)")
    if not 0 < h_min < T / float(n0):
        raise GridError("h_min must lie in (0, T/n0)")

    n0 = int(n0)
    nodes = [T * k / float(n0) for k in range(n0)]

    t = nodes[-1]
    while True:
        nxt = T - q * (T - t)
        if T - nxt <= h_min:
            break
        nodes.append(nxt)
        t = nxt

    t_eff = T - h_min
    if t_eff > nodes[-1]:
        nodes.append(t_eff)

    return TimeGrid(nodes, T, n0, q, h_min)


def uniform_grid(T, n_steps):
    """
    n_steps equal steps over [0, T], for the backward solver
    """

    if not T > 0:
        raise GridError("T must be positive")
    if int(n_steps) != n_steps or n_steps < 1:
        raise GridError("n_steps must be a positive integer")

    nodes = np.linspace(0.0, T, int(n_steps) + 1)
    return TimeGrid(nodes, T, n_steps)


def gaussian_increments(rng, grid, d, n_paths=1):
    """
    Brownian increments over each step of grid for paths rng.path to
    rng.path + n_paths - 1, shaped ``(n_steps, n_paths, d)``, with
    per-coordinate variance equal to the step size. Path i draws its
    steps in order from its own counter range, so its increments do not
    depend on n_paths or on the block it is simulated in.
    """

    normals = np.empty((grid.n_steps, n_paths, d))
    for i in range(n_paths):
        gen = rng.for_paths(rng.path + i).generator()
        normals[:, i, :] = gen.standard_normal((grid.n_steps, d))
    return normals * np.sqrt(grid.steps)[:, None, None]


def path_blocks(n_paths, block_size=BLOCK_PATHS):
    """
    (block index, path count) for each block of an n_paths run
    """

    n_paths = int(n_paths)
    if n_paths < 1:
        raise ValueError("n_paths must be positive")

    full, rest = divmod(n_paths, block_size)
    blocks = [(b, block_size) for b in range(full)]
    if rest:
        blocks.append((full, rest))
    return blocks


def tree_reduce(items, combine):
    """
    combine items pairwise, in order, as a balanced binary tree
    """

    items = list(items)
    if not items:
        raise ValueError("nothing to reduce")

    while len(items) > 1:
        paired = [combine(items[i], items[i + 1])
                  for i in range(0, len(items) - 1, 2)]
        if len(items) % 2:
            paired.append(items[-1])
        items = paired

    return items[0]


def _add(left, right):
    if isinstance(left, dict):
        return dict((key, _add(left[key], right[key])) for key in left)
    return add(left, right)


def tree_sum(items):
    """
    pairwise tree sum of numbers, arrays, or dicts of them
    """

    return tree_reduce(items, _add)


def moment_sums(values, axis=0):
    """
    count, sum and sum of squares along axis, for later pooling
    """

    values = np.asarray(values, dtype=float)
    n = values.shape[axis]
    return np.stack([np.full(np.sum(values, axis=axis).shape, float(n)),
                     np.sum(values, axis=axis),
                     np.sum(values * values, axis=axis)])


def mean_stderr(sums):
    """
    (mean, standard error of the mean) from pooled moment_sums
    """

    n, s1, s2 = sums[0], sums[1], sums[2]
    mean = s1 / n
    var = np.maximum(s2 - n * mean * mean, 0.0) / np.maximum(n - 1, 1)
    return mean, np.sqrt(var / n)


def bootstrap_stderr(statistic, n, rng, n_boot=200):
    """
    bootstrap standard error of statistic(index array) over n samples
    """

    if n < 2:
        return 0.0

    gen = rng.generator()
    reps = np.empty(n_boot)
    for i in range(n_boot):
        reps[i] = statistic(gen.integers(0, n, size=n))
    return float(np.std(reps, ddof=1))


#
# The end.
