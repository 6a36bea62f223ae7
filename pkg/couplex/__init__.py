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
Coupling, Girsanov reweighting, BSDE and G-expectation numerics for
checking gradient estimates of diffusion semigroups.

The package is laid out bottom-up: :mod:`couplex.model` describes
problems and every constant derived from them, :mod:`couplex.paths`
supplies reproducible randomness and time grids, and the
:mod:`couplex.coupling`, :mod:`couplex.bsde` and :mod:`couplex.gexp`
modules simulate. :mod:`couplex.harness` ties them to the gradient
bounds, and :mod:`couplex.cli` runs experiments from JSON configs.

:author: The couplex authors
:license: LGPL
"""


__version__ = "0.9.0"


__all__ = ("CouplexError", "__version__", )


class CouplexError(Exception):
    """
    Base class for every error raised by couplex. The command-line
    front-end turns these into an exit status of 1.
    """

    pass


#
# The end.
