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
Problem descriptors, hypothesis constants and coupling schedules.

A :class:`ProblemSpec` is built only from the coefficient families in
this module, so that every Lipschitz and ellipticity constant is known
exactly rather than estimated. :func:`derive_constants` turns a spec
into the constants appearing in the gradient bounds, and
:class:`CouplingSchedule` is the vanishing rate function which scales
the coupling drift.

:author: The couplex authors
:license: LGPL
"""


import logging

from json import dump, load
from math import exp, expm1, isinf, log, sqrt

import numpy as np

from . import CouplexError


__all__ = (
    "InvalidSpecError", "DomainError",
    "MODE_CLASSICAL", "MODE_G",
    "CoefficientField", "VolatilityField", "DriftField",
    "DriverSpec", "TerminalSpec", "UncertaintySet", "ProblemSpec",
    "ConstantConfig", "DerivedConstants", "derive_constants",
    "CouplingSchedule", "unit_schedule", "coupling_schedule",
    "schedule_eval", "check_schedule_inequality",
    "BoundFunction", "theorem_bound",
    "spec_from_json", "spec_to_json", "load_spec", "dump_spec",
    "builtin_spec", "builtin_spec_ids", )


_log = logging.getLogger(__name__)


MODE_CLASSICAL = "classical"
MODE_G = "g-mode"


class InvalidSpecError(CouplexError, ValueError):
    """
    A descriptor violates its hypothesis, or a constant the caller
    asked for is undefined for the spec
    """

    pass


class DomainError(CouplexError, ValueError):
    """
    An argument lies outside the domain of a schedule or a check
    """

    pass


def _vector(value, d, name):
    """
    broadcast a scalar or a length-d sequence into a float vector
    """

    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        arr = np.full(d, float(arr))
    if arr.shape != (d,):
        raise InvalidSpecError("%s must be a scalar or have length %i"
                               % (name, d))
    if not np.all(np.isfinite(arr)):
        raise InvalidSpecError("%s must be finite" % name)
    return arr


def _plain(value):
    """
    numpy values into JSON-friendly python values
    """

    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        return float(arr)
    return arr.tolist()


class CoefficientField(object):
    """
    Base class of the built-in coefficient families. Subclasses set
    ``kinds``, validate their parameters, and evaluate on arrays of
    states shaped ``(..., d)``.
    """

    kinds = ()
    role = None


    def __init__(self, kind, d):
        if kind not in self.kinds:
            raise InvalidSpecError("unknown %s kind %r, expected one of %s"
                                   % (self.role, kind,
                                      ", ".join(self.kinds)))
        self.kind = kind
        self.d = int(d)


    def lipschitz(self):
        """
        the exact Lipschitz constant of the field
        """

        raise NotImplementedError()


    def evaluate(self, x):
        raise NotImplementedError()


    def simplify(self, options=None):
        raise NotImplementedError()


    def __eq__(self, other):
        return (type(self) is type(other) and
                self.simplify() == other.simplify())


    def __ne__(self, other):
        return not self.__eq__(other)


    def __repr__(self):
        return "<%s %r>" % (type(self).__name__, self.simplify())


class VolatilityField(CoefficientField):
    """
    A diagonal matrix-valued volatility sigma(x). Only the diagonal is
    ever stored or evaluated.

    * ``constant``: sigma(x) = diag(m)
    * ``sine-perturbed``: sigma_ii(x) = m_i + r_i sin(k_i x_i)

    Differences are measured in the Frobenius norm, for which the
    declared Lipschitz constant max_i r_i k_i is attained.
    """

    kinds = ("constant", "affine", "sine-perturbed")
    role = "sigma"


    def __init__(self, kind, d, base=1.0, amplitude=0.0, frequency=0.0):
        CoefficientField.__init__(self, kind, d)

        if kind == "affine":
            raise InvalidSpecError("an affine sigma cannot satisfy the"
                                   " uniform ellipticity bounds")

        self.base = _vector(base, d, "sigma.base")

        if kind == "constant":
            amplitude = 0.0
            frequency = 0.0

        self.amplitude = _vector(amplitude, d, "sigma.amplitude")
        self.frequency = _vector(frequency, d, "sigma.frequency")

        if np.any(self.amplitude < 0) or np.any(self.frequency < 0):
            raise InvalidSpecError("sigma amplitude and frequency must be"
                                   " non-negative")

        if np.any(self.base - self.amplitude <= 0):
            raise InvalidSpecError("sigma must be uniformly elliptic:"
                                   " base - amplitude must be positive")


    @property
    def lower(self):
        """
        lambda_sigma, the smallest eigenvalue over the state space
        """

        return float(np.min(self.base - self.amplitude))


    @property
    def upper(self):
        """
        Lambda_sigma, the largest eigenvalue over the state space
        """

        return float(np.max(self.base + self.amplitude))


    def lipschitz(self):
        return float(np.max(self.amplitude * self.frequency))


    def is_constant(self):
        return self.lipschitz() == 0.0


    def evaluate(self, x):
        """
        the diagonal of sigma at each state in x
        """

        x = np.asarray(x, dtype=float)
        if self.kind == "constant" or not np.any(self.amplitude):
            return np.broadcast_to(self.base, x.shape).copy()
        return self.base + self.amplitude * np.sin(self.frequency * x)


    def simplify(self, options=None):
        return {
            "kind": self.kind,
            "base": _plain(self.base),
            "amplitude": _plain(self.amplitude),
            "frequency": _plain(self.frequency),
        }


class DriftField(CoefficientField):
    """
    A vector drift b(x).

    * ``constant``: b(x) = c
    * ``affine``: b(x) = A x + c, Lipschitz constant the spectral norm
      of A
    * ``sine-perturbed``: b_i(x) = c_i + r_i sin(k_i x_i)
    """

    kinds = ("constant", "affine", "sine-perturbed")
    role = "b"


    def __init__(self, kind, d, offset=0.0, matrix=None,
                 amplitude=0.0, frequency=0.0):
        CoefficientField.__init__(self, kind, d)

        self.offset = _vector(offset, d, "b.offset")

        if kind == "affine":
            if matrix is None:
                raise InvalidSpecError("an affine b requires a matrix")
            matrix = np.asarray(matrix, dtype=float)
            if matrix.shape != (d, d):
                raise InvalidSpecError("b.matrix must be %i by %i" % (d, d))
        else:
            matrix = np.zeros((d, d))

        if kind != "sine-perturbed":
            amplitude = 0.0
            frequency = 0.0

        self.matrix = matrix
        self.amplitude = _vector(amplitude, d, "b.amplitude")
        self.frequency = _vector(frequency, d, "b.frequency")

        if np.any(self.amplitude < 0) or np.any(self.frequency < 0):
            raise InvalidSpecError("b amplitude and frequency must be"
                                   " non-negative")


    def lipschitz(self):
        if self.kind == "affine":
            return float(np.linalg.norm(self.matrix, 2))
        return float(np.max(self.amplitude * self.frequency))


    def is_constant(self):
        return self.lipschitz() == 0.0


    def evaluate(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "affine":
            return np.einsum("ij,...j->...i", self.matrix, x) + self.offset
        elif self.kind == "sine-perturbed":
            return self.offset + self.amplitude * np.sin(self.frequency * x)
        else:
            return np.broadcast_to(self.offset, x.shape).copy()


    def simplify(self, options=None):
        simple = {
            "kind": self.kind,
            "offset": _plain(self.offset),
        }
        if self.kind == "affine":
            simple["matrix"] = self.matrix.tolist()
        elif self.kind == "sine-perturbed":
            simple["amplitude"] = _plain(self.amplitude)
            simple["frequency"] = _plain(self.frequency)
        return simple


class DriverSpec(object):
    """
    The BSDE driver g(y, z). With e = (1, ..., 1)/sqrt(d),

    * ``zero``: g = 0
    * ``linear``: g = g0 + K_g y + L_g (z . e)
    * ``sine-lipschitz``: g = g0 + K_g sin(y) + L_g sin(z . e)

    so K_g and L_g are exact Lipschitz constants in y and z.
    """

    kinds = ("zero", "linear", "sine-lipschitz")


    def __init__(self, kind="zero", g0=0.0, K_g=0.0, L_g=0.0):
        if kind not in self.kinds:
            raise InvalidSpecError("unknown driver kind %r" % kind)

        self.kind = kind
        self.g0 = float(g0)
        self.K_g = float(K_g)
        self.L_g = float(L_g)

        if kind == "zero" and (self.g0 or self.K_g or self.L_g):
            raise InvalidSpecError("the zero driver takes no parameters")

        if self.K_g < 0 or self.L_g < 0:
            raise InvalidSpecError("driver Lipschitz constants must be"
                                   " non-negative")


    def is_zero(self):
        return self.kind == "zero"


    def evaluate(self, y, z):
        """
        g at arrays y of shape (n,) and z of shape (n, d)
        """

        y = np.asarray(y, dtype=float)
        if self.kind == "zero":
            return np.zeros_like(y)

        z = np.asarray(z, dtype=float)
        zdir = z.sum(axis=-1) / sqrt(z.shape[-1])

        if self.kind == "linear":
            return self.g0 + self.K_g * y + self.L_g * zdir
        else:
            return self.g0 + self.K_g * np.sin(y) + self.L_g * np.sin(zdir)


    def simplify(self, options=None):
        return {
            "kind": self.kind,
            "g0": self.g0,
            "K_g": self.K_g,
            "L_g": self.L_g,
        }


class TerminalSpec(object):
    """
    The terminal function phi. One-dimensional profiles act on the
    first coordinate x_1; ``quadratic`` acts on |x|^2.

    * ``constant``: c
    * ``sine`` / ``cosine``: a sin(k x_1 + phase), a cos(k x_1 + phase)
    * ``tanh``: a tanh(k x_1), a smooth sign-like bump
    * ``linear``: offset + a x_1 (unbounded)
    * ``quadratic``: offset + a |x|^2 (unbounded)
    * ``clamped-linear``: clip(a x_1, -cap, cap)
    * ``clamped-quadratic``: clip(a |x|^2, -cap, cap)
    * ``sum``: the sum of ``terms``
    """

    kinds = ("constant", "sine", "cosine", "tanh", "linear", "quadratic",
             "clamped-linear", "clamped-quadratic", "sum")


    def __init__(self, kind, amplitude=1.0, frequency=1.0, phase=0.0,
                 offset=0.0, cap=None, terms=()):

        if kind not in self.kinds:
            raise InvalidSpecError("unknown terminal kind %r" % kind)

        self.kind = kind
        self.amplitude = float(amplitude)
        self.frequency = float(frequency)
        self.phase = float(phase)
        self.offset = float(offset)
        self.cap = None if cap is None else float(cap)
        self.terms = tuple(terms)

        if kind.startswith("clamped") and (self.cap is None or
                                           self.cap <= 0):
            raise InvalidSpecError("%s terminal requires a positive cap"
                                   % kind)

        if kind == "sum" and not self.terms:
            raise InvalidSpecError("sum terminal requires terms")


    def sup_norm(self):
        """
        ||phi||_inf, exact for every kind except ``sum``, where the sum
        of the term norms is an upper bound
        """

        kind = self.kind
        a = abs(self.amplitude)

        if kind == "constant":
            return abs(self.offset)
        elif kind in ("sine", "cosine", "tanh"):
            return a
        elif kind in ("linear", "quadratic"):
            return abs(self.offset) if a == 0 else float("inf")
        elif kind.startswith("clamped"):
            return self.cap if a else 0.0
        else:
            return sum(t.sup_norm() for t in self.terms)


    def is_bounded(self):
        return not isinf(self.sup_norm())


    def evaluate(self, x):
        """
        phi at each state of x, shaped (..., d); returns shape (...)
        """

        x = np.asarray(x, dtype=float)
        kind = self.kind
        a = self.amplitude
        x1 = x[..., 0]

        if kind == "constant":
            return np.full(x1.shape, self.offset)
        elif kind == "sine":
            return a * np.sin(self.frequency * x1 + self.phase)
        elif kind == "cosine":
            return a * np.cos(self.frequency * x1 + self.phase)
        elif kind == "tanh":
            return a * np.tanh(self.frequency * x1)
        elif kind == "linear":
            return self.offset + a * x1
        elif kind == "quadratic":
            return self.offset + a * np.sum(x * x, axis=-1)
        elif kind == "clamped-linear":
            return np.clip(a * x1, -self.cap, self.cap)
        elif kind == "clamped-quadratic":
            return np.clip(a * np.sum(x * x, axis=-1), -self.cap, self.cap)
        else:
            return sum(t.evaluate(x) for t in self.terms)


    def simplify(self, options=None):
        simple = {"kind": self.kind}

        if self.kind == "sum":
            simple["terms"] = [t.simplify(options) for t in self.terms]
            return simple

        if self.kind in ("constant", "linear", "quadratic"):
            simple["offset"] = self.offset
        if self.kind != "constant":
            simple["amplitude"] = self.amplitude
        if self.kind in ("sine", "cosine", "tanh"):
            simple["frequency"] = self.frequency
        if self.kind in ("sine", "cosine"):
            simple["phase"] = self.phase
        if self.cap is not None:
            simple["cap"] = self.cap

        return simple


class UncertaintySet(object):
    """
    The volatility uncertainty Gamma, generated by a finite list of
    positive definite matrices. In one dimension it is the interval
    [lower^2, upper^2] given by its two end points.
    """


    def __init__(self, matrices, lower=None, upper=None):
        mats = [np.atleast_2d(np.asarray(m, dtype=float)) for m in matrices]
        if not mats:
            raise InvalidSpecError("gamma requires at least one matrix")

        d = mats[0].shape[0]
        eigs = list()
        for m in mats:
            if m.shape != (d, d) or not np.allclose(m, m.T):
                raise InvalidSpecError("gamma matrices must be symmetric"
                                       " and %i by %i" % (d, d))
            eigs.extend(np.linalg.eigvalsh(m))

        lo = sqrt(max(min(eigs), 0.0)) if lower is None else float(lower)
        hi = sqrt(max(eigs)) if upper is None else float(upper)

        if lo <= 0:
            raise InvalidSpecError("gamma must be uniformly positive"
                                   " definite")

        tol = 1e-12 * max(1.0, hi * hi)
        if min(eigs) < lo * lo - tol or max(eigs) > hi * hi + tol:
            raise InvalidSpecError("gamma matrices exceed the declared"
                                   " spectral bounds")

        self.d = d
        self.matrices = tuple(mats)
        self.lower = lo
        self.upper = hi


    @classmethod
    def interval(cls, low, high):
        """
        the one-dimensional set [low, high] of variances
        """

        if not 0 < low <= high:
            raise InvalidSpecError("gamma interval needs 0 < low <= high")
        return cls([[[low]], [[high]]])


    def g_function(self, a):
        """
        G(A) = 1/2 sup over Gamma of tr(A gamma); the supremum of a
        linear function over the generated convex hull is taken at one
        of the generators. For d = 1 this is 1/2 (hi a+ - lo a-).
        """

        a = np.atleast_2d(np.asarray(a, dtype=float))
        return 0.5 * max(float(np.trace(a.dot(m))) for m in self.matrices)


    def simplify(self, options=None):
        if self.d == 1 and len(self.matrices) == 2:
            lo, hi = sorted(float(m[0, 0]) for m in self.matrices)
            return {"interval": [lo, hi]}
        return {
            "matrices": [m.tolist() for m in self.matrices],
            "lower": self.lower,
            "upper": self.upper,
        }


class ProblemSpec(object):
    """
    Everything describing one problem: dimension, coefficients,
    driver, terminal function, horizon and the optional uncertainty
    set. The presence of gamma selects G-mode.
    """


    def __init__(self, d, sigma, b, driver, terminal, T, gamma=None,
                 name=None):

        self.d = int(d)
        self.sigma = sigma
        self.b = b
        self.driver = driver
        self.terminal = terminal
        self.T = float(T)
        self.gamma = gamma
        self.name = name

        self.validate()


    def validate(self):
        if self.d < 1:
            raise InvalidSpecError("d must be at least 1")

        if not self.T > 0:
            raise InvalidSpecError("T must be positive")

        if not isinstance(self.sigma, VolatilityField):
            raise InvalidSpecError("sigma must be a built-in volatility")

        if not isinstance(self.b, DriftField):
            raise InvalidSpecError("b must be a built-in drift")

        if self.sigma.d != self.d or self.b.d != self.d:
            raise InvalidSpecError("coefficient dimensions must match d")

        if self.gamma is not None and self.gamma.d != self.d:
            raise InvalidSpecError("gamma dimension must match d")


    @property
    def mode(self):
        return MODE_CLASSICAL if self.gamma is None else MODE_G


    def is_g_mode(self):
        return self.gamma is not None


    @property
    def lam_sigma(self):
        return self.sigma.lower


    @property
    def Lam_sigma(self):
        return self.sigma.upper


    @property
    def L_sigma(self):
        return self.sigma.lipschitz()


    @property
    def L_b(self):
        return self.b.lipschitz()


    @property
    def K_g(self):
        return self.driver.K_g


    @property
    def L_g(self):
        return self.driver.L_g


    @property
    def g0(self):
        return self.driver.g0


    @property
    def phi_sup(self):
        return self.terminal.sup_norm()


    def hypothesis_constants(self):
        """
        the constants of the hypotheses, all exact by construction
        """

        consts = {
            "lam_sigma": self.lam_sigma,
            "Lam_sigma": self.Lam_sigma,
            "L_sigma": self.L_sigma,
            "L_b": self.L_b,
            "K_g": self.K_g,
            "L_g": self.L_g,
            "g0": self.g0,
            "phi_sup": self.phi_sup,
        }
        if self.gamma is not None:
            consts["lam_gamma"] = self.gamma.lower
            consts["Lam_gamma"] = self.gamma.upper
        return consts


    def with_terminal(self, terminal):
        """
        a copy of this spec with another terminal function
        """

        return ProblemSpec(self.d, self.sigma, self.b, self.driver,
                           terminal, self.T, self.gamma, self.name)


    def with_driver(self, driver):
        """
        a copy of this spec with another driver
        """

        return ProblemSpec(self.d, self.sigma, self.b, driver,
                           self.terminal, self.T, self.gamma, self.name)


    def simplify(self, options=None):
        return spec_to_json(self)


def _field_doc(doc, name):
    if not isinstance(doc, dict) or "kind" not in doc:
        raise InvalidSpecError("%s must be an object with a kind" % name)
    return dict(doc)


def _terminal_from_json(doc):
    doc = _field_doc(doc, "terminal")
    kind = doc.pop("kind")
    if kind == "sum":
        terms = [_terminal_from_json(t) for t in doc.pop("terms", ())]
        return TerminalSpec("sum", terms=terms)
    if kind == "constant" and "value" in doc:
        doc["offset"] = doc.pop("value")
    try:
        return TerminalSpec(kind, **doc)
    except TypeError as te:
        raise InvalidSpecError("terminal: %s" % te)


def _gamma_from_json(doc):
    if doc is None:
        return None
    if "interval" in doc:
        low, high = doc["interval"]
        return UncertaintySet.interval(float(low), float(high))
    if "matrices" in doc:
        return UncertaintySet(doc["matrices"], doc.get("lower"),
                              doc.get("upper"))
    raise InvalidSpecError("gamma needs an interval or a list of matrices")


def spec_from_json(doc, name=None):
    """
    build a ProblemSpec from its JSON document
    ``{d, sigma, b, driver, terminal, T, gamma?}``
    """

    for key in ("d", "sigma", "terminal", "T"):
        if key not in doc:
            raise InvalidSpecError("missing required field %r" % key)

    d = int(doc["d"])

    sig = _field_doc(doc["sigma"], "sigma")
    bdoc = _field_doc(doc.get("b", {"kind": "constant"}), "b")
    drv = _field_doc(doc.get("driver", {"kind": "zero"}), "driver")

    try:
        sigma = VolatilityField(sig.pop("kind"), d, **sig)
        b = DriftField(bdoc.pop("kind"), d, **bdoc)
        driver = DriverSpec(**drv)
    except TypeError as te:
        raise InvalidSpecError(str(te))

    terminal = _terminal_from_json(doc["terminal"])
    gamma = _gamma_from_json(doc.get("gamma"))

    return ProblemSpec(d, sigma, b, driver, terminal, doc["T"], gamma,
                       name=name or doc.get("name"))


def spec_to_json(spec):
    """
    the JSON document describing spec
    """

    doc = {
        "d": spec.d,
        "sigma": spec.sigma.simplify(),
        "b": spec.b.simplify(),
        "driver": spec.driver.simplify(),
        "terminal": spec.terminal.simplify(),
        "T": spec.T,
    }
    if spec.gamma is not None:
        doc["gamma"] = spec.gamma.simplify()
    if spec.name:
        doc["name"] = spec.name
    return doc


def load_spec(filename):
    with open(filename, "rt") as fd:
        return spec_from_json(load(fd))


def dump_spec(spec, filename):
    with open(filename, "wt") as fd:
        dump(spec_to_json(spec), fd, sort_keys=True, indent=2)


# ---- Built-in specs ----
#


def _heat_1d():
    return ProblemSpec(1, VolatilityField("constant", 1, base=1.0),
                       DriftField("constant", 1),
                       DriverSpec("zero"),
                       TerminalSpec("tanh", amplitude=1.0, frequency=2.0),
                       1.0)


def _sine_1d():
    return ProblemSpec(1, VolatilityField("sine-perturbed", 1, base=1.0,
                                          amplitude=0.2, frequency=0.5),
                       DriftField("sine-perturbed", 1, amplitude=0.4,
                                  frequency=0.5),
                       DriverSpec("zero"),
                       TerminalSpec("sine"),
                       1.0)


def _semilinear_1d():
    return _sine_1d().with_driver(DriverSpec("linear", g0=0.1,
                                             K_g=1.0, L_g=0.5))


def _sine_2d():
    rot = [[0.0, 0.2], [-0.2, 0.0]]
    return ProblemSpec(2, VolatilityField("sine-perturbed", 2,
                                          base=[1.0, 1.2],
                                          amplitude=[0.2, 0.1],
                                          frequency=[0.5, 1.0]),
                       DriftField("affine", 2, matrix=rot),
                       DriverSpec("zero"),
                       TerminalSpec("sine"),
                       1.0)


def _gheat_1d():
    return ProblemSpec(1, VolatilityField("constant", 1, base=1.0),
                       DriftField("constant", 1),
                       DriverSpec("zero"),
                       TerminalSpec("clamped-quadratic", amplitude=1.0,
                                    cap=1.0),
                       1.0, UncertaintySet.interval(1.0, 4.0))


def _gdrift_1d():
    return ProblemSpec(1, VolatilityField("constant", 1, base=1.0),
                       DriftField("sine-perturbed", 1, amplitude=0.5,
                                  frequency=1.0),
                       DriverSpec("zero"),
                       TerminalSpec("sine"),
                       1.0, UncertaintySet.interval(1.0, 2.25))


def _gsine_1d():
    return ProblemSpec(1, VolatilityField("sine-perturbed", 1, base=1.0,
                                          amplitude=0.2, frequency=0.5),
                       DriftField("constant", 1),
                       DriverSpec("zero"),
                       TerminalSpec("cosine"),
                       1.0, UncertaintySet.interval(1.0, 4.0))


_BUILTINS = (
    ("heat-1d", _heat_1d,
     "Brownian motion, smooth sign-like terminal"),
    ("sine-1d", _sine_1d,
     "sine-perturbed sigma and b, sine terminal, no driver"),
    ("semilinear-1d", _semilinear_1d,
     "sine-1d with a linear driver (K_g=1, L_g=0.5)"),
    ("sine-2d", _sine_2d,
     "two-dimensional sine-perturbed sigma, rotating affine b"),
    ("gheat-1d", _gheat_1d,
     "G-heat, gamma=[1,4], clamped quadratic terminal"),
    ("gdrift-1d", _gdrift_1d,
     "G-mode with sine drift, gamma=[1,2.25], sine terminal"),
    ("gsine-1d", _gsine_1d,
     "G-mode, sine-perturbed sigma, gamma=[1,4], cosine terminal"),
)


def builtin_spec_ids():
    """
    the ids of the built-in specs, in catalogue order
    """

    return tuple(name for name, _fn, _desc in _BUILTINS)


def builtin_spec_description(name):
    for bname, _fn, desc in _BUILTINS:
        if bname == name:
            return desc
    raise InvalidSpecError("no built-in spec named %r" % name)


def builtin_spec(name):
    """
    a fresh ProblemSpec for a built-in spec id
    """

    for bname, fn, _desc in _BUILTINS:
        if bname == name:
            spec = fn()
            spec.name = bname
            return spec

    raise InvalidSpecError("no built-in spec named %r" % name)


# ---- Derived constants ----
#


class ConstantConfig(object):
    """
    The constants the bounds depend on but which have no known value:
    the BDG constants c_p and the BSDE estimate constants d_p. The
    defaults are c_{5/2} = 4 and d_p = 2^p.
    """


    def __init__(self, bdg_c=None, dp_base=2.0, dp_overrides=None,
                 alpha=5.0, theta=None):

        self.bdg_c = {2.5: 4.0}
        if bdg_c:
            self.bdg_c.update((float(k), float(v)) for k, v in bdg_c.items())

        self.dp_base = float(dp_base)
        self.dp_overrides = dict((float(k), float(v)) for k, v in
                                 (dp_overrides or {}).items())

        self.alpha = float(alpha)
        self.theta = None if theta is None else float(theta)

        if self.alpha < 2:
            raise InvalidSpecError("alpha must be at least 2")


    def c_p(self, p):
        try:
            return self.bdg_c[float(p)]
        except KeyError:
            raise InvalidSpecError("no BDG constant c_p configured for"
                                   " p=%g" % p)


    def d_p(self, p):
        p = float(p)
        return self.dp_overrides.get(p, self.dp_base ** p)


    def simplify(self, options=None):
        return {
            "bdg_c": dict(("%g" % k, v) for k, v in
                          sorted(self.bdg_c.items())),
            "dp_base": self.dp_base,
            "d_p": dict(("%g" % k, v) for k, v in
                        sorted(self.dp_overrides.items())),
            "alpha": self.alpha,
            "theta": self.theta,
        }


class DerivedConstants(object):
    """
    Every constant appearing in the gradient bounds for one spec and
    mode. The attribute names follow the symbols they hold.

    ``variant`` is ``main1`` or ``corollary`` in classical mode (the
    latter when the driver is zero) and ``main2`` in G-mode.
    """

    _fields = (
        "mode", "variant", "alpha", "T",
        "lam_sigma", "Lam_sigma", "L_sigma", "L_b", "K_g", "L_g", "g0",
        "phi_sup", "lam_gamma", "Lam_gamma",
        "beta_sigma", "beta_gamma", "theta", "L", "mu", "delta",
        "C_alpha", "C_beta", "C_g", "C_main1", "C_corollary", "C_main2",
        "xi0", "xi0_unit", "bdg_c", "d_p", )


    def __init__(self, **values):
        for field in self._fields:
            setattr(self, field, values.pop(field, None))
        if values:
            raise TypeError("unknown constants: %s" % ", ".join(values))


    @property
    def C5(self):
        return self.C_alpha


    def schedule(self):
        """
        the coupling schedule these constants define
        """

        return coupling_schedule(self)


    def simplify(self, options=None):
        simple = dict()
        for field in self._fields:
            val = getattr(self, field)
            if isinstance(val, float) and isinf(val):
                val = "inf"
            simple[field] = val
        return simple


def _unit_xi0(L, T):
    return T if L == 0 else -expm1(-L * T) / L


def derive_constants(spec, mode=None, config=None):
    """
    the DerivedConstants of spec in the given mode (``classical`` or
    ``g-mode``, defaulting to the mode the spec implies)
    """

    if config is None:
        config = ConstantConfig()

    if mode is None:
        mode = spec.mode

    if mode not in (MODE_CLASSICAL, MODE_G):
        raise InvalidSpecError("unknown mode %r" % mode)

    if (mode == MODE_G) != spec.is_g_mode():
        raise InvalidSpecError("mode %s does not match the spec, which"
                               " %s an uncertainty set" %
                               (mode, "has" if spec.is_g_mode() else
                                "has no"))

    lam, Lam = spec.lam_sigma, spec.Lam_sigma
    if not 0 < lam <= Lam:
        raise InvalidSpecError("ellipticity bounds must satisfy"
                               " 0 < lam_sigma <= Lam_sigma")

    L_sigma, L_b = spec.L_sigma, spec.L_b
    K_g, L_g, g0 = spec.K_g, spec.L_g, spec.g0
    beta = Lam / lam
    T = spec.T

    values = dict(mode=mode, T=T, lam_sigma=lam, Lam_sigma=Lam,
                  L_sigma=L_sigma, L_b=L_b, K_g=K_g, L_g=L_g, g0=g0,
                  phi_sup=spec.phi_sup, beta_sigma=beta)

    if mode == MODE_CLASSICAL:
        alpha = config.alpha
        alpha_star = alpha / (alpha - 1.0)
        theta = lam * lam / (2.0 * Lam)

        if spec.driver.is_zero():
            variant = "corollary"
            L_g_eff = 0.0
            C_g = 1.0
            mu = 0.0
        else:
            variant = "main1"
            if K_g > 0 and L_g == 0:
                raise InvalidSpecError("C_g = 1 + K_g/L_g^2 is undefined"
                                       " for K_g > 0 with L_g = 0")
            L_g_eff = L_g
            # g0 alone leaves C_g at 1
            C_g = 1.0 + K_g / (L_g * L_g) if L_g else 1.0
            mu = K_g + 4.0 * L_g * L_g

        L = 2.0 * (L_g_eff * L_sigma + L_b +
                   0.5 * (alpha - 1.0) * L_sigma * L_sigma)

        c_half = config.c_p(alpha / 2.0)
        C_alpha = (c_half ** (2.0 / alpha) *
                   (1.0 / alpha) ** (1.0 / alpha) *
                   (1.0 / alpha_star) ** (1.0 / alpha_star))

        p_beta = 32.0 * (beta ** 3 + 0.25) ** 2
        C_beta = config.d_p(p_beta) / sqrt(2.0) + 1.0
        delta = theta * theta / (4.0 * Lam * Lam * beta * beta +
                                 4.0 * theta * Lam * beta)

        C_corollary = 4.0 * C_alpha * C_beta * Lam * Lam / lam ** 3
        C_main1 = C_corollary * C_g

        values.update(variant=variant, alpha=alpha, theta=theta, L=L,
                      mu=mu, delta=delta, C_alpha=C_alpha, C_beta=C_beta,
                      C_g=C_g, C_main1=C_main1, C_corollary=C_corollary,
                      bdg_c={"%g" % (alpha / 2.0): c_half},
                      d_p={"%g" % p_beta: config.d_p(p_beta),
                           "1": config.d_p(1.0)})

        coef = alpha_star * theta

    else:
        lam_G, Lam_G = spec.gamma.lower, spec.gamma.upper
        beta_G = Lam_G / lam_G

        theta = config.theta
        if theta is None:
            theta = lam * lam / (2.0 * Lam)
        if not lam * lam / (2.0 * Lam) <= theta < lam * lam / Lam:
            raise InvalidSpecError("G-mode theta must lie in"
                                   " [lam^2/(2 Lam), lam^2/Lam)")

        L = 2.0 * L_b + Lam_G * Lam_G * L_sigma * L_sigma
        bb = beta * beta_G
        delta = theta * theta / (4.0 * Lam * Lam * bb * bb +
                                 4.0 * theta * Lam * bb)
        C_main2 = 2.0 * Lam * Lam / (lam ** 3 * lam_G)

        values.update(variant="main2", theta=theta, L=L, mu=0.0,
                      delta=delta, lam_gamma=lam_G, Lam_gamma=Lam_G,
                      beta_gamma=beta_G, C_main2=C_main2,
                      d_p={"1": config.d_p(1.0)})

        coef = 2.0 * (lam * lam / Lam - theta)

    values["xi0_unit"] = _unit_xi0(L, T)
    values["xi0"] = coef * values["xi0_unit"]

    consts = DerivedConstants(**values)
    _log.debug("derived %s constants for %s: L=%g theta=%g delta=%g",
               consts.variant, spec.name or "spec", L, theta, delta)
    return consts


# ---- Coupling schedules ----
#


class CouplingSchedule(object):
    """
    xi_t = coef * (1 - exp(L (t - T))) / L on [0, T], with the L = 0
    limit coef * (T - t). The classical schedule has coef =
    alpha/(alpha-1) theta, the G-mode schedule coef = 2 (lam^2/Lam -
    theta), and the unit schedule coef = 1.
    """


    def __init__(self, mode, L, T, coef, alpha=None, theta=None):
        if not T > 0:
            raise DomainError("schedule horizon must be positive")
        if not coef > 0:
            raise DomainError("schedule coefficient must be positive")
        if L < 0:
            raise DomainError("schedule rate must be non-negative")

        self.mode = mode
        self.L = float(L)
        self.T = float(T)
        self.coef = float(coef)
        self.alpha = alpha
        self.theta = theta


    def _check_time(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < 0) or np.any(t > self.T):
            raise DomainError("schedule time outside [0, %g]" % self.T)
        return t


    def value(self, t):
        t = self._check_time(t)
        if self.L == 0:
            return self.coef * (self.T - t)
        return -self.coef * np.expm1(self.L * (t - self.T)) / self.L


    def derivative(self, t):
        t = self._check_time(t)
        if self.L == 0:
            return np.full(t.shape, -self.coef)
        return -self.coef * np.exp(self.L * (t - self.T))


    def inverse_integral(self, t0, t1):
        """
        the integral of 1/xi over [t0, t1], for t0 <= t1 < T
        """

        t0 = self._check_time(t0)
        t1 = self._check_time(t1)
        if np.any(t1 >= self.T):
            raise DomainError("1/xi is not integrable up to T")

        s0 = self.T - t0
        s1 = self.T - t1
        if self.L == 0:
            return np.log(s0 / s1) / self.coef

        L = self.L
        return (np.log(np.expm1(L * s0)) -
                np.log(np.expm1(L * s1))) / self.coef


    @property
    def xi0(self):
        return float(self.value(0.0))


    def simplify(self, options=None):
        return {
            "mode": self.mode,
            "L": self.L,
            "T": self.T,
            "coef": self.coef,
            "alpha": self.alpha,
            "theta": self.theta,
        }


def unit_schedule(L, T):
    """
    xi^0_t = (1 - exp(L (t - T))) / L
    """

    return CouplingSchedule("unit", L, T, 1.0)


def coupling_schedule(consts):
    """
    the coupling schedule for a set of DerivedConstants
    """

    if consts.mode == MODE_CLASSICAL:
        alpha = consts.alpha
        coef = alpha / (alpha - 1.0) * consts.theta
        return CouplingSchedule(MODE_CLASSICAL, consts.L, consts.T, coef,
                                alpha=alpha, theta=consts.theta)

    lam, Lam = consts.lam_sigma, consts.Lam_sigma
    coef = 2.0 * (lam * lam / Lam - consts.theta)
    return CouplingSchedule(MODE_G, consts.L, consts.T, coef,
                            theta=consts.theta)


def schedule_eval(schedule, t):
    """
    (xi_t, xi'_t) for the schedule at time t
    """

    return (float(schedule.value(t)), float(schedule.derivative(t)))


def check_schedule_inequality(schedule, consts, p_grid, t_grid):
    """
    evaluate the defining inequality of the schedule at every (p, t).

    Classical mode checks, for 1 <= p <= alpha/2,
    ((2p-1)/p) L^g_p xi - lam^2/Lam - ((2p-1)/(2p)) xi' <= -theta with
    L^g_p = L_g L_sigma + L_b + (p - 1/2) L_sigma^2. G-mode checks
    (L/2) xi - lam^2/Lam - xi'/2 <= -theta, and ignores p_grid.
    """

    from .check import InequalityReport

    t_grid = np.asarray(t_grid, dtype=float)
    if np.any(t_grid < 0) or np.any(t_grid >= schedule.T):
        raise DomainError("t_grid must lie in [0, T)")

    xi = schedule.value(t_grid)
    dxi = schedule.derivative(t_grid)
    ratio = consts.lam_sigma ** 2 / consts.Lam_sigma
    theta = consts.theta

    rows = list()

    if schedule.mode == MODE_G:
        lhs = 0.5 * consts.L * xi - ratio - 0.5 * dxi
        rows.extend((1.0, t, v) for t, v in zip(t_grid, lhs))

    else:
        alpha = schedule.alpha
        L_g = 0.0 if consts.variant == "corollary" else consts.L_g

        for p in p_grid:
            p = float(p)
            if not 1.0 <= p <= alpha / 2.0:
                raise DomainError("p=%g outside [1, alpha/2]" % p)

            Lp = (L_g * consts.L_sigma + consts.L_b +
                  (p - 0.5) * consts.L_sigma ** 2)
            lhs = (((2 * p - 1) / p) * Lp * xi - ratio -
                   ((2 * p - 1) / (2 * p)) * dxi)
            rows.extend((p, t, v) for t, v in zip(t_grid, lhs))

    return InequalityReport(rows, theta, schedule.mode)


# ---- Theorem bounds ----
#


class BoundFunction(object):
    """
    r |-> slope * r, the right hand side of a gradient bound
    """


    def __init__(self, which, slope, factor, denominator):
        self.which = which
        self.slope = slope
        self.factor = factor
        self.denominator = denominator


    def __call__(self, r):
        return self.slope * np.asarray(r, dtype=float)


    def simplify(self, options=None):
        return {
            "which": self.which,
            "slope": self.slope,
            "factor": self.factor,
            "denominator": self.denominator,
        }


def theorem_bound(consts, spec, which):
    """
    the gradient bound of a theorem as a BoundFunction. ``which`` is
    ``main1``, ``corollary``, ``main2`` or ``main2-sharp`` (the
    intermediate G-mode bound sqrt(2 beta^2 / (lam_gamma^2 theta
    xi_0)) ||phi||).
    """

    phi = spec.phi_sup
    den = sqrt(_unit_xi0(consts.L, spec.T))

    if which == "main1":
        if consts.mode != MODE_CLASSICAL:
            raise InvalidSpecError("main1 bound needs classical constants")

        mu = consts.mu
        g0 = abs(consts.g0)
        if g0 == 0:
            tail = 0.0
        elif mu > 0:
            tail = g0 / mu
        else:
            tail = float("inf")

        factor = consts.C_main1 * (phi + tail) * exp(mu * spec.T)

    elif which == "corollary":
        if consts.variant != "corollary":
            raise InvalidSpecError("corollary bound needs a zero driver")
        factor = consts.C_corollary * phi

    elif which == "main2":
        if consts.mode != MODE_G:
            raise InvalidSpecError("main2 bound needs G-mode constants")
        factor = consts.C_main2 * phi

    elif which == "main2-sharp":
        if consts.mode != MODE_G:
            raise InvalidSpecError("main2 bound needs G-mode constants")
        bs = consts.beta_sigma
        lg = consts.lam_gamma
        factor = sqrt(2.0 * bs * bs / (lg * lg * consts.theta)) * phi
        den = sqrt(consts.xi0)

    else:
        raise InvalidSpecError("unknown bound %r" % which)

    return BoundFunction(which, factor / den, factor, den)


#
# The end.
