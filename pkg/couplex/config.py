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
Experiment configuration files.

An experiment config is a JSON object naming a seed, a problem spec
(a built-in id or a full descriptor) and one section of parameters per
stage of the experiment. Sections a kind does not use are ignored;
sections it does use are filled with defaults and checked, and every
problem is reported as a ConfigError naming the dotted path of the
offending field.

:author: The couplex authors
:license: LGPL
"""


import logging

from hashlib import sha256
from json import dumps, load

import numpy as np

from six import integer_types, string_types

from . import CouplexError
from .bsde import MIN_PATHS
from .gexp import MAX_EXHAUSTIVE_CELLS, POLICY_EXHAUSTIVE
from .model import (ConstantConfig, InvalidSpecError, builtin_spec,
                    spec_from_json, _terminal_from_json)


__all__ = (
    "ConfigError", "ExperimentConfig", "KINDS",
    "load_config", "parse_config", "config_hash", )


_log = logging.getLogger(__name__)


KINDS = (
    "simulate", "bsde", "g-semigroup", "g-heat",
    "verify-main1", "verify-corollary", "verify-main2",
    "verify-girsanov", "schedule-check", )


class ConfigError(CouplexError, ValueError):
    """
    A config field that is missing or invalid. path is the dotted
    field path, such as spec.T
    """


    def __init__(self, path, message):
        CouplexError.__init__(self, path, message)
        self.path = path
        self.message = message


    def __str__(self):
        return "%s: %s" % (self.path, self.message)


_REQUIRED = object()


def _int(value):
    if isinstance(value, bool) or not isinstance(value, integer_types):
        if isinstance(value, float) and value.is_integer():
            return int(value)
        raise ValueError("expected an integer")
    return int(value)


def _positive_int(value):
    value = _int(value)
    if value < 1:
        raise ValueError("expected a positive integer")
    return value


def _count(value):
    value = _int(value)
    if value < 0:
        raise ValueError("expected a non-negative integer")
    return value


def _float(value):
    if isinstance(value, bool) or not isinstance(value, integer_types +
                                                 (float,)):
        raise ValueError("expected a number")
    return float(value)


def _positive(value):
    value = _float(value)
    if not value > 0:
        raise ValueError("expected a positive number")
    return value


def _optional(convert):
    def optional(value):
        return None if value is None else convert(value)
    return optional


def _floats(value):
    if isinstance(value, (integer_types, float)) and \
       not isinstance(value, bool):
        return [float(value)]
    if not isinstance(value, list) or not value:
        raise ValueError("expected a non-empty list of numbers")
    return [_float(v) for v in value]


def _strings(value):
    if isinstance(value, string_types):
        return [value]
    if not isinstance(value, list) or \
       not all(isinstance(v, string_types) for v in value):
        raise ValueError("expected a list of strings")
    return list(value)


def _bool(value):
    if not isinstance(value, bool):
        raise ValueError("expected true or false")
    return value


def _choice(*options):
    def choice(value):
        if value not in options:
            raise ValueError("expected one of %s" % ", ".join(options))
        return value
    return choice


_SCHEMA = {
    "grid": {
        "n0": (_positive_int, 100),
        "q": (_positive, 0.5),
        "h_min": (_positive, 1e-4),
    },
    "coupling": {
        "x": (_optional(_floats), None),
        "y": (_optional(_floats), None),
        "drift_cap": (_positive, 100.0),
        "n_paths": (_positive_int, 10000),
        "separations": (_floats, [0.05, 0.1, 0.2]),
        "measure": (_choice("original", "tilted"), "original"),
        "trace_paths": (_count, 0),
        "rate_levels": (_positive_int, 3),
    },
    "solver": {
        "n_paths": (_positive_int, 100000),
        "n_steps": (_positive_int, 50),
        "basis_degree": (_count, 3),
        "picard_iters": (_positive_int, 3),
        "n_boot": (_positive_int, 200),
        "x0": (_optional(_floats), None),
        "repeats": (_positive_int, 1),
    },
    "fd": {
        "x_lo": (_float, -10.0),
        "x_hi": (_float, 10.0),
        "dx": (_positive, 0.05),
        "cfl_safety": (_positive, 0.9),
        "x0": (_optional(_floats), None),
    },
    "control": {
        "K": (_positive_int, 4),
        "policy": (_choice("exhaustive", "coordinate-ascent"),
                   "exhaustive"),
        "budget": (_optional(_positive_int), None),
        "n_paths": (_positive_int, 20000),
        "n_steps": (_positive_int, 40),
        "x0": (_optional(_floats), None),
        "cross_validate": (_bool, True),
    },
    "pairs": {
        "center": (_optional(_floats), None),
        "r0": (_positive, 0.5),
        "levels": (_positive_int, 5),
        "directions": (_strings, ["axis"]),
        "oracle": (_choice("mc", "quadrature", "fd"), "mc"),
    },
    "schedule": {
        "p_grid": (_floats, [1.0, 1.5, 2.0, 2.5]),
        "n_times": (_positive_int, 1000),
    },
}


_SECTIONS = {
    "simulate": ("grid", "coupling"),
    "bsde": ("solver", ),
    "g-semigroup": ("control", "fd"),
    "g-heat": ("fd", ),
    "verify-main1": ("solver", "pairs"),
    "verify-corollary": ("solver", "pairs"),
    "verify-main2": ("pairs", "fd", "control"),
    "verify-girsanov": ("grid", "coupling"),
    "schedule-check": ("schedule", ),
}


_TOP_LEVEL = ("kind", "seed", "spec", "constants", "output_dir") + \
    tuple(_SCHEMA)


class ExperimentConfig(object):
    """
    A validated experiment config. ``sections`` holds the filled
    sections the kind uses; ``doc`` is the document as read, which
    the run manifest hashes.
    """


    def __init__(self, kind, seed, spec, sections, constants,
                 output_dir=None, doc=None, path=None):
        self.kind = kind
        self.seed = seed
        self.spec = spec
        self.sections = sections
        self.constants = constants
        self.output_dir = output_dir
        self.doc = doc
        self.path = path


    def __getitem__(self, name):
        return self.sections[name]


    def point(self, section, key="x0"):
        """
        a d-vector from a section, defaulting to the origin
        """

        found = self.sections[section].get(key)
        if found is None:
            return np.zeros(self.spec.d)
        return np.asarray(found, dtype=float)


    @property
    def hash(self):
        return config_hash(self.doc)


    def simplify(self, options=None):
        return {
            "kind": self.kind,
            "seed": self.seed,
            "spec": self.spec.simplify(options),
            "sections": self.sections,
            "constants": self.constants.simplify(options),
        }


def config_hash(doc):
    """
    SHA-256 of the canonical JSON form of a config document
    """

    canon = dumps(doc, sort_keys=True, separators=(",", ":"))
    return sha256(canon.encode("utf-8")).hexdigest()


def _fill(section, doc):
    schema = _SCHEMA[section]
    if doc is None:
        doc = dict()
    if not isinstance(doc, dict):
        raise ConfigError(section, "expected an object")

    for key in doc:
        if key not in schema:
            raise ConfigError("%s.%s" % (section, key), "unknown field")

    filled = dict()
    for key, (convert, default) in sorted(schema.items()):
        path = "%s.%s" % (section, key)
        if key not in doc:
            if default is _REQUIRED:
                raise ConfigError(path, "missing required field")
            filled[key] = default
            continue
        try:
            filled[key] = convert(doc[key])
        except (TypeError, ValueError) as err:
            raise ConfigError(path, str(err))
    return filled


_SPEC_FIELDS = ("d", "sigma", "terminal", "T")


def _build_spec(doc):
    if doc is None:
        raise ConfigError("spec", "missing required field")

    if isinstance(doc, string_types):
        try:
            return builtin_spec(doc)
        except InvalidSpecError as err:
            raise ConfigError("spec", str(err))

    if not isinstance(doc, dict):
        raise ConfigError("spec", "expected a built-in id or an object")

    if "builtin" in doc:
        try:
            spec = builtin_spec(doc["builtin"])
            if "terminal" in doc:
                spec = spec.with_terminal(_terminal_from_json(
                    doc["terminal"]))
            spec.validate()
        except InvalidSpecError as err:
            raise ConfigError("spec.terminal" if "terminal" in doc
                              else "spec.builtin", str(err))
        return spec

    for key in _SPEC_FIELDS:
        if key not in doc:
            raise ConfigError("spec.%s" % key, "missing required field")

    try:
        _positive(doc["T"])
    except ValueError as err:
        raise ConfigError("spec.T", str(err))

    try:
        spec = spec_from_json(doc)
        spec.validate()
    except InvalidSpecError as err:
        raise ConfigError("spec", str(err))
    return spec


def _build_constants(doc):
    if doc is None:
        return ConstantConfig()
    if not isinstance(doc, dict):
        raise ConfigError("constants", "expected an object")

    known = ("bdg_c", "dp_base", "d_p", "alpha", "theta")
    for key in doc:
        if key not in known:
            raise ConfigError("constants.%s" % key, "unknown field")

    try:
        return ConstantConfig(bdg_c=doc.get("bdg_c"),
                              dp_base=doc.get("dp_base", 2.0),
                              dp_overrides=doc.get("d_p"),
                              alpha=doc.get("alpha", 5.0),
                              theta=doc.get("theta"))
    except (InvalidSpecError, TypeError, ValueError) as err:
        raise ConfigError("constants", str(err))


def _check_sections(kind, spec, sections):
    """
    the checks that span several fields of the filled sections
    """

    coupling = sections.get("coupling")
    if coupling is not None and min(coupling["separations"]) <= 0:
        raise ConfigError("coupling.separations", "expected positive"
                          " separations")

    solver = sections.get("solver")
    if solver is not None and solver["n_paths"] < MIN_PATHS:
        raise ConfigError("solver.n_paths", "expected at least %i paths"
                          % MIN_PATHS)

    control = sections.get("control")
    if control is not None and control["policy"] == POLICY_EXHAUSTIVE \
       and control["K"] > MAX_EXHAUSTIVE_CELLS:
        raise ConfigError("control.K", "exhaustive search is limited to"
                          " %i cells, use coordinate-ascent"
                          % MAX_EXHAUSTIVE_CELLS)

    pairs = sections.get("pairs")
    if pairs is not None:
        for direction in pairs["directions"]:
            if direction not in ("axis", "random"):
                raise ConfigError("pairs.directions", "expected axis or"
                                  " random, not %r" % direction)

    fd = sections.get("fd")
    if fd is None:
        return

    lo, hi = fd["x_lo"], fd["x_hi"]
    if not lo < hi:
        raise ConfigError("fd.x_hi", "must exceed fd.x_lo")
    if not fd["dx"] < (hi - lo) / 2.0:
        raise ConfigError("fd.dx", "must be below half the domain width")
    if fd["cfl_safety"] > 1:
        raise ConfigError("fd.cfl_safety", "must not exceed 1")

    if spec.d != 1:
        return

    # the points the finite difference solution is read at
    if kind == "g-heat":
        points = [("fd.x0", fd["x0"])]
    elif kind == "g-semigroup" and control["cross_validate"]:
        points = [("control.x0", control["x0"])]
    elif kind == "verify-main2" and pairs["oracle"] != "mc":
        half = 0.5 * pairs["r0"]
        center = pairs["center"] or [0.0] * spec.d
        points = [("pairs.center", [center[0] - half]),
                  ("pairs.center", [center[0] + half])]
    else:
        points = []

    for path, point in points:
        x = 0.0 if point is None else point[0]
        if not lo < x < hi:
            raise ConfigError(path, "%g lies outside (fd.x_lo, fd.x_hi)"
                              " = (%g, %g)" % (x, lo, hi))


def parse_config(doc, kind=None, path=None):
    """
    validate a config document for kind (or the document's own kind
    field) and return the ExperimentConfig
    """

    if not isinstance(doc, dict):
        raise ConfigError("config", "expected a JSON object")

    for key in doc:
        if key not in _TOP_LEVEL:
            raise ConfigError(key, "unknown field")

    kind = kind or doc.get("kind")
    if kind is None:
        raise ConfigError("kind", "missing required field")
    if kind not in KINDS:
        raise ConfigError("kind", "unknown experiment kind %r" % kind)
    if doc.get("kind", kind) != kind:
        raise ConfigError("kind", "config is for %s, not %s"
                          % (doc["kind"], kind))

    if "seed" not in doc:
        raise ConfigError("seed", "missing required field")
    try:
        seed = _int(doc["seed"])
    except ValueError as err:
        raise ConfigError("seed", str(err))
    if seed < 0:
        raise ConfigError("seed", "expected a non-negative integer")

    spec = _build_spec(doc.get("spec"))
    constants = _build_constants(doc.get("constants"))

    sections = dict()
    for section in _SECTIONS[kind]:
        sections[section] = _fill(section, doc.get(section))

    for section, filled in sections.items():
        for key in ("x", "y", "x0", "center"):
            val = filled.get(key)
            if val is not None and len(val) != spec.d:
                raise ConfigError("%s.%s" % (section, key),
                                  "expected %i coordinates" % spec.d)

    _check_sections(kind, spec, sections)

    output_dir = doc.get("output_dir")
    if output_dir is not None and not isinstance(output_dir, string_types):
        raise ConfigError("output_dir", "expected a string")

    _log.debug("config for %s validated, seed %i", kind, seed)
    return ExperimentConfig(kind, seed, spec, sections, constants,
                            output_dir, doc, path)


def load_config(path, kind=None):
    """
    read and validate the experiment config at path
    """

    try:
        with open(path, "rt") as fd:
            doc = load(fd)
    except IOError as err:
        raise ConfigError("config", "cannot read %s: %s" % (path, err))
    except ValueError as err:
        raise ConfigError("config", "%s is not valid JSON: %s"
                          % (path, err))

    return parse_config(doc, kind, path)


#
# The end.
