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
The couplex command line: run one experiment from a config file and
write its results, or list the built-in problem specs.

Exit status is 0 when every check passes, 2 when a check fails, and 1
on any error.

:author: The couplex authors
:license: LGPL
"""


from __future__ import print_function


import logging
import sys

from argparse import ArgumentParser, Action
from functools import partial
from io import open as io_open
from json import dump
from os.path import basename, join
from time import time

import numpy as np

from . import CouplexError, __version__


__all__ = (
    "RunManifest", "run", "cli", "main", "list_builtin_specs",
    "create_optparser", "add_general_optgroup", "add_run_optgroup",
    "default_cli_options", "EXIT_PASS", "EXIT_ERROR", "EXIT_FAIL", )


_log = logging.getLogger(__name__)


EXIT_PASS = 0
EXIT_ERROR = 1
EXIT_FAIL = 2

DEFAULT_OUTPUT_DIR = "couplex-results"


class RunManifest(object):
    """
    What was run and what it wrote: the config hash, the package
    version, the constants snapshot, timing, and the output files
    """


    def __init__(self, config, constants, started, elapsed, outputs):
        self.config_hash = config.hash
        self.kind = config.kind
        self.seed = config.seed
        self.version = __version__
        self.constants = constants
        self.started = started
        self.elapsed = elapsed
        self.outputs = sorted(outputs)


    def simplify(self, options=None):
        return {
            "config_hash": self.config_hash,
            "kind": self.kind,
            "seed": self.seed,
            "version": self.version,
            "constants": self.constants,
            "timing": {"started": self.started, "elapsed": self.elapsed},
            "outputs": self.outputs,
        }


    def write(self, filename, options=None):
        from .report import JSONCheckEncoder

        with io_open(filename, "w", encoding="utf-8") as out:
            dump(self, out, sort_keys=True, indent=2,
                 cls=partial(JSONCheckEncoder, options))
            out.write(u"\n")


# ---- Experiment kinds ----
#


def _stream(config):
    from .paths import RngStream
    return RngStream(config.seed, config.kind)


def _coupling_points(config):
    coupling = config["coupling"]

    x = config.point("coupling", "x")
    if coupling["y"] is not None:
        y = np.asarray(coupling["y"], dtype=float)
    else:
        y = x.copy()
        y[0] -= coupling["separations"][0]
    return x, y


def _run_simulate(config, consts, workers):
    from .check import TableCheck
    from .coupling import BundleSet, trace_rows, weight_mean_check
    from .harness import coupling_control
    from .paths import build_grid

    spec = config.spec
    grid_p = config["grid"]
    coupling = config["coupling"]

    grid = build_grid(spec.T, grid_p["n0"], grid_p["q"], grid_p["h_min"])
    x, y = _coupling_points(config)
    control = coupling_control(spec) if spec.is_g_mode() else None

    bset = BundleSet(spec, consts.schedule(), grid, _stream(config), x, y,
                     coupling["n_paths"], coupling["drift_cap"], control,
                     coupling["measure"], workers)

    pooled = bset.reduce("terminal")
    H = pooled["H_T"]
    values = {
        "grid": grid,
        "separation": bset.separation,
        "median_H_T": float(np.median(H)),
        "mean_H_T": float(np.mean(H)),
        "cap_fraction": pooled["capped"] / pooled["n"],
    }

    checks = list()
    if coupling["measure"] == "original":
        checks.append(weight_mean_check(bset))

    if coupling["trace_paths"] > 0:
        bundle = next(bset.bundles())
        columns, rows = trace_rows(bundle, coupling["trace_paths"])
        checks.append(TableCheck("trace", columns, rows, "Path trace"))

    return checks, values


def _run_bsde(config, consts, workers):
    from .bsde import bsde_apriori_check, estimate_u, y_sup_check

    spec = config.spec
    solver = config["solver"]
    params = _solver_params(config)
    x0 = config.point("solver")
    stream = _stream(config)

    estimates = [estimate_u(spec, x0, params,
                            stream.for_experiment("%s/%i" % (config.kind, i))
                            if i else stream, workers)
                 for i in range(solver["repeats"])]

    first = estimates[0]
    values = {
        "x0": x0,
        "y0": first.value,
        "stderr": first.stderr,
        "method": first.method,
        "solver": params,
    }

    checks = list()
    solutions = [e.solution for e in estimates if e.solution is not None]
    if solutions:
        values["diagnostics"] = first.solution.diagnostics
        values["z0"] = first.solution.z0
        checks.append(y_sup_check(first.solution))
        checks.append(bsde_apriori_check(solutions, consts))

    return checks, values


def _family(config):
    from .gexp import ControlFamily

    control = config["control"]
    return ControlFamily(config.spec.gamma, control["K"], config.spec.T,
                         control["policy"], control["budget"])


def _run_g_semigroup(config, consts, workers):
    from .gexp import cross_validate, evaluate_g_semigroup

    spec = config.spec
    control = config["control"]
    family = _family(config)
    x0 = config.point("control")
    stream = _stream(config)

    if spec.d == 1 and control["cross_validate"]:
        report = cross_validate(spec, x0, family, control["n_paths"],
                                control["n_steps"], config["fd"], stream,
                                workers)
        return [report], {"x0": x0, "estimate": report.mc}

    est = evaluate_g_semigroup(spec, x0, family, control["n_paths"],
                               control["n_steps"], stream, workers)
    return [], {"x0": x0, "estimate": est}


def _run_g_heat(config, consts, workers):
    from .check import BoundCheck, TableCheck
    from .gexp import solve_g_heat_fd

    spec = config.spec
    fd_p = config["fd"]
    x0 = config.point("fd")

    fd = solve_g_heat_fd(spec, fd_p["x_lo"], fd_p["x_hi"], fd_p["dx"],
                         float(x0[0]), fd_p["cfl_safety"])

    checks = list()
    if spec.terminal.is_bounded():
        checks.append(BoundCheck("max |u| over the solve", fd.max_abs,
                                 spec.phi_sup * (1.0 + 1e-12), slack=0.0))

    rows = [(float(xi), float(ui)) for xi, ui in zip(fd.x, fd.u)]
    checks.append(TableCheck("fd_solution", ("x", "u"), rows,
                             "Finite difference solution"))
    return checks, {"fd": fd}


def _pairs(config):
    from .harness import make_pairs

    pairs_p = config["pairs"]
    center = config.point("pairs", "center")
    return make_pairs(center, pairs_p["r0"], pairs_p["levels"],
                      pairs_p["directions"], _stream(config))


def _solver_params(config):
    from .bsde import SolverParams

    solver = config["solver"]
    return SolverParams(solver["n_paths"], solver["n_steps"],
                        solver["basis_degree"], solver["picard_iters"],
                        solver["n_boot"])


def _run_verify_main1(config, consts, workers):
    from .harness import verify_main1

    report = verify_main1(config.spec, _pairs(config),
                          _solver_params(config), _stream(config),
                          config.constants, workers)
    return [report], {}


def _run_verify_corollary(config, consts, workers):
    from .harness import verify_corollary

    report = verify_corollary(config.spec, _pairs(config),
                              _solver_params(config), _stream(config),
                              config.constants, workers,
                              oracle=config["pairs"]["oracle"])
    return [report], {}


def _run_verify_main2(config, consts, workers):
    from .harness import verify_main2

    spec = config.spec
    control = config["control"]
    use_fd = spec.d == 1 and config["pairs"]["oracle"] != "mc"

    report = verify_main2(spec, _pairs(config), _stream(config),
                          config["fd"] if use_fd else None,
                          _family(config), control["n_paths"],
                          control["n_steps"], config.constants, workers)
    return [report], {}


def _run_verify_girsanov(config, consts, workers):
    from .harness import verify_girsanov
    from .paths import build_grid

    spec = config.spec
    grid_p = config["grid"]
    coupling = config["coupling"]

    grid = build_grid(spec.T, grid_p["n0"], grid_p["q"], grid_p["h_min"])
    x = config.point("coupling", "x")

    reports = verify_girsanov(spec, consts, grid, _stream(config), x,
                              coupling["separations"], coupling["n_paths"],
                              coupling["drift_cap"], workers,
                              rate_levels=coupling["rate_levels"])
    return reports, {"grid": grid}


def _run_schedule_check(config, consts, workers):
    from .model import check_schedule_inequality

    sched = config["schedule"]
    t_grid = np.linspace(0.0, config.spec.T, sched["n_times"],
                         endpoint=False)
    report = check_schedule_inequality(consts.schedule(), consts,
                                       sched["p_grid"], t_grid)
    return [report], {"schedule": consts.schedule()}


_RUNNERS = {
    "simulate": _run_simulate,
    "bsde": _run_bsde,
    "g-semigroup": _run_g_semigroup,
    "g-heat": _run_g_heat,
    "verify-main1": _run_verify_main1,
    "verify-corollary": _run_verify_corollary,
    "verify-main2": _run_verify_main2,
    "verify-girsanov": _run_verify_girsanov,
    "schedule-check": _run_schedule_check,
}


def run(config_path, kind=None, workers=None, out=None, options=None):
    """
    run the experiment of the config at config_path and write its
    results. Returns (exit status, RunSummary, RunManifest).
    Configuration and numerical errors propagate as CouplexError.
    """

    from .check import RunSummary
    from .config import load_config
    from .harness import CONSTANTS_NOTE
    from .model import derive_constants
    from .report import Reporter
    from .workers import resolve_workers

    started = time()
    config = load_config(config_path, kind)
    workers = resolve_workers(workers)

    consts = derive_constants(config.spec, config=config.constants)
    _log.info("running %s on %s with %i worker(s)", config.kind,
              config.spec.name or "spec", workers)

    checks, values = _RUNNERS[config.kind](config, consts, workers)

    summary = RunSummary(config.kind, checks, consts, config.constants,
                         values, CONSTANTS_NOTE)
    summary.check()

    outdir = out or config.output_dir or DEFAULT_OUTPUT_DIR
    reporter = Reporter(outdir, "results", options)
    reporter.add_formats_by_name(["json", "csv"])
    reports = getattr(options, "reports", None) or ()
    reporter.add_formats_by_name([r for r in reports
                                  if r not in ("json", "csv")])
    written = reporter.run(summary)

    elapsed = time() - started
    manifest = RunManifest(config, consts, started, elapsed,
                           [basename(fn) for fn in written])
    manifest.write(join(outdir, "manifest.json"), options)

    _log.info("%s %s in %.1fs", config.kind,
              "passed" if summary.is_pass() else "FAILED", elapsed)

    status = EXIT_PASS if summary.is_pass() else EXIT_FAIL
    return status, summary, manifest


def list_builtin_specs(config=None):
    """
    the built-in spec catalogue: id, description, hypothesis constants
    and derived constants for each spec
    """

    from .model import (builtin_spec, builtin_spec_description,
                        builtin_spec_ids, derive_constants)

    found = list()
    for name in builtin_spec_ids():
        spec = builtin_spec(name)
        spec.validate()
        found.append({
            "id": name,
            "description": builtin_spec_description(name),
            "mode": spec.mode,
            "hypotheses": spec.hypothesis_constants(),
            "constants": derive_constants(spec, config=config),
        })
    return found


def _print_catalogue(options):
    from .report import JSONCheckEncoder

    catalogue = list_builtin_specs()

    if options.json:
        dump(catalogue, sys.stdout, sort_keys=True, indent=2,
             cls=partial(JSONCheckEncoder, options))
        print()
        return EXIT_PASS

    for entry in catalogue:
        print("%-16s %-10s %s" % (entry["id"], entry["mode"],
                                  entry["description"]))
        hyp = entry["hypotheses"]
        print("    " + ", ".join("%s=%g" % (k, hyp[k]) for k in sorted(hyp)
                                 if isinstance(hyp[k], (int, float))))
    return EXIT_PASS


def cli(options):
    """
    run the command described by a parsed options object
    """

    from .report import REPORT_FORMATS, TextReportFormat, quick_report

    if options.kind == "list":
        return _print_catalogue(options)

    if not options.config:
        print("couplex: error: %s needs --config" % options.kind,
              file=sys.stderr)
        return EXIT_ERROR

    unknown = [r for r in (options.reports or ())
               if r not in REPORT_FORMATS]
    if unknown:
        known = ", ".join(sorted(REPORT_FORMATS))
        print("couplex: error: unknown report format %s, expected one"
              " of %s" % (", ".join(unknown), known), file=sys.stderr)
        return EXIT_ERROR

    try:
        status, summary, _manifest = run(options.config, options.kind,
                                         options.workers,
                                         options.output_dir, options)
    except (CouplexError, EnvironmentError) as err:
        print("couplex: error: %s" % err, file=sys.stderr)
        return EXIT_ERROR

    if not options.silent:
        quick_report(TextReportFormat, summary, options)

    return status


class _CouplexParser(ArgumentParser):
    """
    an ArgumentParser whose usage errors exit with EXIT_ERROR, keeping
    EXIT_FAIL for failed checks
    """

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, "%s: error: %s\n" % (self.prog, message))


class _opt_cb_verbose(Action):
    """
    callback for the --verbose option; each use lowers the log
    threshold one step
    """

    def __call__(self, parser, options, values, option_string=None):
        options.verbosity = getattr(options, "verbosity", 0) + 1


def add_general_optgroup(parser):
    """
    option group for general-use features of the couplex CLI
    """

    g = parser.add_argument_group("General Options")

    g.add_argument("-q", "--quiet", dest="silent",
                   action="store_true", default=False,
                   help="log warnings only and print no summary")

    g.add_argument("-v", "--verbose", nargs=0, action=_opt_cb_verbose,
                   default=0, dest="verbosity",
                   help="log debug messages")

    g.add_argument("-j", "--json", dest="json",
                   action="store_true", default=False,
                   help="print the catalogue of list as JSON")


def add_run_optgroup(parser):
    """
    option group for running an experiment
    """

    g = parser.add_argument_group("Run Options")

    g.add_argument("--config", action="store", default=None,
                   help="experiment config (JSON)")

    g.add_argument("--workers", action="store", type=int, default=None,
                   help="worker processes; defaults to COUPLEX_WORKERS"
                   " or 1")


def create_optparser(progname=None):
    """
    an ArgumentParser instance with the appropriate options and groups
    for the couplex utility
    """

    from .config import KINDS
    from . import report

    parser = _CouplexParser(prog=progname)
    parser.add_argument("kind", choices=KINDS + ("list", ),
                        help="experiment kind, or list for the built-in"
                        " specs")

    add_general_optgroup(parser)
    add_run_optgroup(parser)

    report.add_general_report_optgroup(parser)
    report.add_json_report_optgroup(parser)
    report.add_html_report_optgroup(parser)

    return parser


def default_cli_options(updates=None):
    """
    generate an options object with the appropriate default values in
    place for API usage of run. updates is an optional dictionary
    which will be used to update fields on the options object.
    """

    parser = create_optparser()
    options = parser.parse_args(["list"])

    if updates:
        for key, value in updates.items():
            setattr(options, key, value)

    return options


def _setup_logging(options):
    if options.silent:
        level = logging.WARNING
    elif options.verbosity:
        level = logging.DEBUG
    else:
        level = logging.INFO

    logging.basicConfig(level=level, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")


def main(args=sys.argv):
    """
    Main entry point for the couplex CLI
    """

    parser = create_optparser(basename(args[0]))
    try:
        options = parser.parse_args(args[1:])
    except SystemExit as se:
        return se.code

    _setup_logging(options)
    return cli(options)


#
# The end.
