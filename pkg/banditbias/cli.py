"""
Command line interface::

    banditbias run <preset|config.json> [--reps N] [--seed S] [--out DIR]
                   [--plot] [--grid lo:hi:n] [--threads N] [--hdf5]
                   [--dump-traces N] [--eval-time T]
    banditbias check <instance> [--max-tables N] [--threads N] [--out DIR]
                     [--table IDX --cell i,k --value v]
    banditbias describe <preset|instance>

Exit codes: 0 success, 1 error, 2 empty conditions (run), 3 counterexample
(check).
"""

import os
import sys
import json
import argparse
import logging
import numpy as np
from time import time
from banditbias.options import BanditBiasOptions
from banditbias.presets import PRESETS, INSTANCES, instance, \
    derived_constants
from banditbias.bias_lab import estimate
from banditbias.monotonicity import run_checks, replay, Enumeration
from banditbias.reports import write_report_csv, write_report_json, \
    write_cdf_hdf5, write_monotonicity_json, clean_for_json
from banditbias.plot_mpl import plotReport

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_EMPTY = 2
EXIT_COUNTEREXAMPLE = 3


def do_run_setup_and_run(opdict):
    """
    Runs a verified experiment configuration and writes its artifacts in
    out_dir/name: report.csv, report.json, and optionally fig/*.svg,
    cdf.hdf5 and traces/*.csv.

    :rtype: int
    :returns: exit code
    """
    run_dir = os.path.join(opdict['out_dir'], opdict['name'])

    t_ref = time()
    report = estimate(opdict)
    if opdict['time']:
        logging.info("Time for run %s : %.2f s" % (opdict['name'],
                                                   time() - t_ref))
    logging.info('%d replications, %d truncated' % (report.reps,
                                                    report.n_truncated))

    write_report_csv(report, os.path.join(run_dir, 'report.csv'))
    write_report_json(report, os.path.join(run_dir, 'report.json'))
    if opdict['hdf5']:
        write_cdf_hdf5(report, os.path.join(run_dir, 'cdf.hdf5'))
    if opdict['plot']:
        plotReport(report, os.path.join(run_dir, 'fig'))

    if report.empty_conditions:
        return EXIT_EMPTY
    return EXIT_OK


def do_check_setup_and_run(opdict, inst):
    """
    Runs the checks of a finite instance and writes monotonicity.json in
    out_dir/name.

    :rtype: int
    :returns: exit code
    """
    run_dir = os.path.join(opdict['out_dir'], opdict['name'])
    reports = run_checks(inst, opdict['threads'], opdict['max_tables'])
    write_monotonicity_json(reports, os.path.join(run_dir,
                                                  'monotonicity.json'))
    failed = [r for r in reports if not r.passed]
    for r in reports:
        print('%s : %s (%d comparisons)' % (r.check, r.verdict,
                                            r.instances_checked))
    if failed:
        print(json.dumps(clean_for_json([r.to_dict() for r in failed]),
                         indent=1, sort_keys=True))
        return EXIT_COUNTEREXAMPLE
    return EXIT_OK


def _run(args):
    wo = BanditBiasOptions()
    if os.path.isfile(args.target):
        wo.read_config_file(args.target)
    else:
        wo.set_preset(args.target)

    if args.reps is not None:
        wo.opdict['reps'] = args.reps
    if args.seed is not None:
        wo.opdict['seed'] = args.seed
    if args.out is not None:
        wo.opdict['out_dir'] = args.out
    if args.grid is not None:
        try:
            lo, hi, n = args.grid.split(':')
            wo.opdict['grid'] = {'lo': float(lo), 'hi': float(hi),
                                 'n': int(n)}
        except ValueError:
            raise UserWarning('--grid must read lo:hi:n, got %s' % args.grid)
    if args.threads is not None:
        wo.opdict['threads'] = args.threads
    if args.eval_time is not None:
        wo.opdict['eval_time'] = args.eval_time
    wo.opdict['plot'] = wo.opdict['plot'] or args.plot
    wo.opdict['hdf5'] = wo.opdict['hdf5'] or args.hdf5
    if args.dump_traces:
        wo.opdict['trace_dump'] = args.dump_traces
    wo.opdict['time'] = True

    wo.verify_run_options()
    return do_run_setup_and_run(wo.opdict)


def _check(args):
    inst = instance(args.instance)
    wo = BanditBiasOptions()
    wo.opdict['name'] = inst['name']
    if args.out is not None:
        wo.opdict['out_dir'] = args.out
    if args.max_tables is not None:
        wo.opdict['max_tables'] = args.max_tables
    if args.threads is not None:
        wo.opdict['threads'] = args.threads

    if args.table is not None:
        if args.cell is None or args.value is None:
            raise UserWarning('--table needs --cell i,k and --value v')
        cell = tuple(int(x) for x in args.cell.split(','))
        result = replay(inst, args.table, cell, args.value,
                        wo.opdict['max_tables'])
        print(json.dumps(clean_for_json(result), indent=1, sort_keys=True))
        return EXIT_OK

    wo.verify_check_options()
    return do_check_setup_and_run(wo.opdict, inst)


def _describe(args):
    if args.name in PRESETS:
        wo = BanditBiasOptions()
        wo.set_preset(args.name)
        config = dict((key, wo.opdict[key]) for key in PRESETS[args.name])
        description = {'config': config,
                       'derived': derived_constants(wo.opdict)}
    elif args.name in INSTANCES:
        inst = instance(args.name)
        enum = Enumeration(inst, np.inf)
        description = {'config': inst,
                       'derived': {'tables': enum.n_tables,
                                   'rows': enum.rows,
                                   'horizon': enum.horizon}}
    else:
        raise UserWarning('Unknown preset or instance %s' % args.name)
    print(json.dumps(clean_for_json(description), indent=1, sort_keys=True))
    return EXIT_OK


def make_parser():
    p = argparse.ArgumentParser(prog='banditbias',
                                description='Conditional bias of sample \
means and empirical CDFs in bandit experiments')
    p.add_argument('--debug', action='store_true',
                   help="turn on debugging output")
    sub = p.add_subparsers(dest='command')
    sub.required = True

    run = sub.add_parser('run', help='estimate biases of an experiment')
    run.add_argument('target', help='preset name or JSON config file')
    run.add_argument('--reps', type=int, help='number of replications')
    run.add_argument('--seed', type=int, help='base seed')
    run.add_argument('--out', help='output directory')
    run.add_argument('--plot', action='store_true', help='write SVG plots')
    run.add_argument('--grid', help='CDF grid as lo:hi:n')
    run.add_argument('--threads', type=int, help='worker processes')
    run.add_argument('--hdf5', action='store_true',
                     help='write CDF curves to HDF5')
    run.add_argument('--dump-traces', type=int, default=0,
                     help='write the first N trials as CSV')
    run.add_argument('--eval-time', type=int,
                     help='evaluate statistics at min(T, eval_time)')
    run.set_defaults(func=_run)

    check = sub.add_parser('check', help='exhaustive monotonicity checks')
    check.add_argument('instance', help='finite instance name')
    check.add_argument('--max-tables', type=int, help='size guard')
    check.add_argument('--threads', type=int, help='worker processes')
    check.add_argument('--out', help='output directory')
    check.add_argument('--table', type=int, help='replay this table index')
    check.add_argument('--cell', help='replayed cell as i,k')
    check.add_argument('--value', type=float, help='replayed cell value')
    check.set_defaults(func=_check)

    describe = sub.add_parser('describe',
                              help='show a preset or an instance')
    describe.add_argument('name', help='preset or instance name')
    describe.set_defaults(func=_describe)
    return p


def _join_grid(argv):
    # '--grid -4:4:161' would otherwise be read as an unknown option
    joined = []
    i = 0
    while i < len(argv):
        if argv[i] == '--grid' and i + 1 < len(argv):
            joined.append('--grid=' + argv[i+1])
            i += 2
        else:
            joined.append(argv[i])
            i += 1
    return joined


def main(argv=None):
    if argv is None:
        argv = sys.argv[1:]
    try:
        args = make_parser().parse_args(_join_grid(list(argv)))
    except SystemExit as e:
        # argparse usage errors exit with EXIT_ERROR
        if e.code in (0, None):
            return EXIT_OK
        return EXIT_ERROR

    if args.debug:
        logging.basicConfig(level=logging.DEBUG,
                            format='%(levelname)s : %(asctime)s : %(message)s')
    else:
        logging.basicConfig(level=logging.INFO,
                            format='%(levelname)s : %(asctime)s : %(message)s')

    try:
        return args.func(args)
    except (UserWarning, ValueError, RuntimeError, IOError) as e:
        logging.error('%s' % e)
        return EXIT_ERROR


if __name__ == '__main__':
    sys.exit(main())
