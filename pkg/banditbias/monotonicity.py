"""
Exhaustive verification of monotonicity properties on finite instances.

A finite instance restricts every arm to a finite support and every trial to
at most H pulls, so that the relevant part of the reward table has finitely
many values.  Tables are numbered by a mixed-radix index: cell (i, k) is the
digit at position (k-1)*R + (i-1), where R is the number of rows per arm,
and the digit selects a support value.  When external randomness is
enumerated, W_1..W_H follow as further digits.

An instance is a dictionary::

    {'name': 'lilucb-k2', 'support': [0., 1.], 'K': 2, 'horizon': 6,
     'rows': 5, 'sampling': {...}, 'stopping': {...}, 'choosing': {...},
     'arm': 1, 'condition': 'chosen(1)', 'checks': [...]}

or, for sequential halving, {'halving': {'budget': 4}, ...} instead of the
three rules.
"""

import logging
import numpy as np
from time import time
from multiprocessing import Pool
from banditbias.tabular import ArmSpec, RewardTable, RandomnessSource
from banditbias.engine import run_trial, run_sequential_halving, \
    halving_schedule
from banditbias.bias_lab import make_condition, condition_holds, \
    condition_label

DEFAULT_MAX_TABLES = 10**7

CHECKS = ('condition', 'optimistic_sampling', 'lil_ucb_coupling',
          'halving_coupling')

_BLOCK = 4096


class MonotonicityReport(object):
    """
    Outcome of one exhaustive check.

    **Attributes**

    .. attribute:: instance

        Name of the finite instance.

    .. attribute:: check

        Name of the property checked.

    .. attribute:: verdict

        'pass' or 'counterexample'.

    .. attribute:: instances_checked

        Number of (table, perturbed table) comparisons made.

    .. attribute:: counterexample

        None, or a dictionary describing the first violation: table index
        and cells, perturbed cell, old and new values, the two quantities
        compared and a replay command line.
    """

    def __init__(self, instance, check, instances_checked,
                 counterexample=None):
        self.instance = instance
        self.check = check
        self.instances_checked = int(instances_checked)
        self.counterexample = counterexample
        self.verdict = 'pass' if counterexample is None else 'counterexample'

    @property
    def passed(self):
        return self.counterexample is None

    def to_dict(self):
        return {'instance': self.instance, 'check': self.check,
                'verdict': self.verdict,
                'instances_checked': self.instances_checked,
                'counterexample': self.counterexample}

    def __repr__(self):
        return 'MonotonicityReport(%s, %s, %s, %d comparisons)' % \
            (self.instance, self.check, self.verdict, self.instances_checked)


###########################
# enumeration
###########################

class Enumeration(object):
    """
    Mixed-radix numbering of the tables (and randomness values) of a finite
    instance.
    """

    def __init__(self, inst, max_tables=DEFAULT_MAX_TABLES):
        self.inst = inst
        supports = inst['support']
        if np.isscalar(supports[0]):
            supports = [supports] * inst['K']
        self.supports = [np.asarray(s, dtype=float) for s in supports]
        self.n_arms = len(self.supports)
        self.arms = [ArmSpec('discrete', support=list(s),
                             probs=[1. / len(s)] * len(s))
                     for s in self.supports]

        if inst.get('halving'):
            schedule = halving_schedule(inst['halving']['budget'],
                                        self.n_arms)
            self.horizon = sum(a * m for a, m in schedule)
            self.rows = inst.get('rows', sum(m for a, m in schedule))
        else:
            self.horizon = inst['horizon']
            self.rows = inst.get('rows', self.horizon)

        radices = []
        for k in range(self.n_arms):
            radices += [len(self.supports[k])] * self.rows
        self.n_cells = len(radices)
        self.w_support = None
        if inst.get('enumerate_randomness'):
            self.w_support = np.asarray(inst['randomness_support'],
                                        dtype=float)
            radices += [len(self.w_support)] * self.horizon
        self.radices = np.array(radices, dtype=np.int64)
        self.weights = np.concatenate(([1], np.cumprod(self.radices)[:-1]))
        self.n_tables = int(np.prod(self.radices, dtype=object))

        if self.n_tables > max_tables:
            raise UserWarning('Instance %s has %d tables, more than the \
max_tables guard %d' % (inst.get('name'), self.n_tables, max_tables))

    def position(self, i, k):
        return (k - 1) * self.rows + (i - 1)

    def digits(self, idx):
        return [(idx // int(w)) % int(r) for w, r in
                zip(self.weights, self.radices)]

    def column_span(self, k):
        """
        (n_low, n_col, n_high) such that a table index reads
        low + n_low * (col + n_col * high), col being arm k's block.
        """
        first = self.position(1, k)
        n_low = int(np.prod(self.radices[:first]))
        n_col = int(np.prod(self.radices[first:first + self.rows]))
        n_high = self.n_tables // (n_low * n_col)
        return n_low, n_col, n_high

    def overrides(self, idx):
        digits = self.digits(idx)
        cells = {}
        for k in range(1, self.n_arms + 1):
            for i in range(1, self.rows + 1):
                d = digits[self.position(i, k)]
                cells[(i, k)] = float(self.supports[k-1][d])
        w_cells = {}
        if self.w_support is not None:
            for t in range(1, self.horizon + 1):
                w_cells[t] = float(self.w_support[digits[self.n_cells + t-1]])
        return cells, w_cells

    def table(self, idx):
        cells, w_cells = self.overrides(idx)
        return RewardTable(0, self.arms, cells), RandomnessSource(0, w_cells)


def _run(inst, table, w, mode, horizon):
    if inst.get('halving'):
        return run_sequential_halving(table, inst['halving']['budget'],
                                      table.n_arms)
    stopping, choosing = inst['stopping'], inst['choosing']
    if mode == 'paths':
        # all H pulls; the choice is not used for count paths
        stopping = {'kind': 'fixed_time', 'M': horizon}
        choosing = {'kind': 'argmax_count'}
    return run_trial(table, w, inst['sampling'], stopping, choosing, horizon)


def count_path(trace, n_arms, horizon):
    """
    Array of shape (horizon, K) holding N_k(t) for t = 1..horizon, frozen at
    the final counts after the trial stopped.
    """
    path = np.zeros((horizon, n_arms), dtype=np.int32)
    counts = np.zeros(n_arms, dtype=np.int32)
    for t in range(horizon):
        if t < len(trace.actions):
            counts[trace.actions[t] - 1] += 1
        path[t] = counts
    return path


def _evaluate_block(task):
    inst, mode, start, stop, max_tables = task
    enum = Enumeration(inst, max_tables)
    cond = make_condition(inst['condition']) if 'condition' in inst else None
    arm = inst.get('arm', 1)
    n = stop - start
    truncated = np.zeros(n, dtype=bool)
    holds = np.zeros(n, dtype=bool)
    n_k = np.zeros(n, dtype=np.int64)
    kappa = np.zeros(n, dtype=np.int32)
    paths = None
    if mode == 'paths':
        paths = np.zeros((n, enum.horizon, enum.n_arms), dtype=np.int32)
    for j, idx in enumerate(range(start, stop)):
        table, w = enum.table(idx)
        trace = _run(inst, table, w, mode, enum.horizon)
        truncated[j] = trace.truncated
        n_k[j] = trace.state.counts[arm-1]
        if not trace.truncated:
            kappa[j] = trace.kappa
            if cond is not None:
                holds[j] = condition_holds(cond, trace)
        if paths is not None:
            paths[j] = count_path(trace, enum.n_arms, enum.horizon)
    return truncated, holds, n_k, kappa, paths


def evaluate_all(inst, mode, threads=1, max_tables=DEFAULT_MAX_TABLES):
    """
    Runs the trial of every table of an instance.

    :param mode: 'rules' to run the instance's stopping rule, 'paths' to run
        all H pulls and record count paths
    :rtype: dict
    :returns: arrays truncated, holds, n_k, kappa and (for 'paths') paths,
        indexed by table index
    """
    enum = Enumeration(inst, max_tables)
    tasks = [(inst, mode, start, min(start + _BLOCK, enum.n_tables),
              max_tables) for start in range(0, enum.n_tables, _BLOCK)]
    t_ref = time()
    if threads > 1 and len(tasks) > 1:
        with Pool(threads) as pool:
            parts = pool.map(_evaluate_block, tasks)
    else:
        parts = [_evaluate_block(task) for task in tasks]
    logging.info('Evaluated %d tables of %s in %.2f s' %
                 (enum.n_tables, inst.get('name'), time() - t_ref))
    result = {}
    for j, key in enumerate(('truncated', 'holds', 'n_k', 'kappa', 'paths')):
        if parts[0][j] is None:
            result[key] = None
        else:
            result[key] = np.concatenate([part[j] for part in parts])
    return result


def _upward_pairs(enum, k):
    """
    Yields (i, delta, idx, idx2): every table idx whose cell (i, k) can be
    raised by delta support steps, and the index of the raised table.
    """
    all_idx = np.arange(enum.n_tables, dtype=np.int64)
    s = len(enum.supports[k-1])
    for i in range(1, enum.rows + 1):
        weight = int(enum.weights[enum.position(i, k)])
        digit = (all_idx // weight) % s
        for delta in range(1, s):
            ok = digit + delta < s
            idx = all_idx[ok]
            yield i, delta, idx, idx + delta * weight


def _counterexample(inst, enum, idx, i, k, delta, quantities):
    cells, w_cells = enum.overrides(idx)
    old = cells[(i, k)]
    new = float(enum.supports[k-1][enum.digits(idx)[enum.position(i, k)] +
                                   delta])
    example = {'table_index': int(idx),
               'table': dict(('%d,%d' % key, value) for key, value in
                             sorted(cells.items())),
               'cell': [int(i), int(k)], 'old_value': old, 'new_value': new,
               'quantities': quantities,
               'replay': 'banditbias check %s --table %d --cell %d,%d \
--value %g' % (inst.get('name'), idx, i, k, new)}
    if w_cells:
        example['randomness'] = dict(('%d' % t, u) for t, u in
                                     sorted(w_cells.items()))
    return example


###########################
# checks
###########################

def check_condition_monotonicity(inst, direction, threads=1,
                                 max_tables=DEFAULT_MAX_TABLES):
    """
    Checks that 1(C)/N_k(T) moves in the given direction whenever a single
    cell of arm k is raised, all other cells fixed.  Ratios are compared as
    exact integer fractions; pairs involving a truncated trial or N_k(T) = 0
    are skipped.

    :param inst: finite instance with 'arm' and 'condition'
    :param direction: 'increasing' or 'decreasing'
    :rtype: :class:`MonotonicityReport`
    :raises UserWarning: if the instance exceeds the size guard
    """
    if direction not in ('increasing', 'decreasing'):
        raise UserWarning('direction must be increasing or decreasing')
    enum = Enumeration(inst, max_tables)
    k = inst.get('arm', 1)
    ev = evaluate_all(inst, 'rules', threads, max_tables)
    num = ev['holds'].astype(np.int64)
    den = ev['n_k']
    valid = ~ev['truncated'] & (den >= 1)

    n_checked = 0
    n_skipped = 0
    best = None
    for i, delta, idx, idx2 in _upward_pairs(enum, k):
        ok = valid[idx] & valid[idx2]
        n_skipped += int(np.sum(~ok))
        idx, idx2 = idx[ok], idx2[ok]
        n_checked += len(idx)
        # new/old compared as num2*den1 vs num1*den2
        lhs = num[idx2] * den[idx]
        rhs = num[idx] * den[idx2]
        if direction == 'decreasing':
            bad = lhs > rhs
        else:
            bad = lhs < rhs
        if np.any(bad):
            first = int(idx[np.argmax(bad)])
            if best is None or (first, i, delta) < best:
                best = (first, i, delta)
    if n_skipped:
        logging.info('%d comparisons skipped (truncated or N_k = 0)' %
                     n_skipped)

    name = 'condition %s %s arm %d' % (condition_label(make_condition(
        inst['condition'])), direction, k)
    if best is None:
        return MonotonicityReport(inst.get('name'), name, n_checked)
    idx, i, delta = best
    idx2 = idx + delta * int(enum.weights[enum.position(i, k)])
    quantities = {'original': '%d/%d' % (num[idx], den[idx]),
                  'perturbed': '%d/%d' % (num[idx2], den[idx2])}
    return MonotonicityReport(inst.get('name'), name, n_checked,
                              _counterexample(inst, enum, idx, i, k, delta,
                                              quantities))


def check_optimistic_sampling(inst, threads=1, max_tables=DEFAULT_MAX_TABLES):
    """
    Checks that raising a single cell of arm k never lowers N_k(t) for any
    t <= H, for every arm k.  The stopping rule is replaced by H pulls.

    :rtype: :class:`MonotonicityReport`
    """
    enum = Enumeration(inst, max_tables)
    ev = evaluate_all(inst, 'paths', threads, max_tables)
    paths = ev['paths']

    n_checked = 0
    best = None
    for k in range(1, enum.n_arms + 1):
        for i, delta, idx, idx2 in _upward_pairs(enum, k):
            n_checked += len(idx)
            bad = np.any(paths[idx2, :, k-1] < paths[idx, :, k-1], axis=1)
            if np.any(bad):
                first = int(idx[np.argmax(bad)])
                if best is None or (first, k, i, delta) < best:
                    best = (first, k, i, delta)

    if best is None:
        return MonotonicityReport(inst.get('name'), 'optimistic_sampling',
                                  n_checked)
    idx, k, i, delta = best
    idx2 = idx + delta * int(enum.weights[enum.position(i, k)])
    quantities = {'original': [int(n) for n in paths[idx, :, k-1]],
                  'perturbed': [int(n) for n in paths[idx2, :, k-1]]}
    return MonotonicityReport(inst.get('name'), 'optimistic_sampling',
                              n_checked,
                              _counterexample(inst, enum, idx, i, k, delta,
                                              quantities))


def check_lil_ucb_coupling(inst, threads=1, max_tables=DEFAULT_MAX_TABLES):
    """
    For every pair of tables that differ only in the column of arm k and
    every t <= H, checks both implications
    N_k(t) <= N'_k(t) => N_j(t) >= N'_j(t) and
    N_k(t) >= N'_k(t) => N_j(t) <= N'_j(t) for all j != k
    (so equal counts for arm k force equal counts elsewhere).

    :rtype: :class:`MonotonicityReport`
    """
    enum = Enumeration(inst, max_tables)
    ev = evaluate_all(inst, 'paths', threads, max_tables)
    paths = ev['paths']
    horizon, n_arms = enum.horizon, enum.n_arms

    n_checked = 0
    best = None
    for k in range(1, n_arms + 1):
        n_low, n_col, n_high = enum.column_span(k)
        grid = paths.reshape(n_high, n_col, n_low, horizon, n_arms)
        others = [j for j in range(n_arms) if j != k-1]
        for a in range(n_col):
            pa = grid[:, a:a+1]
            nk_a, nk_b = pa[..., k-1], grid[..., k-1]
            rest_a, rest_b = pa[..., others], grid[..., others]
            bad = ((nk_a <= nk_b) & np.any(rest_a < rest_b, axis=-1)) | \
                ((nk_a >= nk_b) & np.any(rest_a > rest_b, axis=-1))
            n_checked += n_high * n_col * n_low
            if not np.any(bad):
                continue
            high, b, low, t = [np.asarray(x, dtype=np.int64)
                               for x in np.nonzero(bad)]
            idx_a = low + n_low * (a + n_col * high)
            idx_b = low + n_low * (b + n_col * high)
            order = np.lexsort((t, idx_b, idx_a))[0]
            found = (int(idx_a[order]), int(idx_b[order]), int(t[order]), k)
            if best is None or found < best:
                best = found

    if best is None:
        return MonotonicityReport(inst.get('name'), 'lil_ucb_coupling',
                                  n_checked)
    idx_a, idx_b, t, k = best
    cells_a, w_a = enum.overrides(idx_a)
    cells_b, w_b = enum.overrides(idx_b)
    example = {'table_index': idx_a, 'other_table_index': idx_b, 'arm': k,
               'time': t + 1,
               'table': dict(('%d,%d' % key, value) for key, value in
                             sorted(cells_a.items())),
               'other_column': [cells_b[(i, k)] for i in
                                range(1, enum.rows + 1)],
               'quantities': {'original': [int(n) for n in paths[idx_a, t]],
                              'perturbed': [int(n) for n in paths[idx_b, t]]}}
    return MonotonicityReport(inst.get('name'), 'lil_ucb_coupling',
                              n_checked, example)


def check_halving_coupling(inst, threads=1, max_tables=DEFAULT_MAX_TABLES):
    """
    For sequential halving, checks that raising a single cell of arm k gives
    N_k(t) <= N'_k(t) for all t <= T and 1(kappa = k) <= 1(kappa' = k), for
    every arm k.

    :rtype: :class:`MonotonicityReport`
    """
    if not inst.get('halving'):
        raise UserWarning('halving_coupling needs a sequential halving \
instance')
    enum = Enumeration(inst, max_tables)
    ev = evaluate_all(inst, 'paths', threads, max_tables)
    paths, kappa = ev['paths'], ev['kappa']

    n_checked = 0
    best = None
    for k in range(1, enum.n_arms + 1):
        for i, delta, idx, idx2 in _upward_pairs(enum, k):
            n_checked += len(idx)
            bad_counts = np.any(paths[idx2, :, k-1] < paths[idx, :, k-1],
                                axis=1)
            bad_choice = (kappa[idx] == k) & (kappa[idx2] != k)
            bad = bad_counts | bad_choice
            if np.any(bad):
                first = int(idx[np.argmax(bad)])
                if best is None or (first, k, i, delta) < best:
                    best = (first, k, i, delta)

    if best is None:
        return MonotonicityReport(inst.get('name'), 'halving_coupling',
                                  n_checked)
    idx, k, i, delta = best
    idx2 = idx + delta * int(enum.weights[enum.position(i, k)])
    quantities = {'original': {'counts': [int(n) for n in paths[idx, :, k-1]],
                               'kappa': int(kappa[idx])},
                  'perturbed': {'counts': [int(n) for n in
                                           paths[idx2, :, k-1]],
                                'kappa': int(kappa[idx2])}}
    return MonotonicityReport(inst.get('name'), 'halving_coupling', n_checked,
                              _counterexample(inst, enum, idx, i, k, delta,
                                              quantities))


def run_checks(inst, threads=1, max_tables=DEFAULT_MAX_TABLES):
    """
    Runs every check listed in inst['checks'].

    :rtype: list of :class:`MonotonicityReport`
    """
    reports = []
    for check in inst['checks']:
        kind = check['check']
        if kind == 'condition':
            report = check_condition_monotonicity(inst, check['direction'],
                                                  threads, max_tables)
        elif kind == 'optimistic_sampling':
            report = check_optimistic_sampling(inst, threads, max_tables)
        elif kind == 'lil_ucb_coupling':
            report = check_lil_ucb_coupling(inst, threads, max_tables)
        elif kind == 'halving_coupling':
            report = check_halving_coupling(inst, threads, max_tables)
        else:
            raise UserWarning('Unknown check %s' % kind)
        logging.info('%s : %s' % (report.check, report.verdict))
        reports.append(report)
    return reports


def replay(inst, table_index, cell, value, max_tables=DEFAULT_MAX_TABLES):
    """
    Re-runs the trials of table table_index before and after setting cell
    (i, k) to value, and returns the quantities every check compares.

    :param cell: (i, k) pair
    :rtype: dict
    """
    enum = Enumeration(inst, max_tables)
    if table_index < 0 or table_index >= enum.n_tables:
        raise ValueError('Table index %s outside [0, %d)' %
                         (table_index, enum.n_tables))
    i, k = cell
    table, w = enum.table(table_index)
    tables = {'original': table,
              'perturbed': table.with_cell_overridden(i, k, value)}
    arm = inst.get('arm', k)
    cond = make_condition(inst['condition']) if 'condition' in inst else None

    result = {}
    for key, tab in tables.items():
        quantities = {}
        trace = _run(inst, tab, w, 'rules', enum.horizon)
        if cond is not None:
            num = int(not trace.truncated and condition_holds(cond, trace))
            quantities['ratio'] = '%d/%d' % (num, trace.state.counts[arm-1])
        paths_trace = _run(inst, tab, w, 'paths', enum.horizon)
        path = count_path(paths_trace, enum.n_arms, enum.horizon)
        quantities['counts'] = [int(n) for n in path[:, k-1]]
        quantities['all_counts'] = [int(n) for n in path[-1]]
        quantities['kappa'] = trace.kappa
        result[key] = quantities
    return result
