"""
Monte Carlo estimation of marginal and conditional biases.

Replications are grouped into fixed-size chunks.  Each chunk is reduced to a
:class:`PartialAggregate` of per (condition, arm, statistic) counts, sums and
sums of squares; chunks are then merged left to right in chunk order.  The
chunking depends only on the configuration, so reports do not depend on the
number of worker processes.
"""

import os
import re
import logging
import numpy as np
from time import time
from functools import reduce
from multiprocessing import Pool
from banditbias.tabular import ArmSpec, RewardTable, RandomnessSource, \
    trial_seeds, true_cdf
from banditbias.engine import run_experiment_trial, snapshot_at, \
    write_trace_csv
from banditbias.estimators import curve_from_sorted, value_from_sorted, \
    true_functional, functional_name, make_cdf_grid, verify_cdf_grid, \
    DEFAULT_GRID

CONDITION_KINDS = ('marginal', 'early_stop', 'line_cross', 'accept_H0',
                   'accept_H1', 'reach_max', 'chosen', 'not_chosen')

# stop reason each outcome condition asks for
_REASON_OF = {'early_stop': 'max_time', 'reach_max': 'max_time',
              'line_cross': 'upper_cross', 'accept_H1': 'upper_cross',
              'accept_H0': 'lower_cross'}

ADAPTIVE_CHOOSING = ('argmax_mean', 'argmin_mean', 'argmax_count')

KAPPA = 'kappa'

# lo, hi, number of edges of the histograms of centered functional values
DENSITY_RANGE = (-4., 8., 241)


###########################
# conditions
###########################

def make_condition(value):
    """
    Builds a condition dictionary from a dictionary or from a label such as
    'early_stop' or 'chosen(2)'.
    """
    if isinstance(value, dict):
        cond = dict(value)
    else:
        match = re.match(r'^(\w+)(?:\((\d+)\))?$', str(value).strip())
        if match is None:
            raise UserWarning('Cannot parse condition %s' % value)
        cond = {'kind': match.group(1)}
        if match.group(2) is not None:
            cond['k'] = int(match.group(2))
    if cond.get('kind') not in CONDITION_KINDS:
        raise UserWarning('Unknown condition %s' % value)
    if cond['kind'] in ('chosen', 'not_chosen') and 'k' not in cond:
        raise UserWarning('Condition %s needs an arm k' % cond['kind'])
    return cond


def condition_label(cond):
    if cond['kind'] in ('chosen', 'not_chosen'):
        return '%s(%d)' % (cond['kind'], cond['k'])
    return cond['kind']


def condition_holds(cond, trace):
    """
    Evaluates a condition on a completed, non-truncated trace.  Every
    condition only looks at the stop reason and the chosen arm.
    """
    kind = cond['kind']
    if kind == 'marginal':
        return True
    if kind == 'chosen':
        return trace.kappa == cond['k']
    if kind == 'not_chosen':
        return trace.kappa != cond['k']
    return trace.stop_reason == _REASON_OF[kind]


###########################
# verdicts
###########################

def sign_verdict(bias, se, z=3.):
    """
    Turns a bias estimate and its standard error into a sign verdict.

    :param bias: estimated bias
    :param se: standard error, >= 0
    :param z: number of standard errors required
    :rtype: str
    :returns: 'positive', 'negative' or 'indeterminate'
    :raises ValueError: if se < 0
    """
    if se < 0:
        raise ValueError('Standard error must be >= 0, got %s' % se)
    if bias > z * se:
        return 'positive'
    if bias < -z * se:
        return 'negative'
    return 'indeterminate'


def curve_se(se, n):
    """
    Standard errors of an average CDF curve, floored at the Monte Carlo
    resolution 1/n.  Points in the tails where every trial agrees otherwise
    get a zero standard error.
    """
    return np.maximum(se, 1. / np.asarray(n, dtype=float))


def curve_verdict(bias, se, z=3.):
    """
    Sign verdict of a whole bias curve: 'positive' or 'negative' when some
    points are significant and all of them agree, 'mixed' when both signs
    occur, 'indeterminate' otherwise.
    """
    verdicts = set(sign_verdict(b, s, z) for b, s in zip(bias, se))
    if 'positive' in verdicts and 'negative' in verdicts:
        return 'mixed'
    if 'positive' in verdicts:
        return 'positive'
    if 'negative' in verdicts:
        return 'negative'
    return 'indeterminate'


###########################
# aggregation
###########################

class PartialAggregate(object):
    """
    Sufficient statistics of a contiguous range of chunks.

    **Attributes**

    .. attribute:: first_chunk, last_chunk

        Chunk index range (None for the empty aggregate).

    .. attribute:: n_trials, n_truncated

        Replications seen and replications that hit the horizon cap.

    .. attribute:: cond_counts

        Number of trials in each condition.

    .. attribute:: count, total, total_sq

        Arrays of shape (conditions, rows, statistics): number of defined
        values, their sum and their sum of squares.  Values are centered on
        the true value of the statistic.

    .. attribute:: density_cols, edges, hist

        Statistic columns that are also histogrammed, the bin edges of their
        centered values and the bin counts, of shape (conditions, rows,
        len(density_cols), bins).  Values outside the edges fall in the end
        bins.
    """

    def __init__(self, n_cond, n_rows, n_stats, first_chunk=None,
                 last_chunk=None, density_cols=(), edges=None):
        self.first_chunk = first_chunk
        self.last_chunk = last_chunk
        self.density_cols = list(density_cols)
        if edges is None:
            edges = np.linspace(*DENSITY_RANGE)
        self.edges = np.asarray(edges, dtype=float)
        self.hist = np.zeros((n_cond, n_rows, len(self.density_cols),
                              len(self.edges) - 1), dtype=np.int64)
        self.n_trials = 0
        self.n_truncated = 0
        self.cond_counts = np.zeros(n_cond, dtype=np.int64)
        self.count = np.zeros((n_cond, n_rows, n_stats), dtype=np.int64)
        self.total = np.zeros((n_cond, n_rows, n_stats))
        self.total_sq = np.zeros((n_cond, n_rows, n_stats))

    @property
    def is_empty(self):
        return self.first_chunk is None

    def add_values(self, values, cond_mask, n_truncated):
        """
        Accumulates a block of per-trial values of shape (trials, rows,
        statistics), NaN where undefined, with the (trials, conditions)
        membership mask.
        """
        self.n_trials += values.shape[0] + n_truncated
        self.n_truncated += n_truncated
        for c in range(cond_mask.shape[1]):
            selected = values[cond_mask[:, c]]
            self.cond_counts[c] += selected.shape[0]
            self.count[c] += np.sum(~np.isnan(selected), axis=0)
            self.total[c] += np.nansum(selected, axis=0)
            self.total_sq[c] += np.nansum(selected**2, axis=0)
            for j, col in enumerate(self.density_cols):
                for row in range(selected.shape[1]):
                    self.hist[c, row, j] += self._histogram(selected[:, row,
                                                                     col])

    def _histogram(self, x):
        x = x[~np.isnan(x)]
        x = np.clip(x, self.edges[0], self.edges[-1])
        return np.histogram(x, bins=self.edges)[0]


def merge(a, b):
    """
    Merges the aggregates of two disjoint chunk ranges.  The range with the
    smaller chunk indices is always added first.

    :raises ValueError: if the chunk ranges overlap
    """
    if a.is_empty:
        return b
    if b.is_empty:
        return a
    if b.first_chunk < a.first_chunk:
        a, b = b, a
    if a.last_chunk >= b.first_chunk:
        raise ValueError('Cannot merge overlapping chunks [%d, %d] and \
[%d, %d]' % (a.first_chunk, a.last_chunk, b.first_chunk, b.last_chunk))
    n_cond, n_rows, n_stats = a.count.shape
    merged = PartialAggregate(n_cond, n_rows, n_stats, a.first_chunk,
                              b.last_chunk, a.density_cols, a.edges)
    merged.n_trials = a.n_trials + b.n_trials
    merged.n_truncated = a.n_truncated + b.n_truncated
    merged.cond_counts = a.cond_counts + b.cond_counts
    merged.count = a.count + b.count
    merged.total = a.total + b.total
    merged.total_sq = a.total_sq + b.total_sq
    merged.hist = a.hist + b.hist
    return merged


###########################
# experiment layout
###########################

class _Layout(object):
    """
    Row and column layout of the statistics of one experiment.
    """

    def __init__(self, config, grid, conditions, functionals):
        self.arms = [ArmSpec.from_dict(a) for a in config['arms']]
        self.n_arms = len(self.arms)
        self.grid = np.asarray(grid, dtype=float)
        self.conditions = [make_condition(c) for c in conditions]
        self.functionals = list(functionals)
        self.with_kappa = bool(config.get('halving')) or \
            config.get('choosing', {}).get('kind') in ADAPTIVE_CHOOSING
        self.n_rows = self.n_arms + (1 if self.with_kappa else 0)
        n_func = len(self.functionals)
        self.cdf_slice = slice(1 + n_func, 1 + n_func + len(self.grid))
        self.n_stats = self.cdf_slice.stop
        self.kappa_col = None
        if self.with_kappa:
            # true mean of the chosen arm, kappa row only
            self.kappa_col = self.n_stats
            self.n_stats += 1
        self.density_cols = list(range(1, 1 + n_func))
        self.density_edges = np.linspace(*DENSITY_RANGE)

        self.truth = np.zeros((self.n_rows, self.n_stats))
        for k, arm in enumerate(self.arms):
            self.truth[k, 0] = arm.mean
            for j, f in enumerate(self.functionals):
                self.truth[k, 1 + j] = true_functional(arm, f)
            self.truth[k, self.cdf_slice] = true_cdf(arm, self.grid)

    def trial_values(self, trace, eval_time):
        values = np.full((self.n_rows, self.n_stats), np.nan)
        if eval_time is None:
            state = trace.state
        else:
            state = snapshot_at(trace, min(eval_time, trace.stop_time))
        for k in range(self.n_arms):
            if state.counts[k] == 0:
                continue
            samples = np.sort(np.array(state.samples[k], dtype=float))
            values[k, 0] = state.sums[k] / state.counts[k]
            for j, f in enumerate(self.functionals):
                try:
                    values[k, 1 + j] = value_from_sorted(samples, f)
                except ValueError:
                    pass
            values[k, self.cdf_slice] = curve_from_sorted(samples, self.grid)
        values[:self.n_arms] -= self.truth[:self.n_arms]
        if self.with_kappa and state.counts[trace.kappa-1] > 0:
            mu_kappa = self.arms[trace.kappa-1].mean
            values[self.n_arms, 0] = \
                state.sums[trace.kappa-1] / state.counts[trace.kappa-1] - \
                mu_kappa
            values[self.n_arms, self.kappa_col] = mu_kappa
        return values


def _run_chunk(task):
    config, layout, chunk_index, start, stop = task
    seed = config['seed']
    eval_time = config.get('eval_time')
    dump_n = config.get('trace_dump') or 0

    values = []
    masks = []
    n_truncated = 0
    for r in range(start, stop):
        table_seed, w_seed = trial_seeds(seed, r)
        table = RewardTable(table_seed, layout.arms)
        w = RandomnessSource(w_seed)
        trace = run_experiment_trial(config, table, w)
        if r < dump_n:
            trace_dir = config.get('trace_dir', os.curdir)
            write_trace_csv(trace, os.path.join(trace_dir,
                                                'trace_%06d.csv' % r))
        if trace.truncated:
            n_truncated += 1
            continue
        values.append(layout.trial_values(trace, eval_time))
        masks.append([condition_holds(c, trace) for c in layout.conditions])

    part = PartialAggregate(len(layout.conditions), layout.n_rows,
                            layout.n_stats, chunk_index, chunk_index,
                            layout.density_cols, layout.density_edges)
    if values:
        part.add_values(np.array(values), np.array(masks, dtype=bool),
                        n_truncated)
    else:
        part.n_trials += n_truncated
        part.n_truncated += n_truncated
    return part


def chunk_ranges(reps, chunk_size):
    """
    Splits replications 0..reps-1 into consecutive (start, stop) chunks.
    """
    return [(start, min(start + chunk_size, reps))
            for start in range(0, reps, chunk_size)]


###########################
# report
###########################

class BiasReport(object):
    """
    Conditional and marginal bias estimates of one experiment.

    **Attributes**

    .. attribute:: conditions

        List of condition labels.

    .. attribute:: arm_labels

        Row labels: '1'..'K', plus 'kappa' for the chosen arm when the
        experiment chooses adaptively.

    .. attribute:: grid

        CDF grid.

    .. attribute:: reps, seed, n_truncated, cond_counts

        Replications, base seed, truncated replications and per-condition
        trial counts.

    .. attribute:: config

        Echo of the experiment configuration.
    """

    def __init__(self, layout, aggregate, config, z=3.):
        self.config = config
        self.z = z
        self.grid = layout.grid
        self.functionals = layout.functionals
        self.conditions = [condition_label(c) for c in layout.conditions]
        self.arm_labels = [str(k + 1) for k in range(layout.n_arms)]
        if layout.with_kappa:
            self.arm_labels.append(KAPPA)
        self.n_arms = layout.n_arms
        self.cdf_slice = layout.cdf_slice
        self.reps = aggregate.n_trials
        self.seed = config.get('seed')
        self.n_truncated = aggregate.n_truncated
        self.cond_counts = aggregate.cond_counts
        self.density_cols = aggregate.density_cols
        self.density_edges = aggregate.edges
        self.hist = aggregate.hist

        count = aggregate.count.astype(float)
        with np.errstate(invalid='ignore', divide='ignore'):
            mean = aggregate.total / count
            var = (aggregate.total_sq - count * mean**2) / (count - 1.)
            se = np.sqrt(np.maximum(var, 0.) / count)
        se[count < 2] = np.nan
        self.count = aggregate.count
        self.bias = mean
        self.se = se
        self.estimate = mean + layout.truth[np.newaxis]
        if layout.with_kappa:
            # the true mean of the chosen arm is itself random
            self.estimate[:, self.n_arms, 0] = mean[:, self.n_arms, 0] + \
                mean[:, self.n_arms, layout.kappa_col]
        self.truth = layout.truth

    @property
    def empty_conditions(self):
        return [label for label, n in zip(self.conditions, self.cond_counts)
                if n == 0]

    def _index(self, condition, arm):
        c = self.conditions.index(condition)
        row = self.arm_labels.index(str(arm))
        return c, row

    def probability(self, condition):
        """
        Estimated probability of a condition among non-truncated trials.
        """
        c = self.conditions.index(condition)
        n_ok = self.reps - self.n_truncated
        return self.cond_counts[c] / float(n_ok) if n_ok else np.nan

    def cdf(self, condition, arm):
        """
        Average conditional CDF curve of an arm with its bias and floored
        standard errors.

        :rtype: dict
        :returns: dictionary of arrays grid, estimate, truth, bias, se
        """
        c, row = self._index(condition, arm)
        n = self.count[c, row, self.cdf_slice]
        truth = self.truth[row, self.cdf_slice]
        with np.errstate(invalid='ignore', divide='ignore'):
            se = curve_se(np.nan_to_num(self.se[c, row, self.cdf_slice]), n)
        return {'grid': self.grid,
                'estimate': self.estimate[c, row, self.cdf_slice],
                'truth': truth,
                'bias': self.bias[c, row, self.cdf_slice],
                'se': se}

    def density(self, condition, arm, statistic):
        """
        Histogram density of a functional of one arm within a condition,
        together with its conditional average and its true value.

        :param statistic: functional name, e.g. 'variance' or 'median'
        :rtype: dict
        :returns: dictionary with edges, density, n, estimate and truth
        :raises ValueError: if the statistic is not a functional of the
            experiment
        """
        c, row = self._index(condition, arm)
        names = [functional_name(f) for f in self.functionals]
        if statistic not in names:
            raise ValueError('No density for statistic %s' % statistic)
        col = 1 + names.index(statistic)
        counts = self.hist[c, row, self.density_cols.index(col)]
        n = int(counts.sum())
        widths = np.diff(self.density_edges)
        with np.errstate(invalid='ignore', divide='ignore'):
            density = counts / (float(n) * widths)
        return {'edges': self.density_edges + self.truth[row, col],
                'density': density, 'n': n,
                'estimate': self.estimate[c, row, col],
                'truth': self.truth[row, col]}

    def _scalar_entry(self, c, row, col):
        n = int(self.count[c, row, col])
        entry = {'estimate': self.estimate[c, row, col],
                 'bias': self.bias[c, row, col],
                 'se': self.se[c, row, col], 'n': n}
        if n == 0:
            entry['verdict'] = 'empty'
        elif np.isnan(entry['se']):
            entry['verdict'] = 'indeterminate'
        else:
            entry['verdict'] = sign_verdict(entry['bias'], entry['se'],
                                            self.z)
        return entry

    def entry(self, condition, arm, statistic):
        """
        One report entry.

        :param condition: condition label, e.g. 'early_stop'
        :param arm: arm number or 'kappa'
        :param statistic: 'mean', a functional name, 'cdf', 'cdf_inf' or
            'cdf_sup'
        :rtype: dict
        :returns: dictionary with keys estimate, bias, se, verdict, n
        """
        c, row = self._index(condition, arm)
        if statistic == 'mean':
            return self._scalar_entry(c, row, 0)
        names = [functional_name(f) for f in self.functionals]
        if statistic in names:
            return self._scalar_entry(c, row, 1 + names.index(statistic))
        if statistic not in ('cdf', 'cdf_inf', 'cdf_sup'):
            raise ValueError('Unknown statistic %s' % statistic)

        n = int(self.count[c, row, self.cdf_slice][0])
        if n == 0:
            return {'estimate': np.nan, 'bias': np.nan, 'se': np.nan,
                    'n': 0, 'verdict': 'empty'}
        curve = self.cdf(condition, arm)
        if statistic == 'cdf':
            return {'estimate': float(np.mean(curve['estimate'])),
                    'bias': float(np.mean(curve['bias'])),
                    'se': float(np.max(curve['se'])), 'n': n,
                    'verdict': curve_verdict(curve['bias'], curve['se'],
                                             self.z)}
        if statistic == 'cdf_inf':
            j = int(np.argmin(curve['bias']))
        else:
            j = int(np.argmax(curve['bias']))
        return {'estimate': curve['estimate'][j], 'bias': curve['bias'][j],
                'se': curve['se'][j], 'n': n,
                'verdict': sign_verdict(curve['bias'][j], curve['se'][j],
                                        self.z)}

    def density_statistics(self):
        """
        Names of the functionals whose histograms are kept.
        """
        names = []
        for f in self.functionals:
            if functional_name(f) not in names:
                names.append(functional_name(f))
        return names

    def statistics(self, arm):
        if arm == KAPPA:
            return ['mean']
        # identity_mean duplicates the sample mean column
        names = ['mean'] + [name for name in self.density_statistics()
                            if name != 'mean']
        return names + ['cdf', 'cdf_inf', 'cdf_sup']

    def rows(self):
        """
        Flat report rows, one per condition x arm x statistic, preceded for
        each condition by a 'probability' row.

        :rtype: list of dict
        """
        rows = []
        n_ok = self.reps - self.n_truncated
        for c, label in enumerate(self.conditions):
            n_c = int(self.cond_counts[c])
            if n_c == 0:
                rows.append({'condition': label, 'arm': 'all',
                             'statistic': 'probability', 'estimate': 0.,
                             'bias': np.nan, 'se': np.nan,
                             'verdict': 'empty', 'n': 0})
                continue
            p = n_c / float(n_ok)
            rows.append({'condition': label, 'arm': 'all',
                         'statistic': 'probability', 'estimate': p,
                         'bias': np.nan, 'se': np.sqrt(p * (1. - p) / n_ok),
                         'verdict': '', 'n': n_c})
            for arm in self.arm_labels:
                for statistic in self.statistics(arm):
                    row = {'condition': label, 'arm': arm,
                           'statistic': statistic}
                    row.update(self.entry(label, arm, statistic))
                    rows.append(row)
        return rows

    def to_dict(self):
        """
        Nested representation of the full report, CDF curves included.
        """
        report = {'reps': int(self.reps), 'seed': self.seed,
                  'n_truncated': int(self.n_truncated),
                  'config': self.config, 'grid': list(self.grid),
                  'empty_conditions': self.empty_conditions,
                  'conditions': {}}
        for c, label in enumerate(self.conditions):
            cond = {'n': int(self.cond_counts[c]),
                    'probability': self.probability(label), 'arms': {}}
            if cond['n'] > 0:
                for arm in self.arm_labels:
                    arm_dict = dict((s, self.entry(label, arm, s))
                                    for s in self.statistics(arm))
                    if arm != KAPPA:
                        curve = self.cdf(label, arm)
                        arm_dict['cdf_curve'] = {
                            'estimate': list(curve['estimate']),
                            'bias': list(curve['bias']),
                            'se': list(curve['se'])}
                    cond['arms'][arm] = arm_dict
            report['conditions'][label] = cond
        return report


def experiment_echo(config):
    """
    The part of a configuration that determines an experiment's results.
    """
    keys = ('name', 'arms', 'sampling', 'stopping', 'choosing', 'halving',
            'conditions', 'functionals', 'reps', 'seed', 'horizon_cap',
            'eval_time', 'grid', 'chunk_size', 'z')
    return dict((key, config[key]) for key in keys if key in config)


def estimate(config, reps=None, base_seed=None, grid=None, conditions=None,
             functionals=None, threads=None):
    """
    Estimates marginal and conditional biases of an experiment by Monte
    Carlo.  Replication r runs on the table seeded by hash(base_seed, r) and
    the external randomness seeded by hash(base_seed, r, tag).  Truncated
    replications are counted but excluded from every condition.

    :param config: experiment configuration (opdict)
    :param reps: number of replications (default config['reps'])
    :param base_seed: base seed (default config['seed'])
    :param grid: CDF grid (default from config['grid'])
    :param conditions: conditions (default config['conditions'])
    :param functionals: functionals (default config['functionals'])
    :param threads: worker processes (default config['threads']); never
        changes the results

    :type config: dict
    :rtype: :class:`BiasReport`
    """
    config = dict(config)
    if reps is not None:
        config['reps'] = reps
    if base_seed is not None:
        config['seed'] = base_seed
    if conditions is not None:
        config['conditions'] = conditions
    if functionals is not None:
        config['functionals'] = functionals
    if grid is None:
        grid = grid_from_config(config)
    else:
        config['grid'] = {'points': [float(y) for y in grid]}
    if threads is None:
        threads = config.get('threads', 1)

    reps = int(config['reps'])
    if reps < 1:
        raise ValueError('reps must be >= 1, got %s' % reps)
    if not config.get('conditions'):
        raise UserWarning('conditions option not set')
    config.setdefault('horizon_cap', 10**6)
    config.setdefault('seed', 0)

    layout = _Layout(config, grid, config['conditions'],
                     config.get('functionals', []))
    chunk_size = int(config.get('chunk_size', 1000))
    tasks = [(config, layout, i, start, stop) for i, (start, stop) in
             enumerate(chunk_ranges(reps, chunk_size))]

    logging.info('Running %s : %d replications in %d chunks on %d workers' %
                 (config.get('name', 'experiment'), reps, len(tasks),
                  threads))
    t_ref = time()
    if threads > 1 and len(tasks) > 1:
        with Pool(threads) as pool:
            parts = pool.map(_run_chunk, tasks)
    else:
        parts = [_run_chunk(task) for task in tasks]
    empty = PartialAggregate(len(layout.conditions), layout.n_rows,
                             layout.n_stats, density_cols=layout.density_cols,
                             edges=layout.density_edges)
    aggregate = reduce(merge, parts, empty)
    if config.get('time'):
        logging.info("Time for %d replications : %.2f s" %
                     (reps, time() - t_ref))

    if aggregate.n_truncated > 0:
        logging.warning('%d of %d replications hit the horizon cap %d and \
were excluded' % (aggregate.n_truncated, reps, config['horizon_cap']))

    report = BiasReport(layout, aggregate, experiment_echo(config),
                        z=config.get('z', 3.))
    for label in report.empty_conditions:
        logging.warning('Condition %s is empty : no bias reported' % label)
    return report


def grid_from_config(config):
    """
    CDF grid of a configuration: explicit 'points', or 'lo', 'hi', 'n'.
    """
    spec = config.get('grid')
    if not spec:
        return make_cdf_grid(*DEFAULT_GRID)
    if 'points' in spec:
        grid = np.asarray(spec['points'], dtype=float)
        verify_cdf_grid(grid)
        return grid
    return make_cdf_grid(spec['lo'], spec['hi'], spec['n'])
