"""
Estimators whose biases are studied: sample means, empirical CDFs and
functionals of the empirical measure of one arm.

Functionals are described by dictionaries::

    {'kind': 'identity_mean'}
    {'kind': 'indicator_at', 'y': 0.5}
    {'kind': 'variance_unbiased'}
    {'kind': 'median'}
    {'kind': 'custom_monotone', 'name': 'clip', 'x': [...], 'f': [...]}

A custom_monotone functional tabulates a non-decreasing function f at the
ascending abscissae x; it is linearly interpolated in between and held
constant outside.
"""

import numpy as np
import scipy.stats as ss
import scipy.integrate as si
from banditbias.tabular import true_cdf

FUNCTIONAL_KINDS = ('identity_mean', 'indicator_at', 'variance_unbiased',
                    'median', 'custom_monotone')

DEFAULT_GRID = (-4., 4., 161)


def _sorted_samples(source, k):
    # accepts a Trace or a TrialState
    state = getattr(source, 'state', source)
    samples = np.sort(np.array(state.samples[k-1], dtype=float))
    if len(samples) == 0:
        raise ValueError('Arm %d has no samples' % k)
    return samples


def verify_functional(f):
    """
    :raises UserWarning: if the functional is malformed
    """
    if not isinstance(f, dict) or f.get('kind') not in FUNCTIONAL_KINDS:
        raise UserWarning('Unknown functional %s' % f)
    if f['kind'] == 'indicator_at' and 'y' not in f:
        raise UserWarning('y option of indicator_at functional not set')
    if f['kind'] == 'custom_monotone':
        x = np.asarray(f.get('x', []), dtype=float)
        fx = np.asarray(f.get('f', []), dtype=float)
        if len(x) < 2 or len(x) != len(fx):
            raise UserWarning('custom_monotone needs matching x and f lists')
        if np.any(np.diff(x) <= 0):
            raise UserWarning('custom_monotone x must be strictly ascending')
        if np.any(np.diff(fx) < 0):
            raise UserWarning('custom_monotone f must be non-decreasing')


def is_monotone(f):
    """
    True for functionals of the form E f(Y) with f non-decreasing.
    """
    return f['kind'] in ('identity_mean', 'indicator_at', 'custom_monotone')


def functional_name(f):
    kind = f['kind']
    if kind == 'identity_mean':
        return 'mean'
    if kind == 'indicator_at':
        return 'indicator@%g' % f['y']
    if kind == 'variance_unbiased':
        return 'variance'
    if kind == 'median':
        return 'median'
    return 'custom:%s' % f.get('name', 'f')


def sample_mean(trace, k):
    """
    Sample mean S_k / N_k of arm k.

    :param trace: a Trace or a TrialState
    :param k: arm index
    :rtype: float
    """
    return float(np.mean(_sorted_samples(trace, k)))


def empirical_cdf(trace, k, y):
    """
    Fraction of the samples of arm k that are <= y.
    """
    samples = _sorted_samples(trace, k)
    return np.searchsorted(samples, y, side='right') / float(len(samples))


def cdf_curve(trace, k, grid):
    """
    Empirical CDF of arm k evaluated on every point of the grid.

    :rtype: numpy array
    """
    samples = _sorted_samples(trace, k)
    return curve_from_sorted(samples, grid)


def curve_from_sorted(samples, grid):
    return np.searchsorted(samples, np.asarray(grid), side='right') / \
        float(len(samples))


def value_from_sorted(samples, f):
    """
    Value of functional f under the empirical measure of the sorted samples.

    :raises ValueError: when the statistic is undefined (variance of a
        single sample)
    """
    kind = f['kind']
    n = len(samples)
    if kind == 'identity_mean':
        return float(np.mean(samples))
    if kind == 'indicator_at':
        return np.searchsorted(samples, f['y'], side='right') / float(n)
    if kind == 'variance_unbiased':
        if n < 2:
            raise ValueError('Sample variance undefined for n=%d' % n)
        return float(np.var(samples, ddof=1))
    if kind == 'median':
        if n % 2 == 1:
            return float(samples[n // 2])
        return 0.5 * (samples[n // 2 - 1] + samples[n // 2])
    return float(np.mean(np.interp(samples, f['x'], f['f'])))


def empirical_functional(trace, k, f):
    """
    Value of a functional under the empirical measure of arm k.

    :param trace: a Trace or a TrialState
    :param k: arm index
    :param f: functional description
    :type f: dict

    :rtype: float
    :raises ValueError: for an undefined statistic
    """
    return value_from_sorted(_sorted_samples(trace, k), f)


def true_functional(arm, f):
    """
    Reference value E_k f of a functional under the true law of an arm.

    :type arm: :class:`banditbias.tabular.ArmSpec`
    """
    kind = f['kind']
    if kind == 'identity_mean':
        return arm.mean
    if kind == 'indicator_at':
        return true_cdf(arm, f['y'])
    if kind == 'variance_unbiased':
        return arm.variance
    if kind == 'median':
        return arm.median

    if arm.kind == 'normal':
        mu = arm.params['mean']
        sigma = np.sqrt(arm.params['variance'])
        integrand = lambda y: np.interp(y, f['x'], f['f']) * \
            ss.norm.pdf(y, loc=mu, scale=sigma)
        lo, hi = f['x'][0], f['x'][-1]
        value = si.quad(integrand, lo, hi, limit=200)[0]
        value += f['f'][0] * ss.norm.cdf(lo, loc=mu, scale=sigma)
        value += f['f'][-1] * ss.norm.sf(hi, loc=mu, scale=sigma)
        return float(value)
    probs = np.asarray(arm.params.get('probs', [1. - arm.mean, arm.mean]))
    return float(np.dot(np.interp(arm.support, f['x'], f['f']), probs))


def make_cdf_grid(lo=DEFAULT_GRID[0], hi=DEFAULT_GRID[1], n=DEFAULT_GRID[2]):
    """
    Equispaced CDF evaluation grid.
    """
    grid = np.linspace(lo, hi, int(n))
    verify_cdf_grid(grid)
    return grid


def verify_cdf_grid(grid):
    """
    :raises UserWarning: unless the grid is finite and strictly ascending
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or len(grid) == 0:
        raise UserWarning('CDF grid must be a non-empty list of points')
    if not np.all(np.isfinite(grid)):
        raise UserWarning('CDF grid points must be finite')
    if np.any(np.diff(grid) <= 0):
        raise UserWarning('CDF grid must be strictly ascending')


def parse_grid(text):
    """
    Parses a 'lo:hi:n' grid specification.
    """
    try:
        lo, hi, n = text.split(':')
        return make_cdf_grid(float(lo), float(hi), int(n))
    except ValueError:
        raise UserWarning('Grid must be given as lo:hi:n, got %s' % text)
