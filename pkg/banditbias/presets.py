"""
Named experiments and named finite instances.

Experiments (run with ``banditbias run NAME``):

    E1       one-arm sequential test with early stopping, boundary from t = 2
    E2       two-arm test with upper and lower boundaries, equal means
    E2alt    E2 with means (1, 0)
    E3       lil'UCB on three normal arms
    E4       sequential halving on the same arms, budget 10
    E4t      E4 evaluated after the first round
    E5       E1 with sample variance and sample median
    control  nonadaptive single arm

Finite instances (run with ``banditbias check NAME``) are listed in
INSTANCES.
"""

import copy
import types
import numpy as np
from banditbias.rules import stopping_thresholds
from banditbias.engine import halving_schedule

STANDARD_NORMAL_ARM = {'kind': 'normal', 'mean': 0., 'variance': 1.}

LIL_UCB_SAMPLING = {'kind': 'lil_ucb', 'beta': 0.5, 'epsilon': 0.1,
                    'delta': 0.2, 'sigma2': 1.}
LIL_UCB_STOPPING = {'kind': 'lil_ucb_count', 'lambda': 1.}

THREE_ARMS = [{'kind': 'normal', 'mean': 1., 'variance': 1.},
              {'kind': 'normal', 'mean': 0.5, 'variance': 1.},
              {'kind': 'normal', 'mean': 0., 'variance': 1.}]

CHOICE_CONDITIONS = ['chosen(1)', 'not_chosen(1)', 'chosen(2)',
                     'not_chosen(2)', 'chosen(3)', 'not_chosen(3)']

DEFAULT_SEED = 20200101


def _e1():
    return {'name': 'E1', 'arms': [dict(STANDARD_NORMAL_ARM)],
            'sampling': {'kind': 'single_arm'},
            'stopping': {'kind': 'min_of', 'rules': [
                {'kind': 'upper_boundary', 'alpha': 0.2, 'min_t': 2},
                {'kind': 'fixed_time', 'M': 10}]},
            'choosing': {'kind': 'fixed', 'k': 1},
            'conditions': ['marginal', 'early_stop', 'line_cross'],
            'functionals': [], 'reps': 100000, 'seed': DEFAULT_SEED,
            'horizon_cap': 10}


def _e2(means=(0., 0.), name='E2'):
    return {'name': name,
            'arms': [{'kind': 'normal', 'mean': means[0], 'variance': 1.},
                     {'kind': 'normal', 'mean': means[1], 'variance': 1.}],
            'sampling': {'kind': 'alternate_two_arms'},
            'stopping': {'kind': 'min_of', 'rules': [
                {'kind': 'two_sided_even', 'alpha': 0.2},
                {'kind': 'fixed_time', 'M': 100}]},
            'choosing': {'kind': 'argmax_mean'},
            'conditions': ['marginal', 'accept_H0', 'accept_H1',
                           'reach_max'],
            'functionals': [], 'reps': 100000, 'seed': DEFAULT_SEED,
            'horizon_cap': 100}


def _e3():
    return {'name': 'E3', 'arms': copy.deepcopy(THREE_ARMS),
            'sampling': dict(LIL_UCB_SAMPLING),
            'stopping': dict(LIL_UCB_STOPPING),
            'choosing': {'kind': 'argmax_count'},
            'conditions': list(CHOICE_CONDITIONS),
            'functionals': [], 'reps': 100000, 'seed': DEFAULT_SEED,
            'horizon_cap': 10**6}


def _e4(name='E4', eval_time=None):
    config = {'name': name, 'arms': copy.deepcopy(THREE_ARMS),
              'halving': {'budget': 10},
              'conditions': ['marginal'] + CHOICE_CONDITIONS,
              'functionals': [], 'reps': 100000, 'seed': DEFAULT_SEED,
              'horizon_cap': 10}
    if eval_time is not None:
        config['eval_time'] = eval_time
        config['conditions'] = ['marginal']
    return config


def _e5():
    config = _e1()
    config['name'] = 'E5'
    config['functionals'] = [{'kind': 'variance_unbiased'},
                             {'kind': 'median'},
                             {'kind': 'identity_mean'}]
    return config


def _control():
    return {'name': 'control', 'arms': [dict(STANDARD_NORMAL_ARM)],
            'sampling': {'kind': 'single_arm'},
            'stopping': {'kind': 'fixed_time', 'M': 10},
            'choosing': {'kind': 'fixed', 'k': 1},
            'conditions': ['marginal'], 'functionals': [],
            'reps': 100000, 'seed': DEFAULT_SEED, 'horizon_cap': 10}


PRESETS = types.MappingProxyType({
    'E1': _e1(), 'E2': _e2(), 'E2alt': _e2((1., 0.), 'E2alt'), 'E3': _e3(),
    'E4': _e4(), 'E4t': _e4('E4t', eval_time=3), 'E5': _e5(),
    'control': _control()})


def _one_arm_test(name, condition, direction):
    return {'name': name, 'support': [0., 1.], 'K': 1, 'horizon': 3,
            'sampling': {'kind': 'single_arm'},
            'stopping': {'kind': 'min_of', 'rules': [
                {'kind': 'upper_boundary', 'alpha': 0.2, 'min_t': 2},
                {'kind': 'fixed_time', 'M': 3}]},
            'choosing': {'kind': 'fixed', 'k': 1},
            'arm': 1, 'condition': condition,
            'checks': [{'check': 'condition', 'direction': direction}]}


def _lil_ucb_instance(name, n_arms, horizon=6):
    # every arm is pulled once in the first K steps
    return {'name': name, 'support': [0., 1.], 'K': n_arms,
            'horizon': horizon, 'rows': horizon - n_arms + 1,
            'sampling': dict(LIL_UCB_SAMPLING),
            'stopping': dict(LIL_UCB_STOPPING),
            'choosing': {'kind': 'argmax_count'},
            'arm': 1, 'condition': 'chosen(1)',
            'checks': [{'check': 'optimistic_sampling'},
                       {'check': 'lil_ucb_coupling'}]}


def _halving_instance(name, n_arms, budget):
    return {'name': name, 'support': [0., 1.], 'K': n_arms,
            'halving': {'budget': budget}, 'arm': 1,
            'condition': 'chosen(1)',
            'checks': [{'check': 'halving_coupling'}]}


INSTANCES = types.MappingProxyType({
    'e1-early-stop': _one_arm_test('e1-early-stop', 'early_stop',
                                   'decreasing'),
    'e1-line-cross': _one_arm_test('e1-line-cross', 'line_cross',
                                   'increasing'),
    'lilucb-k2': _lil_ucb_instance('lilucb-k2', 2),
    'lilucb-k3': _lil_ucb_instance('lilucb-k3', 3),
    'halving-k2': _halving_instance('halving-k2', 2, 4),
    'halving-k3': _halving_instance('halving-k3', 3, 12),
    'broken-argmin': {
        'name': 'broken-argmin', 'support': [0., 1.], 'K': 2, 'horizon': 2,
        'rows': 1, 'sampling': {'kind': 'alternate_two_arms'},
        'stopping': {'kind': 'fixed_time', 'M': 2},
        'choosing': {'kind': 'argmin_mean'},
        'arm': 1, 'condition': 'chosen(1)',
        'checks': [{'check': 'condition', 'direction': 'increasing'}]},
    'anti-optimistic': {
        'name': 'anti-optimistic', 'support': [0., 1.], 'K': 2,
        'horizon': 4, 'rows': 3,
        'sampling': {'kind': 'greedy', 'direction': 'min'},
        'stopping': {'kind': 'fixed_time', 'M': 4},
        'choosing': {'kind': 'argmax_count'},
        'checks': [{'check': 'optimistic_sampling'}]},
    'alternate-k2': {
        'name': 'alternate-k2', 'support': [0., 1.], 'K': 2, 'horizon': 6,
        'rows': 3, 'sampling': {'kind': 'alternate_two_arms'},
        'stopping': {'kind': 'fixed_time', 'M': 6},
        'choosing': {'kind': 'argmax_mean'},
        'checks': [{'check': 'optimistic_sampling'}]},
    'random-k2': {
        'name': 'random-k2', 'support': [0., 1.], 'K': 2, 'horizon': 4,
        'sampling': {'kind': 'random_allocation'},
        'stopping': {'kind': 'fixed_time', 'M': 4},
        'choosing': {'kind': 'argmax_count'},
        'enumerate_randomness': True, 'randomness_support': [0.25, 0.75],
        'checks': [{'check': 'optimistic_sampling'}]},
})


def preset(name):
    """
    Returns a fresh copy of a named experiment configuration.

    :raises UserWarning: for an unknown name
    """
    if name not in PRESETS:
        raise UserWarning('Unknown preset %s, choose from %s' %
                          (name, ', '.join(sorted(PRESETS))))
    return copy.deepcopy(dict(PRESETS[name]))


def instance(name):
    """
    Returns a fresh copy of a named finite instance.

    :raises UserWarning: for an unknown name
    """
    if name not in INSTANCES:
        raise UserWarning('Unknown instance %s, choose from %s' %
                          (name, ', '.join(sorted(INSTANCES))))
    return copy.deepcopy(dict(INSTANCES[name]))


def derived_constants(config):
    """
    Constants implied by a configuration: boundary values at t = 1..3 (or
    t = 2, 4, 6 for two-arm tests), halving round budgets, lil'UCB
    parameters.
    """
    derived = {}
    if config.get('halving'):
        schedule = halving_schedule(config['halving']['budget'],
                                    len(config['arms']))
        derived['round_budgets'] = [m for a, m in schedule]
        derived['total_pulls'] = sum(a * m for a, m in schedule)
        return derived
    thresholds = stopping_thresholds(config['stopping'], [1, 2, 3, 4, 5, 6])
    if thresholds is not None:
        derived['thresholds'] = [float(np.round(x, 6)) for x in
                                 thresholds[:3]]
    if config['sampling']['kind'] == 'lil_ucb':
        s = config['sampling']
        derived['lil_ucb'] = [s['delta'], s['epsilon'], s['beta'],
                              config['stopping'].get('lambda')]
    return derived
