"""
Sampling, stopping and choosing rules.

Rules are plain dictionaries, exactly as they appear in an experiment
configuration file, e.g.::

    {'kind': 'min_of', 'rules': [{'kind': 'upper_boundary', 'alpha': 0.2,
                                  'min_t': 2},
                                 {'kind': 'fixed_time', 'M': 10}]}

An upper_boundary rule is first checked at time min_t (default 1).

The evaluators in this module are pure functions of the rule, the trial
state and (for randomized rules) the external randomness.  Arms are numbered
from 1; every argmax or argmin breaks ties by the lowest arm index.
"""

import numpy as np
from functools import lru_cache
from banditbias.tabular import normal_quantile

SAMPLING_KINDS = ('alternate_two_arms', 'single_arm', 'round_robin',
                  'lil_ucb', 'greedy', 'random_allocation')
STOPPING_KINDS = ('fixed_time', 'upper_boundary', 'two_sided_even',
                  'lil_ucb_count', 'min_of')
CHOOSING_KINDS = ('argmax_mean', 'argmin_mean', 'argmax_count', 'fixed')

STOP_REASONS = ('max_time', 'upper_cross', 'lower_cross', 'count_dominance')


###########################
# rule verification
###########################

def _verify_kind(rule, kinds, what):
    if not isinstance(rule, dict) or 'kind' not in rule:
        raise UserWarning('%s rule must be a dictionary with a kind: %s' %
                          (what, rule))
    if rule['kind'] not in kinds:
        raise UserWarning('Unknown %s rule %s' % (what, rule['kind']))


def _verify_positive(rule, key):
    if key not in rule:
        raise UserWarning('%s option of %s rule not set' % (key, rule['kind']))
    if not rule[key] > 0:
        raise UserWarning('%s option of %s rule must be positive' %
                          (key, rule['kind']))


def _verify_alpha(rule):
    if 'alpha' not in rule:
        raise UserWarning('alpha option of %s rule not set' % rule['kind'])
    if not 0 < rule['alpha'] < 1:
        raise UserWarning('alpha must lie in (0,1), got %s' % rule['alpha'])


def verify_sampling_rule(rule, n_arms):
    """
    Checks a sampling rule against the number of arms of the experiment.

    :raises UserWarning: on any inconsistency
    """
    _verify_kind(rule, SAMPLING_KINDS, 'sampling')
    kind = rule['kind']
    if kind == 'alternate_two_arms' and n_arms != 2:
        raise UserWarning('alternate_two_arms needs exactly 2 arms, got %d' %
                          n_arms)
    if kind == 'single_arm':
        arm = rule.get('arm', 1)
        if arm < 1 or arm > n_arms:
            raise UserWarning('single_arm arm %s outside [1, %d]' %
                              (arm, n_arms))
    if kind == 'round_robin' and rule.get('K', n_arms) != n_arms:
        raise UserWarning('round_robin K=%s does not match %d arms' %
                          (rule['K'], n_arms))
    if kind == 'lil_ucb':
        for key in ('beta', 'epsilon', 'sigma2'):
            _verify_positive(rule, key)
        if not 0 < rule.get('delta', 0) < 1:
            raise UserWarning('delta of lil_ucb rule must lie in (0,1)')
    if kind == 'greedy' and rule.get('direction', 'max') not in ('max', 'min'):
        raise UserWarning('greedy direction must be max or min')


def verify_stopping_rule(rule, n_arms):
    """
    Checks a stopping rule (recursively for min_of).

    :raises UserWarning: on any inconsistency
    """
    _verify_kind(rule, STOPPING_KINDS, 'stopping')
    kind = rule['kind']
    if kind == 'fixed_time':
        if 'M' not in rule:
            raise UserWarning('M option of fixed_time rule not set')
        if int(rule['M']) != rule['M'] or rule['M'] < 1:
            raise UserWarning('M must be an integer >= 1, got %s' % rule['M'])
    elif kind == 'upper_boundary':
        _verify_alpha(rule)
        if rule.get('form', 'pointwise_single') != 'pointwise_single':
            raise UserWarning('Unknown boundary form %s' % rule['form'])
        min_t = rule.get('min_t', 1)
        if int(min_t) != min_t or min_t < 1:
            raise UserWarning('min_t must be an integer >= 1, got %s' %
                              min_t)
    elif kind == 'two_sided_even':
        _verify_alpha(rule)
        if n_arms != 2:
            raise UserWarning('two_sided_even needs exactly 2 arms')
    elif kind == 'lil_ucb_count':
        _verify_positive(rule, 'lambda')
    else:
        if not rule.get('rules'):
            raise UserWarning('min_of rule needs a non-empty rules list')
        for sub_rule in rule['rules']:
            verify_stopping_rule(sub_rule, n_arms)


def verify_choosing_rule(rule, n_arms):
    _verify_kind(rule, CHOOSING_KINDS, 'choosing')
    if rule['kind'] == 'fixed':
        if 'k' not in rule:
            raise UserWarning('k option of fixed choosing rule not set')
        if rule['k'] < 1 or rule['k'] > n_arms:
            raise UserWarning('fixed choosing arm %s outside [1, %d]' %
                              (rule['k'], n_arms))


###########################
# boundaries and bonuses
###########################

def pointwise_upper_boundary(t, alpha):
    """
    Point-wise upper confidence boundary z_alpha / sqrt(t) of a one-arm
    sequential test.

    :param t: time, t >= 1
    :param alpha: level in (0,1)
    :type t: int
    :type alpha: float

    :rtype: float
    """
    if t < 1:
        raise ValueError('Boundary needs t >= 1, got %s' % t)
    return normal_quantile(1. - alpha) / np.sqrt(t)


def two_arm_boundary(t, alpha):
    """
    Upper boundary z_{alpha/2} sqrt(2/t) of the two-arm test on the difference
    of sample means.  The lower boundary is its negation.

    :param t: even time, t >= 2
    :param alpha: level in (0,1)

    :rtype: float
    :raises ValueError: for odd or non-positive t
    """
    if t < 2 or t % 2 != 0:
        raise ValueError('Two-arm boundary needs an even t >= 2, got %s' % t)
    return normal_quantile(1. - alpha/2.) * np.sqrt(2. / t)


@lru_cache(maxsize=65536)
def lil_ucb_bonus(n, beta, epsilon, delta, sigma2):
    """
    Exploration bonus of lil'UCB for an arm pulled n times.  The bonus
    depends on the count only, never on rewards.  Returns +inf when the
    iterated logarithm is not positive (small n).

    :rtype: float
    """
    inner = np.log((1. + epsilon) * n) / delta
    if inner <= 1.:
        return np.inf
    return (1. + beta) * (1. + np.sqrt(epsilon)) * \
        np.sqrt(2. * sigma2 * (1. + epsilon) * np.log(inner) / n)


def _first_best(scores, largest=True):
    best = 0
    for j in range(1, len(scores)):
        if (largest and scores[j] > scores[best]) or \
           (not largest and scores[j] < scores[best]):
            best = j
    return best + 1


###########################
# evaluators
###########################

def next_arm(rule, state, w):
    """
    Arm pulled at time state.t + 1.

    :param rule: sampling rule
    :param state: trial state after state.t pulls
    :param w: external randomness of the trial
    :type rule: dict
    :type w: :class:`banditbias.tabular.RandomnessSource`

    :rtype: int
    """
    kind = rule['kind']
    t = state.t + 1
    n_arms = len(state.counts)

    if kind == 'alternate_two_arms':
        return 1 if t % 2 == 1 else 2

    if kind == 'single_arm':
        return rule.get('arm', 1)

    if kind == 'round_robin':
        return (t - 1) % n_arms + 1

    if kind == 'random_allocation':
        return min(int(w.draw(t) * n_arms), n_arms - 1) + 1

    # forced initial round
    if t <= n_arms:
        return t

    if kind == 'lil_ucb':
        scores = [state.sums[j] / state.counts[j] +
                  lil_ucb_bonus(state.counts[j], rule['beta'],
                                rule['epsilon'], rule['delta'],
                                rule['sigma2'])
                  for j in range(n_arms)]
        return _first_best(scores)

    if kind == 'greedy':
        means = [state.sums[j] / state.counts[j] for j in range(n_arms)]
        return _first_best(means, rule.get('direction', 'max') == 'max')

    raise UserWarning('Unknown sampling rule %s' % kind)


def should_stop(rule, state):
    """
    Evaluates a stopping rule after state.t pulls.

    :rtype: tuple
    :returns: (stop, reason) where reason is one of STOP_REASONS or None
    """
    kind = rule['kind']
    t = state.t

    if kind == 'fixed_time':
        if t >= rule['M']:
            return True, 'max_time'
        return False, None

    if kind == 'upper_boundary':
        # the boundary is first checked at t = min_t
        if t < rule.get('min_t', 1):
            return False, None
        arm = rule.get('arm', 1)
        if state.counts[arm-1] > 0 and \
           state.mean(arm) >= pointwise_upper_boundary(t, rule['alpha']):
            return True, 'upper_cross'
        return False, None

    if kind == 'two_sided_even':
        if t < 2 or t % 2 != 0 or min(state.counts) == 0:
            return False, None
        diff = state.mean(1) - state.mean(2)
        bound = two_arm_boundary(t, rule['alpha'])
        if diff >= bound:
            return True, 'upper_cross'
        if diff <= -bound:
            return True, 'lower_cross'
        return False, None

    if kind == 'lil_ucb_count':
        # checked once every arm has been sampled
        if min(state.counts) == 0:
            return False, None
        for n_k in state.counts:
            if n_k >= 1 + rule['lambda'] * (t - n_k):
                return True, 'count_dominance'
        return False, None

    if kind == 'min_of':
        for sub_rule in rule['rules']:
            stop, reason = should_stop(sub_rule, state)
            if stop:
                return stop, reason
        return False, None

    raise UserWarning('Unknown stopping rule %s' % kind)


def choose(rule, state):
    """
    Arm kappa selected once the trial has stopped.

    :raises RuntimeError: when a mean-based rule meets an unsampled arm
    :rtype: int
    """
    kind = rule['kind']

    if kind == 'fixed':
        return rule['k']

    if kind == 'argmax_count':
        return _first_best(state.counts)

    if kind in ('argmax_mean', 'argmin_mean'):
        if min(state.counts) == 0:
            raise RuntimeError('%s choosing with an unsampled arm at t=%d' %
                               (kind, state.t))
        means = [state.sums[j] / state.counts[j]
                 for j in range(len(state.counts))]
        return _first_best(means, kind == 'argmax_mean')

    raise UserWarning('Unknown choosing rule %s' % kind)


def stopping_thresholds(rule, times):
    """
    Upper boundary values of a stopping rule at the given times, as shown by
    the describe command.  Returns None when the rule has no boundary.
    """
    if rule['kind'] == 'upper_boundary':
        return [pointwise_upper_boundary(t, rule['alpha']) for t in times]
    if rule['kind'] == 'two_sided_even':
        return [two_arm_boundary(t, rule['alpha']) for t in times
                if t % 2 == 0]
    if rule['kind'] == 'min_of':
        for sub_rule in rule['rules']:
            values = stopping_thresholds(sub_rule, times)
            if values is not None:
                return values
    return None
