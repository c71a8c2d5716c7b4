"""
Execution of single bandit trials against a reward table.
"""

import csv
import logging
import numpy as np
from banditbias.rules import next_arm, should_stop, choose


class TrialState(object):
    """
    Running state of a trial after t pulls.

    **Attributes**

    .. attribute:: t

        Number of pulls so far.

    .. attribute:: counts

        List of per-arm pull counts N_k(t).

    .. attribute:: sums

        List of per-arm reward sums S_k(t).

    .. attribute:: samples

        List of per-arm lists of rewards, in pull order.

    .. attribute:: last_action

        Arm pulled at time t (None before the first pull).

    .. attribute:: last_reward

        Reward observed at time t (None before the first pull).
    """

    def __init__(self, n_arms):
        self.t = 0
        self.counts = [0] * n_arms
        self.sums = [0.] * n_arms
        self.samples = [[] for k in range(n_arms)]
        self.last_action = None
        self.last_reward = None

    @property
    def n_arms(self):
        return len(self.counts)

    def update(self, arm, reward):
        self.t += 1
        self.counts[arm-1] += 1
        self.sums[arm-1] += reward
        self.samples[arm-1].append(reward)
        self.last_action = arm
        self.last_reward = reward

    def mean(self, k):
        """
        Sample mean of arm k.

        :raises ValueError: if arm k has not been pulled
        """
        if self.counts[k-1] == 0:
            raise ValueError('Arm %d has no samples at t=%d' % (k, self.t))
        return self.sums[k-1] / self.counts[k-1]

    def sorted_samples(self, k):
        return np.sort(np.array(self.samples[k-1], dtype=float))

    def copy(self):
        other = TrialState(self.n_arms)
        other.t = self.t
        other.counts = list(self.counts)
        other.sums = list(self.sums)
        other.samples = [list(s) for s in self.samples]
        other.last_action = self.last_action
        other.last_reward = self.last_reward
        return other


class Trace(object):
    """
    Record of one completed trial.

    **Attributes**

    .. attribute:: stop_time

        Number of pulls T when the trial ended.

    .. attribute:: truncated

        True if the horizon cap was hit before the stopping rule fired.

    .. attribute:: stop_reason

        'max_time', 'upper_cross', 'lower_cross', 'count_dominance',
        'halving_complete' or 'truncated'.

    .. attribute:: kappa

        Chosen arm (None for truncated trials).

    .. attribute:: state

        Final :class:`TrialState`.

    .. attribute:: actions

        List of pulled arms A_1..A_T.

    .. attribute:: rewards

        List of observed rewards Y_1..Y_T.

    .. attribute:: config

        Echo of the rules and seeds that produced the trial.

    .. attribute:: rounds

        For sequential halving, one dictionary per round with the active
        arms, the per-arm budget m and the round means; None otherwise.
    """

    def __init__(self, state, stop_reason, kappa, truncated=False,
                 actions=None, rewards=None, config=None, rounds=None):
        self.state = state
        self.stop_time = state.t
        self.stop_reason = stop_reason
        self.kappa = kappa
        self.truncated = truncated
        self.actions = actions if actions is not None else []
        self.rewards = rewards if rewards is not None else []
        self.config = config if config is not None else {}
        self.rounds = rounds

    @property
    def n_arms(self):
        return self.state.n_arms

    def counts(self):
        return list(self.state.counts)

    def samples(self, k):
        return np.array(self.state.samples[k-1], dtype=float)

    def __repr__(self):
        return 'Trace(T=%d, reason=%s, kappa=%s, counts=%s)' % \
            (self.stop_time, self.stop_reason, self.kappa, self.state.counts)


def run_trial(table, w, sampling, stopping, choosing, horizon_cap,
              config=None):
    """
    Runs one trial: at each t, pull A_t = next_arm, read the next unused cell
    of that arm, update the state and test the stopping rule.

    :param table: reward table
    :param w: external randomness
    :param sampling: sampling rule
    :param stopping: stopping rule
    :param choosing: choosing rule
    :param horizon_cap: maximum number of pulls
    :param config: optional dictionary echoed in the trace

    :type table: :class:`banditbias.tabular.RewardTable`
    :type w: :class:`banditbias.tabular.RandomnessSource`
    :type horizon_cap: int

    :rtype: :class:`Trace`
    :raises RuntimeError: if a mean-based choosing rule meets an unsampled arm
    """
    if horizon_cap < 1:
        raise ValueError('horizon_cap must be >= 1, got %s' % horizon_cap)

    state = TrialState(table.n_arms)
    actions = []
    rewards = []
    reason = None
    while state.t < horizon_cap:
        arm = next_arm(sampling, state, w)
        reward = table.cell(state.counts[arm-1] + 1, arm)
        state.update(arm, reward)
        actions.append(arm)
        rewards.append(reward)
        stop, reason = should_stop(stopping, state)
        if stop:
            break

    if reason is None:
        logging.debug('Trial truncated at horizon cap %d' % horizon_cap)
        return Trace(state, 'truncated', None, truncated=True,
                     actions=actions, rewards=rewards, config=config)

    kappa = choose(choosing, state)
    return Trace(state, reason, kappa, actions=actions, rewards=rewards,
                 config=config)


def n_halving_rounds(n_arms):
    """
    Number of rounds ceil(log2 K) of sequential halving.
    """
    if n_arms < 2:
        raise ValueError('Sequential halving needs K >= 2, got %s' % n_arms)
    return (n_arms - 1).bit_length()


def halving_round_budget(budget, active_count, n_arms):
    """
    Per-arm number of pulls m_r = floor(T / (|A_r| ceil(log2 K))) in a round
    with active_count arms.

    :param budget: total budget T
    :param active_count: number of active arms in the round
    :param n_arms: number of arms K
    :rtype: int
    """
    if active_count < 1:
        raise ValueError('active_count must be >= 1, got %s' % active_count)
    return int(budget) // (active_count * n_halving_rounds(n_arms))


def halving_schedule(budget, n_arms):
    """
    Returns the list of (active_count, m_r) pairs of every round.

    :raises UserWarning: if some round would get no pulls
    """
    schedule = []
    active_count = n_arms
    for r in range(n_halving_rounds(n_arms)):
        m_r = halving_round_budget(budget, active_count, n_arms)
        if m_r < 1:
            raise UserWarning('Budget %d too small for %d arms : round %d \
gets no pulls' % (budget, n_arms, r+1))
        schedule.append((active_count, m_r))
        active_count = (active_count + 1) // 2
    return schedule


def run_sequential_halving(table, budget, n_arms, config=None):
    """
    Runs sequential halving with total budget T on the first n_arms arms of
    the table.  Within a round the active arms are pulled round-robin, m_r
    times each; survivors are the ceil(|A_r|/2) arms with the largest round
    means, ties going to the lowest index.

    :rtype: :class:`Trace`
    :raises UserWarning: if the budget leaves a round without pulls
    """
    schedule = halving_schedule(budget, n_arms)

    state = TrialState(n_arms)
    actions = []
    rewards = []
    rounds = []
    active = list(range(1, n_arms + 1))
    for r, (active_count, m_r) in enumerate(schedule):
        round_sums = dict((k, 0.) for k in active)
        for j in range(m_r):
            for k in active:
                reward = table.cell(state.counts[k-1] + 1, k)
                state.update(k, reward)
                actions.append(k)
                rewards.append(reward)
                round_sums[k] += reward
        round_means = dict((k, round_sums[k] / m_r) for k in active)
        n_keep = (len(active) + 1) // 2
        ranked = sorted(active, key=lambda k: (-round_means[k], k))
        rounds.append({'round': r + 1, 'active': list(active), 'm': m_r,
                       'means': [round_means[k] for k in active]})
        active = sorted(ranked[:n_keep])

    return Trace(state, 'halving_complete', active[0], actions=actions,
                 rewards=rewards, config=config, rounds=rounds)


def snapshot_at(trace, t):
    """
    Rebuilds the state of a trial after its first t pulls.

    :param trace: a completed trial
    :param t: time, 0 <= t <= trace.stop_time
    :rtype: :class:`TrialState`
    """
    if t < 0 or t > trace.stop_time:
        raise ValueError('Snapshot time %s outside [0, %d]' %
                         (t, trace.stop_time))
    if t == trace.stop_time:
        return trace.state
    state = TrialState(trace.n_arms)
    for arm, reward in zip(trace.actions[:t], trace.rewards[:t]):
        state.update(arm, reward)
    return state


def run_experiment_trial(config, table, w):
    """
    Runs one trial of an experiment configuration, dispatching to sequential
    halving when the configuration has a 'halving' entry.
    """
    echo = {'name': config.get('name'), 'table_seed': table.seed,
            'randomness_seed': w.seed}
    if config.get('halving'):
        echo['halving'] = config['halving']
        return run_sequential_halving(table, config['halving']['budget'],
                                      table.n_arms, config=echo)
    for key in ('sampling', 'stopping', 'choosing'):
        echo[key] = config[key]
    return run_trial(table, w, config['sampling'], config['stopping'],
                     config['choosing'], config['horizon_cap'], config=echo)


def write_trace_csv(trace, filename):
    """
    Writes a trial as CSV rows (t, A_t, Y_t, N_1..N_K).
    """
    n_arms = trace.n_arms
    counts = [0] * n_arms
    with open(filename, 'w', newline='') as f:
        writer = csv.writer(f)
        writer.writerow(['t', 'A_t', 'Y_t'] +
                        ['N_%d' % (k+1) for k in range(n_arms)])
        for t, (arm, reward) in enumerate(zip(trace.actions, trace.rewards)):
            counts[arm-1] += 1
            writer.writerow([t+1, arm, '%.17g' % reward] + counts)
    logging.debug('Wrote trace of %d pulls to %s' % (trace.stop_time,
                                                     filename))
