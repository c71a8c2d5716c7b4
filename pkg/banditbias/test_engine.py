import os
import csv
import shutil
import logging
import tempfile
import unittest
from banditbias.tabular import ArmSpec, RewardTable, RandomnessSource
from banditbias.engine import TrialState, run_trial, run_sequential_halving, \
    halving_round_budget, halving_schedule, n_halving_rounds, snapshot_at, \
    run_experiment_trial, write_trace_csv
from banditbias.rules import should_stop
from banditbias.presets import preset

E1_STOPPING = {'kind': 'min_of',
               'rules': [{'kind': 'upper_boundary', 'alpha': 0.2},
                         {'kind': 'fixed_time', 'M': 10}]}
NORMAL = ArmSpec('normal', mean=0., variance=1.)


def suite():
    suite = unittest.TestSuite()
    suite.addTest(StateTests('test_bookkeeping'))
    suite.addTest(StateTests('test_copy'))
    suite.addTest(TrialTests('test_fixed_time_trial'))
    suite.addTest(TrialTests('test_immediate_cross'))
    suite.addTest(TrialTests('test_alternate_sequence'))
    suite.addTest(TrialTests('test_truncation'))
    suite.addTest(TrialTests('test_unsampled_choice'))
    suite.addTest(TrialTests('test_row_bookkeeping'))
    suite.addTest(TrialTests('test_stop_minimality'))
    suite.addTest(TrialTests('test_lil_ucb_stop_minimality'))
    suite.addTest(TrialTests('test_snapshot'))
    suite.addTest(HalvingTests('test_round_budget'))
    suite.addTest(HalvingTests('test_schedule'))
    suite.addTest(HalvingTests('test_three_arms'))
    suite.addTest(HalvingTests('test_two_arms'))
    suite.addTest(HalvingTests('test_degenerate_arms'))
    suite.addTest(ExperimentTests('test_run_experiment_trial'))
    suite.addTest(ExperimentTests('test_write_trace_csv'))
    return suite


class StateTests(unittest.TestCase):

    def test_bookkeeping(self):
        state = TrialState(2)
        for arm, reward in ((1, 1.), (2, 3.), (1, 2.), (1, 0.)):
            state.update(arm, reward)
        self.assertEqual(state.t, 4)
        self.assertEqual(sum(state.counts), state.t)
        self.assertEqual(state.counts, [3, 1])
        self.assertAlmostEqual(state.mean(1), 1.)
        self.assertEqual(list(state.sorted_samples(1)), [0., 1., 2.])
        self.assertEqual((state.last_action, state.last_reward), (1, 0.))
        self.assertRaises(ValueError, TrialState(2).mean, 1)

    def test_copy(self):
        state = TrialState(1)
        state.update(1, 2.)
        other = state.copy()
        other.update(1, 4.)
        self.assertEqual(state.t, 1)
        self.assertEqual(state.samples, [[2.]])
        self.assertAlmostEqual(other.mean(1), 3.)


class TrialTests(unittest.TestCase):

    def setUp(self):
        self.w = RandomnessSource(5)

    def test_fixed_time_trial(self):
        table = RewardTable(3, [ArmSpec('bernoulli', p=1.)])
        trace = run_trial(table, self.w, {'kind': 'single_arm'},
                          {'kind': 'fixed_time', 'M': 3},
                          {'kind': 'fixed', 'k': 1}, 100)
        self.assertEqual(trace.stop_time, 3)
        self.assertEqual(trace.counts(), [3])
        self.assertEqual(trace.state.mean(1), 1.)
        self.assertEqual(trace.stop_reason, 'max_time')
        self.assertFalse(trace.truncated)
        self.assertEqual(trace.kappa, 1)

    def test_immediate_cross(self):
        table = RewardTable(3, [NORMAL], {(1, 1): 2.})
        trace = run_trial(table, self.w, {'kind': 'single_arm'}, E1_STOPPING,
                          {'kind': 'fixed', 'k': 1}, 100)
        self.assertEqual(trace.stop_time, 1)
        self.assertEqual(trace.stop_reason, 'upper_cross')

    def test_alternate_sequence(self):
        table = RewardTable(4, [NORMAL, NORMAL])
        trace = run_trial(table, self.w, {'kind': 'alternate_two_arms'},
                          {'kind': 'fixed_time', 'M': 6},
                          {'kind': 'argmax_mean'}, 100)
        self.assertEqual(trace.actions, [1, 2, 1, 2, 1, 2])
        self.assertEqual(trace.counts(), [3, 3])
        means = [trace.state.mean(1), trace.state.mean(2)]
        self.assertEqual(trace.kappa, 1 if means[0] >= means[1] else 2)

    def test_truncation(self):
        table = RewardTable(3, [ArmSpec('bernoulli', p=0.)])
        trace = run_trial(table, self.w, {'kind': 'single_arm'},
                          {'kind': 'upper_boundary', 'alpha': 0.2},
                          {'kind': 'fixed', 'k': 1}, 50)
        self.assertTrue(trace.truncated)
        self.assertEqual(trace.stop_time, 50)
        self.assertEqual(trace.stop_reason, 'truncated')
        self.assertIsNone(trace.kappa)
        self.assertRaises(ValueError, run_trial, table, self.w,
                          {'kind': 'single_arm'},
                          {'kind': 'fixed_time', 'M': 1},
                          {'kind': 'fixed', 'k': 1}, 0)

    def test_unsampled_choice(self):
        table = RewardTable(3, [NORMAL, NORMAL])
        self.assertRaises(RuntimeError, run_trial, table, self.w,
                          {'kind': 'single_arm', 'arm': 1},
                          {'kind': 'fixed_time', 'M': 2},
                          {'kind': 'argmax_mean'}, 10)

    def test_row_bookkeeping(self):
        config = preset('E3')
        table = RewardTable(17, [ArmSpec.from_dict(a) for a in config['arms']])
        trace = run_trial(table, self.w, config['sampling'],
                          config['stopping'], config['choosing'], 10**4)
        for k in range(1, 4):
            expected = [table.cell(i, k) for i in range(1, trace.counts()[k-1]
                                                         + 1)]
            self.assertEqual(list(trace.samples(k)), expected)
        self.assertEqual(sum(trace.counts()), trace.stop_time)

    def test_stop_minimality(self):
        for seed in range(20):
            table = RewardTable(seed, [NORMAL])
            trace = run_trial(table, self.w, {'kind': 'single_arm'},
                              E1_STOPPING, {'kind': 'fixed', 'k': 1}, 100)
            for t in range(1, trace.stop_time):
                stop, reason = should_stop(E1_STOPPING,
                                           snapshot_at(trace, t))
                self.assertFalse(stop)
            self.assertLessEqual(trace.stop_time, 10)

    def test_lil_ucb_stop_minimality(self):
        config = preset('E3')
        arms = [ArmSpec.from_dict(a) for a in config['arms']]
        rule = config['stopping']
        for seed in range(10):
            trace = run_experiment_trial(config, RewardTable(seed, arms),
                                         RandomnessSource(seed))
            self.assertFalse(trace.truncated)
            self.assertEqual(trace.stop_reason, 'count_dominance')
            T = trace.stop_time
            self.assertEqual(should_stop(rule, snapshot_at(trace, T)),
                             (True, 'count_dominance'))
            self.assertEqual(should_stop(rule, snapshot_at(trace, T - 1)),
                             (False, None))
            # the dominating arm is the one chosen by argmax_count
            n = trace.counts()[trace.kappa-1]
            self.assertGreaterEqual(n, 1 + rule['lambda'] * (T - n))

    def test_snapshot(self):
        table = RewardTable(8, [NORMAL, NORMAL])
        trace = run_trial(table, self.w, {'kind': 'round_robin'},
                          {'kind': 'fixed_time', 'M': 5},
                          {'kind': 'argmax_count'}, 10)
        state = snapshot_at(trace, 3)
        self.assertEqual(state.counts, [2, 1])
        self.assertEqual(snapshot_at(trace, 0).t, 0)
        self.assertIs(snapshot_at(trace, 5), trace.state)
        self.assertRaises(ValueError, snapshot_at, trace, 6)


class HalvingTests(unittest.TestCase):

    def test_round_budget(self):
        self.assertEqual(n_halving_rounds(3), 2)
        self.assertEqual(n_halving_rounds(4), 2)
        self.assertEqual(n_halving_rounds(5), 3)
        self.assertEqual(halving_round_budget(10, 3, 3), 1)
        self.assertEqual(halving_round_budget(10, 2, 3), 2)
        self.assertEqual(halving_round_budget(8 * 3, 8, 8), 1)
        self.assertRaises(ValueError, halving_round_budget, 10, 0, 3)
        self.assertRaises(ValueError, n_halving_rounds, 1)

    def test_schedule(self):
        self.assertEqual(halving_schedule(10, 3), [(3, 1), (2, 2)])
        self.assertEqual(halving_schedule(12, 3), [(3, 2), (2, 3)])
        self.assertRaises(UserWarning, halving_schedule, 5, 3)

    def test_three_arms(self):
        arms = [ArmSpec('normal', mean=m, variance=1.) for m in (1., 0.5, 0.)]
        table = RewardTable(21, arms)
        trace = run_sequential_halving(table, 10, 3)
        self.assertEqual(trace.stop_time, 7)
        self.assertEqual(trace.stop_reason, 'halving_complete')
        self.assertEqual(trace.actions[:3], [1, 2, 3])
        self.assertEqual(len(trace.rounds), 2)
        survivors = trace.rounds[1]['active']
        self.assertEqual(len(survivors), 2)
        self.assertIn(trace.kappa, survivors)
        # round two reads rows 2 and 3 of each survivor
        for k in survivors:
            self.assertEqual(list(trace.samples(k)),
                             [table.cell(i, k) for i in (1, 2, 3)])
            self.assertEqual(trace.counts()[k-1], 3)

    def test_two_arms(self):
        table = RewardTable(0, [NORMAL, NORMAL],
                            {(1, 1): 0., (2, 1): 0., (1, 2): 1., (2, 2): -0.5})
        trace = run_sequential_halving(table, 4, 2)
        self.assertEqual(trace.counts(), [2, 2])
        self.assertEqual(trace.kappa, 2)
        table = table.with_cell_overridden(2, 2, -1.)
        self.assertEqual(run_sequential_halving(table, 4, 2).kappa, 1)

    def test_degenerate_arms(self):
        arms = [ArmSpec('bernoulli', p=1.)] + \
            [ArmSpec('bernoulli', p=0.)] * 3
        trace = run_sequential_halving(RewardTable(1, arms), 16, 4)
        self.assertEqual(trace.kappa, 1)
        self.assertEqual(trace.stop_time, 4 * 2 + 2 * 4)


class ExperimentTests(unittest.TestCase):

    def setUp(self):
        self.tmp_dir = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.tmp_dir)

    def test_run_experiment_trial(self):
        config = preset('E4')
        arms = [ArmSpec.from_dict(a) for a in config['arms']]
        trace = run_experiment_trial(config, RewardTable(2, arms),
                                     RandomnessSource(3))
        self.assertEqual(trace.stop_reason, 'halving_complete')
        self.assertEqual(trace.config['table_seed'], 2)
        self.assertEqual(trace.config['halving'], config['halving'])

        config = preset('E1')
        trace = run_experiment_trial(config, RewardTable(2, [NORMAL]),
                                     RandomnessSource(3))
        self.assertIn(trace.stop_reason, ('max_time', 'upper_cross'))
        self.assertEqual(trace.config['stopping'], config['stopping'])

    def test_write_trace_csv(self):
        table = RewardTable(8, [NORMAL, NORMAL])
        trace = run_trial(table, RandomnessSource(1), {'kind': 'round_robin'},
                          {'kind': 'fixed_time', 'M': 4},
                          {'kind': 'argmax_count'}, 10)
        filename = os.path.join(self.tmp_dir, 'trace.csv')
        write_trace_csv(trace, filename)
        with open(filename, 'r', newline='') as f:
            rows = list(csv.reader(f))
        self.assertEqual(rows[0], ['t', 'A_t', 'Y_t', 'N_1', 'N_2'])
        self.assertEqual(len(rows), 5)
        self.assertEqual(rows[4][:2], ['4', '2'])
        self.assertEqual(rows[4][3:], ['2', '2'])
        self.assertEqual(float(rows[1][2]), table.cell(1, 1))


if __name__ == '__main__':

    logging.basicConfig(level=logging.INFO,
                        format='%(levelname)s : %(asctime)s : %(message)s')

    unittest.TextTestRunner(verbosity=2).run(suite())
