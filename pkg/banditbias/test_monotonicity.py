import logging
import unittest
import numpy as np
from banditbias.presets import instance
from banditbias.monotonicity import Enumeration, MonotonicityReport, \
    check_condition_monotonicity, check_optimistic_sampling, \
    check_lil_ucb_coupling, check_halving_coupling, run_checks, replay, \
    evaluate_all, count_path


def suite():
    suite = unittest.TestSuite()
    suite.addTest(EnumerationTests('test_sizes'))
    suite.addTest(EnumerationTests('test_digits'))
    suite.addTest(EnumerationTests('test_column_span'))
    suite.addTest(EnumerationTests('test_size_guard'))
    suite.addTest(EnumerationTests('test_randomness_digits'))
    suite.addTest(EnumerationTests('test_count_path'))
    suite.addTest(ConditionCheckTests('test_early_stop_decreasing'))
    suite.addTest(ConditionCheckTests('test_line_cross_increasing'))
    suite.addTest(ConditionCheckTests('test_wrong_direction'))
    suite.addTest(ConditionCheckTests('test_broken_argmin'))
    suite.addTest(SamplingCheckTests('test_lil_ucb_two_arms'))
    suite.addTest(SamplingCheckTests('test_lil_ucb_three_arms'))
    suite.addTest(SamplingCheckTests('test_reward_independent'))
    suite.addTest(SamplingCheckTests('test_anti_optimistic'))
    suite.addTest(HalvingCheckTests('test_two_arms'))
    suite.addTest(HalvingCheckTests('test_three_arms'))
    suite.addTest(HalvingCheckTests('test_unread_cell'))
    return suite


class EnumerationTests(unittest.TestCase):

    def test_sizes(self):
        enum = Enumeration(instance('e1-early-stop'))
        self.assertEqual((enum.n_tables, enum.rows, enum.horizon), (8, 3, 3))
        enum = Enumeration(instance('lilucb-k2'))
        self.assertEqual((enum.rows, enum.n_tables), (5, 2**10))
        enum = Enumeration(instance('lilucb-k3'))
        self.assertEqual(enum.n_tables, 2**12)
        enum = Enumeration(instance('halving-k3'))
        self.assertEqual((enum.rows, enum.horizon), (5, 12))
        self.assertEqual(enum.n_tables, 2**15)

    def test_digits(self):
        enum = Enumeration(instance('broken-argmin'))
        self.assertEqual(enum.n_tables, 4)
        cells, w_cells = enum.overrides(2)
        self.assertEqual(cells, {(1, 1): 0., (1, 2): 1.})
        self.assertEqual(w_cells, {})
        table, w = enum.table(3)
        self.assertEqual((table.cell(1, 1), table.cell(1, 2)), (1., 1.))

    def test_column_span(self):
        enum = Enumeration(instance('lilucb-k3'))
        self.assertEqual(enum.column_span(1), (1, 16, 256))
        self.assertEqual(enum.column_span(2), (16, 16, 16))
        self.assertEqual(enum.column_span(3), (256, 16, 1))

    def test_size_guard(self):
        self.assertRaises(UserWarning, Enumeration, instance('lilucb-k3'),
                          1000)
        inst = instance('lilucb-k2')
        inst['support'] = [0., 0.5, 1.]
        inst['horizon'] = 12
        inst['rows'] = 11
        self.assertRaises(UserWarning, Enumeration, inst)

    def test_randomness_digits(self):
        enum = Enumeration(instance('random-k2'))
        self.assertEqual(enum.n_tables, 2**12)
        cells, w_cells = enum.overrides(2**8)
        self.assertEqual(set(cells.values()), set([0.]))
        self.assertEqual(w_cells, {1: 0.75, 2: 0.25, 3: 0.25, 4: 0.25})

    def test_count_path(self):
        enum = Enumeration(instance('anti-optimistic'))
        ev = evaluate_all(instance('anti-optimistic'), 'paths')
        self.assertEqual(ev['paths'].shape, (enum.n_tables, 4, 2))
        np.testing.assert_array_equal(ev['paths'][0],
                                      [[1, 0], [1, 1], [2, 1], [3, 1]])
        self.assertTrue(np.all(ev['paths'].sum(axis=2) ==
                               np.arange(1, 5)[np.newaxis]))


class ConditionCheckTests(unittest.TestCase):

    def test_early_stop_decreasing(self):
        report = check_condition_monotonicity(instance('e1-early-stop'),
                                              'decreasing')
        self.assertIsInstance(report, MonotonicityReport)
        self.assertEqual(report.verdict, 'pass')
        self.assertEqual(report.instances_checked, 12)

    def test_line_cross_increasing(self):
        reports = run_checks(instance('e1-line-cross'))
        self.assertEqual(len(reports), 1)
        self.assertTrue(reports[0].passed)

    def test_wrong_direction(self):
        report = check_condition_monotonicity(instance('e1-line-cross'),
                                              'decreasing')
        self.assertEqual(report.verdict, 'counterexample')
        example = report.counterexample
        self.assertEqual(example['table_index'], 1)
        self.assertEqual(example['cell'], [2, 1])
        self.assertEqual(example['quantities'],
                         {'original': '0/3', 'perturbed': '1/2'})
        self.assertRaises(UserWarning, check_condition_monotonicity,
                          instance('e1-line-cross'), 'sideways')

    def test_broken_argmin(self):
        inst = instance('broken-argmin')
        reports = run_checks(inst)
        self.assertEqual(reports[0].verdict, 'counterexample')
        example = reports[0].counterexample
        self.assertEqual((example['old_value'], example['new_value']),
                         (0., 1.))
        self.assertEqual(example['quantities'],
                         {'original': '1/1', 'perturbed': '0/1'})
        self.assertIn('banditbias check broken-argmin --table 0 --cell 1,1',
                      example['replay'])
        # the counterexample replays to the same pair
        result = replay(inst, example['table_index'], tuple(example['cell']),
                        example['new_value'])
        self.assertEqual(result['original']['ratio'],
                         example['quantities']['original'])
        self.assertEqual(result['perturbed']['ratio'],
                         example['quantities']['perturbed'])
        self.assertEqual((result['original']['kappa'],
                          result['perturbed']['kappa']), (1, 2))
        self.assertRaises(ValueError, replay, inst, 4, (1, 1), 1.)


class SamplingCheckTests(unittest.TestCase):

    def test_lil_ucb_two_arms(self):
        reports = run_checks(instance('lilucb-k2'))
        self.assertEqual([r.check for r in reports],
                         ['optimistic_sampling', 'lil_ucb_coupling'])
        for report in reports:
            self.assertEqual(report.verdict, 'pass')
            self.assertGreater(report.instances_checked, 0)

    def test_lil_ucb_three_arms(self):
        inst = instance('lilucb-k3')
        self.assertTrue(check_optimistic_sampling(inst).passed)
        self.assertTrue(check_lil_ucb_coupling(inst).passed)

    def test_reward_independent(self):
        for name in ('alternate-k2', 'random-k2'):
            reports = run_checks(instance(name))
            self.assertTrue(all(r.passed for r in reports))

    def test_anti_optimistic(self):
        inst = instance('anti-optimistic')
        report = check_optimistic_sampling(inst)
        self.assertEqual(report.verdict, 'counterexample')
        example = report.counterexample
        self.assertEqual(example['cell'], [1, 1])
        self.assertEqual(example['quantities'],
                         {'original': [1, 1, 2, 3],
                          'perturbed': [1, 1, 1, 1]})
        result = replay(inst, example['table_index'], (1, 1),
                        example['new_value'])
        self.assertEqual(result['original']['counts'],
                         example['quantities']['original'])
        self.assertEqual(result['perturbed']['counts'],
                         example['quantities']['perturbed'])


class HalvingCheckTests(unittest.TestCase):

    def test_two_arms(self):
        reports = run_checks(instance('halving-k2'))
        self.assertEqual(reports[0].check, 'halving_coupling')
        self.assertTrue(reports[0].passed)
        self.assertRaises(UserWarning, check_halving_coupling,
                          instance('lilucb-k2'))

    def test_three_arms(self):
        report = check_halving_coupling(instance('halving-k3'))
        self.assertEqual(report.verdict, 'pass')
        self.assertEqual(report.to_dict()['counterexample'], None)

    def test_unread_cell(self):
        # rows beyond the budget are never pulled
        inst = instance('halving-k2')
        result = replay(inst, 5, (3, 1), 1.)
        self.assertEqual(result['original'], result['perturbed'])


if __name__ == '__main__':

    logging.basicConfig(level=logging.INFO,
                        format='%(levelname)s : %(asctime)s : %(message)s')

    unittest.TextTestRunner(verbosity=2).run(suite())
