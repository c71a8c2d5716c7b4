import io
import os
import json
import shutil
import logging
import tempfile
import unittest
from contextlib import redirect_stdout
from banditbias.cli import main, EXIT_OK, EXIT_ERROR, EXIT_EMPTY, \
    EXIT_COUNTEREXAMPLE
from banditbias.options import BanditBiasOptions
from banditbias.reports import read_report_csv


def suite():
    suite = unittest.TestSuite()
    suite.addTest(RunCommandTests('test_byte_identical_runs'))
    suite.addTest(RunCommandTests('test_schema'))
    suite.addTest(RunCommandTests('test_empty_condition'))
    suite.addTest(RunCommandTests('test_artifacts'))
    suite.addTest(RunCommandTests('test_errors'))
    suite.addTest(RunCommandTests('test_default_grid_flag'))
    suite.addTest(CheckCommandTests('test_pass'))
    suite.addTest(CheckCommandTests('test_counterexample'))
    suite.addTest(CheckCommandTests('test_replay'))
    suite.addTest(DescribeCommandTests('test_presets'))
    suite.addTest(DescribeCommandTests('test_instances'))
    return suite


def run_quietly(argv):
    out = io.StringIO()
    with redirect_stdout(out):
        code = main(argv)
    return code, out.getvalue()


class RunCommandTests(unittest.TestCase):

    def setUp(self):
        self.tmp_dir = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.tmp_dir)

    def test_byte_identical_runs(self):
        # three chunks of the default chunk_size
        argv = ['run', 'E1', '--reps', '3000', '--seed', '7', '--out',
                self.tmp_dir, '--grid', '-3:3:13']
        filename = os.path.join(self.tmp_dir, 'E1', 'report.csv')
        self.assertEqual(run_quietly(argv)[0], EXIT_OK)
        with open(filename, 'rb') as f:
            first = f.read()
        self.assertEqual(run_quietly(argv + ['--threads', '8'])[0], EXIT_OK)
        with open(filename, 'rb') as f:
            second = f.read()
        self.assertEqual(first, second)

    def test_schema(self):
        run_quietly(['run', 'E1', '--reps', '300', '--out', self.tmp_dir,
                     '--grid', '-3:3:13'])
        rows = read_report_csv(os.path.join(self.tmp_dir, 'E1',
                                            'report.csv'))
        conditions = sorted(set(r['condition'] for r in rows))
        self.assertEqual(conditions, ['early_stop', 'line_cross', 'marginal'])
        for cond in conditions:
            stats = [r['statistic'] for r in rows if r['condition'] == cond
                     and r['arm'] == '1']
            self.assertGreaterEqual(len(stats), 4)

    def test_empty_condition(self):
        wo = BanditBiasOptions()
        wo.set_preset('E1')
        wo.opdict['name'] = 'E1-empty'
        wo.opdict['conditions'] = ['marginal', 'accept_H0']
        wo.opdict['grid'] = {'lo': -1., 'hi': 1., 'n': 5}
        config_file = os.path.join(self.tmp_dir, 'E1-empty.json')
        wo.write_config_file(config_file)
        code, out = run_quietly(['run', config_file, '--reps', '200',
                                 '--out', self.tmp_dir])
        self.assertEqual(code, EXIT_EMPTY)
        rows = read_report_csv(os.path.join(self.tmp_dir, 'E1-empty',
                                            'report.csv'))
        self.assertEqual([r['verdict'] for r in rows
                          if r['condition'] == 'accept_H0'], ['empty'])

    def test_artifacts(self):
        code, out = run_quietly(['run', 'E1', '--reps', '100', '--out',
                                 self.tmp_dir, '--grid', '-2:2:5', '--plot',
                                 '--hdf5', '--dump-traces', '3'])
        self.assertEqual(code, EXIT_OK)
        run_dir = os.path.join(self.tmp_dir, 'E1')
        for name in ('report.csv', 'report.json', 'cdf.hdf5',
                     os.path.join('fig', 'cdf_arm1.svg'),
                     os.path.join('traces', 'trace_000002.csv')):
            self.assertTrue(os.path.isfile(os.path.join(run_dir, name)),
                            name)
        self.assertFalse(os.path.isfile(os.path.join(run_dir, 'traces',
                                                     'trace_000003.csv')))

    def test_errors(self):
        self.assertEqual(run_quietly(['run', 'E9'])[0], EXIT_ERROR)
        self.assertEqual(run_quietly(['run', 'E1', '--grid', '1:2',
                                      '--out', self.tmp_dir])[0], EXIT_ERROR)
        self.assertEqual(run_quietly(['run', 'E1', '--reps', '0',
                                      '--out', self.tmp_dir])[0], EXIT_ERROR)
        config_file = os.path.join(self.tmp_dir, 'old.json')
        with open(config_file, 'w') as f:
            json.dump({'schema_version': 0, 'name': 'old'}, f)
        self.assertEqual(run_quietly(['run', config_file])[0], EXIT_ERROR)
        self.assertEqual(run_quietly([])[0], EXIT_ERROR)
        self.assertEqual(run_quietly(['run', 'E1', '--threads'])[0],
                         EXIT_ERROR)
        self.assertEqual(run_quietly(['--help'])[0], EXIT_OK)

    def test_default_grid_flag(self):
        code, out = run_quietly(['run', 'E1', '--reps', '200', '--out',
                                 self.tmp_dir, '--grid', '-4:4:161'])
        self.assertEqual(code, EXIT_OK)
        with open(os.path.join(self.tmp_dir, 'E1', 'report.json'), 'r') as f:
            grid = json.load(f)['grid']
        self.assertEqual(len(grid), 161)
        self.assertEqual((grid[0], grid[-1]), (-4., 4.))


class CheckCommandTests(unittest.TestCase):

    def setUp(self):
        self.tmp_dir = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.tmp_dir)

    def test_pass(self):
        code, out = run_quietly(['check', 'e1-early-stop', '--out',
                                 self.tmp_dir])
        self.assertEqual(code, EXIT_OK)
        with open(os.path.join(self.tmp_dir, 'e1-early-stop',
                               'monotonicity.json'), 'r') as f:
            content = json.load(f)
        self.assertEqual(content[0]['verdict'], 'pass')

    def test_counterexample(self):
        code, out = run_quietly(['check', 'broken-argmin', '--out',
                                 self.tmp_dir])
        self.assertEqual(code, EXIT_COUNTEREXAMPLE)
        self.assertIn('counterexample', out)
        self.assertIn('--table 0 --cell 1,1', out)

    def test_replay(self):
        code, out = run_quietly(['check', 'broken-argmin', '--table', '0',
                                 '--cell', '1,1', '--value', '1'])
        self.assertEqual(code, EXIT_OK)
        result = json.loads(out)
        self.assertEqual(result['original']['ratio'], '1/1')
        self.assertEqual(result['perturbed']['ratio'], '0/1')
        self.assertEqual(run_quietly(['check', 'broken-argmin', '--table',
                                      '0'])[0], EXIT_ERROR)
        self.assertEqual(run_quietly(['check', 'no-such-instance'])[0],
                         EXIT_ERROR)
        self.assertEqual(run_quietly(['check', 'lilucb-k3', '--max-tables',
                                      '100', '--out', self.tmp_dir])[0],
                         EXIT_ERROR)


class DescribeCommandTests(unittest.TestCase):

    def test_presets(self):
        code, out = run_quietly(['describe', 'E1'])
        self.assertEqual(code, EXIT_OK)
        description = json.loads(out)
        self.assertEqual(description['config']['name'], 'E1')
        thresholds = description['derived']['thresholds']
        for got, expected in zip(thresholds, (0.8416, 0.5951, 0.4859)):
            self.assertAlmostEqual(got, expected, 4)

        description = json.loads(run_quietly(['describe', 'E3'])[1])
        self.assertEqual(description['derived']['lil_ucb'],
                         [0.2, 0.1, 0.5, 1.])
        description = json.loads(run_quietly(['describe', 'E4'])[1])
        self.assertEqual(description['derived']['round_budgets'], [1, 2])
        self.assertEqual(description['derived']['total_pulls'], 7)

    def test_instances(self):
        code, out = run_quietly(['describe', 'lilucb-k3'])
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(json.loads(out)['derived']['tables'], 4096)
        self.assertEqual(run_quietly(['describe', 'nothing'])[0], EXIT_ERROR)


if __name__ == '__main__':

    logging.basicConfig(level=logging.INFO,
                        format='%(levelname)s : %(asctime)s : %(message)s')

    unittest.TextTestRunner(verbosity=2).run(suite())
