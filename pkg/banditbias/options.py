import os
import json
import logging
from banditbias.tabular import ArmSpec
from banditbias.rules import verify_sampling_rule, verify_stopping_rule, \
    verify_choosing_rule
from banditbias.estimators import verify_functional, verify_cdf_grid, \
    make_cdf_grid, DEFAULT_GRID
from banditbias.bias_lab import make_condition
from banditbias.engine import halving_schedule
from banditbias.presets import preset

SCHEMA_VERSION = 1


class BanditBiasOptions(object):
    """
    The BanditBiasOptions class contains a single attribute **opdict**
    containing all the options and parameters of an experiment (the
    experiment configuration).  It also contains methods to verify the
    consistency of the options before launching a run or a check.
    """

    def __init__(self):

        self.opdict = {}

        # set some default values

        # general profiling / debugging behaviour
        self.opdict['time'] = False
        self.opdict['verbose'] = False
        self.opdict['schema_version'] = SCHEMA_VERSION

        # monte carlo
        self.opdict['reps'] = 100000
        self.opdict['seed'] = 0
        self.opdict['horizon_cap'] = 10**6
        self.opdict['chunk_size'] = 1000
        self.opdict['threads'] = 1
        self.opdict['z'] = 3.

        # statistics
        self.opdict['grid'] = {'lo': DEFAULT_GRID[0], 'hi': DEFAULT_GRID[1],
                               'n': DEFAULT_GRID[2]}
        self.opdict['functionals'] = []
        self.opdict['eval_time'] = None

        # output
        self.opdict['plot'] = False
        self.opdict['hdf5'] = False
        self.opdict['trace_dump'] = 0

        # monotonicity checks
        self.opdict['max_tables'] = 10**7

    def set_test_options(self):
        """
        Sets up a small, fast version of opdict: the early stopping experiment
        with a few thousand replications.  Used notably in the tests.
        """
        self.set_preset('E1')
        self.opdict['time'] = True
        self.opdict['verbose'] = True
        self.opdict['reps'] = 2000
        self.opdict['seed'] = 7
        self.opdict['chunk_size'] = 250
        self.opdict['grid'] = {'lo': -3., 'hi': 3., 'n': 25}

    def set_preset(self, name):
        """
        Loads a named experiment into opdict, keeping the general options.
        """
        self.opdict.update(preset(name))

    def read_config_file(self, filename):
        """
        Loads a JSON experiment configuration into opdict.  The file must
        carry the current schema_version.
        """
        with open(filename, 'r') as f:
            config = json.load(f)
        version = config.get('schema_version')
        if version != SCHEMA_VERSION:
            raise UserWarning('Config %s has schema_version %s, expected %d'
                              % (filename, version, SCHEMA_VERSION))
        self.opdict.update(config)
        if 'name' not in self.opdict:
            self.opdict['name'] = \
                os.path.splitext(os.path.basename(filename))[0]
        logging.info('Read configuration %s from %s' %
                     (self.opdict['name'], filename))

    def write_config_file(self, filename):
        keys = ('schema_version', 'name', 'arms', 'sampling', 'stopping',
                'choosing', 'halving', 'conditions', 'functionals', 'grid',
                'reps', 'seed', 'horizon_cap', 'eval_time', 'chunk_size', 'z')
        config = dict((key, self.opdict[key]) for key in keys
                      if key in self.opdict)
        with open(filename, 'w') as f:
            json.dump(config, f, indent=2, sort_keys=True)

    def verify_out_dir(self):
        """
        Verifies that the output directory is set.  If the 'out_dir' option
        is not directly set in the opdict, its value is read from the
        environment variable $BANDITBIAS_OUTDIR, and defaults to ./out.
        The experiment's own directory out_dir/name is created if needed.
        """
        if not self.opdict.get('out_dir'):
            logging.info('No out_dir set in options, getting out_dir from \
$BANDITBIAS_OUTDIR')
            self.opdict['out_dir'] = os.getenv('BANDITBIAS_OUTDIR', 'out')

        run_dir = self.run_dir()
        if not os.path.isdir(run_dir):
            os.makedirs(run_dir)
        if self.opdict['trace_dump'] and \
           not os.path.isdir(os.path.join(run_dir, 'traces')):
            os.makedirs(os.path.join(run_dir, 'traces'))
        self.opdict['trace_dir'] = os.path.join(run_dir, 'traces')

    def run_dir(self):
        return os.path.join(self.opdict['out_dir'],
                            self.opdict.get('name', 'experiment'))

    def _verify_name(self):
        if not self.opdict.get('name'):
            raise UserWarning('name option not set')

    def _verify_arms(self):
        if not self.opdict.get('arms'):
            raise UserWarning('arms option not set')
        for arm in self.opdict['arms']:
            try:
                ArmSpec.from_dict(arm)
            except (KeyError, ValueError) as e:
                raise UserWarning('Invalid arm %s : %s' % (arm, e))

    def _verify_rules(self):
        n_arms = len(self.opdict['arms'])
        if self.opdict.get('halving'):
            if 'budget' not in self.opdict['halving']:
                raise UserWarning('budget option of halving not set')
            try:
                halving_schedule(self.opdict['halving']['budget'], n_arms)
            except ValueError as e:
                raise UserWarning('Invalid halving option : %s' % e)
            return
        for key in ('sampling', 'stopping', 'choosing'):
            if key not in self.opdict:
                raise UserWarning('%s option not set' % key)
        verify_sampling_rule(self.opdict['sampling'], n_arms)
        verify_stopping_rule(self.opdict['stopping'], n_arms)
        verify_choosing_rule(self.opdict['choosing'], n_arms)

    def _verify_conditions(self):
        if not self.opdict.get('conditions'):
            raise UserWarning('conditions option not set')
        n_arms = len(self.opdict['arms'])
        for cond in self.opdict['conditions']:
            cond = make_condition(cond)
            if 'k' in cond and not 1 <= cond['k'] <= n_arms:
                raise UserWarning('Condition arm %d outside [1, %d]' %
                                  (cond['k'], n_arms))

    def _verify_functionals(self):
        for f in self.opdict.get('functionals', []):
            verify_functional(f)

    def _verify_grid(self):
        grid = self.opdict.get('grid')
        if not grid:
            raise UserWarning('grid option not set')
        if 'points' in grid:
            verify_cdf_grid(grid['points'])
        else:
            make_cdf_grid(grid['lo'], grid['hi'], grid['n'])

    def _verify_reps(self):
        if not self.opdict.get('reps') or int(self.opdict['reps']) < 1:
            raise UserWarning('reps option must be an integer >= 1')

    def _verify_seed(self):
        if 'seed' not in self.opdict:
            raise UserWarning('seed option not set')

    def _verify_horizon_cap(self):
        if int(self.opdict.get('horizon_cap', 0)) < 1:
            raise UserWarning('horizon_cap option must be >= 1')

    def _verify_eval_time(self):
        eval_time = self.opdict.get('eval_time')
        if eval_time is not None and eval_time < 1:
            raise UserWarning('eval_time option must be >= 1')

    def _verify_threads(self):
        if int(self.opdict.get('threads', 0)) < 1:
            raise UserWarning('threads option must be >= 1')
        if int(self.opdict.get('chunk_size', 0)) < 1:
            raise UserWarning('chunk_size option must be >= 1')

    def verify_run_options(self):

        self._verify_name()
        self._verify_arms()
        self._verify_rules()
        self._verify_conditions()
        self._verify_functionals()
        self._verify_grid()
        self._verify_reps()
        self._verify_seed()
        self._verify_horizon_cap()
        self._verify_eval_time()
        self._verify_threads()
        self.verify_out_dir()

    def verify_check_options(self):

        self._verify_threads()
        if int(self.opdict.get('max_tables', 0)) < 1:
            raise UserWarning('max_tables option must be >= 1')
        self.verify_out_dir()
