#!/usr/bin/env python
"""
Runs every preset experiment with its default number of replications and
every finite instance check, writing the artifacts below $BANDITBIAS_OUTDIR.
"""

import logging
from banditbias.options import BanditBiasOptions
from banditbias.presets import PRESETS, INSTANCES, instance
from banditbias.cli import do_run_setup_and_run, do_check_setup_and_run

logging.basicConfig(level=logging.INFO,
                    format='%(levelname)s : %(asctime)s : %(message)s')

for name in sorted(PRESETS):

    # set up parameters
    wo = BanditBiasOptions()
    wo.set_preset(name)
    wo.opdict['time'] = True
    wo.opdict['threads'] = 4
    wo.opdict['plot'] = True
    wo.opdict['hdf5'] = True

    # check options and run the experiment
    wo.verify_run_options()
    code = do_run_setup_and_run(wo.opdict)
    logging.info('%s finished with exit code %d' % (name, code))

for name in sorted(INSTANCES):

    inst = instance(name)
    wo = BanditBiasOptions()
    wo.opdict['name'] = name
    wo.opdict['threads'] = 4

    # check options and run the exhaustive checks
    wo.verify_check_options()
    code = do_check_setup_and_run(wo.opdict, inst)
    logging.info('%s finished with exit code %d' % (name, code))
