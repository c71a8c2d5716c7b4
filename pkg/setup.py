#!/usr/bin/env python

from setuptools import setup

setup(name='banditbias',
      version='0.1.0',
      description='Conditional bias of sample means and empirical CDFs in \
multi-armed bandit experiments',
      packages=['banditbias'],
      scripts=['scripts/banditbias', 'scripts/run_all_presets.py'],
      install_requires=[
          'numpy>=1.17',
          'scipy>=1.3',
          'h5py>=2.9',
          'matplotlib>=3.1',
      ],
      classifiers=[
          'Environment :: Console',
          'Intended Audience :: Science/Research',
          'Programming Language :: Python :: 3',
          'Topic :: Scientific/Engineering',
      ],
      )
