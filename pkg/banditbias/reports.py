"""
Writers for run artifacts: CSV and JSON bias reports, HDF5 files of CDF bias
curves and JSON monotonicity reports.
"""

import csv
import json
import logging
import h5py
import numpy as np

CSV_HEADER = ['condition', 'arm', 'statistic', 'estimate', 'bias', 'se',
              'verdict', 'n']


def _format(value):
    if value is None or value == '':
        return ''
    if isinstance(value, (int, np.integer)):
        return '%d' % value
    if isinstance(value, (float, np.floating)):
        if np.isnan(value):
            return ''
        return '%.10g' % value
    return str(value)


def clean_for_json(obj):
    """
    Recursively converts numpy scalars and arrays to python types and NaN
    to None.
    """
    if isinstance(obj, dict):
        return dict((str(key), clean_for_json(value))
                    for key, value in obj.items())
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [clean_for_json(value) for value in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        if np.isnan(obj) or np.isinf(obj):
            return None
        return float(obj)
    return obj


def write_report_csv(report, filename):
    """
    Writes one row per condition x arm x statistic.

    :param report: the bias report
    :param filename: output CSV file
    :type report: :class:`banditbias.bias_lab.BiasReport`
    """
    with open(filename, 'w', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(CSV_HEADER)
        for row in report.rows():
            writer.writerow([_format(row[key]) for key in CSV_HEADER])
    logging.info('Wrote %s' % filename)


def read_report_csv(filename):
    with open(filename, 'r', newline='') as f:
        return list(csv.DictReader(f))


def write_report_json(report, filename):
    with open(filename, 'w') as f:
        json.dump(clean_for_json(report.to_dict()), f, indent=1,
                  sort_keys=True)
    logging.info('Wrote %s' % filename)


def write_cdf_hdf5(report, filename):
    """
    Writes the CDF curves of a report: one group per condition, one dataset
    per arm with rows estimate, truth, bias and se.
    """
    f = h5py.File(filename, 'w')
    try:
        f.create_dataset('grid', data=report.grid)
        f.attrs['reps'] = report.reps
        f.attrs['n_truncated'] = report.n_truncated
        for c, label in enumerate(report.conditions):
            group = f.create_group(label)
            group.attrs['n'] = int(report.cond_counts[c])
            if report.cond_counts[c] == 0:
                continue
            for arm in report.arm_labels[:report.n_arms]:
                curve = report.cdf(label, arm)
                data = np.vstack((curve['estimate'], curve['truth'],
                                  curve['bias'], curve['se']))
                group.create_dataset(arm, data=data, compression='lzf')
    finally:
        f.close()
    logging.info('Wrote %s' % filename)


def read_cdf_hdf5(filename):
    """
    Reads back a file written by :func:`write_cdf_hdf5`.

    :rtype: dict
    :returns: {'grid': array, condition: {arm: dict of arrays}}
    """
    curves = {}
    f = h5py.File(filename, 'r')
    try:
        curves['grid'] = f['grid'][:]
        for label in f:
            if label == 'grid':
                continue
            curves[label] = {}
            for arm in f[label]:
                data = f[label][arm][:]
                curves[label][arm] = {'estimate': data[0], 'truth': data[1],
                                      'bias': data[2], 'se': data[3]}
    finally:
        f.close()
    return curves


def write_monotonicity_json(reports, filename):
    """
    Writes a list of :class:`banditbias.monotonicity.MonotonicityReport`.
    """
    with open(filename, 'w') as f:
        json.dump(clean_for_json([r.to_dict() for r in reports]), f,
                  indent=1, sort_keys=True)
    logging.info('Wrote %s' % filename)
