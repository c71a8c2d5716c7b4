import os
import logging
import matplotlib
matplotlib.use('Agg')
import matplotlib.pyplot as plt


def plotConditionalCdf(report, arm, fig_dir):
    """
    Plots the average conditional empirical CDF of one arm for every
    non-empty condition, against the true CDF.  Writes cdf_arm<arm>.svg in
    fig_dir.

    :param report: bias report
    :param arm: arm label ('1', '2', ...)
    :param fig_dir: output directory

    :rtype: str
    :returns: name of the SVG file
    """

    fig_filename = os.path.join(fig_dir, 'cdf_arm%s.svg' % arm)

    plt.clf()
    fig = plt.figure(figsize=(10, 4))

    ax = fig.add_subplot(1, 2, 1, xlabel='y', ylabel='CDF',
                         title='Arm %s' % arm)
    truth_plotted = False
    for label, n in zip(report.conditions, report.cond_counts):
        if n == 0:
            continue
        curve = report.cdf(label, arm)
        if not truth_plotted:
            ax.plot(curve['grid'], curve['truth'], 'k', lw=2, label='true')
            truth_plotted = True
        ax.plot(curve['grid'], curve['estimate'], '--', label=label)
    ax.legend(loc='lower right', fontsize='small')

    # bias with 3 SE band
    ax = fig.add_subplot(1, 2, 2, xlabel='y', ylabel='CDF bias',
                         title='Bias (band: %g SE)' % report.z)
    ax.axhline(0., color='k', lw=1)
    for label, n in zip(report.conditions, report.cond_counts):
        if n == 0:
            continue
        curve = report.cdf(label, arm)
        line, = ax.plot(curve['grid'], curve['bias'], label=label)
        ax.fill_between(curve['grid'], curve['bias'] - report.z*curve['se'],
                        curve['bias'] + report.z*curve['se'],
                        color=line.get_color(), alpha=0.2)
    ax.legend(loc='best', fontsize='small')

    plt.savefig(fig_filename, format='svg')
    plt.close(fig)
    logging.info('Wrote %s' % fig_filename)
    return fig_filename


def plotFunctionalDensity(report, arm, statistic, fig_dir):
    """
    Plots the histogram density of a functional (e.g. the sample variance)
    of one arm within every non-empty condition.  Vertical lines mark the
    conditional averages, the black one the true value.  Writes
    <statistic>_arm<arm>.svg in fig_dir.

    :rtype: str
    :returns: name of the SVG file
    """

    fig_filename = os.path.join(fig_dir, '%s_arm%s.svg' % (statistic, arm))

    plt.clf()
    fig = plt.figure(figsize=(6, 4))
    ax = fig.add_subplot(1, 1, 1, xlabel=statistic, ylabel='density',
                         title='Arm %s' % arm)

    truth = None
    for label, n in zip(report.conditions, report.cond_counts):
        if n == 0:
            continue
        dens = report.density(label, arm, statistic)
        if dens['n'] == 0:
            continue
        truth = dens['truth']
        line, = ax.step(dens['edges'][:-1], dens['density'], where='post',
                        label='%s (n=%d)' % (label, dens['n']))
        ax.axvline(dens['estimate'], color=line.get_color(), ls='--')
    if truth is not None:
        ax.axvline(truth, color='k', lw=2, label='true')
    ax.legend(loc='upper right', fontsize='small')

    plt.savefig(fig_filename, format='svg')
    plt.close(fig)
    logging.info('Wrote %s' % fig_filename)
    return fig_filename


def plotReport(report, fig_dir):
    """
    Plots the conditional CDFs of every arm of a report, then the densities
    of its functionals.
    """
    if not os.path.isdir(fig_dir):
        os.makedirs(fig_dir)
    arms = report.arm_labels[:report.n_arms]
    filenames = [plotConditionalCdf(report, arm, fig_dir) for arm in arms]
    for arm in arms:
        for statistic in report.density_statistics():
            filenames.append(plotFunctionalDensity(report, arm, statistic,
                                                   fig_dir))
    return filenames
