"""
Tabular model of a bandit experiment: an addressable, lazily generated table
of i.i.d. arm rewards plus a stream of external randomness.

Each arm column is its own counter-based stream (Philox keyed by seed and
arm), so reading more or fewer cells never shifts any other cell.
"""

import numpy as np
from scipy.special import ndtr, ndtri

MASK64 = (1 << 64) - 1

# hash domains kept apart so that reward cells and W_t never share a stream
REWARD_DOMAIN = 1
RANDOMNESS_DOMAIN = 2

# tag used to derive the randomness seed of a trial from the base seed
RANDOMNESS_TAG = 0x5754

_FIRST_BLOCK = 16


def _stream_key(seed, domain, column):
    return (int(seed) & MASK64) | (((domain << 32) | int(column)) << 64)


def _raw_to_unit(raw):
    # 53 high bits, offset by half a step: result lies strictly in (0, 1)
    return ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


class _UnitStream(object):
    """
    Lazily extended block of uniform variates for one (seed, domain, column)
    triple.  Element j (0-based) depends only on the triple and on j.
    """

    def __init__(self, seed, domain, column):
        self._bitgen = np.random.Philox(key=_stream_key(seed, domain, column))
        self._u = np.empty(0)

    def values(self, n):
        if n > len(self._u):
            size = max(_FIRST_BLOCK, len(self._u))
            while size < n:
                size *= 2
            raw = self._bitgen.random_raw(size - len(self._u))
            self._u = np.concatenate((self._u, _raw_to_unit(raw)))
        return self._u[:n]


class ArmSpec(object):
    """
    Reward distribution of one arm.

    **Attributes**

    .. attribute:: kind

        One of 'normal', 'bernoulli' or 'discrete'.

    .. attribute:: params

        Dictionary of distribution parameters: mean and variance for normal
        arms, p for bernoulli arms, support and probs for discrete arms.
    """

    KINDS = ('normal', 'bernoulli', 'discrete')

    def __init__(self, kind, **params):
        if kind not in self.KINDS:
            raise ValueError('Unknown arm kind %s' % kind)
        self.kind = kind

        if kind == 'normal':
            mean = float(params.get('mean', 0.))
            variance = float(params.get('variance', 1.))
            if not variance > 0:
                raise ValueError('Normal arm needs variance > 0, got %s'
                                 % variance)
            self.params = {'mean': mean, 'variance': variance}

        elif kind == 'bernoulli':
            p = float(params['p'])
            if p < 0 or p > 1:
                raise ValueError('Bernoulli arm needs p in [0,1], got %s' % p)
            self.params = {'p': p}
            self._support = np.array([0., 1.])
            self._cum = np.array([1.-p, 1.])

        else:
            support = np.asarray(params['support'], dtype=float)
            probs = np.asarray(params['probs'], dtype=float)
            if len(support) == 0 or len(support) != len(probs):
                raise ValueError('Discrete arm needs matching support and \
probs')
            if np.any(np.diff(support) <= 0):
                raise ValueError('Discrete support must be strictly ascending')
            if np.any(probs < 0) or abs(np.sum(probs) - 1.) > 1e-12:
                raise ValueError('Discrete probs must be nonnegative and sum \
to 1')
            self.params = {'support': [float(x) for x in support],
                           'probs': [float(x) for x in probs]}
            self._support = support
            self._cum = np.cumsum(probs)

    @classmethod
    def from_dict(cls, arm_dict):
        params = dict(arm_dict)
        kind = params.pop('kind')
        return cls(kind, **params)

    def to_dict(self):
        arm_dict = {'kind': self.kind}
        arm_dict.update(self.params)
        return arm_dict

    @property
    def support(self):
        """
        Ascending support of a bernoulli or discrete arm, None for normal arms.
        """
        if self.kind == 'normal':
            return None
        return self._support

    @property
    def mean(self):
        if self.kind == 'normal':
            return self.params['mean']
        if self.kind == 'bernoulli':
            return self.params['p']
        return float(np.dot(self._support, self.params['probs']))

    @property
    def variance(self):
        if self.kind == 'normal':
            return self.params['variance']
        if self.kind == 'bernoulli':
            p = self.params['p']
            return p*(1.-p)
        return float(np.dot((self._support - self.mean)**2,
                            self.params['probs']))

    @property
    def median(self):
        """
        Median of the arm: the mean for normal arms (symmetry), the lower
        median inf{y : F(y) >= 1/2} otherwise.
        """
        if self.kind == 'normal':
            return self.params['mean']
        return float(self._support[np.searchsorted(self._cum, 0.5 - 1e-15)])

    def __eq__(self, other):
        return isinstance(other, ArmSpec) and self.to_dict() == other.to_dict()

    def __ne__(self, other):
        return not self == other

    def __hash__(self):
        return hash(repr(self))

    def __repr__(self):
        return 'ArmSpec(%s)' % ', '.join('%s=%r' % (key, value) for key, value
                                         in sorted(self.to_dict().items()))


def true_cdf(arm, y):
    """
    Cumulative distribution function of an arm.

    :param arm: the arm
    :param y: evaluation point(s)
    :type arm: ArmSpec
    :type y: float or array

    :rtype: float or array
    :returns: F(y)
    """
    if arm.kind == 'normal':
        sigma = np.sqrt(arm.params['variance'])
        value = ndtr((np.asarray(y, dtype=float) - arm.params['mean']) / sigma)
    else:
        idx = np.searchsorted(arm.support, y, side='right')
        value = np.where(idx > 0, arm._cum[np.maximum(idx-1, 0)], 0.)
        value = np.minimum(value, 1.)
    if np.ndim(value) == 0:
        return float(value)
    return value


def inverse_cdf(arm, u):
    """
    Generalized inverse inf{y : F(y) >= u} of the arm's CDF.

    :param arm: the arm
    :param u: probability level(s), strictly between 0 and 1
    :type arm: ArmSpec
    :type u: float or array

    :rtype: float or array
    :raises ValueError: if some u lies outside (0, 1)
    """
    u_arr = np.asarray(u, dtype=float)
    if np.any(u_arr <= 0) or np.any(u_arr >= 1) or np.any(np.isnan(u_arr)):
        raise ValueError('inverse_cdf needs 0 < u < 1, got %s' % u)

    if arm.kind == 'normal':
        value = arm.params['mean'] + np.sqrt(arm.params['variance']) * \
            ndtri(u_arr)
    else:
        idx = np.searchsorted(arm._cum, u_arr, side='left')
        value = arm.support[np.minimum(idx, len(arm.support)-1)]
    if np.ndim(value) == 0:
        return float(value)
    return value


def normal_quantile(p):
    """
    Quantile of the standard normal distribution.
    """
    return inverse_cdf(STANDARD_NORMAL, p)


STANDARD_NORMAL = ArmSpec('normal', mean=0., variance=1.)


class RewardTable(object):
    """
    The counterfactual reward table: cell (i, k) holds the reward returned by
    the i-th pull of arm k (both indices start at 1).

    **Attributes**

    .. attribute:: seed

        64-bit integer seed of the table.

    .. attribute:: arms

        Tuple of :class:`ArmSpec`, one per arm.

    .. attribute:: overrides

        Dictionary mapping (i, k) to a forced cell value.
    """

    def __init__(self, seed, arms, overrides=None):
        self.seed = int(seed) & MASK64
        self.arms = tuple(arms)
        self.overrides = dict(overrides) if overrides else {}
        for (i, k) in self.overrides:
            self._check_index(i, k)
        self._columns = {}

    @property
    def n_arms(self):
        return len(self.arms)

    def _check_index(self, i, k):
        if int(i) < 1:
            raise ValueError('Row index must be >= 1, got %s' % i)
        if int(k) < 1 or int(k) > len(self.arms):
            raise ValueError('Arm index %s outside [1, %d]' %
                             (k, len(self.arms)))

    def _column(self, k, n):
        if k not in self._columns:
            self._columns[k] = [_UnitStream(self.seed, REWARD_DOMAIN, k), None]
        stream, values = self._columns[k]
        if values is None or len(values) < n:
            u = stream.values(max(n, _FIRST_BLOCK))
            values = np.asarray(inverse_cdf(self.arms[k-1], u), dtype=float)
            values = np.atleast_1d(values)
            self._columns[k][1] = values
        return values

    def cell(self, i, k):
        """
        Returns the reward of the i-th pull of arm k.

        :param i: row index, starting at 1
        :param k: arm index, starting at 1
        :type i: int
        :type k: int

        :rtype: float
        """
        self._check_index(i, k)
        if (i, k) in self.overrides:
            return float(self.overrides[(i, k)])
        return float(self._column(k, i)[i-1])

    def column(self, k, n):
        """
        Returns the first n cells of arm k as an array.
        """
        self._check_index(max(n, 1), k)
        values = np.array(self._column(k, n)[:n])
        for (i, kk), value in self.overrides.items():
            if kk == k and i <= n:
                values[i-1] = value
        return values

    def with_cell_overridden(self, i, k, value):
        """
        Returns a new table identical to this one except for cell (i, k).
        This table is left untouched.
        """
        self._check_index(i, k)
        overrides = dict(self.overrides)
        overrides[(i, k)] = float(value)
        return RewardTable(self.seed, self.arms, overrides)

    def __eq__(self, other):
        return isinstance(other, RewardTable) and self.seed == other.seed \
            and self.arms == other.arms and self.overrides == other.overrides

    def __ne__(self, other):
        return not self == other

    def __repr__(self):
        return 'RewardTable(seed=%d, K=%d, %d overrides)' % \
            (self.seed, len(self.arms), len(self.overrides))


class RandomnessSource(object):
    """
    External randomness W_1, W_2, ... of a trial: draw(t) is a uniform
    variate on (0, 1) depending only on the seed and t, unless forced by an
    override (used to enumerate randomness in the monotonicity checks).
    """

    def __init__(self, seed, overrides=None):
        self.seed = int(seed) & MASK64
        self.overrides = dict(overrides) if overrides else {}
        self._stream = None

    def draw(self, t):
        if int(t) < 1:
            raise ValueError('Step index must be >= 1, got %s' % t)
        if t in self.overrides:
            return float(self.overrides[t])
        if self._stream is None:
            self._stream = _UnitStream(self.seed, RANDOMNESS_DOMAIN, 0)
        return float(self._stream.values(t)[t-1])

    def __eq__(self, other):
        return isinstance(other, RandomnessSource) and \
            self.seed == other.seed and self.overrides == other.overrides

    def __ne__(self, other):
        return not self == other


def trial_seeds(base_seed, r):
    """
    Derives the table seed and the randomness seed of replication r from the
    base seed of an experiment.

    :param base_seed: experiment seed
    :param r: replication index
    :type base_seed: int
    :type r: int

    :rtype: tuple
    :returns: (table_seed, randomness_seed), two 64-bit integers
    """
    base = int(base_seed) & MASK64
    table_seed = np.random.SeedSequence(base, spawn_key=(int(r),))
    w_seed = np.random.SeedSequence(base, spawn_key=(int(r), RANDOMNESS_TAG))
    return (int(table_seed.generate_state(1, np.uint64)[0]),
            int(w_seed.generate_state(1, np.uint64)[0]))
