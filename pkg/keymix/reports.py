'''Provides an object model for experiment reports.

Every report serializes to CSV (one row per grid value, the columns of the
delay and interval mix result tables first) and to JSON carrying the
package version, the seed and the full run config.
'''
from __future__ import annotations

import csv
import io
import os

import numpy as np
import orjson

from keymix import utils
from keymix.logger import get_logger

LOGGER = get_logger()

PARAMETER_COLUMNS = {'delay': 'delta', 'interval': 'b'}
RESULT_COLUMNS = ['mean_lag', 'id', 'age', 'gender', 'handedness', 'pp', 'du']
EXTRA_COLUMNS = ['input_type', 'anonymity', 'max_lag', 'max_buffered',
                 'baseline_age', 'baseline_gender', 'baseline_handedness']
MI_COLUMNS = ['mi_original_arrival', 'mi_runs', 'entropy_original', 'samples']


def _default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f'{type(obj).__name__} is not JSON serializable')


def _cell(value):
    if value is None:
        return ''
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def format_json(data):
    return orjson.dumps(data, default=_default, option=orjson.OPT_INDENT_2 | orjson.OPT_SERIALIZE_NUMPY) + b'\n'


def format_csv(header, rows):
    out = io.StringIO(newline='')
    writer = csv.writer(out, lineterminator='\n')
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(value) for value in row])
    return out.getvalue()


class Report():
    '''Base class for report objects.'''

    def asdict(self):  # pylint: disable=no-self-use
        raise NotImplementedError

    def __eq__(self, other):
        return isinstance(other, Report) and self.asdict() == other.asdict()

    def __repr__(self):
        pairs = [f'{k}={v}' for k, v in self.asdict().items()]
        attrstr = ', '.join(pairs)
        return f'{self.__class__.__name__}({attrstr})'

    def __str__(self):
        return str(self.asdict())

    def to_json(self):
        return format_json(self.asdict())


class LagSummary(Report):
    '''How long a mix held events back.

      * mean (float) - mean lag over all events, in ms
      * max (float) - largest lag
      * count (int) - number of events
      * max_buffered (int) - most events held by the mix at any one time
    '''

    def __init__(self, mean, max, count, max_buffered):  # pylint: disable=redefined-builtin
        self.mean = float(mean)
        self.max = float(max)
        self.count = int(count)
        self.max_buffered = int(max_buffered)

    def asdict(self):
        return {
            'mean': self.mean,
            'max': self.max,
            'count': self.count,
            'max_buffered': self.max_buffered,
        }


class ReportRow(Report):
    '''Attack results for one value of the mix parameter.

    Accuracies of traits that could not be evaluated are None.
    '''

    def __init__(self, parameter, mean_lag, acc_identity, acc_age=None, acc_gender=None,
                 acc_handedness=None, smape_pp=None, smape_du=None, input_type=None,
                 anonymity=None, max_lag=None, max_buffered=None, baselines=None):
        self.parameter = float(parameter)
        self.mean_lag = float(mean_lag)
        self.acc_identity = acc_identity
        self.acc_age = acc_age
        self.acc_gender = acc_gender
        self.acc_handedness = acc_handedness
        self.smape_pp = smape_pp
        self.smape_du = smape_du
        self.input_type = input_type
        self.anonymity = anonymity
        self.max_lag = max_lag
        self.max_buffered = max_buffered
        self.baselines = dict(baselines or {})

    def asdict(self):
        return {
            'parameter': self.parameter,
            'mean_lag': self.mean_lag,
            'id': self.acc_identity,
            'age': self.acc_age,
            'gender': self.acc_gender,
            'handedness': self.acc_handedness,
            'pp': self.smape_pp,
            'du': self.smape_du,
            'input_type': self.input_type,
            'anonymity': self.anonymity,
            'max_lag': self.max_lag,
            'max_buffered': self.max_buffered,
            'baseline_age': self.baselines.get('age_group'),
            'baseline_gender': self.baselines.get('gender'),
            'baseline_handedness': self.baselines.get('handedness'),
        }

    def values(self, columns):
        row = self.asdict()
        return [row[column] for column in columns]


class ExperimentReport(Report):
    def __init__(self, mix, rows, seed, config=None, version=None):
        self.mix = mix
        self.rows = list(rows)
        self.seed = seed
        self.config = config or {}
        self.version = version

    @property
    def parameter_column(self):
        return PARAMETER_COLUMNS[self.mix]

    def asdict(self):
        return {
            'version': self.version,
            'seed': self.seed,
            'config': self.config,
            'mix': self.mix,
            'rows': [row.asdict() for row in self.rows],
        }

    def column(self, name):
        return [row.asdict()[name] for row in self.rows]

    def to_csv(self):
        header = [self.parameter_column] + RESULT_COLUMNS + EXTRA_COLUMNS
        return format_csv(header, [row.values(['parameter'] + RESULT_COLUMNS + EXTRA_COLUMNS)
                                   for row in self.rows])


class MIRow(Report):
    '''Predictability and anonymity of one mix parameter, in bits.

      * mi_original_arrival - MI between generating and arrival intervals
      * mi_runs - MI between the arrival intervals of two independent runs
      * entropy_original - entropy of the binned generating intervals,
        the largest value mi_original_arrival can take
    '''

    def __init__(self, parameter, mi_original_arrival, mi_runs, entropy_original, samples):
        self.parameter = float(parameter)
        self.mi_original_arrival = float(mi_original_arrival)
        self.mi_runs = float(mi_runs)
        self.entropy_original = float(entropy_original)
        self.samples = int(samples)

    def asdict(self):
        return {
            'parameter': self.parameter,
            'mi_original_arrival': self.mi_original_arrival,
            'mi_runs': self.mi_runs,
            'entropy_original': self.entropy_original,
            'samples': self.samples,
        }


class MIReport(Report):
    def __init__(self, mix, rows, bins, seed, config=None, version=None):
        self.mix = mix
        self.rows = list(rows)
        self.bins = bins
        self.seed = seed
        self.config = config or {}
        self.version = version

    def asdict(self):
        return {
            'version': self.version,
            'seed': self.seed,
            'config': self.config,
            'mix': self.mix,
            'bins': self.bins,
            'rows': [row.asdict() for row in self.rows],
        }

    def column(self, name):
        return [row.asdict()[name] for row in self.rows]

    def to_csv(self):
        header = [PARAMETER_COLUMNS[self.mix]] + MI_COLUMNS
        return format_csv(header, [[row.asdict()[name] for name in ['parameter'] + MI_COLUMNS]
                                   for row in self.rows])


def write_report(report, out_dir, name):
    '''Atomically write report as <name>.csv and <name>.json under out_dir.'''
    paths = []
    for suffix, data in (('csv', report.to_csv()), ('json', report.to_json())):
        path = os.path.join(out_dir, f'{name}.{suffix}')
        utils.atomic_write(path, data)
        paths.append(path)
    LOGGER.info('Wrote %s', ', '.join(paths))
    return paths
