'''Structured METRIC log lines about mixing and attack runs.

Long evaluation grids are followed from the log alone: every mixed cohort,
cross validation and grid value leaves one JSON line on the keymix logger,

    INFO METRIC: {"type": "timer", "metric": "cv_duration", "value": 1.9,
                  "tags": {"target": "identity", "status": "succeeded"}}

and parse() reads such a line back into a Point. None of it reaches a
report file.
'''
from __future__ import annotations

import enum
import re
import time
from typing import Any, Dict, NamedTuple, Optional

import orjson

from keymix.logger import get_logger

DEFAULT_LOG_INTERVAL = 60

_METRIC_LINE = re.compile(r'^INFO METRIC: (.*)$')


class Status(str, enum.Enum):
    succeeded = 'succeeded'
    failed = 'failed'


class Metric(str, enum.Enum):
    events_mixed = 'events_mixed'
    sessions_parsed = 'sessions_parsed'
    mix_duration = 'mix_duration'
    cv_duration = 'cv_duration'
    grid_point_duration = 'grid_point_duration'


class Tag(str, enum.Enum):
    mix = 'mix'
    param = 'param'
    source = 'source'
    target = 'target'
    status = 'status'


class Point(NamedTuple):
    metric_type: str
    metric: str
    value: Any
    tags: Optional[Dict[str, Any]]


def _plain(value):
    return value.value if isinstance(value, enum.Enum) else value


def log(logger, point):
    '''Write one point as a METRIC line.'''
    tags = None if point.tags is None else {_plain(k): _plain(v) for k, v in point.tags.items()}
    body = {'type': point.metric_type, 'metric': _plain(point.metric), 'value': point.value, 'tags': tags}
    logger.info('METRIC: %s', orjson.dumps(body).decode('utf-8'))


class Counter():
    '''Counts units of work inside a with block.

    The running total is logged and reset whenever log_interval seconds
    have gone by since the last line, and once more when the block exits,
    so the values of one counter add up to the total.
    '''

    def __init__(self, metric, tags=None, log_interval=DEFAULT_LOG_INTERVAL):
        self.metric = metric
        self.tags = dict(tags or {})
        self.log_interval = log_interval
        self.value = 0
        self.logger = get_logger()
        self.last_log_time = time.monotonic()

    def __enter__(self):
        self.last_log_time = time.monotonic()
        return self

    def __exit__(self, exc_type, exc_value, traceback):
        self._flush()

    def increment(self, amount=1):
        self.value += amount
        if self._ready_to_log():
            self._flush()

    def _ready_to_log(self):
        return time.monotonic() - self.last_log_time > self.log_interval

    def _flush(self):
        log(self.logger, Point('counter', self.metric, self.value, self.tags))
        self.value = 0
        self.last_log_time = time.monotonic()


class Timer():  # pylint: disable=too-few-public-methods
    '''Logs the seconds a with block took, tagged succeeded or failed.

    A status set in tags beforehand is kept.
    '''

    def __init__(self, metric, tags=None):
        self.metric = metric
        self.tags = dict(tags or {})
        self.logger = get_logger()
        self.start_time = None

    def __enter__(self):
        self.start_time = time.perf_counter()
        return self

    def elapsed(self):
        return time.perf_counter() - self.start_time

    def __exit__(self, exc_type, exc_value, traceback):
        status = Status.succeeded if exc_type is None else Status.failed
        self.tags.setdefault(Tag.status.value, status.value)
        log(self.logger, Point('timer', self.metric, self.elapsed(), self.tags))


def _tags(**values):
    return {Tag[name].value: value for name, value in values.items() if value is not None}


def event_counter(mix=None, log_interval=DEFAULT_LOG_INTERVAL):
    '''Events pushed through a mix, tagged with the mix kind.'''
    return Counter(Metric.events_mixed, _tags(mix=mix), log_interval)


def session_counter(source=None, log_interval=DEFAULT_LOG_INTERVAL):
    return Counter(Metric.sessions_parsed, _tags(source=source), log_interval)


def mix_timer(mix=None):
    return Timer(Metric.mix_duration, _tags(mix=mix))


def cv_timer(target=None):
    '''One cross validation; target is 'identity' or a trait name.'''
    return Timer(Metric.cv_duration, _tags(target=target))


def grid_point_timer(mix, param):
    return Timer(Metric.grid_point_duration, _tags(mix=mix, param=param))


def parse(line):
    '''The Point logged on line, or None when the line holds no metric.'''
    match = _METRIC_LINE.match(line)
    if not match:
        return None
    try:
        raw = orjson.loads(match.group(1))
    except orjson.JSONDecodeError as exc:
        get_logger().warning('Error parsing metric: %s', exc)
        return None
    if not isinstance(raw, dict):
        return None
    return Point(raw.get('type'), raw.get('metric'), raw.get('value'), raw.get('tags'))
