'''Measures of anonymity, predictability and lag.

All entropies and informations are in bits.
'''
from __future__ import annotations

from typing import NamedTuple

import numpy as np

DEFAULT_BINS = 8

# tolerance on probability vectors summing to one
_PROB_TOLERANCE = 1e-9


class MetricError(ValueError):
    pass


class PairedSamples(NamedTuple):
    xs: np.ndarray
    ys: np.ndarray

    @classmethod
    def of(cls, xs, ys):
        xs = np.asarray(xs, dtype=float)
        ys = np.asarray(ys, dtype=float)
        if xs.ndim != 1 or ys.ndim != 1:
            raise MetricError('paired samples must be one dimensional')
        if len(xs) != len(ys):
            raise MetricError(f'paired samples differ in length: {len(xs)} != {len(ys)}')
        if len(xs) < 1:
            raise MetricError('paired samples are empty')
        if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(ys))):
            raise MetricError('paired samples must be finite')
        return cls(xs, ys)

    @classmethod
    def truncated(cls, xs, ys):
        '''Pair two sequences, cutting the longer one to the length of the shorter.'''
        size = min(len(xs), len(ys))
        return cls.of(np.asarray(xs, dtype=float)[:size], np.asarray(ys, dtype=float)[:size])


def smape(predicted, actual):
    '''Symmetric mean absolute percentage error, in [0, 1].

    A pair where both values are zero is an exact prediction and counts 0.

    >>> smape([2], [6])
    0.5
    >>> smape([150, 150], [150, 150])
    0.0
    '''
    predicted = np.asarray(predicted, dtype=float)
    actual = np.asarray(actual, dtype=float)
    if predicted.shape != actual.shape:
        raise MetricError(f'length mismatch: {predicted.shape} != {actual.shape}')
    if predicted.size == 0:
        raise MetricError('smape of empty sequences')
    if np.any(predicted < 0) or np.any(actual < 0):
        raise MetricError('smape is defined for non-negative values only')
    denominator = np.abs(predicted) + np.abs(actual)
    numerator = np.abs(predicted - actual)
    ratios = np.divide(numerator, denominator, out=np.zeros_like(numerator), where=denominator > 0)
    return float(np.mean(ratios))


def mean_lag(lags):
    '''Mean time between generation and arrival.

    >>> mean_lag([3, 6, 5, 5, 6])
    5.0
    '''
    lags = np.asarray(lags, dtype=float)
    if lags.size == 0:
        raise MetricError('mean lag of an empty list')
    return float(np.mean(lags))


def buffer_occupancy(gen_times, arrival_times):
    '''Largest number of events held by the mix at any one time.

    An event is held from its generating time until its arrival time.

    >>> buffer_occupancy([0, 5, 7, 11, 14], [3, 11, 12, 16, 20])
    2
    >>> buffer_occupancy([0, 10], [0, 10])
    0
    '''
    gen_times = np.asarray(gen_times, dtype=float)
    arrival_times = np.asarray(arrival_times, dtype=float)
    if gen_times.shape != arrival_times.shape:
        raise MetricError('generating and arrival times differ in length')
    if gen_times.size == 0:
        return 0
    released = np.searchsorted(arrival_times, gen_times, side='right')
    held = np.arange(1, gen_times.size + 1) - released
    return int(max(held.max(), 0))


def entropy(probabilities):
    '''Entropy in bits of one probability vector, with 0·log 0 = 0.

    >>> entropy([0.5, 0.5])
    1.0
    '''
    probabilities = np.asarray(probabilities, dtype=float)
    nonzero = probabilities[probabilities > 0]
    return float(-np.sum(nonzero * np.log2(nonzero))) + 0.0


def quantile_bins(values, bins):
    '''Equal-frequency bin index of every value.

    Edges are interior quantiles, so equal values always share a bin and
    the assignment depends only on ranks.
    '''
    values = np.asarray(values, dtype=float)
    edges = np.quantile(values, np.linspace(0.0, 1.0, bins + 1)[1:-1])
    return np.searchsorted(edges, values, side='right')


def mutual_information_from_counts(counts):
    '''Plug-in mutual information of a joint count table.

    >>> mutual_information_from_counts([[5, 0], [0, 5]])
    1.0
    '''
    counts = np.asarray(counts, dtype=float)
    if counts.ndim != 2:
        raise MetricError('joint table must be two dimensional')
    total = counts.sum()
    if total <= 0:
        raise MetricError('joint table is empty')
    joint = counts / total
    px = joint.sum(axis=1, keepdims=True)
    py = joint.sum(axis=0, keepdims=True)
    mask = joint > 0
    ratio = joint[mask] / (px @ py)[mask]
    value = float(np.sum(joint[mask] * np.log2(ratio)))
    # plug-in estimate is non-negative; clip float noise
    return max(value, 0.0)


def mutual_information(samples, bins=DEFAULT_BINS):
    '''Mutual information of paired samples by quantile-binned plug-in estimate.'''
    if not isinstance(samples, PairedSamples):
        samples = PairedSamples.of(*samples)
    bins = int(bins)
    if bins < 2:
        raise MetricError(f'need at least 2 bins, got {bins}')
    if len(samples.xs) < bins * bins:
        raise MetricError(f'need at least {bins * bins} samples for {bins} bins, got {len(samples.xs)}')
    x_bins = quantile_bins(samples.xs, bins)
    y_bins = quantile_bins(samples.ys, bins)
    counts = np.zeros((bins, bins), dtype=float)
    np.add.at(counts, (x_bins, y_bins), 1.0)
    return mutual_information_from_counts(counts)


def binned_entropy(values, bins=DEFAULT_BINS):
    '''Entropy of the quantile-binned values, the ceiling of their mutual information.'''
    counts = np.bincount(quantile_bins(values, bins), minlength=bins)
    return entropy(counts / counts.sum())


def anonymity_rate(posteriors):
    '''Mean per-event entropy of event ownership, in bits per event.

    Events are treated as independent, which bounds the joint entropy from
    above by the sum of the per-event entropies.

    >>> anonymity_rate([[0.5, 0.5], [0.5, 0.5]])
    1.0
    >>> anonymity_rate([[1.0, 0.0]])
    0.0
    '''
    posteriors = np.asarray(posteriors, dtype=float)
    if posteriors.ndim != 2 or posteriors.shape[0] == 0 or posteriors.shape[1] == 0:
        raise MetricError('posteriors must be a non-empty events x users table')
    if np.any(~np.isfinite(posteriors)) or np.any(posteriors < 0):
        raise MetricError('posteriors must be finite and non-negative')
    sums = posteriors.sum(axis=1)
    bad = np.flatnonzero(np.abs(sums - 1.0) > _PROB_TOLERANCE)
    if bad.size:
        raise MetricError(f'posterior of event {bad[0]} sums to {sums[bad[0]]}, not 1')
    logs = np.zeros_like(posteriors)
    np.log2(posteriors, out=logs, where=posteriors > 0)
    per_event = -np.sum(posteriors * logs, axis=1)
    return float(np.mean(per_event)) + 0.0


def majority_baseline(labels):
    '''Share of the largest class, the accuracy of always guessing it.

    >>> majority_baseline(['right', 'right', 'left', 'right'])
    0.75
    '''
    labels = list(labels)
    if not labels:
        raise MetricError('majority baseline of no labels')
    _, counts = np.unique(np.asarray(labels, dtype=object).astype(str), return_counts=True)
    return float(counts.max() / len(labels))
