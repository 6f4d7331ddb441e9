import unittest

import numpy as np
from scipy import stats

from keymix import metrics
from keymix.events import pair_keystrokes
from keymix.metrics import MetricError, PairedSamples
from keymix.synth import generate_poisson_stream


class TestSmape(unittest.TestCase):

    def test_exact_values(self):
        self.assertEqual(0.5, metrics.smape([2], [6]))
        self.assertEqual(0.0, metrics.smape([150, 150], [150, 150]))

    def test_zero_pair_counts_as_exact(self):
        self.assertEqual(0.5, metrics.smape([0, 0], [0, 5]))

    def test_one_third(self):
        self.assertAlmostEqual(100 / 300, metrics.smape([100], [200]))

    def test_errors(self):
        with self.assertRaises(MetricError):
            metrics.smape([1, 2], [1])
        with self.assertRaises(MetricError):
            metrics.smape([], [])
        with self.assertRaises(MetricError):
            metrics.smape([-1], [1])


class TestLag(unittest.TestCase):

    def test_mean_lag(self):
        self.assertEqual(5.0, metrics.mean_lag([3, 6, 5, 5, 6]))
        with self.assertRaises(MetricError):
            metrics.mean_lag([])

    def test_buffer_occupancy(self):
        self.assertEqual(2, metrics.buffer_occupancy([0, 5, 7, 11, 14], [3, 11, 12, 16, 20]))
        self.assertEqual(0, metrics.buffer_occupancy([], []))
        # everything held until the end
        self.assertEqual(3, metrics.buffer_occupancy([0, 1, 2], [10, 10, 10]))


class TestMutualInformation(unittest.TestCase):

    def test_diagonal_table(self):
        self.assertEqual(1.0, metrics.mutual_information_from_counts([[5, 0], [0, 5]]))

    def test_independent_table(self):
        self.assertEqual(0.0, metrics.mutual_information_from_counts([[5, 5], [5, 5]]))

    def test_identical_samples_reach_the_binned_entropy(self):
        xs = np.random.default_rng(1).exponential(100.0, size=5000)
        self.assertAlmostEqual(metrics.binned_entropy(xs, 8),
                               metrics.mutual_information((xs, xs), bins=8), places=9)
        self.assertAlmostEqual(3.0, metrics.binned_entropy(xs, 8), places=3)

    def test_independent_streams(self):
        first = generate_poisson_stream(0.01, 100000, seed=1).intervals()
        second = generate_poisson_stream(0.01, 100000, seed=2).intervals()
        samples = PairedSamples.truncated(first, second)
        self.assertLess(metrics.mutual_information(samples), 0.01)

    def test_poisson_intervals_are_memoryless(self):
        latencies = pair_keystrokes(generate_poisson_stream(0.01, 100000, seed=3, resolution=None)).press_latencies
        samples = PairedSamples.of(latencies[:-1], latencies[1:])
        self.assertLess(metrics.mutual_information(samples, bins=8), 0.01)

    def test_too_few_samples(self):
        with self.assertRaisesRegex(MetricError, 'need at least 64 samples'):
            metrics.mutual_information(([1.0] * 10, [1.0] * 10), bins=8)
        with self.assertRaises(MetricError):
            metrics.mutual_information(([1.0] * 10, [1.0] * 10), bins=1)

    def test_paired_samples(self):
        samples = PairedSamples.truncated([1, 2, 3], [4, 5])
        self.assertEqual([1.0, 2.0], list(samples.xs))
        with self.assertRaises(MetricError):
            PairedSamples.of([1, 2], [1])
        with self.assertRaises(MetricError):
            PairedSamples.of([1, float('nan')], [1, 2])


class TestEntropy(unittest.TestCase):

    def test_matches_scipy(self):
        probabilities = [0.1, 0.2, 0.3, 0.4]
        self.assertAlmostEqual(stats.entropy(probabilities, base=2), metrics.entropy(probabilities))

    def test_anonymity_rate(self):
        self.assertEqual(1.0, metrics.anonymity_rate([[0.5, 0.5], [0.5, 0.5]]))
        self.assertEqual(0.0, metrics.anonymity_rate([[1.0, 0.0], [0.0, 1.0]]))
        self.assertAlmostEqual(np.log2(10), metrics.anonymity_rate(np.full((3, 10), 0.1)))
        self.assertAlmostEqual(0.8113, metrics.anonymity_rate([[0.75, 0.25]] * 4), places=4)

    def test_anonymity_rate_rejects_bad_posteriors(self):
        with self.assertRaisesRegex(MetricError, 'sums to'):
            metrics.anonymity_rate([[0.5, 0.6]])
        with self.assertRaises(MetricError):
            metrics.anonymity_rate([])

    def test_majority_baseline(self):
        self.assertEqual(0.88, metrics.majority_baseline(['right'] * 88 + ['left'] * 12))
        with self.assertRaises(MetricError):
            metrics.majority_baseline([])
