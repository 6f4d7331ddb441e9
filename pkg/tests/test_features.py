import unittest

import numpy as np

from keymix.features import (
    FeatureError,
    FeatureSpec,
    KeyGroup,
    extract_features,
    feature_matrix,
    population_stats,
    write_feature_csv,
)
from keymix.mixes import DelayMixParams, SeededNoise, apply_mix
from keymix.synth import generate_cohort, session_from_keystrokes


def steady_session(keys, pp=150, du=90, start=0, session_id='s1'):
    return session_from_keystrokes('u1', session_id, [(start + i * pp, start + i * pp + du, key)
                                                       for i, key in enumerate(keys)])


def value(vector, name):
    return vector.values[vector.names.index(name)]


class TestFeatureSpec(unittest.TestCase):

    def test_default_groups(self):
        spec = FeatureSpec()
        self.assertEqual('all-keys', spec.root.name)
        self.assertEqual('space', spec.leaf_of('space').name)
        self.assertEqual('space', spec.leaf_of(' ').name)
        self.assertEqual('frequent', spec.leaf_of('E').name)
        self.assertEqual('other', spec.leaf_of('q').name)
        self.assertEqual('other', spec.leaf_of('shift').name)
        self.assertEqual(16, len(spec))

    def test_rejects_bad_hierarchies(self):
        with self.assertRaises(FeatureError):
            FeatureSpec(key_groups=(KeyGroup('a'), KeyGroup('b')))
        with self.assertRaises(FeatureError):
            FeatureSpec(key_groups=(KeyGroup('a'), KeyGroup('b', 'missing')))
        with self.assertRaises(FeatureError):
            FeatureSpec(min_observations=0)


class TestExtractFeatures(unittest.TestCase):

    def test_steady_typing(self):
        vector = extract_features(steady_session('the quick brown fox jumps'))
        means = [v for v, n in zip(vector.values, vector.names) if n.endswith('.mean')]
        sds = [v for v, n in zip(vector.values, vector.names) if n.endswith('.sd')]
        self.assertEqual({90.0, 150.0}, set(means))
        self.assertEqual({0.0}, set(sds))

    def test_falls_back_to_the_parent_group(self):
        vector = extract_features(steady_session('aaaaaaaaa b', pp=100), FeatureSpec(min_observations=5))
        space = vector.names.index('space.du.mean')
        self.assertEqual('all-keys', vector.sources[space])
        self.assertTrue(vector.fallback[space])
        self.assertEqual(value(vector, 'all-keys.du.mean'), vector.values[space])
        self.assertFalse(vector.fallback[vector.names.index('frequent.du.mean')])

    def test_press_latency_mean(self):
        presses = [3, 11, 12, 16, 20]
        session = session_from_keystrokes('u1', 's1', [(t, t + 100, key) for t, key in zip(presses, 'abcde')])
        vector = extract_features(session, FeatureSpec(min_observations=1))
        self.assertEqual(4.25, value(vector, 'all-keys.pp.mean'))

    def test_long_pauses_are_clipped(self):
        session = session_from_keystrokes('u1', 's1', [(0, 90), (10000, 10090)])
        vector = extract_features(session, FeatureSpec(min_observations=1))
        self.assertEqual(5000.0, value(vector, 'all-keys.pp.mean'))

    def test_global_fallback(self):
        stats = {('du', 'mean'): 1.0, ('du', 'sd'): 2.0, ('pp', 'mean'): 3.0, ('pp', 'sd'): 4.0}
        spec = FeatureSpec(min_observations=100, global_stats=stats)
        vector = extract_features(steady_session('abc'), spec)
        self.assertEqual({'global'}, set(vector.sources))
        self.assertEqual(3.0, value(vector, 'other.pp.mean'))

    def test_depends_only_on_intervals(self):
        session = steady_session('hello world', pp=130)
        shifted = steady_session('hello world', pp=130, start=1000)
        np.testing.assert_array_equal(extract_features(session).values, extract_features(shifted).values)

    def test_zero_delay_mix_changes_nothing(self):
        session = generate_cohort(2, 1, 40, seed=3)[0]
        mixed = apply_mix(session, DelayMixParams(0), SeededNoise(1)).mixed
        np.testing.assert_array_equal(extract_features(session).values, extract_features(mixed).values)

    def test_needs_two_keystrokes(self):
        with self.assertRaises(FeatureError):
            extract_features(steady_session('a'))


class TestFeatureMatrix(unittest.TestCase):

    def test_same_width_for_every_session(self):
        sessions = generate_cohort(3, 2, 'norm', seed=5)
        matrix, spec = feature_matrix(sessions)
        self.assertEqual((6, 16), matrix.shape)
        self.assertTrue(np.all(np.isfinite(matrix)))
        self.assertIsNotNone(spec.global_stats)

    def test_population_stats_fill_sparse_groups(self):
        sessions = [steady_session('abc', pp=100, session_id='s1'), steady_session('abc', pp=300, session_id='s2')]
        stats = population_stats(sessions)
        self.assertEqual(200.0, stats[('pp', 'mean')])
        matrix, _ = feature_matrix(sessions, FeatureSpec(min_observations=50))
        np.testing.assert_array_equal(matrix[0], matrix[1])

    def test_no_sessions(self):
        spec = FeatureSpec(global_stats=population_stats([steady_session('abc')]))
        matrix, _ = feature_matrix([], spec)
        self.assertEqual((0, 16), matrix.shape)
        with self.assertRaises(FeatureError):
            feature_matrix([])

    def test_csv_export(self):
        sessions = [steady_session('abc')]
        matrix, _ = feature_matrix(sessions)
        lines = write_feature_csv(sessions, matrix).splitlines()
        self.assertEqual('session_id,' + ','.join(f'f{i}' for i in range(16)), lines[0])
        self.assertTrue(lines[1].startswith('u1/s1,90.0,0.0,150.0,0.0'))
