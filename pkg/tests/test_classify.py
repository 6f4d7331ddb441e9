import unittest
from dataclasses import replace

import numpy as np

from keymix.classify import (
    cohort_smape,
    identity_cv,
    identity_cv_matrix,
    identity_folds,
    majority_baseline_for,
    predict_intervals,
    soft_trait_cv,
    soft_trait_cv_matrix,
    stratified_folds,
    train_forest,
)
from keymix.events import Labels
from keymix.forest import ClassificationError, ForestParams
from keymix.metrics import majority_baseline
from keymix.synth import draw_profile, generate_cohort, generate_user_sessions, session_from_keystrokes

SMALL_FOREST = ForestParams(n_trees=30, seed=1)


def steady(pp, du, n=10, user_id='u1', session_id='s1'):
    return session_from_keystrokes(user_id, session_id, [(i * pp, i * pp + du) for i in range(n)])


def labelled_cohort(assignments, pp_medians=None, sessions=6, chars=60, dispersion=1.0, seed=3):
    '''Sessions of users with the given handedness, one user per entry.'''
    cohort = []
    for index, hand in enumerate(assignments):
        user_id = f'u{index:02d}'
        pp_median = pp_medians[index] if pp_medians else 200.0
        profile = replace(draw_profile(user_id, seed, dispersion, pp_median=pp_median),
                          labels=Labels('over30', 'male', hand))
        cohort.extend(generate_user_sessions(profile, sessions, chars, seed))
    return cohort


class TestPredictIntervals(unittest.TestCase):

    def test_constant_typing_is_predicted_exactly(self):
        self.assertEqual((0.0, 0.0), predict_intervals(steady(150, 90)))

    def test_running_mean(self):
        # PP 100, 200: the second is predicted by 100
        session = session_from_keystrokes('u', 's', [(0, 90), (100, 190), (300, 390)])
        smape_pp, smape_du = predict_intervals(session)
        self.assertAlmostEqual(1 / 3, smape_pp)
        self.assertEqual(0.0, smape_du)

    def test_needs_three_keystrokes(self):
        with self.assertRaisesRegex(ClassificationError, 'need at least 3'):
            predict_intervals(steady(150, 90, n=2))

    def test_cohort_mean(self):
        sessions = [steady(150, 90, session_id='s1'),
                    session_from_keystrokes('u1', 's2', [(0, 90), (100, 190), (300, 390)])]
        smape_pp, smape_du = cohort_smape(sessions)
        self.assertAlmostEqual(1 / 6, smape_pp)
        self.assertEqual(0.0, smape_du)
        with self.assertRaises(ClassificationError):
            cohort_smape([])


class TestFolds(unittest.TestCase):

    def test_stratified_round_robin(self):
        users = np.array(['a'] * 10 + ['b'] * 7)
        folds = stratified_folds(users, 5, seed=2)
        for user in ('a', 'b'):
            counts = np.bincount(folds[users == user], minlength=5)
            self.assertLessEqual(counts.max() - counts.min(), 1)
        np.testing.assert_array_equal(folds, stratified_folds(users, 5, seed=2))

    def test_identity_folds_shrink(self):
        self.assertEqual(10, identity_folds(['a'] * 12 + ['b'] * 15))
        self.assertEqual(3, identity_folds(['a'] * 3 + ['b'] * 15))
        with self.assertRaises(ClassificationError):
            identity_folds(['a'] * 4)
        with self.assertRaisesRegex(ClassificationError, "user 'b' has 1 session"):
            identity_folds(['a'] * 4 + ['b'])

    def test_train_forest_refuses_unlearnable_input(self):
        with self.assertRaises(ClassificationError):
            train_forest(np.zeros((3, 2)), ['a'] * 3)
        with self.assertRaises(ClassificationError):
            train_forest(np.zeros((3, 2)), ['a', 'a', 'b'])


class TestIdentityAttack(unittest.TestCase):

    def test_distinct_users_are_identified(self):
        sessions = generate_cohort(5, 10, 'norm', profile_dispersion=4.0, seed=1)
        result = identity_cv(sessions, params=SMALL_FOREST)
        self.assertGreaterEqual(result.accuracy, 0.9)
        self.assertEqual(10, result.n_folds)
        self.assertEqual((50, 5), result.posteriors.shape)
        np.testing.assert_allclose(1.0, result.posteriors.sum(axis=1))

    def test_identical_users_are_guessed(self):
        sessions = generate_cohort(5, 40, 40, profile_dispersion=0.0, seed=2)
        result = identity_cv(sessions, params=SMALL_FOREST)
        self.assertAlmostEqual(0.2, result.accuracy, delta=0.08)

    def test_users_with_few_sessions(self):
        # every training fold holds one session of each user
        result = identity_cv(generate_cohort(3, 2, 40, seed=1), params=ForestParams(n_trees=5, seed=1))
        self.assertEqual(2, result.n_folds)
        self.assertEqual((6, 3), result.posteriors.shape)
        result = identity_cv(generate_cohort(3, 3, 40, seed=1), params=ForestParams(n_trees=5, seed=1), n_folds=2)
        self.assertEqual(2, result.n_folds)

    def test_permuted_labels_give_chance(self):
        rng = np.random.default_rng(4)
        X = rng.normal(size=(500, 16))
        users = rng.permutation(np.repeat([f'u{i}' for i in range(10)], 50))
        result = identity_cv_matrix(X, users, ForestParams(n_trees=25, seed=4))
        self.assertAlmostEqual(0.1, result.accuracy, delta=0.05)

    def test_reproducible(self):
        sessions = generate_cohort(3, 4, 40, seed=5)
        first = identity_cv(sessions, params=SMALL_FOREST)
        second = identity_cv(sessions, params=SMALL_FOREST)
        np.testing.assert_array_equal(first.posteriors, second.posteriors)

    def test_testing_on_the_training_sessions(self):
        sessions = generate_cohort(3, 4, 40, seed=6)
        result = identity_cv(sessions, params=SMALL_FOREST)
        same = identity_cv(sessions, params=SMALL_FOREST, test_sessions=sessions)
        self.assertEqual(result.accuracy, same.accuracy)

    def test_test_sessions_must_line_up(self):
        sessions = generate_cohort(3, 4, 40, seed=7)
        with self.assertRaises(ClassificationError):
            identity_cv(sessions, params=SMALL_FOREST, test_sessions=sessions[::-1])


class TestSoftTraitAttack(unittest.TestCase):

    def test_trait_that_shows_in_typing(self):
        hands = ['left', 'left', 'left', 'right', 'right', 'right']
        sessions = labelled_cohort(hands, pp_medians=[120.0] * 3 + [450.0] * 3)
        result = soft_trait_cv(sessions, 'handedness', params=SMALL_FOREST)
        self.assertGreaterEqual(result.accuracy, 0.9)
        self.assertEqual(6, result.n_folds)

    def test_trait_that_does_not_show(self):
        hands = ['right'] * 9 + ['left'] * 3
        sessions = labelled_cohort(hands, sessions=8, chars=40, dispersion=0.0)
        result = soft_trait_cv(sessions, 'handedness', params=SMALL_FOREST)
        self.assertEqual(0.75, majority_baseline_for(sessions, 'handedness'))
        self.assertLessEqual(result.accuracy, 0.85)

    def test_permuted_trait_labels_give_the_majority_share(self):
        rng = np.random.default_rng(8)
        users = np.repeat([f'u{i:02d}' for i in range(20)], 10)
        hands = dict(zip(np.unique(users), rng.permutation(['right'] * 15 + ['left'] * 5)))
        labels = [hands[user] for user in users]
        X = rng.normal(size=(len(users), 16))
        result = soft_trait_cv_matrix(X, labels, users, ForestParams(n_trees=50, seed=8), trait='handedness')
        self.assertEqual(0.75, majority_baseline(labels))
        self.assertAlmostEqual(0.75, result.accuracy, delta=0.08)

    def test_missing_label(self):
        sessions = [steady(150, 90, user_id='u1'), steady(150, 90, user_id='u2')]
        with self.assertRaisesRegex(ClassificationError, 'handedness label missing'):
            soft_trait_cv(sessions, 'handedness')
        self.assertIsNone(majority_baseline_for(sessions, 'handedness'))

    def test_unusable_labels(self):
        X = np.zeros((4, 2))
        users = np.array(['a', 'a', 'b', 'c'])
        with self.assertRaisesRegex(ClassificationError, 'more than one'):
            soft_trait_cv_matrix(X, ['x', 'y', 'x', 'y'], users)
        with self.assertRaisesRegex(ClassificationError, 'single class'):
            soft_trait_cv_matrix(X, ['x'] * 4, users)
        with self.assertRaisesRegex(ClassificationError, 'fewer than 2 users'):
            soft_trait_cv_matrix(X, ['x', 'x', 'x', 'y'], users)
